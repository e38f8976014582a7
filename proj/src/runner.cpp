#include <mowave/runner.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>

#include <mowave/incident.hpp>

namespace mowave {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

/// Runs one pipeline stage, recording its wall time and wrapping failures.
template <class Fn>
auto stage(const std::string& name, json& timings, Fn&& fn) {
  const auto start = Clock::now();
  auto record_time = [&] {
    timings[name] = std::chrono::duration<double>(Clock::now() - start).count();
  };
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      record_time();
    } else {
      auto out = fn();
      record_time();
      return out;
    }
  } catch (const std::exception& e) {
    record_time();
    std::throw_with_nested(StageError(name, e.what()));
  }
}

void write_json(const json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
}

std::string image_stem(IndicatorKind kind) { return "image_" + to_string(kind); }

}  // namespace

const IndicatorImage* RunResult::image(IndicatorKind kind) const {
  for (const IndicatorImage& img : images) {
    if (img.kind == kind) return &img;
  }
  return nullptr;
}

Overlay make_overlay(const ExperimentConfig& cfg) {
  Overlay ov;
  if (cfg.dimension != 2) return ov;
  for (const ScattererConfig& s : cfg.scatterers) {
    std::vector<Vec3> line;
    constexpr int kSamples = 256;
    for (int m = 0; m <= kSamples; ++m) {
      line.push_back(curve_point(s.shape, 2.0 * std::numbers::pi * m / kSamples));
    }
    ov.polylines.push_back(std::move(line));
  }
  const Trajectory traj = make_trajectory(cfg);
  const TimeGrid grid = make_time_grid(cfg);
  std::vector<Vec3> path;
  const int stride = std::max(1, grid.steps() / 512);
  for (int k = 0; k <= grid.steps(); k += stride) path.push_back(traj.position(grid.time(k)));
  ov.polylines.push_back(std::move(path));
  ov.markers = make_receivers(cfg.receivers).points;
  return ov;
}

ExperimentConfig config_from_metadata(const json& metadata) {
  if (!metadata.is_object() || !metadata.contains("mowave_metadata") ||
      !metadata.contains("config")) {
    throw ConfigError("not a mowave metadata document", "<root>");
  }
  return parse_config(metadata.at("config"));
}

RunResult run_experiment(const ExperimentConfig& input, const RunOptions& options) {
  RunResult result;
  json timings = json::object();
  json meta;
  meta["mowave_metadata"] = 1;
  meta["version"] = kVersion;
  meta["config"] = to_json(input);
  meta["config_hash"] = config_hash(input);
  meta["status"] = "running";
  const std::string hash = config_hash(input);

  const ExperimentConfig cfg = stage("configure", timings, [&] {
    ExperimentConfig c = apply_scale(input, input.scale);
    audit_subsonic(c);
    return c;
  });
  result.config = cfg;
  meta["effective_config"] = to_json(cfg);

  const std::filesystem::path dir = cfg.output_dir;
  auto flush_metadata = [&] {
    meta["timings"] = timings;
    if (!options.write_files) return;
    write_json(meta, dir / "metadata.json");
  };
  if (options.write_files) {
    stage("output", timings, [&] { std::filesystem::create_directories(dir); });
  }

  try {
    const Medium medium(cfg.sound_speed);
    const Trajectory traj = make_trajectory(cfg);
    const Signal sig = make_signal(cfg);
    const TimeGrid grid = make_time_grid(cfg);
    const SamplingGrid sgrid = make_sampling_grid(cfg);
    const std::vector<BoundaryMesh> meshes = stage("scene", timings, [&] { return make_meshes(cfg); });
    const MeasurementArray receivers = make_receivers(cfg.receivers);

    meta["scene"] = {
        {"max_sampled_speed", traj.max_sampled_speed(grid)},
        {"speed_bound", traj.speed_bound()},
        {"receivers", receivers.size()},
        {"time_step", grid.dt()},
        {"sampling_points", sgrid.size()},
    };
    meta["tolerances"] = {
        {"retarded_time_relative", 1e-12},
        {"retarded_time_max_iterations", kRetardedMaxIterations},
        {"collocation_residual_relative", 1e-8},
        {"i1_overshoot_clamp", 1e-12},
    };
    meta["seeds"] = {{"noise", cfg.noise.seed}};

    json forward;
    forward["generator"] = to_string(cfg.generator);
    result.clean = stage("forward", timings, [&] {
      if (cfg.generator == Generator::bie) {
        const BoundaryMesh mesh = combine_meshes(meshes);
        const WaveRecord inc = incident_on_mesh(traj, sig, medium, mesh, grid);
        const DensityHistory g = march_density(mesh, inc, medium);
        const double residual = collocation_residual(mesh, inc, g, medium);
        const double scale = inc.max_abs();
        forward["panels"] = mesh.size();
        forward["instability_filter"] = g.filtered;
        forward["energy_growth"] = g.energy_growth;
        forward["collocation_residual"] = residual;
        forward["incident_max"] = scale;
        if (!g.filtered && residual > 1e-8 * scale) {
          throw SolverError("collocation residual above 1e-8 max|u^i|", residual);
        }
        return evaluate_scattered(mesh, g, receivers, grid, medium);
      }
      ApproxInfo info;
      WaveRecord rec = approx_scattered(meshes, traj, sig, medium, receivers, grid, true, &info);
      json obstacles = json::array();
      for (const ApproxObstacle& ob : info.obstacles) {
        obstacles.push_back({{"center", {ob.center.x, ob.center.y, ob.center.z}},
                             {"area", ob.area},
                             {"E", ob.self},
                             {"C", ob.constant}});
      }
      forward["obstacles"] = obstacles;
      forward["constant_rule"] = "nearest_panel";
      return rec;
    });
    meta["forward"] = forward;

    result.record = stage("noise", timings, [&] { return add_noise(result.clean, cfg.noise); });
    if (options.write_files) {
      stage("write record", timings, [&] {
        write_record_csv(result.record, dir / "record.csv", hash);
        result.files.push_back(dir / "record.csv");
      });
    }

    if (cfg.dimension == 3 && cfg.receivers.layout == ReceiverLayout::sphere) {
      const double dev = lemma_quadrature_deviation(receivers, sgrid);
      meta["quadrature_audit"] = {{"max_relative_deviation", dev}, {"within_one_percent", dev < 1e-2}};
    }

    const Overlay overlay = make_overlay(cfg);
    HeatmapOptions hm{cfg.render.cell_px, cfg.render.margin_px,
                      cfg.render.overlay ? &overlay : nullptr};
    meta["imaging"] = json::object();
    auto emit = [&](const IndicatorImage& img) {
      result.images.push_back(img);
      if (!options.write_files) return;
      const std::string stem = image_stem(img.kind);
      stage("write " + stem, timings, [&] {
        write_image_csv(img, dir / (stem + ".csv"), hash);
        render_heatmap(img, dir / ("heatmap_" + to_string(img.kind) + ".png"), hm);
        result.files.push_back(dir / (stem + ".csv"));
        result.files.push_back(dir / ("heatmap_" + to_string(img.kind) + ".png"));
      });
    };

    // Convolution image first: it is well defined for zero data.
    const bool want_i1 = std::find(cfg.indicators.begin(), cfg.indicators.end(),
                                   IndicatorKind::I1) != cfg.indicators.end();
    const bool want_i2 = std::find(cfg.indicators.begin(), cfg.indicators.end(),
                                   IndicatorKind::I2tilde) != cfg.indicators.end();
    if (want_i2) {
      IndicatorImage img = stage("imaging I2tilde", timings, [&] {
        return indicator_I2tilde(result.record, sig, medium, sgrid, cfg.convolution);
      });
      json info = {{"method", to_string(cfg.convolution)}, {"argmax", img.argmax()}};
      if (options.compute_both_methods) {
        const ConvolutionMethod other = cfg.convolution == ConvolutionMethod::fft
                                            ? ConvolutionMethod::direct
                                            : ConvolutionMethod::fft;
        const IndicatorImage alt = stage("imaging I2tilde " + to_string(other), timings, [&] {
          return indicator_I2tilde(result.record, sig, medium, sgrid, other);
        });
        result.method_difference = other == ConvolutionMethod::direct
                                       ? relative_difference(img, alt)
                                       : relative_difference(alt, img);
        info["fft_direct_relative_difference"] = *result.method_difference;
      }
      meta["imaging"]["I2tilde"] = info;
      emit(img);
      flush_metadata();
    }
    if (want_i1) {
      IndicatorImage img = stage("imaging I1", timings, [&] {
        return indicator_I1(result.record, traj, sig, medium, sgrid);
      });
      meta["imaging"]["I1"] = {{"argmax", img.argmax()}, {"zero_probe_points", img.flagged.size()}};
      emit(img);
    }
    meta["status"] = "complete";
    if (options.write_files) result.files.push_back(dir / "metadata.json");
    flush_metadata();
  } catch (const std::exception& e) {
    meta["status"] = "failed";
    meta["error"] = e.what();
    try {
      flush_metadata();
    } catch (...) {
    }
    throw;
  }
  result.metadata = meta;
  return result;
}

}  // namespace mowave
