#include <cmath>
#include <map>
#include <numbers>

#include <mowave/config.hpp>
#include <mowave/errors.hpp>

namespace mowave {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kBasePeriod = 14.0;
constexpr double kOmega0 = 2.0 * kPi / kBasePeriod;

struct Preset {
  std::string summary;
  json doc;
};

json scatterer(const char* kind, std::initializer_list<double> center, double scale,
               int resolution) {
  return {{"kind", kind}, {"center", json(center)}, {"scale", scale}, {"resolution", resolution}};
}

json points2d(std::initializer_list<std::pair<double, double>> centers) {
  json list = json::array();
  for (const auto& [a, b] : centers) list.push_back(scatterer("circle", {a, b}, 0.01, 16));
  return list;
}

/// Shared planar setup: circular emitter path of radius 60 at one turn per
/// base period, 64 receivers on the circle of radius 72, 36 x 36 grid.
json common2d(const std::string& name, int periods, double sigma) {
  return {
      {"dimension", 2},
      {"medium", {{"sound_speed", 340.0}}},
      {"trajectory", {{"kind", "circle"}, {"radius", 60.0}, {"angular_speed", kOmega0}, {"phase", 0.0}}},
      {"signal", {{"kind", "lambda_n"}, {"periods", periods}, {"base_period", kBasePeriod}}},
      {"receivers", {{"layout", "circle"}, {"radius", 72.0}, {"count", 64}}},
      {"time_grid", {{"total_time", kBasePeriod}, {"steps", 256 * periods}}},
      {"sampling_grid", {{"lo", {-36.0, -36.0}}, {"hi", {36.0, 36.0}}, {"counts", {36, 36}}}},
      {"noise", {{"sigma", sigma}, {"seed", 1}}},
      {"indicators", {"I2tilde"}},
      {"generator", "bie"},
      {"convolution", "fft"},
      {"output_dir", "out/" + name},
      {"scale", 1.0},
      {"render", {{"cell_px", 8}, {"margin_px", 8}, {"overlay", true}}},
  };
}

/// Spatial setup: spherical spiral of radius 60 with 5 turns over three
/// base periods, 50 receivers on the sphere of radius 72, 21^3 grid.
json common3d(const std::string& name) {
  const int periods = 10;
  return {
      {"dimension", 3},
      {"medium", {{"sound_speed", 340.0}}},
      {"trajectory", {{"kind", "spiral"}, {"radius", 60.0}, {"turns", 5}, {"total_time", 3 * kBasePeriod}}},
      {"signal", {{"kind", "lambda_n"}, {"periods", periods}, {"base_period", kBasePeriod}}},
      {"receivers", {{"layout", "sphere"}, {"radius", 72.0}, {"count", 50}}},
      {"time_grid", {{"total_time", 3 * kBasePeriod}, {"steps", 256 * periods * 3}}},
      {"sampling_grid",
       {{"lo", {-40.0, -40.0, -40.0}}, {"hi", {40.0, 40.0, 40.0}}, {"counts", {21, 21, 21}}}},
      {"noise", {{"sigma", 0.05}, {"seed", 1}}},
      {"indicators", {"I2tilde"}},
      {"generator", "bie"},
      {"convolution", "fft"},
      {"output_dir", "out/" + name},
      {"scale", 1.0},
      {"render", {{"cell_px", 8}, {"margin_px", 8}, {"overlay", true}}},
  };
}

const std::map<std::string, Preset>& registry() {
  static const std::map<std::string, Preset> presets = [] {
    std::map<std::string, Preset> p;
    auto add = [&](const std::string& name, std::string summary, json doc) {
      p[name] = {std::move(summary), std::move(doc)};
    };

    const json three = points2d({{-24, -24}, {0, 20}, {15, -10}});
    const json five = points2d({{-24, -24}, {-24, 15}, {0, 0}, {10, -20}, {24, 20}});
    const json cluster = points2d({{-28, -28}, {-20, -20}, {0, 0}, {8, 12}, {20, 0}});
    const json disk = json::array({scatterer("circle", {0, 0}, 10.0, 256)});
    const json acorn = json::array({scatterer("acorn", {0, 0}, 6.0, 256)});
    const json square = json::array({scatterer("square", {-8, -8}, 3.0 * std::sqrt(2.0), 256)});

    for (int n : {1, 3, 10}) {
      const std::string tag = "N" + std::to_string(n);
      json d = common2d("example1-points-" + tag, n, 0.05);
      d["scatterers"] = three;
      d["indicators"] = {"I1", "I2tilde"};
      add("example1-points-" + tag, "three point-like circles, lambda_N with N=" + std::to_string(n), d);
      d = common2d("example1-extended-" + tag, n, 0.05);
      d["scatterers"] = disk;
      d["indicators"] = {"I1", "I2tilde"};
      add("example1-extended-" + tag, "circle of radius 10, lambda_N with N=" + std::to_string(n), d);
    }
    for (int w : {3, 7, 9}) {
      const std::string name = "example2-speed-w" + std::to_string(w);
      json d = common2d(name, 10, 0.05);
      d["scatterers"] = five;
      d["trajectory"]["angular_speed"] = w * kOmega0;
      d["indicators"] = {"I1", "I2tilde"};
      add(name, "five point-like circles, emitter at " + std::to_string(w) + " times the base angular speed", d);
    }
    const std::pair<const char*, double> levels[] = {{"s05", 0.05}, {"s20", 0.20}};
    for (const auto& [tag, sigma] : levels) {
      const std::string pct = std::to_string(static_cast<int>(std::lround(sigma * 100))) + "% noise";
      for (const auto& [set, list] : {std::pair<const char*, const json*>{"three", &three},
                                      {"five", &five}, {"cluster", &cluster}}) {
        const std::string name = std::string("example3-") + set + "-" + tag;
        json d = common2d(name, 10, sigma);
        d["scatterers"] = *list;
        add(name, std::string(set) + " point-like circles, " + pct, d);
      }
      for (const auto& [shape, list] : {std::pair<const char*, const json*>{"circle", &disk},
                                        {"acorn", &acorn}, {"square", &square}}) {
        const std::string name = std::string("example4-") + shape + "-" + tag;
        json d = common2d(name, 10, sigma);
        d["scatterers"] = *list;
        add(name, std::string("single ") + shape + ", " + pct, d);
      }
    }
    for (const auto& [shape, list] : {std::pair<const char*, const json*>{"circle", &disk},
                                      {"acorn", &acorn}, {"square", &square}}) {
      std::string name = std::string("example5-aperture-") + shape;
      json d = common2d(name, 10, 0.05);
      d["scatterers"] = *list;
      d["receivers"] = {{"layout", "arc"}, {"radius", 72.0}, {"count", 32}, {"span", kPi}, {"start_angle", 0.0}};
      add(name, std::string("single ") + shape + ", 32 receivers on a half circle", d);

      name = std::string("example5-path-") + shape;
      d = common2d(name, 10, 0.05);
      d["scatterers"] = *list;
      d["time_grid"] = {{"total_time", kBasePeriod / 2}, {"steps", 1280}};
      add(name, std::string("single ") + shape + ", emitter sweeps a half circle", d);
    }
    {
      json d = common2d("example6-acorn-kite", 10, 0.05);
      d["scatterers"] = {scatterer("acorn", {-12, -12}, 2.4, 256), scatterer("kite", {15, 15}, 6.0, 256)};
      add("example6-acorn-kite", "acorn and kite", d);
      d = common2d("example6-circle-square", 10, 0.05);
      d["scatterers"] = {scatterer("circle", {-15, -15}, 6.0, 256),
                         scatterer("square", {10, 10}, 3.0 * std::sqrt(2.0), 256)};
      add("example6-circle-square", "circle and square", d);
      d = common2d("example6-acorn-circle", 10, 0.05);
      d["scatterers"] = {scatterer("acorn", {-10, -10}, 3.6, 256), scatterer("circle", {10, 10}, 2.0, 256)};
      add("example6-acorn-circle", "large acorn and small circle", d);
    }
    {
      json d = common3d("example7-one");
      d["scatterers"] = {scatterer("sphere", {8, -16, 4}, 0.01, 1)};
      add("example7-one", "one point-like sphere in space", d);
      d = common3d("example7-two");
      d["scatterers"] = {scatterer("sphere", {-20, -16, -12}, 0.01, 1),
                         scatterer("sphere", {12, 16, 20}, 0.01, 1)};
      add("example7-two", "two point-like spheres in space", d);
      d = common3d("example8-cube");
      d["scatterers"] = {scatterer("cube", {0, 0, 0}, 11.0, 8)};
      add("example8-cube", "cube of half-width 11", d);
      d = common3d("example8-two-cubes");
      d["scatterers"] = {scatterer("cube", {18, 18, 18}, 6.0, 8), scatterer("cube", {-18, -18, -18}, 6.0, 8)};
      add("example8-two-cubes", "two cubes of half-width 6", d);
    }
    return p;
  }();
  return presets;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, preset] : registry()) names.push_back(name);
  return names;
}

std::string preset_summary(const std::string& name) {
  auto it = registry().find(name);
  if (it == registry().end()) throw ConfigError("unknown preset '" + name + "'", "preset");
  return it->second.summary;
}

json preset_document(const std::string& name) {
  auto it = registry().find(name);
  if (it == registry().end()) throw ConfigError("unknown preset '" + name + "'", "preset");
  return it->second.doc;
}

}  // namespace mowave
