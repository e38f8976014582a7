#include <mowave/config.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include <mowave/errors.hpp>

namespace mowave {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

/// Strict view of one JSON object: typed getters that name the field on
/// error, and a final check that every key was consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError("expected an object", path_.empty() ? "<root>" : path_);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError("missing required key", join(path_, key));
    used_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError("expected a number", join(path_, key));
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError("expected a finite number", join(path_, key));
    return x;
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  long long integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError("expected an integer", join(path_, key));
    return v.get<long long>();
  }
  long long integer(const std::string& key, long long fallback) {
    return has(key) ? integer(key) : fallback;
  }

  std::string text(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError("expected a string", join(path_, key));
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) {
    return has(key) ? text(key) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError("expected true or false", join(path_, key));
    return v.get<bool>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError("expected an array of numbers", join(path_, key));
    std::vector<double> out;
    for (const json& e : v) {
      if (!e.is_number()) throw ConfigError("expected an array of numbers", join(path_, key));
      out.push_back(e.get<double>());
    }
    return out;
  }

  Vec3 point(const std::string& key, int dim) {
    const std::vector<double> v = numbers(key);
    if (static_cast<int>(v.size()) != dim) {
      throw ConfigError("expected " + std::to_string(dim) + " coordinates", join(path_, key));
    }
    return {v[0], v[1], dim == 3 ? v[2] : 0.0};
  }

  Section child(const std::string& key) { return Section(raw(key), join(path_, key)); }

  std::string path(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError("unknown key", join(path_, it.key()));
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

json point_json(const Vec3& p, int dim) {
  json a = json::array({p.x, p.y});
  if (dim == 3) a.push_back(p.z);
  return a;
}

const char* shape_name(ShapeKind k) {
  switch (k) {
    case ShapeKind::circle: return "circle";
    case ShapeKind::acorn: return "acorn";
    case ShapeKind::square: return "square";
    case ShapeKind::kite: return "kite";
    case ShapeKind::sphere: return "sphere";
    case ShapeKind::cube: return "cube";
  }
  return "circle";
}

ShapeKind parse_shape(const std::string& s, const std::string& field) {
  if (s == "circle") return ShapeKind::circle;
  if (s == "acorn") return ShapeKind::acorn;
  if (s == "square") return ShapeKind::square;
  if (s == "kite") return ShapeKind::kite;
  if (s == "sphere") return ShapeKind::sphere;
  if (s == "cube") return ShapeKind::cube;
  throw ConfigError("unknown scatterer kind '" + s + "'", field);
}

int default_resolution(ShapeKind k) {
  switch (k) {
    case ShapeKind::sphere: return 3;
    case ShapeKind::cube: return 8;
    default: return 256;
  }
}

const char* layout_name(ReceiverLayout l) {
  switch (l) {
    case ReceiverLayout::circle: return "circle";
    case ReceiverLayout::sphere: return "sphere";
    case ReceiverLayout::arc: return "arc";
    case ReceiverLayout::custom: return "custom";
  }
  return "circle";
}

int checked_int(long long v, long long lo, const std::string& field, const std::string& what) {
  if (v < lo || v > 1'000'000'000) throw ConfigError(what, field);
  return static_cast<int>(v);
}

double positive(double v, const std::string& field) {
  if (!(v > 0.0)) throw ConfigError("must be positive", field);
  return v;
}

TrajectoryConfig parse_trajectory(Section s, int dim) {
  TrajectoryConfig t;
  t.kind = s.text("kind");
  if (t.kind == "circle") {
    if (dim != 2) throw ConfigError("circle trajectory needs dimension 2", s.path("kind"));
    t.radius = positive(s.number("radius"), s.path("radius"));
    t.angular_speed = s.number("angular_speed");
    t.phase = s.number("phase", 0.0);
  } else if (t.kind == "spiral") {
    if (dim != 3) throw ConfigError("spiral trajectory needs dimension 3", s.path("kind"));
    t.radius = positive(s.number("radius"), s.path("radius"));
    t.turns = checked_int(s.integer("turns"), 0, s.path("turns"), "must be nonnegative");
    t.total_time = positive(s.number("total_time"), s.path("total_time"));
  } else if (t.kind == "stationary") {
    t.point = s.point("point", dim);
  } else if (t.kind == "polyline") {
    t.times = s.numbers("times");
    const json& pts = s.raw("points");
    if (!pts.is_array()) throw ConfigError("expected an array of points", s.path("points"));
    for (std::size_t m = 0; m < pts.size(); ++m) {
      json wrap = {{"p", pts[m]}};
      Section ps(wrap, s.path("points") + "[" + std::to_string(m) + "]");
      t.points.push_back(ps.point("p", dim));
    }
    if (t.times.size() < 2 || t.times.size() != t.points.size()) {
      throw ConfigError("needs matching times and points (at least two)", s.path("points"));
    }
  } else {
    throw ConfigError("unknown trajectory kind '" + t.kind + "'", s.path("kind"));
  }
  s.finish();
  return t;
}

SignalConfig parse_signal(Section s) {
  SignalConfig g;
  g.kind = s.text("kind");
  if (g.kind == "lambda_n") {
    g.periods = checked_int(s.integer("periods"), 1, s.path("periods"), "must be at least 1");
    g.base_period = positive(s.number("base_period"), s.path("base_period"));
  } else if (g.kind == "gaussian") {
    g.center = s.number("center");
    g.width = positive(s.number("width"), s.path("width"));
  } else if (g.kind != "zero") {
    throw ConfigError("unknown signal kind '" + g.kind + "'", s.path("kind"));
  }
  s.finish();
  return g;
}

}  // namespace

std::string to_string(Generator g) { return g == Generator::bie ? "bie" : "approx"; }

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return to_json(*this) == to_json(o);
}

ExperimentConfig parse_config(const json& input) {
  if (!input.is_object()) throw ConfigError("configuration must be a JSON object", "<root>");
  json doc = input;
  std::string preset;
  if (doc.contains("preset")) {
    if (!doc["preset"].is_string()) throw ConfigError("expected a string", "preset");
    preset = doc["preset"].get<std::string>();
    json base = preset_document(preset);
    doc.erase("preset");
    // Objects merge key by key; explicit nulls are rejected rather than
    // silently deleting a preset entry.
    std::function<void(json&, const json&, const std::string&)> merge =
        [&](json& dst, const json& src, const std::string& path) {
          for (auto it = src.begin(); it != src.end(); ++it) {
            const std::string p = join(path, it.key());
            if (it->is_null()) throw ConfigError("null is not a valid value", p);
            if (it->is_object() && dst.contains(it.key()) && dst[it.key()].is_object()) {
              merge(dst[it.key()], *it, p);
            } else {
              dst[it.key()] = *it;
            }
          }
        };
    merge(base, doc, "");
    doc = std::move(base);
    doc.erase("preset");
  }

  Section root(doc, "");
  ExperimentConfig cfg;
  cfg.preset = preset;
  cfg.dimension = checked_int(root.integer("dimension"), 2, "dimension", "must be 2 or 3");
  if (cfg.dimension != 2 && cfg.dimension != 3) throw ConfigError("must be 2 or 3", "dimension");
  const int dim = cfg.dimension;

  if (root.has("medium")) {
    Section m = root.child("medium");
    cfg.sound_speed = positive(m.number("sound_speed"), "medium.sound_speed");
    m.finish();
  }

  cfg.trajectory = parse_trajectory(root.child("trajectory"), dim);
  cfg.signal = parse_signal(root.child("signal"));

  {
    const json& list = root.raw("scatterers");
    if (!list.is_array() || list.empty()) {
      throw ConfigError("expected a nonempty array", "scatterers");
    }
    for (std::size_t m = 0; m < list.size(); ++m) {
      Section s(list[m], "scatterers[" + std::to_string(m) + "]");
      ScattererConfig sc;
      sc.shape.kind = parse_shape(s.text("kind"), s.path("kind"));
      if (sc.shape.dimension() != dim) {
        throw ConfigError("shape does not match the scene dimension", s.path("kind"));
      }
      sc.shape.center = s.point("center", dim);
      sc.shape.scale = positive(s.number("scale"), s.path("scale"));
      sc.resolution = checked_int(s.integer("resolution", default_resolution(sc.shape.kind)), 1,
                                  s.path("resolution"), "must be positive");
      if (dim == 2 && sc.resolution < 8) {
        throw ConfigError("curves need at least 8 segments", s.path("resolution"));
      }
      s.finish();
      cfg.scatterers.push_back(sc);
    }
  }

  {
    Section r = root.child("receivers");
    const std::string layout = r.text("layout");
    if (layout == "circle") {
      cfg.receivers.layout = ReceiverLayout::circle;
    } else if (layout == "sphere") {
      cfg.receivers.layout = ReceiverLayout::sphere;
    } else if (layout == "arc") {
      cfg.receivers.layout = ReceiverLayout::arc;
    } else {
      throw ConfigError("unknown receiver layout '" + layout + "'", "receivers.layout");
    }
    if ((cfg.receivers.layout == ReceiverLayout::sphere) != (dim == 3)) {
      throw ConfigError("layout does not match the scene dimension", "receivers.layout");
    }
    cfg.receivers.radius = positive(r.number("radius"), "receivers.radius");
    cfg.receivers.count =
        checked_int(r.integer("count"), 1, "receivers.count", "must be at least 1");
    if (cfg.receivers.layout == ReceiverLayout::arc) {
      cfg.receivers.span = positive(r.number("span"), "receivers.span");
      cfg.receivers.start_angle = r.number("start_angle", 0.0);
    }
    r.finish();
  }

  {
    Section t = root.child("time_grid");
    cfg.total_time = positive(t.number("total_time"), "time_grid.total_time");
    cfg.steps = checked_int(t.integer("steps"), 1, "time_grid.steps", "must be at least 1");
    t.finish();
  }

  {
    Section g = root.child("sampling_grid");
    const std::vector<double> lo = g.numbers("lo");
    const std::vector<double> hi = g.numbers("hi");
    const json& counts = g.raw("counts");
    if (static_cast<int>(lo.size()) != dim) throw ConfigError("wrong length", "sampling_grid.lo");
    if (static_cast<int>(hi.size()) != dim) throw ConfigError("wrong length", "sampling_grid.hi");
    if (!counts.is_array() || static_cast<int>(counts.size()) != dim) {
      throw ConfigError("expected one count per axis", "sampling_grid.counts");
    }
    for (int a = 0; a < dim; ++a) {
      if (!counts[a].is_number_integer() || counts[a].get<long long>() < 1) {
        throw ConfigError("counts must be positive integers", "sampling_grid.counts");
      }
      if (!(hi[a] >= lo[a])) throw ConfigError("hi must not be below lo", "sampling_grid.hi");
      cfg.sampling_grid.lo[a] = lo[a];
      cfg.sampling_grid.hi[a] = hi[a];
      cfg.sampling_grid.counts[a] = counts[a].get<int>();
    }
    g.finish();
  }

  if (root.has("noise")) {
    Section n = root.child("noise");
    cfg.noise.sigma = n.number("sigma", 0.0);
    if (!(cfg.noise.sigma >= 0.0)) throw ConfigError("must be nonnegative", "noise.sigma");
    const long long seed = n.integer("seed", 1);
    if (seed < 0) throw ConfigError("must be nonnegative", "noise.seed");
    cfg.noise.seed = static_cast<std::uint64_t>(seed);
    n.finish();
  }

  if (root.has("indicators")) {
    const json& list = root.raw("indicators");
    if (!list.is_array() || list.empty()) {
      throw ConfigError("expected a nonempty array", "indicators");
    }
    cfg.indicators.clear();
    for (const json& e : list) {
      if (!e.is_string()) throw ConfigError("expected indicator names", "indicators");
      const IndicatorKind k = parse_indicator_kind(e.get<std::string>());
      if (k == IndicatorKind::I2) {
        throw ConfigError("I2 needs the unknown center; use I2tilde", "indicators");
      }
      if (std::find(cfg.indicators.begin(), cfg.indicators.end(), k) == cfg.indicators.end()) {
        cfg.indicators.push_back(k);
      }
    }
  }

  if (root.has("generator")) {
    const std::string g = root.text("generator");
    if (g == "bie") {
      cfg.generator = Generator::bie;
    } else if (g == "approx") {
      cfg.generator = Generator::approx;
    } else {
      throw ConfigError("expected 'bie' or 'approx'", "generator");
    }
  }
  if (root.has("convolution")) {
    try {
      cfg.convolution = parse_convolution_method(root.text("convolution"));
    } catch (const ConfigError&) {
      throw ConfigError("expected 'fft' or 'direct'", "convolution");
    }
  }
  cfg.output_dir = root.text("output_dir", cfg.output_dir);
  cfg.scale = positive(root.number("scale", 1.0), "scale");
  if (root.has("render")) {
    Section r = root.child("render");
    cfg.render.cell_px = checked_int(r.integer("cell_px", cfg.render.cell_px), 1,
                                     "render.cell_px", "must be at least 1");
    cfg.render.margin_px = checked_int(r.integer("margin_px", cfg.render.margin_px), 0,
                                       "render.margin_px", "must be nonnegative");
    cfg.render.overlay = r.boolean("overlay", cfg.render.overlay);
    r.finish();
  }
  root.finish();

  audit_subsonic(cfg);
  return cfg;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what(), "<document>");
  }
  return parse_config(doc);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

json to_json(const ExperimentConfig& cfg) {
  const int dim = cfg.dimension;
  json doc;
  if (!cfg.preset.empty()) doc["preset"] = cfg.preset;
  doc["dimension"] = dim;
  doc["medium"] = {{"sound_speed", cfg.sound_speed}};

  const TrajectoryConfig& t = cfg.trajectory;
  json traj = {{"kind", t.kind}};
  if (t.kind == "circle") {
    traj["radius"] = t.radius;
    traj["angular_speed"] = t.angular_speed;
    traj["phase"] = t.phase;
  } else if (t.kind == "spiral") {
    traj["radius"] = t.radius;
    traj["turns"] = t.turns;
    traj["total_time"] = t.total_time;
  } else if (t.kind == "stationary") {
    traj["point"] = point_json(t.point, dim);
  } else {
    traj["times"] = t.times;
    json pts = json::array();
    for (const Vec3& p : t.points) pts.push_back(point_json(p, dim));
    traj["points"] = pts;
  }
  doc["trajectory"] = traj;

  const SignalConfig& g = cfg.signal;
  json sig = {{"kind", g.kind}};
  if (g.kind == "lambda_n") {
    sig["periods"] = g.periods;
    sig["base_period"] = g.base_period;
  } else if (g.kind == "gaussian") {
    sig["center"] = g.center;
    sig["width"] = g.width;
  }
  doc["signal"] = sig;

  json scat = json::array();
  for (const ScattererConfig& s : cfg.scatterers) {
    scat.push_back({{"kind", shape_name(s.shape.kind)},
                    {"center", point_json(s.shape.center, dim)},
                    {"scale", s.shape.scale},
                    {"resolution", s.resolution}});
  }
  doc["scatterers"] = scat;

  json rec = {{"layout", layout_name(cfg.receivers.layout)},
              {"radius", cfg.receivers.radius},
              {"count", cfg.receivers.count}};
  if (cfg.receivers.layout == ReceiverLayout::arc) {
    rec["span"] = cfg.receivers.span;
    rec["start_angle"] = cfg.receivers.start_angle;
  }
  doc["receivers"] = rec;
  doc["time_grid"] = {{"total_time", cfg.total_time}, {"steps", cfg.steps}};

  json lo = json::array();
  json hi = json::array();
  json counts = json::array();
  for (int a = 0; a < dim; ++a) {
    lo.push_back(cfg.sampling_grid.lo[a]);
    hi.push_back(cfg.sampling_grid.hi[a]);
    counts.push_back(cfg.sampling_grid.counts[a]);
  }
  doc["sampling_grid"] = {{"lo", lo}, {"hi", hi}, {"counts", counts}};
  doc["noise"] = {{"sigma", cfg.noise.sigma}, {"seed", cfg.noise.seed}};
  json ind = json::array();
  for (IndicatorKind k : cfg.indicators) ind.push_back(to_string(k));
  doc["indicators"] = ind;
  doc["generator"] = to_string(cfg.generator);
  doc["convolution"] = to_string(cfg.convolution);
  doc["output_dir"] = cfg.output_dir;
  doc["scale"] = cfg.scale;
  doc["render"] = {{"cell_px", cfg.render.cell_px},
                   {"margin_px", cfg.render.margin_px},
                   {"overlay", cfg.render.overlay}};
  return doc;
}

std::string config_hash(const ExperimentConfig& cfg) {
  // Output location and rendering do not change any computed value.
  json doc = to_json(cfg);
  doc.erase("output_dir");
  doc.erase("render");
  const std::string text = doc.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return fmt::format("{:016x}", h);
}

ExperimentConfig apply_scale(const ExperimentConfig& cfg, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw ConfigError("must be positive", "scale");
  ExperimentConfig out = cfg;
  out.scale = 1.0;
  if (factor == 1.0) return out;
  out.steps = std::max(1, static_cast<int>(std::lround(cfg.steps * factor)));
  for (ScattererConfig& s : out.scatterers) {
    switch (s.shape.kind) {
      case ShapeKind::sphere:
        s.resolution = std::max(1, s.resolution + static_cast<int>(std::lround(std::log2(factor))));
        break;
      case ShapeKind::cube:
        s.resolution = std::max(1, static_cast<int>(std::lround(s.resolution * factor)));
        break;
      default:
        s.resolution = std::max(8, static_cast<int>(std::lround(s.resolution * factor)));
    }
  }
  out.receivers.count = std::max(1, static_cast<int>(std::lround(cfg.receivers.count * factor)));
  return out;
}

Trajectory make_trajectory(const ExperimentConfig& cfg) {
  const TrajectoryConfig& t = cfg.trajectory;
  if (t.kind == "circle") return Trajectory::circle(t.radius, t.angular_speed, t.phase);
  if (t.kind == "spiral") return Trajectory::spiral(t.radius, t.turns, t.total_time);
  if (t.kind == "stationary") return Trajectory::stationary(t.point, cfg.dimension);
  if (t.kind == "polyline") {
    return Trajectory::polyline(t.times, t.points, make_time_grid(cfg).dt() / 10.0, cfg.dimension);
  }
  throw ConfigError("unknown trajectory kind '" + t.kind + "'", "trajectory.kind");
}

Signal make_signal(const ExperimentConfig& cfg) {
  const SignalConfig& g = cfg.signal;
  if (g.kind == "lambda_n") return Signal::lambda_n(g.periods, g.base_period);
  if (g.kind == "gaussian") return Signal::gaussian(g.center, g.width);
  if (g.kind == "zero") return Signal::zero();
  throw ConfigError("unknown signal kind '" + g.kind + "'", "signal.kind");
}

TimeGrid make_time_grid(const ExperimentConfig& cfg) { return TimeGrid(cfg.total_time, cfg.steps); }

SamplingGrid make_sampling_grid(const ExperimentConfig& cfg) {
  return SamplingGrid(cfg.dimension, cfg.sampling_grid.lo, cfg.sampling_grid.hi,
                      cfg.sampling_grid.counts);
}

std::vector<BoundaryMesh> make_meshes(const ExperimentConfig& cfg) {
  std::vector<BoundaryMesh> out;
  for (const ScattererConfig& s : cfg.scatterers) {
    out.push_back(build_boundary_mesh(s.shape, s.resolution));
  }
  return out;
}

void audit_subsonic(const ExperimentConfig& cfg) {
  const Trajectory traj = make_trajectory(cfg);
  const double vmax = std::max(traj.max_sampled_speed(make_time_grid(cfg)), traj.speed_bound());
  if (!(vmax < cfg.sound_speed)) {
    throw SubsonicError(fmt::format("trajectory: emitter speed {:.6g} is not below c = {:.6g}",
                                    vmax, cfg.sound_speed));
  }
}

}  // namespace mowave
