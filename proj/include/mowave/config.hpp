#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include <mowave/forward.hpp>
#include <mowave/imaging.hpp>
#include <mowave/scene.hpp>

namespace mowave {

struct TrajectoryConfig {
  std::string kind = "circle";  ///< circle | spiral | stationary | polyline
  double radius = 60.0;
  double angular_speed = 0.0;
  double phase = 0.0;
  int turns = 5;
  double total_time = 42.0;
  Vec3 point;
  std::vector<double> times;
  std::vector<Vec3> points;

  bool operator==(const TrajectoryConfig&) const = default;
};

struct SignalConfig {
  std::string kind = "lambda_n";  ///< lambda_n | gaussian | zero
  int periods = 10;
  double base_period = 14.0;
  double center = 0.0;
  double width = 0.0;

  bool operator==(const SignalConfig&) const = default;
};

struct ScattererConfig {
  ShapeSpec shape;
  int resolution = 256;

  bool operator==(const ScattererConfig&) const = default;
};

struct GridConfig {
  std::array<double, 3> lo{0, 0, 0};
  std::array<double, 3> hi{0, 0, 0};
  std::array<int, 3> counts{1, 1, 1};

  bool operator==(const GridConfig&) const = default;
};

struct RenderConfig {
  int cell_px = 8;
  int margin_px = 8;
  bool overlay = true;

  bool operator==(const RenderConfig&) const = default;
};

enum class Generator { bie, approx };

std::string to_string(Generator g);

/// Fully defaulted experiment description.
struct ExperimentConfig {
  std::string preset;  ///< name of the preset the document expanded, if any
  int dimension = 2;
  double sound_speed = 340.0;
  TrajectoryConfig trajectory;
  SignalConfig signal;
  std::vector<ScattererConfig> scatterers;
  ReceiverSpec receivers;
  double total_time = 14.0;
  int steps = 2560;
  GridConfig sampling_grid;
  NoiseSpec noise;
  std::vector<IndicatorKind> indicators{IndicatorKind::I2tilde};
  Generator generator = Generator::bie;
  ConvolutionMethod convolution = ConvolutionMethod::fft;
  std::string output_dir = "out";
  double scale = 1.0;
  RenderConfig render;

  /// Equal when the canonical serializations match.
  bool operator==(const ExperimentConfig& o) const;
};

/// Parse a configuration document. A `preset` key expands the named preset
/// first; the remaining keys are merged over it (objects merge key by key,
/// everything else replaces). Unknown keys and ill-typed values raise
/// ConfigError naming the field.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Complete document that parses back to the same configuration.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// 64-bit FNV-1a hash of the canonical serialization without the output
/// directory and render settings, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

std::vector<std::string> preset_names();
/// Short description of a preset for listings.
std::string preset_summary(const std::string& name);
/// Complete document of a built-in preset; throws ConfigError if unknown.
nlohmann::json preset_document(const std::string& name);

/// Shrink or grow step count, mesh resolution and receiver count together.
/// Curves keep at least 8 segments, spheres at least subdivision level 1.
ExperimentConfig apply_scale(const ExperimentConfig& cfg, double factor);

/// Scene objects built from a configuration.
Trajectory make_trajectory(const ExperimentConfig& cfg);
Signal make_signal(const ExperimentConfig& cfg);
TimeGrid make_time_grid(const ExperimentConfig& cfg);
SamplingGrid make_sampling_grid(const ExperimentConfig& cfg);
std::vector<BoundaryMesh> make_meshes(const ExperimentConfig& cfg);

/// Throws SubsonicError when the largest sampled emitter speed reaches c.
void audit_subsonic(const ExperimentConfig& cfg);

}  // namespace mowave
