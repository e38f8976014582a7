#pragma once

#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <mowave/config.hpp>
#include <mowave/errors.hpp>
#include <mowave/forward.hpp>
#include <mowave/heatmap.hpp>
#include <mowave/imaging.hpp>

namespace mowave {

inline constexpr const char* kVersion = "1.0.0";

/// Pipeline failure. The original error is nested (std::rethrow_if_nested).
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage '" + stage + "': " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct RunOptions {
  bool write_files = true;
  bool compute_both_methods = false;  ///< also evaluate the other convolution method
};

struct RunResult {
  ExperimentConfig config;  ///< after scaling
  WaveRecord clean;
  WaveRecord record;        ///< noisy record written to disk
  std::vector<IndicatorImage> images;
  std::optional<double> method_difference;  ///< fft vs direct, when both were run
  nlohmann::json metadata;
  std::vector<std::filesystem::path> files;

  const IndicatorImage* image(IndicatorKind kind) const;
};

/// simulate -> noise -> image -> emit. Stages raise StageError with the
/// underlying error nested. Convolution images are computed before the
/// correlation image so that a zero-data run still writes its record and
/// convolution image before failing.
RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

/// Configuration embedded in a metadata file written by run_experiment.
ExperimentConfig config_from_metadata(const nlohmann::json& metadata);

/// Overlay of scatterer boundaries, emitter path and receivers.
Overlay make_overlay(const ExperimentConfig& cfg);

}  // namespace mowave
