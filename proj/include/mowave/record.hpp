#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <mowave/scene.hpp>

namespace mowave {

enum class RecordKind { incident, scattered, noisy_scattered };

std::string to_string(RecordKind kind);
RecordKind parse_record_kind(const std::string& text);

/// Sampled field values at a set of points over a time grid.
/// Storage is receiver-major: value(i, k) is point i at time t_k.
struct WaveRecord {
  RecordKind kind = RecordKind::scattered;
  MeasurementArray receivers;
  TimeGrid grid{1.0, 1};
  double sound_speed = 0.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> values;

  WaveRecord() = default;
  WaveRecord(RecordKind kind, MeasurementArray receivers, TimeGrid grid, double sound_speed);

  std::size_t receiver_count() const { return receivers.size(); }
  int samples() const { return grid.samples(); }

  double& at(std::size_t i, int k) { return values[i * grid.samples() + k]; }
  double at(std::size_t i, int k) const { return values[i * grid.samples() + k]; }

  std::span<double> series(std::size_t i) {
    return {values.data() + i * grid.samples(), static_cast<std::size_t>(grid.samples())};
  }
  std::span<const double> series(std::size_t i) const {
    return {values.data() + i * grid.samples(), static_cast<std::size_t>(grid.samples())};
  }

  double max_abs() const;
};

/// CSV layout: a `# mowave-record v1, ...` header, one line of flattened
/// receiver coordinates, then steps+1 rows (row k = time t_k) of one value
/// per receiver, printed with 17 significant digits. A nonempty
/// `config_hash` is appended to the header as `config=<hash>`.
void write_record_csv(const WaveRecord& record, std::ostream& out,
                      const std::string& config_hash = {});
void write_record_csv(const WaveRecord& record, const std::filesystem::path& path,
                      const std::string& config_hash = {});

/// Inverse of write_record_csv. Control measures are not part of the file
/// format, so every receiver weight of the result is 1.
WaveRecord read_record_csv(std::istream& in);
WaveRecord read_record_csv(const std::filesystem::path& path);

}  // namespace mowave
