#include <mowave/record.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include <mowave/errors.hpp>

namespace mowave {

std::string to_string(RecordKind kind) {
  switch (kind) {
    case RecordKind::incident: return "incident";
    case RecordKind::scattered: return "scattered";
    case RecordKind::noisy_scattered: return "noisy_scattered";
  }
  return "scattered";
}

RecordKind parse_record_kind(const std::string& text) {
  if (text == "incident") return RecordKind::incident;
  if (text == "scattered") return RecordKind::scattered;
  if (text == "noisy_scattered") return RecordKind::noisy_scattered;
  throw IoError("unknown record kind '" + text + "'");
}

WaveRecord::WaveRecord(RecordKind kind_, MeasurementArray receivers_, TimeGrid grid_,
                       double sound_speed_)
    : kind(kind_),
      receivers(std::move(receivers_)),
      grid(grid_),
      sound_speed(sound_speed_),
      values(receivers.size() * static_cast<std::size_t>(grid.samples()), 0.0) {}

double WaveRecord::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

void write_record_csv(const WaveRecord& rec, std::ostream& out, const std::string& config_hash) {
  out << fmt::format("# mowave-record v1, kind={}, c={:.17g}, Nt={}, dt={:.17g}, Nm={}, "
                     "sigma={:.17g}, seed={}",
                     to_string(rec.kind), rec.sound_speed, rec.grid.steps(), rec.grid.dt(),
                     rec.receiver_count(), rec.sigma, rec.seed);
  if (!config_hash.empty()) out << ", config=" << config_hash;
  out << '\n';
  const int dim = rec.receivers.dimension;
  std::string line;
  for (std::size_t i = 0; i < rec.receiver_count(); ++i) {
    for (int a = 0; a < dim; ++a) {
      if (!line.empty()) line += ',';
      line += fmt::format("{:.17g}", rec.receivers.points[i][a]);
    }
  }
  out << line << '\n';
  for (int k = 0; k < rec.samples(); ++k) {
    line.clear();
    for (std::size_t i = 0; i < rec.receiver_count(); ++i) {
      if (i) line += ',';
      line += fmt::format("{:.17g}", rec.at(i, k));
    }
    out << line << '\n';
  }
  if (!out) throw IoError("failed to write wave record");
}

void write_record_csv(const WaveRecord& rec, const std::filesystem::path& path,
                      const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_record_csv(rec, out, config_hash);
}

namespace {

std::vector<double> parse_row(const std::string& line) {
  std::vector<double> row;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      row.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw IoError("bad numeric cell '" + cell + "'");
    }
  }
  return row;
}

std::string header_value(const std::string& header, const std::string& key) {
  const std::string tag = key + "=";
  auto pos = header.find(tag);
  if (pos == std::string::npos) throw IoError("record header lacks '" + key + "'");
  pos += tag.size();
  const auto end = header.find(',', pos);
  return header.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
}

}  // namespace

WaveRecord read_record_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("# mowave-record v1", 0) != 0) {
    throw IoError("not a mowave-record v1 file");
  }
  const RecordKind kind = parse_record_kind(header_value(header, "kind"));
  const double c = std::stod(header_value(header, "c"));
  const int nt = std::stoi(header_value(header, "Nt"));
  const double dt = std::stod(header_value(header, "dt"));
  const std::size_t nm = std::stoul(header_value(header, "Nm"));
  const double sigma = std::stod(header_value(header, "sigma"));
  const std::uint64_t seed = std::stoull(header_value(header, "seed"));

  std::string line;
  if (!std::getline(in, line)) throw IoError("record lacks the receiver line");
  const std::vector<double> coords = parse_row(line);
  if (nm == 0 || coords.size() % nm != 0) throw IoError("receiver line has wrong length");
  const int dim = static_cast<int>(coords.size() / nm);
  if (dim != 2 && dim != 3) throw IoError("receiver coordinates must be 2-D or 3-D");
  std::vector<Vec3> points(nm);
  for (std::size_t i = 0; i < nm; ++i) {
    points[i] = {coords[i * dim], coords[i * dim + 1], dim == 3 ? coords[i * dim + 2] : 0.0};
  }

  WaveRecord rec(kind, custom_receivers(std::move(points), std::vector<double>(nm, 1.0), dim),
                 TimeGrid(dt * nt, nt), c);
  rec.sigma = sigma;
  rec.seed = seed;
  for (int k = 0; k <= nt; ++k) {
    if (!std::getline(in, line)) throw IoError("record ends before row " + std::to_string(k));
    const std::vector<double> row = parse_row(line);
    if (row.size() != nm) throw IoError("row " + std::to_string(k) + " has wrong length");
    for (std::size_t i = 0; i < nm; ++i) rec.at(i, k) = row[i];
  }
  return rec;
}

WaveRecord read_record_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_record_csv(in);
}

}  // namespace mowave
