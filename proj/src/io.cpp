#include "samslr/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace samslr::io {

namespace {

constexpr uint32_t kFormatVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw std::runtime_error(path + ": truncated header");
  return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
         static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

void write_f32_payload(std::ostream& out, const Tensor& data) {
  std::vector<float> buf(data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    if (std::isnan(data[i])) throw std::invalid_argument("refusing to write NaN payload");
    buf[i] = static_cast<float>(data[i]);
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

void read_f32_payload(std::istream& in, Tensor& data, const std::string& path) {
  std::vector<float> buf(data.size());
  if (!in.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float))))
    throw std::runtime_error(path + ": truncated payload");
  for (size_t i = 0; i < data.size(); ++i) {
    if (std::isnan(buf[i])) throw std::runtime_error(path + ": NaN in payload");
    data[i] = static_cast<double>(buf[i]);
  }
}

void check_magic(std::istream& in, const char* magic, const std::string& path) {
  char got[4];
  if (!in.read(got, 4) || std::memcmp(got, magic, 4) != 0)
    throw std::runtime_error(path + ": bad magic, expected " + magic);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

}  // namespace

void save_keypoints(const std::string& path, const Tensor& data) {
  if (data.ndim() != 3 || data.dim(2) != 3)
    throw std::invalid_argument("save_keypoints: expected (T, N, 3) tensor");
  auto out = open_out(path, std::ios::binary);
  out.write("SKEL", 4);
  write_u32(out, kFormatVersion);
  write_u32(out, static_cast<uint32_t>(data.dim(0)));
  write_u32(out, static_cast<uint32_t>(data.dim(1)));
  write_u32(out, 3);
  write_f32_payload(out, data);
}

Tensor load_keypoints(const std::string& path) {
  auto in = open_in(path, std::ios::binary);
  check_magic(in, "SKEL", path);
  uint32_t version = read_u32(in, path);
  if (version != kFormatVersion)
    throw std::runtime_error(path + ": unsupported version " + std::to_string(version));
  uint32_t T = read_u32(in, path), N = read_u32(in, path), C = read_u32(in, path);
  if (T < 1 || N < 1 || C != 3) throw std::runtime_error(path + ": malformed dimensions");
  Tensor data({static_cast<int>(T), static_cast<int>(N), 3});
  read_f32_payload(in, data, path);
  return data;
}

void save_feature_clip(const std::string& path, const Tensor& data) {
  if (data.ndim() != 4) throw std::invalid_argument("save_feature_clip: expected 4-d tensor");
  auto out = open_out(path, std::ios::binary);
  out.write("FEAT", 4);
  write_u32(out, kFormatVersion);
  for (int d = 0; d < 4; ++d) write_u32(out, static_cast<uint32_t>(data.dim(d)));
  write_f32_payload(out, data);
}

Tensor load_feature_clip(const std::string& path) {
  auto in = open_in(path, std::ios::binary);
  check_magic(in, "FEAT", path);
  uint32_t version = read_u32(in, path);
  if (version != kFormatVersion)
    throw std::runtime_error(path + ": unsupported version " + std::to_string(version));
  int dims[4];
  for (int& d : dims) d = static_cast<int>(read_u32(in, path));
  if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1 || dims[3] < 1)
    throw std::runtime_error(path + ": malformed dimensions");
  Tensor data({dims[0], dims[1], dims[2], dims[3]});
  read_f32_payload(in, data, path);
  return data;
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty manifest");
  std::vector<ManifestEntry> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 4) throw std::runtime_error(path + ": malformed row '" + line + "'");
    ManifestEntry e;
    e.sample_id = f[0];
    e.relative_path = f[1];
    if (!f[2].empty()) e.label = std::stoi(f[2]);
    e.split = f[3];
    entries.push_back(std::move(e));
  }
  return entries;
}

void save_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  auto out = open_out(path);
  out << "sample_id,relative_path,label,split\n";
  for (const auto& e : entries) {
    out << e.sample_id << ',' << e.relative_path << ',';
    if (e.label) out << *e.label;
    out << ',' << e.split << '\n';
  }
}

std::vector<ScoreRow> load_scores(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty score file");
  size_t ncols = split_csv_line(line).size();
  std::vector<ScoreRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != ncols) throw std::runtime_error(path + ": inconsistent row '" + line + "'");
    ScoreRow r;
    r.sample_id = f[0];
    r.values.reserve(f.size() - 1);
    for (size_t i = 1; i < f.size(); ++i) r.values.push_back(std::stod(f[i]));
    rows.push_back(std::move(r));
  }
  return rows;
}

void save_scores(const std::string& path, const std::vector<ScoreRow>& rows) {
  auto out = open_out(path);
  out << "sample_id";
  if (!rows.empty())
    for (size_t i = 0; i < rows[0].values.size(); ++i) out << ",c" << i;
  out << '\n';
  char buf[40];
  for (const auto& r : rows) {
    out << r.sample_id;
    for (double v : r.values) {
      std::snprintf(buf, sizeof buf, "%.12g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

std::vector<std::pair<std::string, int>> load_labels(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty label file");
  std::vector<std::pair<std::string, int>> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 2) throw std::runtime_error(path + ": malformed row '" + line + "'");
    labels.emplace_back(f[0], std::stoi(f[1]));
  }
  return labels;
}

void save_labels(const std::string& path,
                 const std::vector<std::pair<std::string, int>>& labels) {
  auto out = open_out(path);
  out << "sample_id,label\n";
  for (const auto& [id, l] : labels) out << id << ',' << l << '\n';
}

}  // namespace samslr::io
