#include "samslr/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace samslr::checkpoint {

namespace {

constexpr char kMagic[4] = {'S', 'L', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_f32(std::ostream& out, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  write_u32(out, bits);
}

float read_f32(std::istream& in) {
  uint32_t bits = read_u32(in);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

void check_magic(std::istream& in, const std::string& path) {
  char m[4];
  in.read(m, 4);
  if (!in || std::memcmp(m, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  uint32_t version = read_u32(in);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version in " + path);
}

}  // namespace

uint64_t config_digest(const std::string& config_text) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : config_text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void save_checkpoint(const std::string& path, uint64_t digest, uint64_t step,
                     const std::vector<nn::Param*>& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u64(out, digest);
  write_u64(out, step);
  write_u32(out, static_cast<uint32_t>(state.size()));
  for (const nn::Param* p : state) {
    write_u32(out, static_cast<uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    write_u32(out, static_cast<uint32_t>(p->value.ndim()));
    for (int d = 0; d < p->value.ndim(); ++d) write_u32(out, static_cast<uint32_t>(p->value.dim(d)));
    for (size_t i = 0; i < p->value.size(); ++i) write_f32(out, static_cast<float>(p->value[i]));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

uint64_t load_checkpoint(const std::string& path, uint64_t digest,
                         const std::vector<nn::Param*>& state) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  check_magic(in, path);
  uint64_t stored_digest = read_u64(in);
  if (stored_digest != digest)
    throw std::runtime_error("checkpoint: configuration digest mismatch in " + path);
  uint64_t step = read_u64(in);
  uint32_t count = read_u32(in);
  if (count != state.size())
    throw std::runtime_error("checkpoint: tensor count mismatch in " + path);
  for (nn::Param* p : state) {
    uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in || name != p->name)
      throw std::runtime_error("checkpoint: expected tensor '" + p->name + "', found '" + name +
                               "'");
    uint32_t ndim = read_u32(in);
    if (static_cast<int>(ndim) != p->value.ndim())
      throw std::runtime_error("checkpoint: rank mismatch for " + name);
    for (uint32_t d = 0; d < ndim; ++d)
      if (read_u32(in) != static_cast<uint32_t>(p->value.dim(static_cast<int>(d))))
        throw std::runtime_error("checkpoint: shape mismatch for " + name);
    for (size_t i = 0; i < p->value.size(); ++i) {
      double v = static_cast<double>(read_f32(in));
      if (!std::isfinite(v)) throw std::runtime_error("checkpoint: non-finite value in " + name);
      p->value[i] = v;
    }
  }
  return step;
}

CheckpointInfo inspect_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  check_magic(in, path);
  CheckpointInfo info;
  info.digest = read_u64(in);
  info.step = read_u64(in);
  info.tensor_count = read_u32(in);
  return info;
}

}  // namespace samslr::checkpoint
