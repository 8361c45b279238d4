#include "lfo/nn/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace lfo::nn {

namespace {

constexpr char kMagic[4] = {'M', 'D', 'L', 'P'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::istream& is, const char* field) {
  unsigned char buf[4];
  if (!is.read(reinterpret_cast<char*>(buf), 4)) {
    throw std::runtime_error(std::string("checkpoint truncated while reading ") + field);
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), 8);
}

double read_f64(std::istream& is, const char* field) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) {
    throw std::runtime_error(std::string("checkpoint truncated while reading ") + field);
  }
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void Checkpoint::add(std::string name, ParamVector params) {
  components_.emplace_back(std::move(name), std::move(params));
}

const ParamVector& Checkpoint::get(std::string_view name) const {
  for (const auto& [n, p] : components_) {
    if (n == name) return p;
  }
  throw std::out_of_range("checkpoint has no component named '" + std::string(name) + "'");
}

bool Checkpoint::has(std::string_view name) const {
  for (const auto& [n, p] : components_) {
    if (n == name) return true;
  }
  return false;
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open checkpoint file for writing: " + path);
  os.write(kMagic, 4);
  write_u32(os, kVersion);

  std::uint32_t total_segments = 0;
  for (const auto& [name, pv] : components_) {
    total_segments += static_cast<std::uint32_t>(pv.layout.segments().size());
  }
  write_u32(os, total_segments);
  for (const auto& [name, pv] : components_) {
    for (const auto& seg : pv.layout.segments()) {
      const std::string full = name + "/" + seg.name;
      write_u32(os, static_cast<std::uint32_t>(full.size()));
      os.write(full.data(), static_cast<std::streamsize>(full.size()));
      write_u32(os, static_cast<std::uint32_t>(seg.rows));
      write_u32(os, static_cast<std::uint32_t>(seg.cols));
    }
  }
  for (const auto& [name, pv] : components_) {
    for (const double v : pv.values) write_f64(os, v);
  }
  if (!os) throw std::runtime_error("write failed for checkpoint file: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint file: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("bad magic in checkpoint file (expected MDLP): " + path);
  }
  const std::uint32_t version = read_u32(is, "version");
  if (version != kVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t n_segments = read_u32(is, "segment count");

  struct RawSeg {
    std::string component;
    std::string segment;
    int rows;
    int cols;
  };
  std::vector<RawSeg> table;
  table.reserve(n_segments);
  for (std::uint32_t i = 0; i < n_segments; ++i) {
    const std::uint32_t name_len = read_u32(is, "segment name length");
    std::string full(name_len, '\0');
    if (!is.read(full.data(), name_len)) {
      throw std::runtime_error("checkpoint truncated while reading segment name");
    }
    const int rows = static_cast<int>(read_u32(is, "segment rows"));
    const int cols = static_cast<int>(read_u32(is, "segment cols"));
    const auto slash = full.find('/');
    if (slash == std::string::npos) {
      throw std::runtime_error("malformed segment name (missing component prefix): " + full);
    }
    table.push_back({full.substr(0, slash), full.substr(slash + 1), rows, cols});
  }

  Checkpoint ck;
  ParamLayout layout;
  std::string current;
  auto flush = [&](std::vector<double>&& vals) {
    ParamVector pv(layout);
    pv.values = std::move(vals);
    ck.add(current, std::move(pv));
    layout = ParamLayout();
  };

  std::vector<double> values;
  for (std::uint32_t i = 0; i < n_segments; ++i) {
    const RawSeg& seg = table[i];
    if (seg.component != current) {
      if (!current.empty()) flush(std::move(values));
      current = seg.component;
      values.clear();
    }
    layout.add(seg.segment, seg.rows, seg.cols);
    const std::size_t count = static_cast<std::size_t>(seg.rows) * seg.cols;
    for (std::size_t k = 0; k < count; ++k) values.push_back(read_f64(is, "parameter value"));
  }
  if (!current.empty()) flush(std::move(values));
  return ck;
}

}  // namespace lfo::nn
