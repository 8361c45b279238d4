#include "lfo/data/observations.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace lfo {

namespace {

constexpr char kMagic[4] = {'M', 'O', 'D', 'L'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  }
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const char* field) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw std::runtime_error(std::string("observation file truncated while reading ") + field);
  }
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  }
  T v;
  std::memcpy(&v, &bits, sizeof(T));
  return v;
}

}  // namespace

void save_observations(const ExpertObservationSet& set, const std::string& path) {
  if (set.pairs.empty()) throw std::invalid_argument("refusing to save an empty observation set");
  const int dim = set.state_dim();
  for (const auto& p : set.pairs) {
    if (p.s.size() != dim || p.s_next.size() != dim) {
      throw std::invalid_argument("observation set has inconsistent state dimensions");
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open observation file for writing: " + path);
  os.write(kMagic, 4);
  write_le<std::uint32_t>(os, kVersion);
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(dim));
  write_le<std::uint64_t>(os, static_cast<std::uint64_t>(set.pairs.size()));
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(set.env_id.size()));
  os.write(set.env_id.data(), static_cast<std::streamsize>(set.env_id.size()));
  write_le<double>(os, set.noise_std);
  write_le<double>(os, set.mean_return);
  for (const auto& p : set.pairs) {
    for (int i = 0; i < dim; ++i) write_le<double>(os, p.s(i));
    for (int i = 0; i < dim; ++i) write_le<double>(os, p.s_next(i));
  }
  if (!os) throw std::runtime_error("write failed for observation file: " + path);
}

ExpertObservationSet load_observations(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open observation file: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("bad magic in observation file (expected MODL): " + path);
  }
  const auto version = read_le<std::uint32_t>(is, "version");
  if (version != kVersion) {
    throw std::runtime_error("unsupported observation file version " + std::to_string(version));
  }
  const auto dim = read_le<std::uint32_t>(is, "state_dim");
  if (dim == 0 || dim > 4096) {
    throw std::runtime_error("observation file header has invalid state_dim " +
                             std::to_string(dim));
  }
  const auto count = read_le<std::uint64_t>(is, "pair_count");
  const auto id_len = read_le<std::uint32_t>(is, "env id length");
  std::string env_id(id_len, '\0');
  if (!is.read(env_id.data(), id_len)) {
    throw std::runtime_error("observation file truncated while reading env id");
  }

  ExpertObservationSet set;
  set.env_id = std::move(env_id);
  set.noise_std = read_le<double>(is, "noise_std");
  set.mean_return = read_le<double>(is, "mean_return");
  set.pairs.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    ObservationPair p;
    p.s.resize(dim);
    p.s_next.resize(dim);
    for (std::uint32_t i = 0; i < dim; ++i) p.s(i) = read_le<double>(is, "pair value");
    for (std::uint32_t i = 0; i < dim; ++i) p.s_next(i) = read_le<double>(is, "pair value");
    set.pairs.push_back(std::move(p));
  }
  return set;
}

void export_observations_csv(const ExpertObservationSet& set, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open csv file for writing: " + path);
  const int dim = set.state_dim();
  char buf[64];
  for (const auto& p : set.pairs) {
    for (int i = 0; i < 2 * dim; ++i) {
      const double v = i < dim ? p.s(i) : p.s_next(i - dim);
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      os << buf << (i + 1 < 2 * dim ? "," : "\n");
    }
  }
}

}  // namespace lfo
