#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lfo/nn/param_vector.hpp"

namespace lfo::nn {

// Multi-component parameter checkpoint. On disk this is the "MDLP" format:
// little-endian, magic "MDLP", u32 version, u32 segment count, a segment
// table of (u32 name length, name bytes, u32 rows, u32 cols) entries, then
// the raw 64-bit float payload in table order. Component and layer names are
// joined as "<component>/<segment>".
class Checkpoint {
 public:
  void add(std::string name, ParamVector params);
  const ParamVector& get(std::string_view name) const;
  bool has(std::string_view name) const;
  const std::vector<std::pair<std::string, ParamVector>>& components() const {
    return components_;
  }

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  std::vector<std::pair<std::string, ParamVector>> components_;
};

}  // namespace lfo::nn
