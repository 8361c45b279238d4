#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lfo::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Segment {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }
};

// Describes how a flat value array splits into named matrix segments.
// Segment storage is column-major, matching Eigen's default.
class ParamLayout {
 public:
  std::size_t add(std::string name, int rows, int cols) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("segment shape must be positive: " + name);
    Segment seg{std::move(name), rows, cols, total_};
    total_ += seg.count();
    segments_.push_back(std::move(seg));
    return segments_.size() - 1;
  }

  const Segment& segment(std::string_view name) const {
    for (const auto& s : segments_) {
      if (s.name == name) return s;
    }
    throw std::out_of_range("no parameter segment named '" + std::string(name) + "'");
  }

  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t total_size() const { return total_; }

  bool operator==(const ParamLayout& other) const {
    if (segments_.size() != other.segments_.size()) return false;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const auto& a = segments_[i];
      const auto& b = other.segments_[i];
      if (a.name != b.name || a.rows != b.rows || a.cols != b.cols) return false;
    }
    return true;
  }

 private:
  std::vector<Segment> segments_;
  std::size_t total_ = 0;
};

// Flat 64-bit parameter store with a named-segment layout. Houses every
// trainable object in the engine (reward net, critics, policy, temperature).
struct ParamVector {
  ParamLayout layout;
  std::vector<double> values;

  ParamVector() = default;
  explicit ParamVector(ParamLayout l)
      : layout(std::move(l)), values(layout.total_size(), 0.0) {}

  std::size_t size() const { return values.size(); }

  Eigen::Map<Matrix> matrix(std::string_view name) {
    const Segment& s = layout.segment(name);
    return Eigen::Map<Matrix>(values.data() + s.offset, s.rows, s.cols);
  }

  Eigen::Map<const Matrix> matrix(std::string_view name) const {
    const Segment& s = layout.segment(name);
    return Eigen::Map<const Matrix>(values.data() + s.offset, s.rows, s.cols);
  }

  bool all_finite() const {
    for (const double v : values) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }
};

}  // namespace lfo::nn
