#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "lfo/rng.hpp"

namespace lfo {

struct Transition {
  Eigen::VectorXd s;
  Eigen::VectorXd a;
  std::optional<double> r_env;  // absent in imitation mode
  Eigen::VectorXd s_next;
  bool done = false;
};

// Fixed-capacity FIFO ring of transitions.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int state_dim, int action_dim);

  void push(Transition t);
  std::size_t size() const { return count_; }
  std::size_t capacity() const { return capacity_; }

  // k-th oldest element, k in [0, size).
  const Transition& at(std::size_t k) const;

  // n uniform draws with replacement.
  std::vector<Transition> sample(Rng& rng, int n) const;

 private:
  std::size_t capacity_;
  int state_dim_;
  int action_dim_;
  std::vector<Transition> storage_;
  std::size_t head_ = 0;  // next write slot once full
  std::size_t count_ = 0;
};

}  // namespace lfo
