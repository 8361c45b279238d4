#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>
#include <vector>

#include "lfo/data/observations.hpp"

namespace lfo {

using RewardFn = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

// Finite candidate set of reward evaluators over (s, s'). The constant-zero
// function is always a member, which keeps the reward distance non-negative.
class RewardFunctionSet {
 public:
  RewardFunctionSet();
  void add(RewardFn fn);
  std::size_t size() const { return candidates_.size(); }
  double evaluate(std::size_t index, const Eigen::VectorXd& s,
                  const Eigen::VectorXd& s_next) const;

 private:
  std::vector<RewardFn> candidates_;
};

// Supremum over the candidate set of the empirical mean-reward gap between
// two pair samples. Non-negative by the zero-function guarantee.
double empirical_lfo_reward_distance(const RewardFunctionSet& set,
                                     std::span<const ObservationPair> pairs_a,
                                     std::span<const ObservationPair> pairs_b);

// Sum of a non-negative reward over the sample; rejects negative values.
double empirical_reward_coefficient(const RewardFn& reward,
                                    std::span<const ObservationPair> pairs);

// Per-pair weights r_i / sum(r); rejects a zero normalizer.
std::vector<double> normalized_reward_distribution(const RewardFn& reward,
                                                   std::span<const ObservationPair> pairs);

// Uniform per-dimension binning over chosen state coordinates, applied to
// both s and s' (so the histogram lives on a 2*coords-dimensional grid).
struct HistogramGrid {
  std::vector<int> coords;  // state coordinate indices to histogram
  int bins_per_dim = 16;
  Eigen::VectorXd lo;  // per chosen coordinate
  Eigen::VectorXd hi;

  long total_bins() const;
  long bin_index(const Eigen::VectorXd& s, const Eigen::VectorXd& s_next,
                 bool* clamped = nullptr) const;
  Eigen::VectorXd bin_center(long index) const;  // (2*coords)-dimensional
  bool operator==(const HistogramGrid& other) const;
};

struct StateTransitionHistogram {
  HistogramGrid grid;
  double gamma = 0.0;
  std::vector<double> weights;  // sums to 1
  long clamped_pairs = 0;       // pairs that fell outside the grid
};

// Discounted pair histogram: each (s_t, s_{t+1}) contributes weight
// proportional to (1-gamma)*gamma^t, normalized over bins. Out-of-grid pairs
// land in the boundary bin and are counted.
StateTransitionHistogram estimate_state_transition_distribution(
    const std::vector<std::vector<Eigen::VectorXd>>& trajectories, const HistogramGrid& grid,
    double gamma);

// Uniform-weight histogram of a stored pair sample on the same grid.
StateTransitionHistogram histogram_from_pairs(std::span<const ObservationPair> pairs,
                                              const HistogramGrid& grid);

// Reward-weighted minimum gap between the expert histogram and a candidate
// list of policy histograms:
//   C_r * min_pi sum_bins (r(bin)/C_r) * (mu_E(bin) - mu_pi(bin))
// with C_r the sum of the reward over bin centers.
double empirical_state_transition_error(const RewardFn& reward,
                                        const StateTransitionHistogram& expert,
                                        std::span<const StateTransitionHistogram> agents);

// Grid-free core of the same computation over raw bin weights.
double state_transition_error_from_bins(std::span<const double> reward_per_bin,
                                        std::span<const double> expert_weights,
                                        std::span<const std::vector<double>> agent_weights);

}  // namespace lfo
