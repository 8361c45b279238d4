#include "lfo/diag/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

namespace lfo {

RewardFunctionSet::RewardFunctionSet() {
  candidates_.push_back(
      [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return 0.0; });
}

void RewardFunctionSet::add(RewardFn fn) { candidates_.push_back(std::move(fn)); }

double RewardFunctionSet::evaluate(std::size_t index, const Eigen::VectorXd& s,
                                   const Eigen::VectorXd& s_next) const {
  return candidates_.at(index)(s, s_next);
}

double empirical_lfo_reward_distance(const RewardFunctionSet& set,
                                     std::span<const ObservationPair> pairs_a,
                                     std::span<const ObservationPair> pairs_b) {
  if (pairs_a.empty() || pairs_b.empty()) {
    throw std::invalid_argument("reward distance: pair samples must be non-empty");
  }
  if (set.size() == 0) throw std::invalid_argument("reward distance: empty candidate set");
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < set.size(); ++k) {
    double mean_a = 0.0, mean_b = 0.0;
    for (const auto& p : pairs_a) mean_a += set.evaluate(k, p.s, p.s_next);
    for (const auto& p : pairs_b) mean_b += set.evaluate(k, p.s, p.s_next);
    mean_a /= static_cast<double>(pairs_a.size());
    mean_b /= static_cast<double>(pairs_b.size());
    best = std::max(best, mean_a - mean_b);
  }
  return best;
}

double empirical_reward_coefficient(const RewardFn& reward,
                                    std::span<const ObservationPair> pairs) {
  double total = 0.0;
  for (const auto& p : pairs) {
    const double r = reward(p.s, p.s_next);
    if (r < 0.0) {
      throw std::runtime_error("reward coefficient: reward must be non-negative on the sample");
    }
    total += r;
  }
  return total;
}

std::vector<double> normalized_reward_distribution(const RewardFn& reward,
                                                   std::span<const ObservationPair> pairs) {
  const double c = empirical_reward_coefficient(reward, pairs);
  if (c == 0.0) {
    throw std::runtime_error("normalized reward distribution: zero normalizer");
  }
  std::vector<double> weights;
  weights.reserve(pairs.size());
  for (const auto& p : pairs) weights.push_back(reward(p.s, p.s_next) / c);
  return weights;
}

long HistogramGrid::total_bins() const {
  long total = 1;
  for (std::size_t d = 0; d < 2 * coords.size(); ++d) total *= bins_per_dim;
  return total;
}

bool HistogramGrid::operator==(const HistogramGrid& other) const {
  return coords == other.coords && bins_per_dim == other.bins_per_dim &&
         lo.size() == other.lo.size() && (lo.array() == other.lo.array()).all() &&
         (hi.array() == other.hi.array()).all();
}

long HistogramGrid::bin_index(const Eigen::VectorXd& s, const Eigen::VectorXd& s_next,
                              bool* clamped) const {
  if (clamped) *clamped = false;
  long index = 0;
  const auto locate = [&](double value, int coord_slot) {
    const double l = lo(coord_slot);
    const double h = hi(coord_slot);
    double t = (value - l) / (h - l);
    if (t < 0.0 || t > 1.0) {
      if (clamped) *clamped = true;
      t = std::clamp(t, 0.0, 1.0);
    }
    int bin = static_cast<int>(t * bins_per_dim);
    if (bin >= bins_per_dim) bin = bins_per_dim - 1;
    return bin;
  };
  for (std::size_t d = 0; d < coords.size(); ++d) {
    index = index * bins_per_dim + locate(s(coords[d]), static_cast<int>(d));
  }
  for (std::size_t d = 0; d < coords.size(); ++d) {
    index = index * bins_per_dim + locate(s_next(coords[d]), static_cast<int>(d));
  }
  return index;
}

Eigen::VectorXd HistogramGrid::bin_center(long index) const {
  const std::size_t dims = 2 * coords.size();
  Eigen::VectorXd center(static_cast<Eigen::Index>(dims));
  for (std::size_t d = dims; d-- > 0;) {
    const int bin = static_cast<int>(index % bins_per_dim);
    index /= bins_per_dim;
    const int coord_slot = static_cast<int>(d % coords.size());
    const double width = (hi(coord_slot) - lo(coord_slot)) / bins_per_dim;
    center(static_cast<Eigen::Index>(d)) = lo(coord_slot) + (bin + 0.5) * width;
  }
  return center;
}

StateTransitionHistogram estimate_state_transition_distribution(
    const std::vector<std::vector<Eigen::VectorXd>>& trajectories, const HistogramGrid& grid,
    double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("histogram: gamma must lie in [0,1)");
  }
  StateTransitionHistogram hist;
  hist.grid = grid;
  hist.gamma = gamma;
  hist.weights.assign(static_cast<std::size_t>(grid.total_bins()), 0.0);

  double total = 0.0;
  for (const auto& traj : trajectories) {
    double discount = 1.0;  // gamma^t, with 0^0 treated as 1
    for (std::size_t t = 0; t + 1 < traj.size(); ++t) {
      bool clamped = false;
      const long bin = grid.bin_index(traj[t], traj[t + 1], &clamped);
      if (clamped) hist.clamped_pairs += 1;
      hist.weights[static_cast<std::size_t>(bin)] += discount;
      total += discount;
      discount *= gamma;
    }
  }
  if (total <= 0.0) throw std::invalid_argument("histogram: no transition carries weight");
  for (double& w : hist.weights) w /= total;
  return hist;
}

StateTransitionHistogram histogram_from_pairs(std::span<const ObservationPair> pairs,
                                              const HistogramGrid& grid) {
  if (pairs.empty()) throw std::invalid_argument("histogram: empty pair sample");
  StateTransitionHistogram hist;
  hist.grid = grid;
  hist.gamma = 0.0;
  hist.weights.assign(static_cast<std::size_t>(grid.total_bins()), 0.0);
  for (const auto& p : pairs) {
    bool clamped = false;
    const long bin = grid.bin_index(p.s, p.s_next, &clamped);
    if (clamped) hist.clamped_pairs += 1;
    hist.weights[static_cast<std::size_t>(bin)] += 1.0;
  }
  for (double& w : hist.weights) w /= static_cast<double>(pairs.size());
  return hist;
}

double state_transition_error_from_bins(std::span<const double> reward_per_bin,
                                        std::span<const double> expert_weights,
                                        std::span<const std::vector<double>> agent_weights) {
  if (agent_weights.empty()) {
    throw std::invalid_argument("state transition error: need at least one agent histogram");
  }
  if (reward_per_bin.size() != expert_weights.size()) {
    throw std::invalid_argument("state transition error: bin count mismatch");
  }
  double coefficient = 0.0;
  for (const double r : reward_per_bin) {
    if (r < 0.0) {
      throw std::runtime_error("state transition error: reward must be non-negative");
    }
    coefficient += r;
  }
  if (coefficient == 0.0) {
    throw std::runtime_error("state transition error: zero reward coefficient");
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& agent : agent_weights) {
    if (agent.size() != expert_weights.size()) {
      throw std::invalid_argument("state transition error: bin count mismatch");
    }
    double gap = 0.0;
    for (std::size_t i = 0; i < expert_weights.size(); ++i) {
      gap += (reward_per_bin[i] / coefficient) * (expert_weights[i] - agent[i]);
    }
    best = std::min(best, gap);
  }
  return coefficient * best;
}

double empirical_state_transition_error(const RewardFn& reward,
                                        const StateTransitionHistogram& expert,
                                        std::span<const StateTransitionHistogram> agents) {
  if (agents.empty()) {
    throw std::invalid_argument("state transition error: need at least one agent histogram");
  }
  for (const auto& a : agents) {
    if (!(a.grid == expert.grid)) {
      throw std::invalid_argument("state transition error: histogram grids do not match");
    }
  }
  const long bins = expert.grid.total_bins();
  const std::size_t half = expert.grid.coords.size();

  // Evaluate the reward at each bin center, splitting into (s, s') halves.
  std::vector<double> r_bin(static_cast<std::size_t>(bins), 0.0);
  for (long b = 0; b < bins; ++b) {
    const Eigen::VectorXd center = expert.grid.bin_center(b);
    const Eigen::VectorXd s = center.head(static_cast<Eigen::Index>(half));
    const Eigen::VectorXd s_next = center.tail(static_cast<Eigen::Index>(half));
    r_bin[static_cast<std::size_t>(b)] = reward(s, s_next);
  }
  std::vector<std::vector<double>> agent_w;
  agent_w.reserve(agents.size());
  for (const auto& a : agents) agent_w.push_back(a.weights);
  return state_transition_error_from_bins(r_bin, expert.weights, agent_w);
}

}  // namespace lfo
