#pragma once

#include <fstream>
#include <string>

namespace lfo {

struct MetricsRow {
  long step = 0;
  double eval_return_mean = 0.0;
  double eval_return_std = 0.0;
  double reward_loss = 0.0;
  double critic1_loss = 0.0;
  double critic2_loss = 0.0;
  double policy_loss = 0.0;
  double alpha = 0.0;
  double entropy_estimate = 0.0;
  std::size_t buffer_size = 0;
};

// Append-only CSV with a fixed column order and %.17g float formatting, so a
// deterministic run reproduces the file byte for byte.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void write(const MetricsRow& row);
  long rows_written() const { return rows_; }

 private:
  std::ofstream os_;
  long rows_ = 0;
};

// Running means of the per-update diagnostics between two eval points.
struct LossAccumulator {
  double reward_loss = 0.0;
  double critic1_loss = 0.0;
  double critic2_loss = 0.0;
  double policy_loss = 0.0;
  double entropy = 0.0;
  long reward_count = 0;
  long policy_count = 0;

  void add_reward(double loss) {
    reward_loss += loss;
    reward_count += 1;
  }
  void add_policy(double c1, double c2, double pi, double ent) {
    critic1_loss += c1;
    critic2_loss += c2;
    policy_loss += pi;
    entropy += ent;
    policy_count += 1;
  }
  void reset() { *this = LossAccumulator(); }

  double mean_reward_loss() const { return reward_count ? reward_loss / reward_count : 0.0; }
  double mean_critic1() const { return policy_count ? critic1_loss / policy_count : 0.0; }
  double mean_critic2() const { return policy_count ? critic2_loss / policy_count : 0.0; }
  double mean_policy() const { return policy_count ? policy_loss / policy_count : 0.0; }
  double mean_entropy() const { return policy_count ? entropy / policy_count : 0.0; }
};

}  // namespace lfo
