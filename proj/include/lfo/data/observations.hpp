#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace lfo {

// A single (s, s') state-transition sample; the only expert signal in
// observation-based imitation.
struct ObservationPair {
  Eigen::VectorXd s;
  Eigen::VectorXd s_next;
};

// Expert observation dataset plus collection metadata. The collection seed
// is carried in memory only; the on-disk format stores the remaining fields.
struct ExpertObservationSet {
  std::string env_id;
  std::uint64_t collection_seed = 0;
  double noise_std = 0.0;
  double mean_return = 0.0;
  std::vector<ObservationPair> pairs;

  int state_dim() const {
    return pairs.empty() ? 0 : static_cast<int>(pairs.front().s.size());
  }
};

// "MODL" binary format: magic, u32 version, u32 state_dim, u64 pair_count,
// u32 env-id length + bytes, f64 noise_std, f64 mean_return, then pair_count
// records of 2*state_dim little-endian doubles (s then s'). Round-trips are
// bit-exact.
void save_observations(const ExpertObservationSet& set, const std::string& path);
ExpertObservationSet load_observations(const std::string& path);

// One row per pair: s columns then s' columns.
void export_observations_csv(const ExpertObservationSet& set, const std::string& path);

}  // namespace lfo
