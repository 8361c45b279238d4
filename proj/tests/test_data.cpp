#include <cstdio>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "lfo/data/observations.hpp"
#include "lfo/data/replay_buffer.hpp"

using namespace lfo;

namespace {

Transition make_transition(double tag, int state_dim = 3, int action_dim = 2) {
  Transition t;
  t.s = Eigen::VectorXd::Constant(state_dim, tag);
  t.a = Eigen::VectorXd::Constant(action_dim, tag * 2);
  t.s_next = Eigen::VectorXd::Constant(state_dim, tag + 0.5);
  t.done = false;
  return t;
}

}  // namespace

TEST_CASE("push evicts the oldest element beyond capacity") {
  ReplayBuffer buf(2, 3, 2);
  buf.push(make_transition(1));
  buf.push(make_transition(2));
  buf.push(make_transition(3));
  CHECK(buf.size() == 2);
  CHECK(buf.at(0).s(0) == 2.0);
  CHECK(buf.at(1).s(0) == 3.0);
}

TEST_CASE("push into empty buffer gives count 1") {
  ReplayBuffer buf(8, 3, 2);
  buf.push(make_transition(1));
  CHECK(buf.size() == 1);
}

TEST_CASE("FIFO order matches a list-slicing oracle over 10^4 pushes") {
  const std::size_t capacity = 1000;
  const int total = 10000;
  ReplayBuffer buf(capacity, 3, 2);
  std::vector<double> oracle;
  for (int i = 0; i < total; ++i) {
    buf.push(make_transition(static_cast<double>(i)));
    oracle.push_back(static_cast<double>(i));
  }
  CHECK(buf.size() == capacity);
  const std::size_t begin = oracle.size() - capacity;
  for (std::size_t k = 0; k < capacity; ++k) {
    CHECK(buf.at(k).s(0) == oracle[begin + k]);
  }
}

TEST_CASE("push rejects mismatched dimensions") {
  ReplayBuffer buf(4, 3, 2);
  CHECK_THROWS(buf.push(make_transition(1, 4, 2)));
  CHECK_THROWS(buf.push(make_transition(1, 3, 1)));
}

TEST_CASE("sampling a single-element buffer repeats that element") {
  ReplayBuffer buf(4, 3, 2);
  buf.push(make_transition(7));
  Rng rng(0);
  const auto batch = buf.sample(rng, 4);
  CHECK(batch.size() == 4);
  for (const auto& t : batch) CHECK(t.s(0) == 7.0);
}

TEST_CASE("sampling is reproducible under a fixed seed") {
  ReplayBuffer buf(64, 3, 2);
  for (int i = 0; i < 64; ++i) buf.push(make_transition(i));
  Rng rng1(99);
  Rng rng2(99);
  const auto b1 = buf.sample(rng1, 32);
  const auto b2 = buf.sample(rng2, 32);
  for (std::size_t i = 0; i < b1.size(); ++i) CHECK(b1[i].s(0) == b2[i].s(0));
}

TEST_CASE("sampling an empty buffer is an error") {
  ReplayBuffer buf(4, 3, 2);
  Rng rng(0);
  CHECK_THROWS(buf.sample(rng, 1));
}

TEST_CASE("uniform sampling frequencies are flat within one percent") {
  ReplayBuffer buf(10, 3, 2);
  for (int i = 0; i < 10; ++i) buf.push(make_transition(i));
  Rng rng(1234);
  std::vector<int> counts(10, 0);
  const int draws = 100000;
  const auto batch = buf.sample(rng, draws);
  for (const auto& t : batch) counts[static_cast<int>(t.s(0))] += 1;
  for (const int c : counts) {
    const double freq = static_cast<double>(c) / draws;
    CHECK(freq > 0.09);
    CHECK(freq < 0.11);
  }
}

TEST_CASE("observation sets round-trip bit-exactly") {
  ExpertObservationSet set;
  set.env_id = "pointmass2d";
  set.noise_std = 0.01;
  set.mean_return = -123.456789012345678;
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    ObservationPair p;
    p.s = Eigen::VectorXd::NullaryExpr(4, [&](Eigen::Index) { return rng.uniform(-5, 5); });
    p.s_next = Eigen::VectorXd::NullaryExpr(4, [&](Eigen::Index) { return rng.uniform(-5, 5); });
    set.pairs.push_back(p);
  }
  const std::string path = "test_obs.modl";
  save_observations(set, path);
  const ExpertObservationSet loaded = load_observations(path);
  CHECK(loaded.env_id == set.env_id);
  CHECK(loaded.noise_std == set.noise_std);
  CHECK(loaded.mean_return == set.mean_return);
  REQUIRE(loaded.pairs.size() == set.pairs.size());
  for (std::size_t i = 0; i < set.pairs.size(); ++i) {
    CHECK((loaded.pairs[i].s.array() == set.pairs[i].s.array()).all());
    CHECK((loaded.pairs[i].s_next.array() == set.pairs[i].s_next.array()).all());
  }
  std::remove(path.c_str());
}

TEST_CASE("truncated observation files raise a corruption error") {
  ExpertObservationSet set;
  set.env_id = "pointmass2d";
  ObservationPair p;
  p.s = Eigen::VectorXd::Zero(4);
  p.s_next = Eigen::VectorXd::Ones(4);
  set.pairs.assign(10, p);
  const std::string path = "test_obs_trunc.modl";
  save_observations(set, path);
  // Chop the file mid-payload.
  {
    std::ifstream is(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os.write(content.data(), static_cast<std::streamsize>(content.size() / 2));
  }
  CHECK_THROWS_WITH_AS(load_observations(path), doctest::Contains("truncated"),
                       std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("bad magic in observation files is reported") {
  const std::string path = "test_obs_magic.modl";
  {
    std::ofstream os(path, std::ios::binary);
    os << "JUNKJUNKJUNKJUNK";
  }
  CHECK_THROWS_WITH_AS(load_observations(path), doctest::Contains("magic"), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("csv export writes one row per pair") {
  ExpertObservationSet set;
  set.env_id = "pendulum";
  ObservationPair p;
  p.s = Eigen::VectorXd::Constant(3, 1.0);
  p.s_next = Eigen::VectorXd::Constant(3, 2.0);
  set.pairs.assign(5, p);
  const std::string path = "test_obs.csv";
  export_observations_csv(set, path);
  std::ifstream is(path);
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) {
    rows += 1;
    CHECK(std::count(line.begin(), line.end(), ',') == 5);  // 6 columns
  }
  CHECK(rows == 5);
  std::remove(path.c_str());
}
