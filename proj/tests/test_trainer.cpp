#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lfo/train/trainer.hpp"

using namespace lfo;
namespace fs = std::filesystem;

namespace {

// Desk-scale config small enough for unit tests.
TrainConfig tiny_config(long steps = 96) {
  TrainConfig c;
  c.env = "pointmass2d";
  c.seed = 7;
  c.total_steps = steps;
  c.batch_size = 16;
  c.hidden_width = 16;
  c.cosine_terms = 8;
  c.num_quantiles = 4;
  c.warmup_steps = 32;
  c.eval_interval = 48;
  c.eval_episodes = 2;
  c.replay_capacity = 1000;
  return c;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

ExpertObservationSet tiny_expert_set(int pairs = 64) {
  ExpertObservationSet set;
  set.env_id = "pointmass2d";
  set.noise_std = 0.01;
  set.mean_return = -500.0;
  Rng rng(11);
  for (int i = 0; i < pairs; ++i) {
    ObservationPair p;
    p.s = Eigen::VectorXd::NullaryExpr(4, [&](Eigen::Index) { return rng.uniform(-1, 1); });
    p.s_next = Eigen::VectorXd::NullaryExpr(4, [&](Eigen::Index) { return rng.uniform(-1, 1); });
    set.pairs.push_back(p);
  }
  return set;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& sub = "") const { return (path / sub).string(); }
};

}  // namespace

TEST_CASE("expert sac with zero steps keeps the initial policy") {
  TempDir dir("lfo_test_sac0");
  TrainConfig c = tiny_config(0);
  const RunArtifacts artifacts = train_expert_sac(c, dir.str("run"));
  REQUIRE(artifacts.checkpoints.size() == 1);
  const nn::Checkpoint ck = nn::Checkpoint::load(artifacts.checkpoints[0].second);
  // Rebuild the would-be initial policy from the same seed.
  auto env = make_env(c.env);
  Rng rng(Rng::derive(c.seed, "init/actor"));
  Policy fresh(env->spec().state_dim, env->spec().action_dim,
               {c.hidden_width, c.hidden_width}, env->spec().action_low,
               env->spec().action_high, rng);
  CHECK(ck.get("actor").values == fresh.params().values);
}

TEST_CASE("module training runs are bit-deterministic") {
  TempDir dir("lfo_test_det");
  TrainConfig c = tiny_config(96);
  const ExpertObservationSet set = tiny_expert_set();
  const RunArtifacts a = train_module(c, set, dir.str("a"));
  const RunArtifacts b = train_module(c, set, dir.str("b"));
  CHECK(read_file(a.metrics_csv) == read_file(b.metrics_csv));
  CHECK(read_file(a.checkpoints.back().second) == read_file(b.checkpoints.back().second));
}

TEST_CASE("module and the baseline share the first reward loss bit-exactly") {
  // One iteration after warmup: the reward update happens before any policy
  // divergence, so the logged reward loss must coincide.
  TempDir dir("lfo_test_lockstep");
  TrainConfig c = tiny_config(40);
  c.warmup_steps = 32;
  c.eval_interval = 40;
  c.steps_per_iteration = 8;
  const ExpertObservationSet set = tiny_expert_set();
  const RunArtifacts a = train_module(c, set, dir.str("m"));
  const RunArtifacts b = train_sac_gailfo(c, set, dir.str("g"));

  auto reward_loss_at_last_row = [](const std::string& csv) {
    std::ifstream is(csv);
    std::string line, last;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
      if (!line.empty()) last = line;
    }
    // column 4 is reward_loss
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) pos = last.find(',', pos) + 1;
    return last.substr(pos, last.find(',', pos) - pos);
  };
  CHECK(reward_loss_at_last_row(a.metrics_csv) == reward_loss_at_last_row(b.metrics_csv));
}

TEST_CASE("training rejects mismatched expert data") {
  TempDir dir("lfo_test_mismatch");
  TrainConfig c = tiny_config(8);
  ExpertObservationSet wrong_env = tiny_expert_set();
  wrong_env.env_id = "pendulum";
  CHECK_THROWS_WITH_AS(train_module(c, wrong_env, dir.str("x")),
                       doctest::Contains("pendulum"), std::invalid_argument);

  ExpertObservationSet wrong_dim;
  wrong_dim.env_id = "pointmass2d";
  ObservationPair p;
  p.s = Eigen::VectorXd::Zero(3);
  p.s_next = Eigen::VectorXd::Zero(3);
  wrong_dim.pairs.push_back(p);
  CHECK_THROWS_WITH_AS(train_module(c, wrong_dim, dir.str("y")),
                       doctest::Contains("state_dim"), std::invalid_argument);
}

TEST_CASE("metrics rows equal the completed eval points") {
  TempDir dir("lfo_test_rows");
  TrainConfig c = tiny_config(96);  // eval at 0, 48, 96
  const RunArtifacts a = train_module(c, tiny_expert_set(), dir.str("run"));
  std::ifstream is(a.metrics_csv);
  std::string line;
  int rows = 0;
  std::getline(is, line);  // header
  CHECK(line ==
        "step,eval_return_mean,eval_return_std,reward_loss,critic1_loss,critic2_loss,"
        "policy_loss,alpha,entropy_estimate,buffer_size");
  while (std::getline(is, line)) {
    if (!line.empty()) rows += 1;
  }
  CHECK(rows == 3);
}

TEST_CASE("fraction modes and risk measures all run") {
  TempDir dir("lfo_test_modes");
  const ExpertObservationSet set = tiny_expert_set();
  int idx = 0;
  for (const char* fractions : {"qrdqn", "iqn", "fqf"}) {
    TrainConfig c = tiny_config(48);
    c.fractions = fractions;
    const RunArtifacts a = train_module(c, set, dir.str("f" + std::to_string(idx++)));
    CHECK(fs::exists(a.metrics_csv));
  }
  for (const char* risk : {"mean-variance", "var", "cpw", "wang", "cvar"}) {
    TrainConfig c = tiny_config(48);
    c.risk_measure = risk;
    c.beta = 0.25;
    if (std::string(risk) == "cpw") c.beta = 0.71;
    const RunArtifacts a = train_module(c, set, dir.str("r" + std::to_string(idx++)));
    CHECK(fs::exists(a.metrics_csv));
  }
}

TEST_CASE("collect with zero noise replays the deterministic expert") {
  TempDir dir("lfo_test_collect");
  TrainConfig c = tiny_config(0);
  const RunArtifacts artifacts = train_expert_sac(c, dir.str("expert"));
  const std::string ckpt = artifacts.checkpoints.back().second;

  const ExpertObservationSet a = collect_observations(ckpt, "pointmass2d", 150, 0.0, 5);
  const ExpertObservationSet b = collect_observations(ckpt, "pointmass2d", 150, 0.0, 5);
  REQUIRE(a.pairs.size() == 150);
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    CHECK((a.pairs[i].s.array() == b.pairs[i].s.array()).all());
    CHECK((a.pairs[i].s_next.array() == b.pairs[i].s_next.array()).all());
  }
}

TEST_CASE("collect pair-count bookkeeping fills whole episodes") {
  TempDir dir("lfo_test_collect2");
  TrainConfig c = tiny_config(0);
  const RunArtifacts artifacts = train_expert_sac(c, dir.str("expert"));
  const std::string ckpt = artifacts.checkpoints.back().second;

  // horizon is 200, so 400 pairs is exactly two full episodes
  const ExpertObservationSet set = collect_observations(ckpt, "pointmass2d", 400, 0.01, 9);
  CHECK(set.pairs.size() == 400);
  CHECK(set.noise_std == 0.01);
  // chains are consecutive within an episode, broken at the boundary
  for (int i = 0; i < 199; ++i) {
    CHECK((set.pairs[static_cast<std::size_t>(i)].s_next.array() ==
           set.pairs[static_cast<std::size_t>(i) + 1].s.array())
              .all());
  }
  CHECK_FALSE((set.pairs[199].s_next.array() == set.pairs[200].s.array()).all());
}

TEST_CASE("single-episode evaluation has zero std and repeats exactly") {
  TempDir dir("lfo_test_eval");
  TrainConfig c = tiny_config(0);
  const RunArtifacts artifacts = train_expert_sac(c, dir.str("expert"));
  const std::string ckpt = artifacts.checkpoints.back().second;
  const EvalResult one = evaluate_checkpoint(ckpt, "pointmass2d", 1, 3);
  CHECK(one.stddev == 0.0);
  const EvalResult again = evaluate_checkpoint(ckpt, "pointmass2d", 1, 3);
  CHECK(one.mean == again.mean);
}

TEST_CASE("random policy evaluation is the normalization floor") {
  const EvalResult r1 = evaluate_random_policy("pointmass2d", 5, 0);
  const EvalResult r2 = evaluate_random_policy("pointmass2d", 5, 0);
  CHECK(r1.mean == r2.mean);
  CHECK(r1.mean < -500.0);  // far from the goal on average
}

TEST_CASE("run artifacts land in the documented layout") {
  TempDir dir("lfo_test_layout");
  TrainConfig c = tiny_config(48);
  c.checkpoint_interval = 48;
  const RunArtifacts a = train_module(c, tiny_expert_set(), dir.str("run"));
  CHECK(fs::exists(dir.path / "run" / "config.json"));
  CHECK(fs::exists(dir.path / "run" / "metrics.csv"));
  CHECK(fs::exists(dir.path / "run" / "final_eval.json"));
  CHECK(fs::exists(dir.path / "run" / "checkpoints" / "step_48.mdlp"));
}
