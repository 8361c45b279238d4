#include "lfo/train/config.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace lfo {

using nlohmann::json;

void TrainConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
  if (!(iota > 0.0 && iota <= 1.0)) throw std::invalid_argument("iota must lie in (0,1]");
  for (const auto& [name, lr] : {std::pair<const char*, double>{"lr_reward", lr_reward},
                                 {"lr_critic", lr_critic},
                                 {"lr_policy", lr_policy},
                                 {"lr_alpha", lr_alpha},
                                 {"lr_fqf", lr_fqf}}) {
    if (!(lr > 0.0)) throw std::invalid_argument(std::string(name) + " must be positive");
  }
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (static_cast<std::size_t>(batch_size) > replay_capacity) {
    throw std::invalid_argument("batch_size must not exceed replay_capacity");
  }
  if (total_steps < 0) throw std::invalid_argument("total_steps must be >= 0");
  if (steps_per_iteration < 1) throw std::invalid_argument("steps_per_iteration must be >= 1");
  if (reward_updates_per_iteration < 0 || policy_updates_per_iteration < 0) {
    throw std::invalid_argument("update counts must be >= 0");
  }
  if (num_quantiles < 1) throw std::invalid_argument("num_quantiles must be >= 1");
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
  if (mu < 0.0) throw std::invalid_argument("mu must be non-negative");
  if (eval_interval < 1) throw std::invalid_argument("eval_interval must be >= 1");
  if (eval_episodes < 1) throw std::invalid_argument("eval_episodes must be >= 1");
  if (warmup_steps < 0) throw std::invalid_argument("warmup_steps must be >= 0");
  if (hidden_width < 1) throw std::invalid_argument("hidden_width must be >= 1");
  if (cosine_terms < 1) throw std::invalid_argument("cosine_terms must be >= 1");
  if (checkpoint_interval < 0) throw std::invalid_argument("checkpoint_interval must be >= 0");
  if (!(init_alpha > 0.0)) throw std::invalid_argument("init_alpha must be positive");
  parse_fraction_mode(fractions);
  risk();
}

RiskMeasure TrainConfig::risk() const {
  RiskMeasure m{parse_risk_kind(risk_measure), beta};
  m.validate();
  return m;
}

namespace {

template <typename T>
void read_key(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

TrainConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("malformed config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");

  static const char* known[] = {
      "env",           "seed",          "total_steps",
      "steps_per_iteration", "reward_updates_per_iteration", "policy_updates_per_iteration",
      "batch_size",    "gamma",         "iota",
      "lr_reward",     "lr_critic",     "lr_policy",
      "lr_alpha",      "lr_fqf",        "num_quantiles",
      "kappa",         "mu",            "fractions",
      "risk_measure",  "beta",          "replay_capacity",
      "eval_interval", "eval_episodes", "warmup_steps",
      "hidden_width",  "cosine_terms",  "checkpoint_interval",
      "init_alpha"};
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) {
      if (key == k) {
        ok = true;
        break;
      }
    }
    if (!ok) throw std::invalid_argument("unknown config key '" + key + "'");
  }

  TrainConfig c;
  try {
    read_key(j, "env", c.env);
    read_key(j, "seed", c.seed);
    read_key(j, "total_steps", c.total_steps);
    read_key(j, "steps_per_iteration", c.steps_per_iteration);
    read_key(j, "reward_updates_per_iteration", c.reward_updates_per_iteration);
    read_key(j, "policy_updates_per_iteration", c.policy_updates_per_iteration);
    read_key(j, "batch_size", c.batch_size);
    read_key(j, "gamma", c.gamma);
    read_key(j, "iota", c.iota);
    read_key(j, "lr_reward", c.lr_reward);
    read_key(j, "lr_critic", c.lr_critic);
    read_key(j, "lr_policy", c.lr_policy);
    read_key(j, "lr_alpha", c.lr_alpha);
    read_key(j, "lr_fqf", c.lr_fqf);
    read_key(j, "num_quantiles", c.num_quantiles);
    read_key(j, "kappa", c.kappa);
    read_key(j, "mu", c.mu);
    read_key(j, "fractions", c.fractions);
    read_key(j, "risk_measure", c.risk_measure);
    read_key(j, "beta", c.beta);
    read_key(j, "replay_capacity", c.replay_capacity);
    read_key(j, "eval_interval", c.eval_interval);
    read_key(j, "eval_episodes", c.eval_episodes);
    read_key(j, "warmup_steps", c.warmup_steps);
    read_key(j, "hidden_width", c.hidden_width);
    read_key(j, "cosine_terms", c.cosine_terms);
    read_key(j, "checkpoint_interval", c.checkpoint_interval);
    read_key(j, "init_alpha", c.init_alpha);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("invalid config value: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return config_from_json_text(text);
}

std::string config_to_json_text(const TrainConfig& c) {
  json j;
  j["env"] = c.env;
  j["seed"] = c.seed;
  j["total_steps"] = c.total_steps;
  j["steps_per_iteration"] = c.steps_per_iteration;
  j["reward_updates_per_iteration"] = c.reward_updates_per_iteration;
  j["policy_updates_per_iteration"] = c.policy_updates_per_iteration;
  j["batch_size"] = c.batch_size;
  j["gamma"] = c.gamma;
  j["iota"] = c.iota;
  j["lr_reward"] = c.lr_reward;
  j["lr_critic"] = c.lr_critic;
  j["lr_policy"] = c.lr_policy;
  j["lr_alpha"] = c.lr_alpha;
  j["lr_fqf"] = c.lr_fqf;
  j["num_quantiles"] = c.num_quantiles;
  j["kappa"] = c.kappa;
  j["mu"] = c.mu;
  j["fractions"] = c.fractions;
  j["risk_measure"] = c.risk_measure;
  j["beta"] = c.beta;
  j["replay_capacity"] = c.replay_capacity;
  j["eval_interval"] = c.eval_interval;
  j["eval_episodes"] = c.eval_episodes;
  j["warmup_steps"] = c.warmup_steps;
  j["hidden_width"] = c.hidden_width;
  j["cosine_terms"] = c.cosine_terms;
  j["checkpoint_interval"] = c.checkpoint_interval;
  j["init_alpha"] = c.init_alpha;
  return j.dump(2) + "\n";
}

void save_config(const TrainConfig& config, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write config file: " + path);
  os << config_to_json_text(config);
}

}  // namespace lfo
