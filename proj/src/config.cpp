#include "dqlab/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <set>

namespace dqlab {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError("unknown config key '" + path + "." + it.key() + "'");
  }
}

double get_number(const json& j, const char* key, const std::string& path, double def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(path + "." + key + " must be a number");
  return v.get<double>();
}

std::int64_t get_int(const json& j, const char* key, const std::string& path,
                     std::int64_t def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(path + "." + key + " must be an integer");
  return v.get<std::int64_t>();
}

std::uint64_t get_uint(const json& j, const char* key, const std::string& path,
                       std::uint64_t def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0 && !v.is_number_unsigned())) {
    throw ConfigError(path + "." + key + " must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

bool get_bool(const json& j, const char* key, const std::string& path, bool def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(path + "." + key + " must be a boolean");
  return v.get<bool>();
}

std::string get_string(const json& j, const char* key, const std::string& path,
                       const std::string& def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_string()) throw ConfigError(path + "." + key + " must be a string");
  return v.get<std::string>();
}

GridPos get_pos(const json& j, const char* key, const std::string& path, GridPos def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
    throw ConfigError(path + "." + key + " must be a [row, col] pair of integers");
  }
  return {v[0].get<int>(), v[1].get<int>()};
}

void parse_env(const json& j, ExperimentConfig& cfg) {
  const std::string path = "$.env";
  const std::string type = get_string(j, "type", path, "gridworld");
  if (type == "gridworld") {
    cfg.env_type = EnvType::Gridworld;
    check_keys(j, path,
               {"type", "width", "height", "p_obstacle", "p_collectible",
                "per_type_collectible_prob", "collectible_types", "max_steps"});
    cfg.grid.width = static_cast<int>(get_int(j, "width", path, cfg.grid.width));
    cfg.grid.height = static_cast<int>(get_int(j, "height", path, cfg.grid.height));
    cfg.grid.p_obstacle = get_number(j, "p_obstacle", path, cfg.grid.p_obstacle);
    cfg.grid.p_collectible = get_number(j, "p_collectible", path, cfg.grid.p_collectible);
    cfg.grid.per_type_collectible_prob =
        get_bool(j, "per_type_collectible_prob", path, cfg.grid.per_type_collectible_prob);
    cfg.grid.collectible_types =
        static_cast<int>(get_int(j, "collectible_types", path, cfg.grid.collectible_types));
    cfg.grid.max_steps = static_cast<int>(get_int(j, "max_steps", path, cfg.grid.max_steps));
  } else if (type == "cliffwalk") {
    cfg.env_type = EnvType::Cliffwalk;
    check_keys(j, path,
               {"type", "width", "height", "start", "goal", "goal_reward",
                "cliff_penalty", "max_steps"});
    cfg.cliff.width = static_cast<int>(get_int(j, "width", path, cfg.cliff.width));
    cfg.cliff.height = static_cast<int>(get_int(j, "height", path, cfg.cliff.height));
    cfg.cliff.start = get_pos(j, "start", path, cfg.cliff.start);
    cfg.cliff.goal = get_pos(j, "goal", path, cfg.cliff.goal);
    cfg.cliff.goal_reward = get_number(j, "goal_reward", path, cfg.cliff.goal_reward);
    cfg.cliff.cliff_penalty = get_number(j, "cliff_penalty", path, cfg.cliff.cliff_penalty);
    cfg.cliff.max_steps = static_cast<int>(get_int(j, "max_steps", path, cfg.cliff.max_steps));
  } else {
    throw ConfigError("$.env.type must be 'gridworld' or 'cliffwalk', got '" + type + "'");
  }
}

void parse_learner(const json& j, ExperimentConfig& cfg) {
  const std::string path = "$.learner";
  check_keys(j, path,
             {"kind", "window", "alpha", "alpha_mode", "gamma", "update_mode",
              "hidden", "adam"});
  const std::string kind = get_string(j, "kind", path, "tabular");
  if (kind == "tabular") {
    cfg.learner = LearnerKind::Tabular;
  } else if (kind == "mlp") {
    cfg.learner = LearnerKind::Mlp;
  } else {
    throw ConfigError("$.learner.kind must be 'tabular' or 'mlp', got '" + kind + "'");
  }
  cfg.window = static_cast<int>(get_int(j, "window", path, cfg.window));
  cfg.alpha = get_number(j, "alpha", path, cfg.alpha);
  const std::string amode = get_string(j, "alpha_mode", path, "constant");
  if (amode == "constant") {
    cfg.alpha_mode = AlphaMode::Constant;
  } else if (amode == "visit_inverse") {
    cfg.alpha_mode = AlphaMode::VisitInverse;
  } else {
    throw ConfigError("$.learner.alpha_mode must be 'constant' or 'visit_inverse'");
  }
  cfg.gamma = get_number(j, "gamma", path, cfg.gamma);
  const std::string umode = get_string(j, "update_mode", path, "independent");
  if (umode == "independent") {
    cfg.update_mode = Bootstrap::IndependentMax;
  } else if (umode == "joint") {
    cfg.update_mode = Bootstrap::JointGreedy;
  } else {
    throw ConfigError("$.learner.update_mode must be 'independent' or 'joint'");
  }
  if (j.contains("hidden")) {
    const json& h = j.at("hidden");
    if (!h.is_array()) throw ConfigError("$.learner.hidden must be an array of integers");
    cfg.hidden.clear();
    for (const json& v : h) {
      if (!v.is_number_integer()) throw ConfigError("$.learner.hidden must be an array of integers");
      cfg.hidden.push_back(v.get<int>());
    }
  }
  if (j.contains("adam")) {
    const json& a = j.at("adam");
    check_keys(a, "$.learner.adam", {"lr", "beta1", "beta2", "epsilon"});
    cfg.adam.lr = get_number(a, "lr", "$.learner.adam", cfg.adam.lr);
    cfg.adam.beta1 = get_number(a, "beta1", "$.learner.adam", cfg.adam.beta1);
    cfg.adam.beta2 = get_number(a, "beta2", "$.learner.adam", cfg.adam.beta2);
    cfg.adam.epsilon = get_number(a, "epsilon", "$.learner.adam", cfg.adam.epsilon);
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (schema_version != 1) throw ConfigError("unsupported schema_version (expected 1)");
  if (env_type == EnvType::Gridworld) {
    grid.validate();
    if (phase1_type < 0 || phase1_type >= grid.collectible_types ||
        phase2_type < 0 || phase2_type >= grid.collectible_types) {
      throw ConfigError("task collectible types must be in [0, collectible_types)");
    }
  } else {
    cliff.validate();
  }
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  {
    std::set<std::uint64_t> uniq(seeds.begin(), seeds.end());
    if (uniq.size() != seeds.size()) throw ConfigError("seeds must be distinct");
  }
  if (methods.empty()) throw ConfigError("methods must not be empty");
  for (const std::string& m : methods) {
    if (m != "naive" && m != "transfer" && m != "decoupled") {
      throw ConfigError("unknown method '" + m + "' (expected naive, transfer or decoupled)");
    }
  }
  {
    std::set<std::string> uniq(methods.begin(), methods.end());
    if (uniq.size() != methods.size()) throw ConfigError("methods must be distinct");
  }
  if (!(alpha > 0.0) || alpha > 1.0) throw ConfigError("learner.alpha must be in (0, 1]");
  if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("learner.gamma must be in [0, 1)");
  if (learner == LearnerKind::Mlp) {
    if (hidden.empty()) throw ConfigError("learner.hidden must not be empty for mlp");
    for (int h : hidden) {
      if (h <= 0) throw ConfigError("learner.hidden sizes must be positive");
    }
    if (!(adam.lr > 0.0)) throw ConfigError("learner.adam.lr must be positive");
  }
  if (replay_capacity == 0) throw ConfigError("replay.capacity must be positive");
  if (minibatch == 0) throw ConfigError("replay.minibatch must be positive");
  if (minibatch > replay_capacity) {
    throw ConfigError("replay.minibatch must not exceed replay.capacity");
  }
  if (tabular_draws == 0) throw ConfigError("replay.tabular_draws must be positive");
  if (tabular_draws > replay_capacity) {
    throw ConfigError("replay.tabular_draws must not exceed replay.capacity");
  }
  if (seed_fill > replay_capacity) {
    throw ConfigError("replay.seed_fill must not exceed replay.capacity");
  }
  if (min_size_to_learn == 0) throw ConfigError("replay.min_size_to_learn must be positive");
  if (epsilon_start < 0.0 || epsilon_start > 1.0 || epsilon_final < 0.0 ||
      epsilon_final > 1.0) {
    throw ConfigError("exploration epsilons must be in [0, 1]");
  }
  if (epsilon_final > epsilon_start) {
    throw ConfigError("exploration.epsilon_final must not exceed epsilon_start");
  }
  if (phase1_episodes < 0 || phase2_episodes < 0) {
    throw ConfigError("schedule episode counts must be non-negative");
  }
  if (eval_every <= 0) throw ConfigError("schedule.eval_every must be positive");
  if (eval_episodes <= 0) throw ConfigError("schedule.eval_episodes must be positive");
  if (fixed_eval_states <= 0) throw ConfigError("schedule.fixed_eval_states must be positive");
  if (!(oracle_tolerance > 0.0)) throw ConfigError("oracle.tolerance must be positive");
  if (oracle_min_visits < 1) throw ConfigError("oracle.min_visits must be at least 1");
  if (oracle_episodes < 1) throw ConfigError("oracle.episodes must be at least 1");
}

ExperimentConfig default_experiment_config() { return ExperimentConfig{}; }

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  check_keys(j, "$",
             {"schema_version", "seed", "seeds", "methods", "env", "tasks", "learner",
              "replay", "exploration", "schedule", "output", "oracle"});

  cfg.schema_version = static_cast<int>(get_int(j, "schema_version", "$", cfg.schema_version));
  cfg.master_seed = get_uint(j, "seed", "$", cfg.master_seed);

  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    if (!s.is_array()) throw ConfigError("$.seeds must be an array of integers");
    cfg.seeds.clear();
    for (const json& v : s) {
      if (!v.is_number_integer()) throw ConfigError("$.seeds must be an array of integers");
      cfg.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  if (j.contains("methods")) {
    const json& m = j.at("methods");
    if (!m.is_array()) throw ConfigError("$.methods must be an array of strings");
    cfg.methods.clear();
    for (const json& v : m) {
      if (!v.is_string()) throw ConfigError("$.methods must be an array of strings");
      cfg.methods.push_back(v.get<std::string>());
    }
  }

  if (j.contains("env")) parse_env(j.at("env"), cfg);

  if (j.contains("tasks")) {
    const json& t = j.at("tasks");
    check_keys(t, "$.tasks", {"phase1_type", "phase2_type"});
    cfg.phase1_type = static_cast<int>(get_int(t, "phase1_type", "$.tasks", cfg.phase1_type));
    cfg.phase2_type = static_cast<int>(get_int(t, "phase2_type", "$.tasks", cfg.phase2_type));
  }

  if (j.contains("learner")) parse_learner(j.at("learner"), cfg);

  if (j.contains("replay")) {
    const json& r = j.at("replay");
    check_keys(r, "$.replay",
               {"capacity", "minibatch", "tabular_draws", "sample_without_replacement",
                "seed_fill", "min_size_to_learn"});
    cfg.replay_capacity =
        static_cast<std::size_t>(get_uint(r, "capacity", "$.replay", cfg.replay_capacity));
    cfg.minibatch = static_cast<std::size_t>(get_uint(r, "minibatch", "$.replay", cfg.minibatch));
    cfg.tabular_draws =
        static_cast<std::size_t>(get_uint(r, "tabular_draws", "$.replay", cfg.tabular_draws));
    cfg.sample_without_replacement =
        get_bool(r, "sample_without_replacement", "$.replay", cfg.sample_without_replacement);
    // Unless pinned explicitly, seeding fills whatever the buffer holds.
    cfg.seed_fill =
        static_cast<std::size_t>(get_uint(r, "seed_fill", "$.replay", cfg.replay_capacity));
    cfg.min_size_to_learn = static_cast<std::size_t>(
        get_uint(r, "min_size_to_learn", "$.replay", cfg.min_size_to_learn));
  }

  if (j.contains("exploration")) {
    const json& e = j.at("exploration");
    check_keys(e, "$.exploration", {"epsilon_start", "epsilon_final", "anneal_steps", "tau"});
    cfg.epsilon_start = get_number(e, "epsilon_start", "$.exploration", cfg.epsilon_start);
    cfg.epsilon_final = get_number(e, "epsilon_final", "$.exploration", cfg.epsilon_final);
    cfg.anneal_steps = get_uint(e, "anneal_steps", "$.exploration", cfg.anneal_steps);
    cfg.tau = get_number(e, "tau", "$.exploration", cfg.tau);
  }

  if (j.contains("schedule")) {
    const json& s = j.at("schedule");
    check_keys(s, "$.schedule",
               {"phase1_episodes", "phase2_episodes", "eval_every", "eval_episodes",
                "fixed_eval_states"});
    cfg.phase1_episodes =
        static_cast<int>(get_int(s, "phase1_episodes", "$.schedule", cfg.phase1_episodes));
    cfg.phase2_episodes =
        static_cast<int>(get_int(s, "phase2_episodes", "$.schedule", cfg.phase2_episodes));
    cfg.eval_every = static_cast<int>(get_int(s, "eval_every", "$.schedule", cfg.eval_every));
    cfg.eval_episodes =
        static_cast<int>(get_int(s, "eval_episodes", "$.schedule", cfg.eval_episodes));
    cfg.fixed_eval_states =
        static_cast<int>(get_int(s, "fixed_eval_states", "$.schedule", cfg.fixed_eval_states));
  }

  if (j.contains("output")) {
    const json& o = j.at("output");
    check_keys(o, "$.output",
               {"save_snapshots", "dump_replay", "audit_safe_actions",
                "discounted_eval_return"});
    cfg.save_snapshots = get_bool(o, "save_snapshots", "$.output", cfg.save_snapshots);
    cfg.dump_replay = get_bool(o, "dump_replay", "$.output", cfg.dump_replay);
    cfg.audit_safe_actions = get_bool(o, "audit_safe_actions", "$.output", cfg.audit_safe_actions);
    cfg.discounted_eval_return =
        get_bool(o, "discounted_eval_return", "$.output", cfg.discounted_eval_return);
  }

  if (j.contains("oracle")) {
    const json& o = j.at("oracle");
    check_keys(o, "$.oracle", {"tolerance", "min_visits", "episodes"});
    cfg.oracle_tolerance = get_number(o, "tolerance", "$.oracle", cfg.oracle_tolerance);
    cfg.oracle_min_visits =
        static_cast<int>(get_int(o, "min_visits", "$.oracle", cfg.oracle_min_visits));
    cfg.oracle_episodes = get_int(o, "episodes", "$.oracle", cfg.oracle_episodes);
  }

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  return parse_config(j);
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["schema_version"] = cfg.schema_version;
  j["seed"] = cfg.master_seed;
  j["seeds"] = cfg.seeds;
  j["methods"] = cfg.methods;
  if (cfg.env_type == EnvType::Gridworld) {
    j["env"] = {{"type", "gridworld"},
                {"width", cfg.grid.width},
                {"height", cfg.grid.height},
                {"p_obstacle", cfg.grid.p_obstacle},
                {"p_collectible", cfg.grid.p_collectible},
                {"per_type_collectible_prob", cfg.grid.per_type_collectible_prob},
                {"collectible_types", cfg.grid.collectible_types},
                {"max_steps", cfg.grid.max_steps}};
  } else {
    j["env"] = {{"type", "cliffwalk"},
                {"width", cfg.cliff.width},
                {"height", cfg.cliff.height},
                {"start", {cfg.cliff.start.row, cfg.cliff.start.col}},
                {"goal", {cfg.cliff.goal.row, cfg.cliff.goal.col}},
                {"goal_reward", cfg.cliff.goal_reward},
                {"cliff_penalty", cfg.cliff.cliff_penalty},
                {"max_steps", cfg.cliff.max_steps}};
  }
  j["tasks"] = {{"phase1_type", cfg.phase1_type}, {"phase2_type", cfg.phase2_type}};
  j["learner"] = {
      {"kind", cfg.learner == LearnerKind::Tabular ? "tabular" : "mlp"},
      {"window", cfg.window},
      {"alpha", cfg.alpha},
      {"alpha_mode", cfg.alpha_mode == AlphaMode::Constant ? "constant" : "visit_inverse"},
      {"gamma", cfg.gamma},
      {"update_mode",
       cfg.update_mode == Bootstrap::IndependentMax ? "independent" : "joint"},
      {"hidden", cfg.hidden},
      {"adam",
       {{"lr", cfg.adam.lr},
        {"beta1", cfg.adam.beta1},
        {"beta2", cfg.adam.beta2},
        {"epsilon", cfg.adam.epsilon}}}};
  j["replay"] = {{"capacity", cfg.replay_capacity},
                 {"minibatch", cfg.minibatch},
                 {"tabular_draws", cfg.tabular_draws},
                 {"sample_without_replacement", cfg.sample_without_replacement},
                 {"seed_fill", cfg.seed_fill},
                 {"min_size_to_learn", cfg.min_size_to_learn}};
  j["exploration"] = {{"epsilon_start", cfg.epsilon_start},
                      {"epsilon_final", cfg.epsilon_final},
                      {"anneal_steps", cfg.anneal_steps},
                      {"tau", cfg.tau}};
  j["schedule"] = {{"phase1_episodes", cfg.phase1_episodes},
                   {"phase2_episodes", cfg.phase2_episodes},
                   {"eval_every", cfg.eval_every},
                   {"eval_episodes", cfg.eval_episodes},
                   {"fixed_eval_states", cfg.fixed_eval_states}};
  j["output"] = {{"save_snapshots", cfg.save_snapshots},
                 {"dump_replay", cfg.dump_replay},
                 {"audit_safe_actions", cfg.audit_safe_actions},
                 {"discounted_eval_return", cfg.discounted_eval_return}};
  j["oracle"] = {{"tolerance", cfg.oracle_tolerance},
                 {"min_visits", cfg.oracle_min_visits},
                 {"episodes", cfg.oracle_episodes}};
  return j;
}

}  // namespace dqlab
