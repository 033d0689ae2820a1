#include "dqlab/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

#include <json.hpp>

#include "dqlab/config.hpp"
#include "dqlab/harness.hpp"
#include "dqlab/hash.hpp"
#include "dqlab/log.hpp"
#include "dqlab/plot.hpp"
#include "dqlab/snapshot.hpp"

namespace dqlab {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kConfigError = 2;

void report(const char* prefix, const std::string& what) {
  std::fprintf(stderr, "%s: %s\n", prefix, what.c_str());
}

ExperimentConfig load_or_throw(const std::string& path) {
  if (!fs::exists(path)) throw ConfigError("config file '" + path + "' does not exist");
  return load_config(path);
}

std::string seed_label(std::uint64_t seed, const std::string& label, const char* ext) {
  return "seed" + std::to_string(seed) + "_" + label + ext;
}

}  // namespace

int cmd_train(const TrainOptions& opt) {
  ExperimentConfig cfg;
  try {
    cfg = load_or_throw(opt.config_path);
    if (!opt.seeds_override.empty()) {
      cfg.seeds = opt.seeds_override;
      cfg.validate();
    }
  } catch (const ConfigError& e) {
    report("config error", e.what());
    return kConfigError;
  }

  try {
    const ExperimentResult result = run_experiment(cfg, opt.parallel);

    // Assemble every output first; --check compares instead of writing.
    const std::string csv = format_csv(result.rows);
    std::map<std::string, std::string> artifacts;  // relative path -> bytes
    artifacts["eval_states.bin"] =
        serialize_eval_states(result.eval_set.states, result.eval_set.config);
    for (const SeedArtifacts& art : result.per_seed) {
      if (cfg.save_snapshots) {
        for (const auto& [label, snap] : art.snapshots) {
          artifacts["snapshots/" + seed_label(art.seed, label, ".snap")] = serialize(snap);
        }
      }
      if (cfg.dump_replay) {
        for (const auto& [label, transitions] : art.replay_dumps) {
          artifacts["replay/" + seed_label(art.seed, label, ".replay")] =
              serialize_replay(transitions, cfg.grid);
        }
      }
    }

    json manifest;
    manifest["schema_version"] = 1;
    manifest["config"] = config_to_json(cfg);
    manifest["seeds"] = cfg.seeds;
    manifest["fixed_eval_set_hash"] = hash_hex(result.eval_set.content_hash());
    manifest["metrics_hash"] = hash_hex(metrics_hash(result.rows));
    json artifact_hashes = json::object();
    for (const auto& [path, bytes] : artifacts) {
      artifact_hashes[path] = hash_hex(hash_bytes(bytes));
    }
    manifest["artifacts"] = artifact_hashes;

    const fs::path out_dir(opt.out_dir);
    if (opt.check) {
      const fs::path manifest_path = out_dir / "manifest.json";
      if (!fs::exists(manifest_path)) {
        report("check failed", "no manifest at " + manifest_path.string());
        return kRuntimeError;
      }
      json stored;
      try {
        stored = json::parse(read_file_bytes(manifest_path.string()));
      } catch (const std::exception& e) {
        report("check failed", std::string("cannot parse stored manifest: ") + e.what());
        return kRuntimeError;
      }
      int mismatches = 0;
      const auto compare = [&](const char* key, const json& fresh) {
        if (!stored.contains(key) || stored.at(key) != fresh) {
          report("hash mismatch", key);
          ++mismatches;
        }
      };
      compare("metrics_hash", manifest["metrics_hash"]);
      compare("fixed_eval_set_hash", manifest["fixed_eval_set_hash"]);
      compare("artifacts", manifest["artifacts"]);
      if (mismatches > 0) {
        report("check failed", std::to_string(mismatches) + " manifest entries differ");
        return kRuntimeError;
      }
      std::printf("check passed: outputs reproduce the stored manifest\n");
      return kOk;
    }

    fs::create_directories(out_dir);
    if (cfg.save_snapshots && !result.per_seed.empty()) {
      fs::create_directories(out_dir / "snapshots");
    }
    if (cfg.dump_replay && !result.per_seed.empty()) {
      fs::create_directories(out_dir / "replay");
    }
    write_file_bytes((out_dir / "metrics.csv").string(), csv);
    for (const auto& [path, bytes] : artifacts) {
      write_file_bytes((out_dir / path).string(), bytes);
    }
    write_file_bytes((out_dir / "manifest.json").string(), manifest.dump(2) + "\n");

    std::printf("wrote %zu metric rows for %zu method(s) x %zu seed(s) to %s\n",
                result.rows.size(), cfg.methods.size(), cfg.seeds.size(),
                (out_dir / "metrics.csv").string().c_str());
    return kOk;
  } catch (const ConfigError& e) {
    report("config error", e.what());
    return kConfigError;
  } catch (const NumericalError& e) {
    report("numerical failure", e.what());
    return kRuntimeError;
  } catch (const std::exception& e) {
    report("error", e.what());
    return kRuntimeError;
  }
}

int cmd_oracle_check(const OracleCheckOptions& opt) {
  ExperimentConfig cfg;
  try {
    cfg = load_or_throw(opt.config_path);
  } catch (const ConfigError& e) {
    report("config error", e.what());
    return kConfigError;
  }
  if (cfg.env_type != EnvType::Cliffwalk) {
    report("config error",
           "oracle check needs an enumerable environment; set env.type to 'cliffwalk' "
           "(the gridworld state space is not enumerated)");
    return kConfigError;
  }

  try {
    const CliffwalkEnv env(cfg.cliff);

    if (opt.equivalence) {
      const double gap =
          decomposition_equivalence_gap(cfg.cliff, 50000, cfg.alpha, cfg.gamma,
                                        cfg.seeds.front());
      std::printf("decomposed-vs-monolithic max |dQ| over 50000 transitions: %.3g\n", gap);
      if (!(gap <= 1e-9)) {
        report("oracle check failed", "equivalence gap exceeds 1e-9");
        return kRuntimeError;
      }
    }

    CliffTrainOptions topt;
    topt.env = cfg.cliff;
    topt.alpha = cfg.alpha;
    topt.alpha_mode = cfg.alpha_mode;
    topt.gamma = cfg.gamma;
    topt.episodes = cfg.oracle_episodes;
    topt.epsilon_start = cfg.epsilon_start;
    topt.epsilon_final = cfg.epsilon_final;
    topt.anneal_steps = cfg.anneal_steps;
    const CliffTrainResult result = run_cliff_qlearning(topt, cfg.seeds.front());
    const OracleGap gap = oracle_gap(result, env, cfg.gamma, cfg.oracle_min_visits);

    std::printf("episodes: %ld, seed: %llu\n", topt.episodes,
                static_cast<unsigned long long>(cfg.seeds.front()));
    std::printf("max |Q - Q*| over %zu pairs visited >= %d times: %.6f (tolerance %.3g)\n",
                gap.compared_pairs, cfg.oracle_min_visits, gap.max_abs_error,
                cfg.oracle_tolerance);
    std::printf("start-state value error |max_a Q(start,a) - V*(start)|: %.6f\n",
                gap.start_value_error);
    if (gap.compared_pairs == 0) {
      report("oracle check failed", "no state-action pair reached the visit threshold");
      return kRuntimeError;
    }
    if (gap.max_abs_error > cfg.oracle_tolerance) {
      report("oracle check failed", "error exceeds tolerance");
      return kRuntimeError;
    }
    std::printf("oracle check passed\n");
    return kOk;
  } catch (const std::exception& e) {
    report("error", e.what());
    return kRuntimeError;
  }
}

int cmd_plot(const PlotOptions& opt) {
  if (!fs::exists(opt.csv_path)) {
    report("error", "CSV file '" + opt.csv_path + "' does not exist");
    return kConfigError;
  }
  try {
    const std::string text = read_file_bytes(opt.csv_path);
    const std::vector<MetricsRow> rows = parse_metrics_csv(text);
    const auto plots = render_all_plots(rows);
    fs::create_directories(opt.out_dir);
    for (const auto& [name, bytes] : plots) {
      const std::string path = (fs::path(opt.out_dir) / name).string();
      write_file_bytes(path, bytes);
      std::printf("wrote %s\n", path.c_str());
    }
    return kOk;
  } catch (const std::exception& e) {
    report("error", e.what());
    return kRuntimeError;
  }
}

int cmd_inspect_replay(const InspectReplayOptions& opt) {
  try {
    const ReplayDump dump = load_replay_dump(opt.path);
    std::size_t crashes = 0;
    std::map<double, std::size_t> env_hist, task_hist;
    std::array<std::size_t, kNumActions> action_counts{};
    for (const GridTransition& t : dump.transitions) {
      if (t.terminal && t.reward.env < 0.0) ++crashes;
      ++env_hist[t.reward.env];
      ++task_hist[t.reward.task];
      ++action_counts[static_cast<std::size_t>(action_index(t.action))];
    }
    std::printf("transitions: %zu\n", dump.transitions.size());
    if (!dump.transitions.empty()) {
      std::printf("crash fraction: %.4f\n",
                  static_cast<double>(crashes) / static_cast<double>(dump.transitions.size()));
      std::printf("environment reward histogram:\n");
      for (const auto& [value, count] : env_hist) {
        std::printf("  %+g: %zu\n", value, count);
      }
      std::printf("task reward histogram:\n");
      for (const auto& [value, count] : task_hist) {
        std::printf("  %+g: %zu\n", value, count);
      }
      std::printf("actions:");
      for (Action a : kAllActions) {
        std::printf(" %s=%zu", std::string(action_name(a)).c_str(),
                    action_counts[static_cast<std::size_t>(action_index(a))]);
      }
      std::printf("\n");
    }
    return kOk;
  } catch (const std::exception& e) {
    report("error", e.what());
    return kRuntimeError;
  }
}

}  // namespace dqlab
