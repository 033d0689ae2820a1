#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dqlab {

// Subcommand implementations shared by the command-line binary and the
// integration tests. Each returns a process exit code and reports problems
// on stderr: 0 success, 1 runtime/data failure (divergence, failed check,
// out-of-tolerance oracle, malformed data files), 2 configuration/usage
// problems (missing or invalid config).

struct TrainOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::uint64_t> seeds_override;  // empty = seeds from config
  int parallel = 1;
  bool check = false;  // verify hashes against an existing manifest, write nothing
};
int cmd_train(const TrainOptions& opt);

struct OracleCheckOptions {
  std::string config_path;
  bool equivalence = false;  // also check decomposed-vs-monolithic equivalence
};
int cmd_oracle_check(const OracleCheckOptions& opt);

struct PlotOptions {
  std::string csv_path;
  std::string out_dir = "plots";
};
int cmd_plot(const PlotOptions& opt);

struct InspectReplayOptions {
  std::string path;
};
int cmd_inspect_replay(const InspectReplayOptions& opt);

}  // namespace dqlab
