// Experiment front door: train the two-phase transfer experiment, check the
// tabular learner against the dynamic-programming oracle, render learning
// curves, and inspect replay dumps. Set DQLAB_LOG=debug|info|quiet to tune
// stderr verbosity.

#include <cstdio>

#include <CLI11.hpp>

#include "dqlab/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"decoupled Q-learning laboratory"};
  app.require_subcommand(1);

  dqlab::TrainOptions train;
  CLI::App* t = app.add_subcommand("train", "run the configured experiment");
  t->add_option("--config", train.config_path, "experiment config (JSON)")->required();
  t->add_option("--out", train.out_dir, "output directory (default: out)");
  t->add_option("--seeds", train.seeds_override, "override the config seed list");
  t->add_option("--parallel", train.parallel, "seeds trained concurrently (default: 1)");
  t->add_flag("--check", train.check,
              "re-run and verify hashes against the existing manifest; write nothing");

  dqlab::OracleCheckOptions oracle;
  CLI::App* o = app.add_subcommand("oracle-check",
                                   "train on the cliff walk and compare to value iteration");
  o->add_option("--config", oracle.config_path, "experiment config (JSON)")->required();
  o->add_flag("--equivalence", oracle.equivalence,
              "also verify decomposed joint-greedy vs monolithic equivalence");

  dqlab::PlotOptions plot;
  CLI::App* p = app.add_subcommand("plot", "render SVG learning curves from a metrics CSV");
  p->add_option("--csv", plot.csv_path, "metrics CSV path")->required();
  p->add_option("--out", plot.out_dir, "output directory (default: plots)");

  dqlab::InspectReplayOptions inspect;
  CLI::App* i = app.add_subcommand("inspect-replay", "summarize a replay dump");
  i->add_option("path", inspect.path, "replay dump file")->required();

  CLI11_PARSE(app, argc, argv);

  if (t->parsed()) return dqlab::cmd_train(train);
  if (o->parsed()) return dqlab::cmd_oracle_check(oracle);
  if (p->parsed()) return dqlab::cmd_plot(plot);
  if (i->parsed()) return dqlab::cmd_inspect_replay(inspect);
  std::fprintf(stderr, "no subcommand selected\n");
  return 2;
}
