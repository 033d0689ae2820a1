#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dqlab/gridworld.hpp"
#include "dqlab/mlp.hpp"
#include "dqlab/qtable.hpp"
#include "dqlab/replay.hpp"
#include "dqlab/replay_seed.hpp"

namespace dqlab {

// Binary snapshot formats, all little-endian with a 4-byte magic + u32
// version. Truncated or mislabeled files raise SnapshotError. The
// encoding id travels with every weight snapshot so weights trained on one
// observation encoding cannot be silently restored into another.

enum class SnapshotKind : std::uint8_t { Table = 1, Mlp = 2 };

struct WeightSnapshot {
  SnapshotKind kind = SnapshotKind::Table;
  std::string encoding_id;
  double gamma = 0.0;
  std::uint64_t update_count = 0;
  std::vector<std::uint64_t> dims;  // Table: {n_states}; Mlp: layer sizes
  std::vector<double> values;
};

std::string serialize(const WeightSnapshot& snap);
WeightSnapshot parse_weight_snapshot(std::string_view bytes);
void save_weight_snapshot(const WeightSnapshot& snap, const std::string& path);
WeightSnapshot load_weight_snapshot(const std::string& path);

// Content hash of the serialized form (stable across process runs).
std::uint64_t snapshot_hash(const WeightSnapshot& snap);

WeightSnapshot snapshot_from_table(const QTable& table, const std::string& encoding_id);
// Target must match shape, gamma and encoding id; values and the update
// counter are overwritten.
void restore_table(const WeightSnapshot& snap, QTable& table,
                   const std::string& encoding_id);

WeightSnapshot snapshot_from_mlp(const Mlp& net, const std::string& encoding_id,
                                 double gamma, std::uint64_t update_count);
void restore_mlp(const WeightSnapshot& snap, Mlp& net, const std::string& encoding_id);

// --- Replay dumps (gridworld transitions) ---

struct ReplayDump {
  GridConfig config;
  std::vector<GridTransition> transitions;  // oldest first
};

std::string serialize_replay(const std::vector<GridTransition>& transitions,
                             const GridConfig& config);
std::string serialize_replay(const ReplayBuffer<GridTransition>& buffer,
                             const GridConfig& config);
ReplayDump parse_replay_dump(std::string_view bytes);
void save_replay_dump(const ReplayBuffer<GridTransition>& buffer,
                      const GridConfig& config, const std::string& path);
ReplayDump load_replay_dump(const std::string& path);

// --- Fixed evaluation states ---

std::string serialize_eval_states(const std::vector<GridState>& states,
                                  const GridConfig& config);
std::vector<GridState> parse_eval_states(std::string_view bytes, GridConfig* config_out);
void save_eval_states(const std::vector<GridState>& states, const GridConfig& config,
                      const std::string& path);
std::vector<GridState> load_eval_states(const std::string& path, GridConfig* config_out);

// --- Raw file helpers ---

std::string read_file_bytes(const std::string& path);   // throws SnapshotError
void write_file_bytes(const std::string& path, std::string_view bytes);

}  // namespace dqlab
