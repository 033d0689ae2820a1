#include "dqlab/snapshot.hpp"

#include <bit>
#include <fstream>

#include "dqlab/hash.hpp"

namespace dqlab {

namespace {

constexpr std::string_view kWeightMagic = "DQSN";
constexpr std::string_view kReplayMagic = "DQRB";
constexpr std::string_view kEvalMagic = "DQFE";
constexpr std::uint32_t kVersion = 1;

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_i32(std::string& out, std::int32_t v) { put_u32(out, static_cast<std::uint32_t>(v)); }
void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_str(std::string& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

struct Reader {
  std::string_view bytes;
  std::size_t pos = 0;
  std::string what;  // format name for error messages

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) {
      throw SnapshotError("truncated " + what + " data at offset " + std::to_string(pos));
    }
  }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes[pos++]);
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[pos++])) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes[pos++])) << (8 * i);
    return v;
  }

  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(bytes.substr(pos, n));
    pos += n;
    return s;
  }

  void expect_magic(std::string_view magic) {
    need(magic.size());
    if (bytes.substr(pos, magic.size()) != magic) {
      throw SnapshotError("bad magic: expected " + std::string(magic));
    }
    pos += magic.size();
  }

  void expect_end() const {
    if (pos != bytes.size()) {
      throw SnapshotError("trailing bytes after " + what + " payload");
    }
  }
};

void put_grid_config(std::string& out, const GridConfig& c) {
  put_i32(out, c.width);
  put_i32(out, c.height);
  put_f64(out, c.p_obstacle);
  put_f64(out, c.p_collectible);
  put_u8(out, c.per_type_collectible_prob ? 1 : 0);
  put_i32(out, c.collectible_types);
  put_i32(out, c.max_steps);
}

GridConfig read_grid_config(Reader& r) {
  GridConfig c;
  c.width = r.i32();
  c.height = r.i32();
  c.p_obstacle = r.f64();
  c.p_collectible = r.f64();
  c.per_type_collectible_prob = r.u8() != 0;
  c.collectible_types = r.i32();
  c.max_steps = r.i32();
  return c;
}

void put_grid_state(std::string& out, const GridState& s) {
  put_i32(out, s.agent.row);
  put_i32(out, s.agent.col);
  put_u64(out, s.cells.size());
  for (Cell c : s.cells) put_u8(out, static_cast<std::uint8_t>(c));
  put_i32(out, s.steps_elapsed);
  put_u8(out, s.terminated ? 1 : 0);
}

GridState read_grid_state(Reader& r) {
  GridState s;
  s.agent.row = r.i32();
  s.agent.col = r.i32();
  const std::uint64_t n = r.u64();
  s.cells.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint8_t raw = r.u8();
    if (raw > 3) throw SnapshotError("invalid cell value in stored state");
    s.cells.push_back(static_cast<Cell>(raw));
  }
  s.steps_elapsed = r.i32();
  s.terminated = r.u8() != 0;
  return s;
}

}  // namespace

std::string serialize(const WeightSnapshot& snap) {
  std::string out;
  out.append(kWeightMagic);
  put_u32(out, kVersion);
  put_u8(out, static_cast<std::uint8_t>(snap.kind));
  put_str(out, snap.encoding_id);
  put_f64(out, snap.gamma);
  put_u64(out, snap.update_count);
  put_u32(out, static_cast<std::uint32_t>(snap.dims.size()));
  for (std::uint64_t d : snap.dims) put_u64(out, d);
  put_u64(out, snap.values.size());
  for (double v : snap.values) put_f64(out, v);
  return out;
}

WeightSnapshot parse_weight_snapshot(std::string_view bytes) {
  Reader r{bytes, 0, "weight snapshot"};
  r.expect_magic(kWeightMagic);
  if (r.u32() != kVersion) throw SnapshotError("unsupported weight snapshot version");
  WeightSnapshot snap;
  const std::uint8_t kind = r.u8();
  if (kind != 1 && kind != 2) throw SnapshotError("unknown weight snapshot kind");
  snap.kind = static_cast<SnapshotKind>(kind);
  snap.encoding_id = r.str();
  snap.gamma = r.f64();
  snap.update_count = r.u64();
  const std::uint32_t nd = r.u32();
  snap.dims.reserve(nd);
  for (std::uint32_t i = 0; i < nd; ++i) snap.dims.push_back(r.u64());
  const std::uint64_t nv = r.u64();
  snap.values.reserve(nv);
  for (std::uint64_t i = 0; i < nv; ++i) snap.values.push_back(r.f64());
  r.expect_end();
  return snap;
}

void save_weight_snapshot(const WeightSnapshot& snap, const std::string& path) {
  write_file_bytes(path, serialize(snap));
}

WeightSnapshot load_weight_snapshot(const std::string& path) {
  return parse_weight_snapshot(read_file_bytes(path));
}

std::uint64_t snapshot_hash(const WeightSnapshot& snap) {
  return hash_bytes(serialize(snap));
}

WeightSnapshot snapshot_from_table(const QTable& table, const std::string& encoding_id) {
  WeightSnapshot snap;
  snap.kind = SnapshotKind::Table;
  snap.encoding_id = encoding_id;
  snap.gamma = table.gamma();
  snap.update_count = table.update_count();
  snap.dims = {table.n_states()};
  snap.values = table.values();
  return snap;
}

void restore_table(const WeightSnapshot& snap, QTable& table,
                   const std::string& encoding_id) {
  if (snap.kind != SnapshotKind::Table) {
    throw SnapshotError("snapshot holds network weights, target is a table");
  }
  if (snap.encoding_id != encoding_id) {
    throw SnapshotError("snapshot encoding '" + snap.encoding_id +
                        "' does not match target encoding '" + encoding_id + "'");
  }
  if (snap.dims.size() != 1 || snap.dims[0] != table.n_states()) {
    throw SnapshotError("snapshot state count does not match target table");
  }
  if (snap.values.size() != table.values().size()) {
    throw SnapshotError("snapshot value count does not match target table");
  }
  if (snap.gamma != table.gamma()) {
    throw SnapshotError("snapshot gamma does not match target table");
  }
  table.values() = snap.values;
}

WeightSnapshot snapshot_from_mlp(const Mlp& net, const std::string& encoding_id,
                                 double gamma, std::uint64_t update_count) {
  WeightSnapshot snap;
  snap.kind = SnapshotKind::Mlp;
  snap.encoding_id = encoding_id;
  snap.gamma = gamma;
  snap.update_count = update_count;
  for (int s : net.layer_sizes()) snap.dims.push_back(static_cast<std::uint64_t>(s));
  snap.values.assign(net.params().begin(), net.params().end());
  return snap;
}

void restore_mlp(const WeightSnapshot& snap, Mlp& net, const std::string& encoding_id) {
  if (snap.kind != SnapshotKind::Mlp) {
    throw SnapshotError("snapshot holds table values, target is a network");
  }
  if (snap.encoding_id != encoding_id) {
    throw SnapshotError("snapshot encoding '" + snap.encoding_id +
                        "' does not match target encoding '" + encoding_id + "'");
  }
  const std::vector<int>& sizes = net.layer_sizes();
  if (snap.dims.size() != sizes.size()) {
    throw SnapshotError("snapshot layer count does not match target network");
  }
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (snap.dims[i] != static_cast<std::uint64_t>(sizes[i])) {
      throw SnapshotError("snapshot layer sizes do not match target network");
    }
  }
  if (snap.values.size() != net.n_params()) {
    throw SnapshotError("snapshot parameter count does not match target network");
  }
  std::span<double> p = net.params();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = snap.values[i];
}

std::string serialize_replay(const std::vector<GridTransition>& transitions,
                             const GridConfig& config) {
  std::string out;
  out.append(kReplayMagic);
  put_u32(out, kVersion);
  put_grid_config(out, config);
  put_u64(out, transitions.size());
  for (const GridTransition& t : transitions) {
    put_grid_state(out, t.state);
    put_u8(out, static_cast<std::uint8_t>(t.action));
    put_f64(out, t.reward.env);
    put_f64(out, t.reward.task);
    put_grid_state(out, t.next_state);
    put_u8(out, t.terminal ? 1 : 0);
  }
  return out;
}

std::string serialize_replay(const ReplayBuffer<GridTransition>& buffer,
                             const GridConfig& config) {
  std::vector<GridTransition> transitions;
  transitions.reserve(buffer.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) transitions.push_back(buffer.at(i));
  return serialize_replay(transitions, config);
}

ReplayDump parse_replay_dump(std::string_view bytes) {
  Reader r{bytes, 0, "replay dump"};
  r.expect_magic(kReplayMagic);
  if (r.u32() != kVersion) throw SnapshotError("unsupported replay dump version");
  ReplayDump dump;
  dump.config = read_grid_config(r);
  const std::uint64_t n = r.u64();
  dump.transitions.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    GridTransition t;
    t.state = read_grid_state(r);
    const std::uint8_t a = r.u8();
    if (a >= kNumActions) throw SnapshotError("invalid action in replay dump");
    t.action = static_cast<Action>(a);
    t.reward.env = r.f64();
    t.reward.task = r.f64();
    t.next_state = read_grid_state(r);
    t.terminal = r.u8() != 0;
    dump.transitions.push_back(std::move(t));
  }
  r.expect_end();
  return dump;
}

void save_replay_dump(const ReplayBuffer<GridTransition>& buffer,
                      const GridConfig& config, const std::string& path) {
  write_file_bytes(path, serialize_replay(buffer, config));
}

ReplayDump load_replay_dump(const std::string& path) {
  return parse_replay_dump(read_file_bytes(path));
}

std::string serialize_eval_states(const std::vector<GridState>& states,
                                  const GridConfig& config) {
  std::string out;
  out.append(kEvalMagic);
  put_u32(out, kVersion);
  put_grid_config(out, config);
  put_u64(out, states.size());
  for (const GridState& s : states) put_grid_state(out, s);
  return out;
}

std::vector<GridState> parse_eval_states(std::string_view bytes, GridConfig* config_out) {
  Reader r{bytes, 0, "evaluation state set"};
  r.expect_magic(kEvalMagic);
  if (r.u32() != kVersion) throw SnapshotError("unsupported evaluation set version");
  const GridConfig config = read_grid_config(r);
  if (config_out != nullptr) *config_out = config;
  const std::uint64_t n = r.u64();
  std::vector<GridState> states;
  states.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) states.push_back(read_grid_state(r));
  r.expect_end();
  return states;
}

void save_eval_states(const std::vector<GridState>& states, const GridConfig& config,
                      const std::string& path) {
  write_file_bytes(path, serialize_eval_states(states, config));
}

std::vector<GridState> load_eval_states(const std::string& path, GridConfig* config_out) {
  return parse_eval_states(read_file_bytes(path), config_out);
}

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotError("cannot open '" + path + "' for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw SnapshotError("read failure on '" + path + "'");
  return bytes;
}

void write_file_bytes(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SnapshotError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw SnapshotError("write failure on '" + path + "'");
}

}  // namespace dqlab
