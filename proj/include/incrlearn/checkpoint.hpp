#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "incrlearn/errors.hpp"
#include "incrlearn/trainer.hpp"

namespace incrlearn {

/// Binary checkpoint format, fully specified in docs/checkpoint-format.md.
/// All integers and IEEE-754 doubles are stored little-endian regardless of
/// host byte order, so files are byte-identical across platforms.
inline constexpr char kCheckpointMagic[8] = {'I', 'N', 'C', 'R',
                                             'L', 'C', 'K', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint32_t kEndianTag = 0x01020304;

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b;
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b.data(), b.size());
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b.data(), b.size());
}

inline void put_i64(std::ostream& out, std::int64_t v) {
  put_u64(out, static_cast<std::uint64_t>(v));
}

inline void put_f64(std::ostream& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline void read_bytes(std::istream& in, char* dst, std::size_t n,
                       const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    std::ostringstream msg;
    msg << "checkpoint truncated while reading " << what;
    throw TruncationError(msg.str());
  }
}

inline std::uint32_t get_u32(std::istream& in, const char* what) {
  std::array<char, 4> b;
  read_bytes(in, b.data(), b.size(), what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i]))
         << (8 * i);
  }
  return v;
}

inline std::uint64_t get_u64(std::istream& in, const char* what) {
  std::array<char, 8> b;
  read_bytes(in, b.data(), b.size(), what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i]))
         << (8 * i);
  }
  return v;
}

inline std::int64_t get_i64(std::istream& in, const char* what) {
  return static_cast<std::int64_t>(get_u64(in, what));
}

inline double get_f64(std::istream& in, const char* what) {
  return std::bit_cast<double>(get_u64(in, what));
}

inline void put_vec(std::ostream& out, const Vec& v) {
  for (double x : v) put_f64(out, x);
}

inline Vec get_vec(std::istream& in, std::size_t n, const char* what) {
  Vec v(n);
  for (double& x : v) x = get_f64(in, what);
  return v;
}

inline void require(bool ok, const std::string& invariant) {
  if (!ok) {
    throw InvariantViolationError("checkpoint invariant violated: " +
                                  invariant);
  }
}

}  // namespace detail

inline void save_checkpoint(const LearnerState& state,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open checkpoint for writing: " + path);

  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, kEndianTag);
  detail::put_u64(out, static_cast<std::uint64_t>(state.step_index));
  detail::put_u64(out, state.rng.seed());
  detail::put_u64(out, state.rng.counter());
  detail::put_u64(out, static_cast<std::uint64_t>(state.memory.budget()));

  const NetSpec& spec = state.params.spec;
  detail::put_u32(out, static_cast<std::uint32_t>(spec.input_dim));
  detail::put_u32(out, static_cast<std::uint32_t>(spec.hidden_widths.size()));
  for (std::size_t w : spec.hidden_widths) {
    detail::put_u32(out, static_cast<std::uint32_t>(w));
  }
  detail::put_u32(out, static_cast<std::uint32_t>(spec.feature_dim));
  const int t = state.num_classes();
  detail::put_u32(out, static_cast<std::uint32_t>(t));
  for (long label : state.registry.external_labels()) {
    detail::put_i64(out, static_cast<std::int64_t>(label));
  }

  for (const LayerParams& l : state.params.layers) {
    detail::put_vec(out, l.weights.data());
    detail::put_vec(out, l.bias);
  }
  for (const Vec& w : state.params.class_weights) detail::put_vec(out, w);

  const std::vector<int> classes = state.memory.classes();
  detail::put_u32(out, static_cast<std::uint32_t>(classes.size()));
  for (int y : classes) {
    const ExemplarList& list = state.memory.list(y);
    detail::put_u32(out, static_cast<std::uint32_t>(y));
    detail::put_u32(out, static_cast<std::uint32_t>(list.size()));
    for (const Vec& item : list.items) detail::put_vec(out, item);
  }
  out.flush();
  if (!out) throw ConfigError("write to checkpoint failed: " + path);
}

inline LearnerState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint: " + path);

  char magic[8];
  detail::read_bytes(in, magic, sizeof(magic), "magic");
  if (!std::equal(magic, magic + 8, kCheckpointMagic)) {
    throw VersionMismatchError("not a checkpoint file (bad magic)");
  }
  const std::uint32_t version = detail::get_u32(in, "version");
  if (version != kCheckpointVersion) {
    std::ostringstream msg;
    msg << "unsupported checkpoint version " << version << " (expected "
        << kCheckpointVersion << ")";
    throw VersionMismatchError(msg.str());
  }
  const std::uint32_t endian = detail::get_u32(in, "endian tag");
  if (endian != kEndianTag) {
    throw VersionMismatchError("checkpoint endianness tag mismatch");
  }

  LearnerState state;
  state.step_index = static_cast<int>(detail::get_u64(in, "step_index"));
  const std::uint64_t rng_seed = detail::get_u64(in, "rng seed");
  const std::uint64_t rng_counter = detail::get_u64(in, "rng counter");
  state.rng = RngStream(rng_seed, rng_counter);
  const std::uint64_t budget = detail::get_u64(in, "memory budget");
  detail::require(budget >= 1, "memory budget K >= 1");
  state.memory = ExemplarMemory(static_cast<int>(budget));

  NetSpec spec;
  spec.input_dim = detail::get_u32(in, "input_dim");
  const std::uint32_t hidden = detail::get_u32(in, "hidden count");
  for (std::uint32_t i = 0; i < hidden; ++i) {
    spec.hidden_widths.push_back(detail::get_u32(in, "hidden width"));
  }
  spec.feature_dim = detail::get_u32(in, "feature_dim");
  detail::require(spec.input_dim >= 1, "input_dim >= 1");
  for (std::size_t w : spec.hidden_widths) {
    detail::require(w >= 1, "hidden widths >= 1");
  }
  detail::require(spec.feature_dim >= 2, "feature_dim >= 2");

  const std::uint32_t t = detail::get_u32(in, "class count");
  for (std::uint32_t y = 0; y < t; ++y) {
    const std::int64_t label = detail::get_i64(in, "registry label");
    if (state.registry.contains(static_cast<long>(label))) {
      throw InvariantViolationError(
          "checkpoint invariant violated: registry labels distinct");
    }
    state.registry.add(static_cast<long>(label));
  }

  state.params.spec = spec;
  std::size_t fan_in = spec.input_dim;
  std::vector<std::size_t> outs = spec.hidden_widths;
  outs.push_back(spec.feature_dim);
  for (std::size_t fan_out : outs) {
    LayerParams l{Matrix(fan_out, fan_in), Vec()};
    l.weights.data() = detail::get_vec(in, fan_out * fan_in, "layer weights");
    l.bias = detail::get_vec(in, fan_out, "layer bias");
    detail::require(all_finite(l.weights.data()), "layer weights finite");
    detail::require(all_finite(l.bias), "layer bias finite");
    state.params.layers.push_back(std::move(l));
    fan_in = fan_out;
  }
  for (std::uint32_t y = 0; y < t; ++y) {
    Vec w = detail::get_vec(in, spec.feature_dim, "class weights");
    detail::require(all_finite(w), "class weights finite");
    state.params.class_weights.push_back(std::move(w));
  }

  const std::uint32_t list_count = detail::get_u32(in, "exemplar list count");
  detail::require(list_count == 0 || list_count == t,
                  "exemplar memory holds one list per observed class "
                  "(or none at all)");
  std::size_t stored = 0;
  for (std::uint32_t i = 0; i < list_count; ++i) {
    ExemplarList list;
    list.class_id = static_cast<int>(detail::get_u32(in, "exemplar class id"));
    detail::require(list.class_id == static_cast<int>(i) + 1,
                    "exemplar lists ordered by class id 1..t");
    const std::uint32_t m = detail::get_u32(in, "exemplar count");
    detail::require(m >= 1, "every stored exemplar list is non-empty");
    for (std::uint32_t j = 0; j < m; ++j) {
      Vec item = detail::get_vec(in, spec.input_dim, "exemplar item");
      detail::require(all_finite(item), "exemplar items finite");
      list.items.push_back(std::move(item));
    }
    stored += list.size();
    detail::require(stored <= budget, "total exemplars within budget K");
    state.memory.set_class(std::move(list));
  }

  char extra;
  in.read(&extra, 1);
  if (in.gcount() != 0) {
    throw InvariantViolationError(
        "checkpoint invariant violated: no trailing bytes");
  }
  return state;
}

/// Summary used by the `inspect` CLI subcommand.
struct CheckpointInfo {
  std::uint32_t version = 0;
  int step_index = 0;
  int num_classes = 0;
  int memory_budget = 0;
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_widths;
  std::size_t feature_dim = 0;
  std::vector<std::pair<int, std::size_t>> exemplar_counts;  // (class, m)
  std::size_t feature_param_count = 0;
  std::size_t head_param_count = 0;
  std::uint64_t rng_seed = 0;
  std::uint64_t rng_counter = 0;
  std::vector<long> external_labels;
};

inline CheckpointInfo inspect_checkpoint(const std::string& path) {
  const LearnerState state = load_checkpoint(path);
  CheckpointInfo info;
  info.version = kCheckpointVersion;
  info.step_index = state.step_index;
  info.num_classes = state.num_classes();
  info.memory_budget = state.memory.budget();
  info.input_dim = state.params.spec.input_dim;
  info.hidden_widths = state.params.spec.hidden_widths;
  info.feature_dim = state.params.spec.feature_dim;
  for (int y : state.memory.classes()) {
    info.exemplar_counts.emplace_back(y, state.memory.list(y).size());
  }
  for (const LayerParams& l : state.params.layers) {
    info.feature_param_count += l.weights.data().size() + l.bias.size();
  }
  for (const Vec& w : state.params.class_weights) {
    info.head_param_count += w.size();
  }
  info.rng_seed = state.rng.seed();
  info.rng_counter = state.rng.counter();
  info.external_labels = state.registry.external_labels();
  return info;
}

}  // namespace incrlearn
