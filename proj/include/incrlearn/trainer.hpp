#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <utility>
#include <vector>

#include "incrlearn/classify.hpp"
#include "incrlearn/distill.hpp"
#include "incrlearn/errors.hpp"
#include "incrlearn/exemplars.hpp"
#include "incrlearn/net.hpp"
#include "incrlearn/rng.hpp"

namespace incrlearn {

/// Maps external dataset labels to the internal contiguous class ids 1..t,
/// assigned in arrival order.
class ClassRegistry {
public:
  int size() const { return static_cast<int>(external_.size()); }

  bool contains(long external_label) const {
    return by_label_.contains(external_label);
  }

  /// Registers a new label and returns its internal id (= new t).
  int add(long external_label) {
    if (contains(external_label)) {
      std::ostringstream msg;
      msg << "class with label " << external_label << " was already observed";
      throw ScheduleError(msg.str());
    }
    external_.push_back(external_label);
    const int id = static_cast<int>(external_.size());
    by_label_[external_label] = id;
    return id;
  }

  int internal_id(long external_label) const {
    const auto it = by_label_.find(external_label);
    if (it == by_label_.end()) {
      std::ostringstream msg;
      msg << "label " << external_label << " has not been observed";
      throw ScheduleError(msg.str());
    }
    return it->second;
  }

  long external_label(int internal_id) const {
    return external_.at(static_cast<std::size_t>(internal_id - 1));
  }

  const std::vector<long>& external_labels() const { return external_; }

  bool operator==(const ClassRegistry& other) const {
    return external_ == other.external_;
  }

private:
  std::vector<long> external_;
  std::map<long, int> by_label_;
};

/// Everything the learner carries between incremental steps. Past training
/// data is reachable only through the exemplar memory.
struct LearnerState {
  ModelParams params;
  ExemplarMemory memory;
  ClassRegistry registry;
  RngStream rng{0};
  int step_index = 0;

  int num_classes() const { return params.num_classes(); }
};

/// Fresh state: feature extractor initialized from derive_seed(seed, 0),
/// the state's own stream (head initialization) from derive_seed(seed, 1),
/// no classes observed yet.
inline LearnerState make_initial_state(const NetSpec& net, int memory_budget,
                                       std::uint64_t seed) {
  LearnerState state;
  RngStream init_rng(derive_seed(seed, 0));
  state.params = init_params(net, init_rng);
  state.memory = ExemplarMemory(memory_budget);
  state.rng = RngStream(derive_seed(seed, 1));
  return state;
}

/// One batch of new classes in arrival order: (external label, samples).
using ClassBatch = std::vector<std::pair<long, const std::vector<Vec>*>>;

/// Behavior switches for the shared incremental step. The all-on setting
/// (distillation + exemplar rehearsal + memory, no freezing) is the
/// canonical trainer; baselines toggle subsets.
struct StepFlags {
  bool use_distillation = true;
  bool use_exemplars_in_training = true;
  bool maintain_exemplar_memory = true;
  bool freeze_features_after_first_batch = false;
  bool freeze_old_heads = false;
};

/// Shared machinery behind incremental_train and the baseline strategies:
/// representation update first, then memory rebalancing, then exemplar
/// construction for the new classes with the post-update feature map.
///
/// Per-step SGD shuffles derive from derive_seed(cfg.shuffle_seed,
/// step_index), and head initialization consumes the state's own stream, so
/// the whole evolution is a pure function of (initial state, batches, cfg).
inline LearnerState incremental_step(LearnerState state,
                                     const ClassBatch& batch,
                                     const TrainConfig& cfg,
                                     const StepFlags& flags) {
  if (batch.empty()) throw EmptyInputError("incremental_step: empty batch");
  const int first_new_class = state.num_classes() + 1;

  ClassSampleRefs new_data;
  for (const auto& [label, samples] : batch) {
    if (samples == nullptr || samples->empty()) {
      std::ostringstream msg;
      msg << "class with label " << label << " arrived without samples";
      throw EmptyInputError(msg.str());
    }
    const int id = state.registry.add(label);
    new_data[id] = samples;
  }

  TrainConfig step_cfg = cfg;
  step_cfg.shuffle_seed = derive_seed(
      cfg.shuffle_seed, static_cast<std::uint64_t>(state.step_index));
  FreezeSpec freeze;
  freeze.feature_layers =
      flags.freeze_features_after_first_batch && state.step_index >= 1;
  freeze.heads_below = flags.freeze_old_heads ? first_new_class : 0;

  const ExemplarMemory empty_memory;
  const ExemplarMemory& rehearsal_mem =
      flags.use_exemplars_in_training ? state.memory : empty_memory;
  state.params = detail::run_update(std::move(state.params), new_data,
                                    rehearsal_mem, step_cfg, state.rng,
                                    flags.use_distillation, freeze);

  if (flags.maintain_exemplar_memory) {
    const int t = state.num_classes();
    const int m = per_class_budget(state.memory.budget(), t);
    state.memory = rebalance_memory(state.memory, t);
    const auto extract = feature_map(state.params);
    for (const auto& [id, samples] : new_data) {
      const int target =
          std::min<int>(m, static_cast<int>(samples->size()));
      state.memory.set_class(
          construct_exemplar_set(*samples, id, target, extract));
    }
  }

  ++state.step_index;
  return state;
}

/// The canonical incremental step: distillation, rehearsal and exemplar
/// memory all active.
inline LearnerState incremental_train(LearnerState state,
                                      const ClassBatch& batch,
                                      const TrainConfig& cfg) {
  return incremental_step(std::move(state), batch, cfg, StepFlags{});
}

/// Mean-of-exemplars prediction from the current state. Prototypes are
/// recomputed from the current feature map on every call.
inline int predict(const LearnerState& state, const Vec& x) {
  if (state.num_classes() < 1) {
    throw NoClassesError("predict: no classes observed yet");
  }
  const auto extract = feature_map(state.params);
  const PrototypeSet protos = compute_prototypes(state.memory, extract);
  return classify(x, protos, extract);
}

}  // namespace incrlearn
