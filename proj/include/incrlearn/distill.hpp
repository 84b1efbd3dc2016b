#pragma once

#include <map>
#include <numeric>
#include <sstream>
#include <vector>

#include "incrlearn/errors.hpp"
#include "incrlearn/exemplars.hpp"
#include "incrlearn/net.hpp"
#include "incrlearn/training_set.hpp"

namespace incrlearn {

/// D = (new-class samples, labeled) union (stored exemplars, labeled).
/// New classes must be exactly first_new_class..t with no collisions
/// against the memory's classes. Entry order: new classes ascending, then
/// exemplar classes ascending, each in stored order.
inline CombinedTrainingSet build_combined_set(const ClassSampleRefs& new_data,
                                              const ExemplarMemory& mem,
                                              int first_new_class) {
  if (new_data.empty()) {
    throw EmptyInputError("build_combined_set: no new-class data");
  }
  int expected = first_new_class;
  for (const auto& [y, samples] : new_data) {
    if (y != expected) {
      std::ostringstream msg;
      msg << "new class ids must be contiguous from " << first_new_class
          << "; got " << y << " where " << expected << " was expected";
      throw ScheduleError(msg.str());
    }
    ++expected;
  }
  for (int y : mem.classes()) {
    if (y >= first_new_class) {
      std::ostringstream msg;
      msg << "exemplar memory already holds class " << y
          << ", which collides with the new batch";
      throw ScheduleError(msg.str());
    }
  }
  CombinedTrainingSet out;
  for (const auto& [y, samples] : new_data) {
    for (const Vec& x : *samples) {
      out.entries.push_back({x, y, /*from_exemplar=*/false});
    }
  }
  for (int y : mem.classes()) {
    for (const Vec& p : mem.list(y).items) {
      out.entries.push_back({p, y, /*from_exemplar=*/true});
    }
  }
  return out;
}

/// q[i][y] = g_y(x_i) under the given (pre-update) parameters, for every
/// entry and every old class y < first_new_class. The result is a value:
/// later parameter changes cannot alter it.
inline DistillationTargets record_targets(const ModelParams& params_pre,
                                          const CombinedTrainingSet& data,
                                          int first_new_class) {
  const int old_classes = first_new_class - 1;
  if (old_classes == 0) return DistillationTargets(data.size(), 0);
  if (params_pre.num_classes() < old_classes) {
    throw ShapeError("record_targets: model has fewer heads than old classes");
  }
  DistillationTargets q(data.size(), static_cast<std::size_t>(old_classes));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vec g = network_outputs(params_pre, data.entries[i].input);
    for (int y = 1; y <= old_classes; ++y) {
      q.set(i, y, g[static_cast<std::size_t>(y - 1)]);
    }
  }
  return q;
}

/// Full-set loss: indicator cross-entropy on classes s..t plus soft-target
/// cross-entropy on classes 1..s-1, summed over every entry. With s = 1
/// this is exactly plain multi-label binary cross-entropy.
inline double combined_loss(const ModelParams& params,
                            const CombinedTrainingSet& data,
                            const DistillationTargets& targets,
                            int first_new_class) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  const LossSpec spec{first_new_class, params.num_classes(),
                      first_new_class > 1 ? &targets : nullptr};
  return evaluate_loss(params, data, all, spec);
}

namespace detail {

/// Shared update pipeline. With distillation the loss is the two-term form
/// (indicators on new classes, recorded soft targets on old ones); without
/// it the loss is plain indicator cross-entropy over all observed classes,
/// so old classes still train wherever the data (e.g. exemplars) carries
/// their labels.
inline ModelParams run_update(ModelParams params,
                              const ClassSampleRefs& new_data,
                              const ExemplarMemory& mem,
                              const TrainConfig& cfg, RngStream& rng,
                              bool use_distillation,
                              const FreezeSpec& freeze) {
  const int first_new_class = params.num_classes() + 1;
  const CombinedTrainingSet data =
      build_combined_set(new_data, mem, first_new_class);
  DistillationTargets targets;
  if (use_distillation) {
    targets = record_targets(params, data, first_new_class);
  }
  params = add_class_heads(std::move(params),
                           static_cast<int>(new_data.size()), rng);
  const int loss_first_new = use_distillation ? first_new_class : 1;
  const LossSpec spec{loss_first_new, params.num_classes(),
                      loss_first_new > 1 ? &targets : nullptr};
  return sgd_train(std::move(params), data, cfg, spec, freeze);
}

}  // namespace detail

/// One representation update: build the combined training set, freeze the
/// pre-update outputs as distillation targets, grow the head set, then run
/// SGD on the combined loss. `rng` supplies head initialization.
inline ModelParams update_representation(ModelParams params,
                                         const ClassSampleRefs& new_data,
                                         const ExemplarMemory& mem,
                                         const TrainConfig& cfg,
                                         RngStream& rng) {
  return detail::run_update(std::move(params), new_data, mem, cfg, rng,
                            /*use_distillation=*/true, FreezeSpec{});
}

}  // namespace incrlearn
