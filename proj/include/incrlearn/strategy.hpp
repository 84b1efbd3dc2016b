#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "incrlearn/classify.hpp"
#include "incrlearn/errors.hpp"
#include "incrlearn/trainer.hpp"

namespace incrlearn {

enum class ClassifierKind {
  kMeanOfExemplars,
  kNetworkOutput,
  kNearestClassMean,
};

/// A training/classification recipe expressed as switches over the shared
/// trainer machinery.
struct StrategySpec {
  std::string name;
  bool use_distillation = false;
  bool use_exemplars_in_training = false;
  ClassifierKind classifier = ClassifierKind::kNetworkOutput;
  bool freeze_features_after_first_batch = false;
  bool freeze_old_heads = false;

  /// Exemplar memory is kept when rehearsal or the mean-of-exemplars
  /// classifier needs it.
  bool maintains_exemplar_memory() const {
    return use_exemplars_in_training ||
           classifier == ClassifierKind::kMeanOfExemplars;
  }

  /// Nearest-class-mean needs every training sample seen so far, which is
  /// exactly what a bounded-memory learner cannot store; callers must keep
  /// the data around for it.
  bool requires_full_training_data() const {
    return classifier == ClassifierKind::kNearestClassMean;
  }

  StepFlags step_flags() const {
    StepFlags f;
    f.use_distillation = use_distillation;
    f.use_exemplars_in_training = use_exemplars_in_training;
    f.maintain_exemplar_memory = maintains_exemplar_memory();
    f.freeze_features_after_first_batch = freeze_features_after_first_batch;
    f.freeze_old_heads = freeze_old_heads;
    return f;
  }
};

inline const std::vector<std::string>& strategy_names() {
  static const std::vector<std::string> names = {
      "icarl",   "finetuning", "fixed-repr", "lwf-mc",
      "hybrid1", "hybrid2",    "hybrid3",    "ncm"};
  return names;
}

inline StrategySpec strategy_for(const std::string& name) {
  StrategySpec s;
  s.name = name;
  if (name == "icarl") {
    s.use_distillation = true;
    s.use_exemplars_in_training = true;
    s.classifier = ClassifierKind::kMeanOfExemplars;
  } else if (name == "finetuning") {
    s.classifier = ClassifierKind::kNetworkOutput;
  } else if (name == "fixed-repr") {
    s.classifier = ClassifierKind::kNetworkOutput;
    s.freeze_features_after_first_batch = true;
    s.freeze_old_heads = true;
  } else if (name == "lwf-mc") {
    s.use_distillation = true;
    s.classifier = ClassifierKind::kNetworkOutput;
  } else if (name == "hybrid1") {
    s.use_distillation = true;
    s.use_exemplars_in_training = true;
    s.classifier = ClassifierKind::kNetworkOutput;
  } else if (name == "hybrid2") {
    s.use_exemplars_in_training = true;
    s.classifier = ClassifierKind::kMeanOfExemplars;
  } else if (name == "hybrid3") {
    s.use_exemplars_in_training = true;
    s.classifier = ClassifierKind::kNetworkOutput;
  } else if (name == "ncm") {
    s.use_distillation = true;
    s.use_exemplars_in_training = true;
    s.classifier = ClassifierKind::kNearestClassMean;
  } else {
    std::ostringstream msg;
    msg << "unknown strategy '" << name << "'; valid names:";
    for (const std::string& n : strategy_names()) msg << ' ' << n;
    throw ConfigError(msg.str());
  }
  return s;
}

/// One incremental step under the given strategy.
inline LearnerState run_strategy(const StrategySpec& spec, LearnerState state,
                                 const ClassBatch& batch,
                                 const TrainConfig& cfg) {
  return incremental_step(std::move(state), batch, cfg, spec.step_flags());
}

/// A classifier bound to a frozen state. Prototype-based kinds compute
/// their prototypes once, here, from the state's current feature map.
class Predictor {
public:
  /// `full_train` maps internal class id to all training samples of that
  /// class; required for the nearest-class-mean kind, ignored otherwise.
  Predictor(const StrategySpec& spec, const LearnerState& state,
            const ClassSampleRefs* full_train = nullptr)
      : state_(&state), kind_(spec.classifier) {
    if (state.num_classes() < 1) {
      throw NoClassesError("Predictor: no classes observed yet");
    }
    if (kind_ == ClassifierKind::kMeanOfExemplars) {
      protos_ = compute_prototypes(state.memory, feature_map(state.params));
    } else if (kind_ == ClassifierKind::kNearestClassMean) {
      if (full_train == nullptr) {
        throw MissingDataError(
            "nearest-class-mean needs the full training data");
      }
      protos_ = compute_ncm_prototypes(*full_train, feature_map(state.params));
    }
  }

  /// Returns an internal class id in 1..t.
  int predict(const Vec& x) const {
    if (kind_ == ClassifierKind::kNetworkOutput) {
      return classify_by_network(x, state_->params);
    }
    return classify(x, protos_, feature_map(state_->params));
  }

private:
  const LearnerState* state_;
  ClassifierKind kind_;
  PrototypeSet protos_;
};

}  // namespace incrlearn
