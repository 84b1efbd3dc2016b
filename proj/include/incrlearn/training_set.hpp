#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "incrlearn/errors.hpp"
#include "incrlearn/math.hpp"

namespace incrlearn {

/// Per-class sample views keyed by internal class id.
using ClassSampleRefs = std::map<int, const std::vector<Vec>*>;

/// One labeled training sample. `label` is an internal class id in 1..t;
/// `from_exemplar` records whether the entry came out of the exemplar
/// memory rather than the current batch of new-class data.
struct TrainEntry {
  Vec input;
  int label = 0;
  bool from_exemplar = false;
};

struct CombinedTrainingSet {
  std::vector<TrainEntry> entries;

  std::size_t size() const { return entries.size(); }
};

/// Per-entry soft targets q[i][y] for old classes y in 1..s-1, recorded
/// from pre-update parameters. Value-semantic and immutable after
/// construction: later parameter updates cannot reach back into it.
class DistillationTargets {
public:
  DistillationTargets() = default;
  DistillationTargets(std::size_t entries, std::size_t old_classes)
      : entries_(entries),
        old_classes_(old_classes),
        q_(entries * old_classes, 0.0) {}

  std::size_t entry_count() const { return entries_; }
  std::size_t old_class_count() const { return old_classes_; }

  /// y is a 1-based class id < s.
  double at(std::size_t entry, int y) const {
    return q_[entry * old_classes_ + static_cast<std::size_t>(y - 1)];
  }
  void set(std::size_t entry, int y, double value) {
    if (!(value >= 0.0 && value <= 1.0)) {
      throw InvalidTargetError("distillation target outside [0,1]");
    }
    q_[entry * old_classes_ + static_cast<std::size_t>(y - 1)] = value;
  }

private:
  std::size_t entries_ = 0;
  std::size_t old_classes_ = 0;
  Vec q_;
};

/// Which classes count as new (s..t, hard 0/1 indicator targets) and which
/// as old (1..s-1, soft targets from `targets`). With first_new_class == 1
/// the loss is plain multi-label binary cross-entropy over all t classes
/// and `targets` must be null.
struct LossSpec {
  int first_new_class = 1;  // s
  int num_classes = 0;      // t
  const DistillationTargets* targets = nullptr;

  int old_class_count() const { return first_new_class - 1; }

  void validate(std::size_t entry_count) const {
    if (num_classes < 1) throw NoClassesError("LossSpec: t must be >= 1");
    if (first_new_class < 1 || first_new_class > num_classes) {
      throw ConfigError("LossSpec: first_new_class outside 1..t");
    }
    if (first_new_class > 1) {
      if (targets == nullptr) {
        throw ConfigError("LossSpec: old classes present but no targets");
      }
      if (targets->old_class_count() !=
              static_cast<std::size_t>(first_new_class - 1) ||
          targets->entry_count() != entry_count) {
        throw ShapeError("LossSpec: target matrix shape mismatch");
      }
    } else if (targets != nullptr) {
      throw ConfigError("LossSpec: targets given but no old classes");
    }
  }
};

}  // namespace incrlearn
