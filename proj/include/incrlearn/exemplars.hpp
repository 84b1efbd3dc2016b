#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

#include "incrlearn/errors.hpp"
#include "incrlearn/math.hpp"

namespace incrlearn {

/// Prioritized exemplar list for one class. Order is significant: any
/// prefix is itself a valid exemplar list, and reduction keeps prefixes.
/// Items are raw input vectors, never cached features, so they survive
/// representation updates.
struct ExemplarList {
  int class_id = 0;
  std::vector<Vec> items;

  std::size_t size() const { return items.size(); }

  bool operator==(const ExemplarList&) const = default;
};

/// floor(K / t). Throws BudgetExhaustedError when the result would be 0,
/// since every observed class needs at least one stored exemplar.
inline int per_class_budget(int budget, int num_classes) {
  if (budget < 1) throw ConfigError("per_class_budget: K must be >= 1");
  if (num_classes < 1) throw ConfigError("per_class_budget: t must be >= 1");
  const int m = budget / num_classes;
  if (m == 0) {
    std::ostringstream msg;
    msg << "memory budget K=" << budget << " cannot hold one exemplar for each of "
        << num_classes << " classes";
    throw BudgetExhaustedError(msg.str());
  }
  return m;
}

/// Per-class exemplar lists under a global budget K. The sum of list sizes
/// never exceeds K; set_class enforces it.
class ExemplarMemory {
public:
  ExemplarMemory() = default;
  explicit ExemplarMemory(int budget) : budget_(budget) {
    if (budget < 1) throw ConfigError("ExemplarMemory: K must be >= 1");
  }

  int budget() const { return budget_; }

  std::size_t total_count() const {
    std::size_t n = 0;
    for (const auto& [y, list] : per_class_) n += list.size();
    return n;
  }

  int num_classes() const { return static_cast<int>(per_class_.size()); }

  bool has_class(int y) const { return per_class_.contains(y); }

  const ExemplarList& list(int y) const {
    const auto it = per_class_.find(y);
    if (it == per_class_.end()) {
      std::ostringstream msg;
      msg << "no exemplar list for class " << y;
      throw MissingExemplarsError(msg.str());
    }
    return it->second;
  }

  /// Class ids in ascending order.
  std::vector<int> classes() const {
    std::vector<int> ids;
    ids.reserve(per_class_.size());
    for (const auto& [y, list] : per_class_) ids.push_back(y);
    return ids;
  }

  /// Inserts or replaces the list for list.class_id. Rejects any update
  /// that would push the total past the budget.
  void set_class(ExemplarList list) {
    std::size_t total = list.size();
    for (const auto& [y, existing] : per_class_) {
      if (y != list.class_id) total += existing.size();
    }
    if (total > static_cast<std::size_t>(budget_)) {
      std::ostringstream msg;
      msg << "exemplar memory over budget: " << total << " > K=" << budget_;
      throw BudgetExhaustedError(msg.str());
    }
    per_class_[list.class_id] = std::move(list);
  }

  bool operator==(const ExemplarMemory&) const = default;

private:
  int budget_ = 0;
  std::map<int, ExemplarList> per_class_;
};

/// Greedy herding selection: p_k is the sample whose feature, averaged with
/// the features already chosen, lands closest to the class mean. Both the
/// class mean and every candidate average are re-normalized. Ties go to the
/// lowest sample index. By default selection is without replacement, so
/// m = |X| returns a permutation of X; with_replacement = true runs the
/// literal argmin over all of X at every step and may repeat samples.
template <class ExtractFn>
ExemplarList construct_exemplar_set(const std::vector<Vec>& samples,
                                    int class_id, int m, ExtractFn&& extract,
                                    bool with_replacement = false) {
  if (m < 1) throw ConfigError("construct_exemplar_set: m must be >= 1");
  if (static_cast<std::size_t>(m) > samples.size()) {
    std::ostringstream msg;
    msg << "construct_exemplar_set: m=" << m << " exceeds sample count "
        << samples.size();
    throw InsufficientSamplesError(msg.str());
  }
  std::vector<FeatureVector> features;
  features.reserve(samples.size());
  for (const Vec& x : samples) features.push_back(extract(x));
  const FeatureVector mean = renormalized_mean(features);
  const std::size_t d = mean.dim();

  ExemplarList out;
  out.class_id = class_id;
  out.items.reserve(static_cast<std::size_t>(m));
  Vec running_sum(d, 0.0);
  std::vector<bool> chosen(samples.size(), false);
  Vec candidate(d);
  for (int k = 1; k <= m; ++k) {
    std::size_t best = samples.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (!with_replacement && chosen[i]) continue;
      for (std::size_t j = 0; j < d; ++j) {
        candidate[j] = (running_sum[j] + features[i][j]) / k;
      }
      const double dist = euclidean_distance(mean, l2_normalize(candidate));
      if (dist < best_dist) {
        best_dist = dist;
        best = i;
      }
    }
    chosen[best] = true;
    for (std::size_t j = 0; j < d; ++j) running_sum[j] += features[best][j];
    out.items.push_back(samples[best]);
  }
  return out;
}

/// Keep only the first m items. Reduction never reorders.
inline ExemplarList reduce_exemplar_set(const ExemplarList& list, int m) {
  if (m < 0) throw ConfigError("reduce_exemplar_set: m must be >= 0");
  if (static_cast<std::size_t>(m) > list.size()) {
    std::ostringstream msg;
    msg << "reduce_exemplar_set: m=" << m << " exceeds list size "
        << list.size();
    throw InvalidReductionError(msg.str());
  }
  ExemplarList out;
  out.class_id = list.class_id;
  out.items.assign(list.items.begin(),
                   list.items.begin() + static_cast<std::ptrdiff_t>(m));
  return out;
}

/// Cuts every stored list to floor(K / t) items. Lists already shorter than
/// that (possible when K exceeds the available data) are left as they are,
/// since exemplars are never re-grown.
inline ExemplarMemory rebalance_memory(const ExemplarMemory& mem,
                                       int num_classes) {
  const int m = per_class_budget(mem.budget(), num_classes);
  ExemplarMemory out(mem.budget());
  for (int y : mem.classes()) {
    const ExemplarList& list = mem.list(y);
    const int target = std::min<int>(m, static_cast<int>(list.size()));
    out.set_class(reduce_exemplar_set(list, target));
  }
  return out;
}

}  // namespace incrlearn
