#pragma once

#include <map>
#include <sstream>
#include <vector>

#include "incrlearn/errors.hpp"
#include "incrlearn/exemplars.hpp"
#include "incrlearn/math.hpp"
#include "incrlearn/net.hpp"

namespace incrlearn {

/// One unit-norm prototype per class, ids contiguous 1..t.
struct PrototypeSet {
  std::vector<int> class_ids;
  std::vector<FeatureVector> prototypes;

  std::size_t size() const { return class_ids.size(); }
};

/// Re-normalized mean of the exemplar features of every stored class,
/// computed fresh from the feature map passed in. Never cached: prototypes
/// must follow every representation change.
template <class ExtractFn>
PrototypeSet compute_prototypes(const ExemplarMemory& mem,
                                ExtractFn&& extract) {
  PrototypeSet out;
  for (int y : mem.classes()) {
    const ExemplarList& list = mem.list(y);
    if (list.items.empty()) {
      std::ostringstream msg;
      msg << "class " << y << " has an empty exemplar list";
      throw MissingExemplarsError(msg.str());
    }
    std::vector<FeatureVector> features;
    features.reserve(list.items.size());
    for (const Vec& p : list.items) features.push_back(extract(p));
    out.class_ids.push_back(y);
    out.prototypes.push_back(renormalized_mean(features));
  }
  return out;
}

/// Prototypes as re-normalized means over *all* training samples of each
/// class (the full-data variant that a bounded-memory learner cannot
/// afford). `full_data` maps class id to that class's retained samples.
template <class ExtractFn>
PrototypeSet compute_ncm_prototypes(
    const ClassSampleRefs& full_data,
    ExtractFn&& extract) {
  PrototypeSet out;
  for (const auto& [y, samples] : full_data) {
    if (samples == nullptr || samples->empty()) {
      std::ostringstream msg;
      msg << "class " << y << " has no retained training data";
      throw MissingDataError(msg.str());
    }
    std::vector<FeatureVector> features;
    features.reserve(samples->size());
    for (const Vec& x : *samples) features.push_back(extract(x));
    out.class_ids.push_back(y);
    out.prototypes.push_back(renormalized_mean(features));
  }
  return out;
}

/// Nearest prototype in feature space. Ties break to the lowest class id.
inline int classify_features(const FeatureVector& feature,
                             const PrototypeSet& protos) {
  if (protos.size() == 0) throw NoClassesError("classify: no prototypes");
  int best = protos.class_ids.front();
  double best_dist = euclidean_distance(feature, protos.prototypes.front());
  for (std::size_t i = 1; i < protos.size(); ++i) {
    const double d = euclidean_distance(feature, protos.prototypes[i]);
    if (d < best_dist) {
      best_dist = d;
      best = protos.class_ids[i];
    }
  }
  return best;
}

template <class ExtractFn>
int classify(const Vec& x, const PrototypeSet& protos, ExtractFn&& extract) {
  return classify_features(extract(x), protos);
}

/// argmax_y g_y(x): the classification rule a plain network would use.
/// Ties break to the lowest class id.
inline int classify_by_network(const Vec& x, const ModelParams& params) {
  const Vec g = network_outputs(params, x);
  int best = 1;
  for (std::size_t y = 1; y < g.size(); ++y) {
    if (g[y] > g[static_cast<std::size_t>(best - 1)]) {
      best = static_cast<int>(y) + 1;
    }
  }
  return best;
}

/// Nearest-class-mean over full training data, recomputed on every call
/// from the current feature map.
template <class ExtractFn>
int ncm_classify(const Vec& x,
                 const ClassSampleRefs& full_data,
                 ExtractFn&& extract) {
  const PrototypeSet protos = compute_ncm_prototypes(full_data, extract);
  return classify(x, protos, extract);
}

}  // namespace incrlearn
