#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "incrlearn/distill.hpp"

using namespace incrlearn;

namespace {

NetSpec small_spec() {
  NetSpec s;
  s.input_dim = 6;
  s.hidden_widths = {10};
  s.feature_dim = 6;
  return s;
}

ModelParams small_net(std::uint64_t seed, int heads) {
  RngStream rng(seed);
  ModelParams p = init_params(small_spec(), rng);
  if (heads > 0) p = add_class_heads(std::move(p), heads, rng);
  return p;
}

std::vector<Vec> class_samples(std::uint64_t seed, int n, double shift) {
  RngStream rng(seed);
  std::vector<Vec> out;
  for (int i = 0; i < n; ++i) {
    Vec x(6);
    for (double& v : x) v = shift + rng.next_gaussian();
    out.push_back(std::move(x));
  }
  return out;
}

ExemplarMemory two_class_memory(int per_class, int budget) {
  ExemplarMemory mem(budget);
  for (int y = 1; y <= 2; ++y) {
    ExemplarList list;
    list.class_id = y;
    const std::vector<Vec> samples =
        class_samples(40 + static_cast<std::uint64_t>(y), per_class,
                      y == 1 ? 3.0 : -3.0);
    list.items = samples;
    mem.set_class(std::move(list));
  }
  return mem;
}

}  // namespace

TEST(BuildCombinedSet, FirstBatchIsNewDataOnly) {
  const std::vector<Vec> x1 = class_samples(1, 4, 0.0);
  const std::vector<Vec> x2 = class_samples(2, 3, 1.0);
  ClassSampleRefs new_data = {{1, &x1}, {2, &x2}};
  const CombinedTrainingSet d =
      build_combined_set(new_data, ExemplarMemory{}, 1);
  EXPECT_EQ(d.size(), 7u);
  for (const TrainEntry& e : d.entries) {
    EXPECT_FALSE(e.from_exemplar);
  }
}

TEST(BuildCombinedSet, CountsNewPlusExemplars) {
  const ExemplarMemory mem = two_class_memory(3, 100);
  const std::vector<Vec> x3 = class_samples(3, 10, 0.0);
  ClassSampleRefs new_data = {{3, &x3}};
  const CombinedTrainingSet d = build_combined_set(new_data, mem, 3);
  EXPECT_EQ(d.size(), 16u);
}

TEST(BuildCombinedSet, ProvenancePartitionsTheSet) {
  const ExemplarMemory mem = two_class_memory(3, 100);
  const std::vector<Vec> x3 = class_samples(4, 5, 0.0);
  ClassSampleRefs new_data = {{3, &x3}};
  const CombinedTrainingSet d = build_combined_set(new_data, mem, 3);
  std::size_t from_new = 0, from_mem = 0;
  for (const TrainEntry& e : d.entries) {
    if (e.from_exemplar) {
      ++from_mem;
      EXPECT_LT(e.label, 3);
    } else {
      ++from_new;
      EXPECT_EQ(e.label, 3);
    }
  }
  EXPECT_EQ(from_new, 5u);
  EXPECT_EQ(from_mem, 6u);
  EXPECT_EQ(from_new + from_mem, d.size());
}

TEST(BuildCombinedSet, CollidingClassIdsRejected) {
  const ExemplarMemory mem = two_class_memory(3, 100);
  const std::vector<Vec> x2 = class_samples(5, 4, 0.0);
  ClassSampleRefs overlap = {{2, &x2}};
  EXPECT_THROW(build_combined_set(overlap, mem, 2), ScheduleError);
  ClassSampleRefs gap = {{4, &x2}};
  EXPECT_THROW(build_combined_set(gap, mem, 3), ScheduleError);
}

TEST(RecordTargets, FirstBatchHasEmptyMatrix) {
  const std::vector<Vec> x1 = class_samples(6, 4, 0.0);
  ClassSampleRefs new_data = {{1, &x1}};
  const CombinedTrainingSet d =
      build_combined_set(new_data, ExemplarMemory{}, 1);
  const ModelParams p = small_net(7, 0);
  const DistillationTargets q = record_targets(p, d, 1);
  EXPECT_EQ(q.entry_count(), d.size());
  EXPECT_EQ(q.old_class_count(), 0u);
}

TEST(RecordTargets, ZeroHeadsGiveHalf) {
  ModelParams p = small_net(8, 2);
  for (Vec& w : p.class_weights) std::fill(w.begin(), w.end(), 0.0);
  CombinedTrainingSet d;
  d.entries.push_back({class_samples(9, 1, 0.0)[0], 3, false});
  const DistillationTargets q = record_targets(p, d, 3);
  EXPECT_DOUBLE_EQ(q.at(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(q.at(0, 2), 0.5);
}

TEST(RecordTargets, MatchesNetworkOutputs) {
  const ModelParams p = small_net(10, 3);
  CombinedTrainingSet d;
  for (const Vec& x : class_samples(11, 5, 0.5)) {
    d.entries.push_back({x, 4, false});
  }
  const DistillationTargets q = record_targets(p, d, 4);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Vec g = network_outputs(p, d.entries[i].input);
    for (int y = 1; y <= 3; ++y) {
      EXPECT_DOUBLE_EQ(q.at(i, y), g[static_cast<std::size_t>(y - 1)]);
    }
  }
}

TEST(RecordTargets, FrozenAgainstLaterParameterChanges) {
  ModelParams p = small_net(12, 2);
  CombinedTrainingSet d;
  d.entries.push_back({class_samples(13, 1, 0.0)[0], 3, false});
  const DistillationTargets q = record_targets(p, d, 3);
  const double before = q.at(0, 1);
  for (Vec& w : p.class_weights) {
    for (double& v : w) v += 100.0;
  }
  EXPECT_DOUBLE_EQ(q.at(0, 1), before);
}

TEST(CombinedLoss, FirstBatchReducesToPlainBce) {
  const ModelParams p = small_net(14, 3);
  CombinedTrainingSet d;
  RngStream rng(15);
  for (int i = 0; i < 9; ++i) {
    Vec x(6);
    for (double& v : x) v = rng.next_gaussian();
    d.entries.push_back({std::move(x), 1 + i % 3, false});
  }
  const double lib = combined_loss(p, d, DistillationTargets{}, 1);

  // Independent multi-label binary cross-entropy.
  double expected = 0.0;
  for (const TrainEntry& e : d.entries) {
    const Vec g = network_outputs(p, e.input);
    for (int y = 1; y <= 3; ++y) {
      const double target = (y == e.label) ? 1.0 : 0.0;
      const double gc =
          std::min(std::max(g[static_cast<std::size_t>(y - 1)], 1e-7),
                   1.0 - 1e-7);
      expected -= target * std::log(gc) + (1.0 - target) * std::log(1.0 - gc);
    }
  }
  EXPECT_NEAR(lib, expected, 1e-9);
}

TEST(CombinedLoss, SingleEntryAtHalfIsLogTwo) {
  ModelParams p = small_net(16, 1);
  std::fill(p.class_weights[0].begin(), p.class_weights[0].end(), 0.0);
  CombinedTrainingSet d;
  d.entries.push_back({class_samples(17, 1, 0.0)[0], 1, false});
  EXPECT_NEAR(combined_loss(p, d, DistillationTargets{}, 1), std::log(2.0),
              1e-12);
}

// Grid-scan oracle: as a function of the old-class output g, the
// distillation term with q = 0.3 is minimized at g = 0.3.
TEST(CombinedLoss, DistillationTermMinimizesAtItsTarget) {
  ModelParams p = small_net(18, 2);
  const Vec x = class_samples(19, 1, 0.0)[0];
  const FeatureVector f = extract_features(p, x);
  CombinedTrainingSet d;
  d.entries.push_back({x, 2, false});
  DistillationTargets q(1, 1);
  q.set(0, 1, 0.3);

  double best_g = -1.0, best_loss = 1e300;
  for (int i = 1; i < 1000; ++i) {
    const double g = static_cast<double>(i) / 1000.0;
    const double logit = std::log(g / (1.0 - g));
    Vec w(f.values());
    for (double& v : w) v *= logit;  // w.f == logit since ||f|| = 1
    p.class_weights[0] = w;
    const double loss = combined_loss(p, d, q, 2);
    if (loss < best_loss) {
      best_loss = loss;
      best_g = g;
    }
  }
  EXPECT_NEAR(best_g, 0.3, 1e-3);
}

TEST(CombinedLoss, FiniteForExtremeParameters) {
  ModelParams p = small_net(20, 2);
  const Vec x = class_samples(21, 1, 0.0)[0];
  const FeatureVector f = extract_features(p, x);
  Vec w(f.values());
  for (double& v : w) v *= 1e6;
  p.class_weights[0] = w;
  for (double& v : w) v *= -1.0;
  p.class_weights[1] = w;
  CombinedTrainingSet d;
  d.entries.push_back({x, 1, false});
  DistillationTargets q(1, 1);
  q.set(0, 1, 0.9);
  const double loss = combined_loss(p, d, q, 2);
  EXPECT_TRUE(std::isfinite(loss));
}

TEST(CombinedLoss, AdditiveOverEntries) {
  const ModelParams p = small_net(22, 2);
  CombinedTrainingSet d;
  RngStream rng(23);
  for (int i = 0; i < 6; ++i) {
    Vec x(6);
    for (double& v : x) v = rng.next_gaussian();
    d.entries.push_back({std::move(x), 1 + i % 2, false});
  }
  const LossSpec spec{1, 2, nullptr};
  const std::vector<std::size_t> all = {0, 1, 2, 3, 4, 5};
  const std::vector<std::size_t> first = {0, 1, 2};
  const std::vector<std::size_t> second = {3, 4, 5};
  EXPECT_NEAR(evaluate_loss(p, d, all, spec),
              evaluate_loss(p, d, first, spec) +
                  evaluate_loss(p, d, second, spec),
              1e-10);
}

// Gradient of the full two-term loss passes the finite-difference check
// (same tolerance as the feature-net checks).
TEST(CombinedLoss, GradientPassesFiniteDifferenceCheck) {
  const ModelParams p = small_net(24, 4);
  CombinedTrainingSet d;
  RngStream rng(25);
  for (int i = 0; i < 4; ++i) {
    Vec x(6);
    for (double& v : x) v = rng.next_gaussian();
    d.entries.push_back({std::move(x), 3 + i % 2, i % 2 == 0});
  }
  DistillationTargets q(d.size(), 2);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (int y = 1; y <= 2; ++y) q.set(i, y, rng.next_double());
  }
  const LossSpec spec{3, 4, &q};
  const std::vector<std::size_t> all = {0, 1, 2, 3};
  Gradient analytic = zero_gradient(p);
  loss_and_gradient(p, d, all, spec, analytic);
  const Gradient fd = finite_diff_gradient(p, d, all, spec, 1e-5);
  const Vec a = flatten(analytic);
  const Vec f = flatten(fd);
  double max_rel = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max(std::abs(a[i]), std::abs(f[i]));
    if (denom <= 1e-8) continue;
    max_rel = std::max(max_rel, std::abs(a[i] - f[i]) / denom);
  }
  EXPECT_LT(max_rel, 1e-4);
}

namespace {

TrainConfig quick_cfg(std::uint64_t seed, int epochs) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.minibatch_size = 16;
  cfg.base_learning_rate = 0.5;
  cfg.lr_drop_epochs = default_lr_drops(epochs);
  cfg.shuffle_seed = seed;
  return cfg;
}

}  // namespace

TEST(UpdateRepresentation, FirstBatchEqualsPlainSupervisedTraining) {
  const ModelParams p0 = small_net(26, 0);
  const std::vector<Vec> x1 = class_samples(27, 8, 2.0);
  const std::vector<Vec> x2 = class_samples(28, 8, -2.0);
  ClassSampleRefs new_data = {{1, &x1}, {2, &x2}};
  const TrainConfig cfg = quick_cfg(29, 10);

  RngStream rng_a(30);
  const ModelParams via_update =
      update_representation(p0, new_data, ExemplarMemory{}, cfg, rng_a);

  RngStream rng_b(30);
  ModelParams manual = add_class_heads(p0, 2, rng_b);
  const CombinedTrainingSet d =
      build_combined_set(new_data, ExemplarMemory{}, 1);
  const LossSpec spec{1, 2, nullptr};
  manual = sgd_train(std::move(manual), d, cfg, spec);

  EXPECT_EQ(via_update, manual);
}

TEST(UpdateRepresentation, ZeroEpochsOnlyGrowsHeads) {
  const ModelParams p0 = small_net(31, 0);
  const std::vector<Vec> x1 = class_samples(32, 5, 0.0);
  ClassSampleRefs new_data = {{1, &x1}};
  TrainConfig cfg = quick_cfg(33, 0);
  RngStream rng(34);
  const ModelParams out =
      update_representation(p0, new_data, ExemplarMemory{}, cfg, rng);
  EXPECT_EQ(out.num_classes(), 1);
  EXPECT_EQ(out.layers, p0.layers);
}

// Distillation keeps old-class outputs near their recorded targets better
// than an otherwise identical run without the distillation term.
TEST(UpdateRepresentation, DistillationTracksRecordedTargets) {
  ModelParams p = small_net(35, 0);
  // Mildly separated classes and a short first phase keep the recorded
  // targets away from saturated 0/1 values.
  const std::vector<Vec> x1 = class_samples(36, 12, 1.0);
  const std::vector<Vec> x2 = class_samples(37, 12, -1.0);
  ClassSampleRefs batch1 = {{1, &x1}, {2, &x2}};
  const TrainConfig cfg = quick_cfg(38, 25);
  TrainConfig warmup = quick_cfg(38, 4);
  RngStream rng(39);
  p = update_representation(std::move(p), batch1, ExemplarMemory{}, warmup,
                            rng);

  ExemplarMemory mem(100);
  for (int y = 1; y <= 2; ++y) {
    ExemplarList list;
    list.class_id = y;
    const std::vector<Vec>& src = (y == 1) ? x1 : x2;
    list.items.assign(src.begin(), src.begin() + 4);
    mem.set_class(std::move(list));
  }
  const std::vector<Vec> x3 = class_samples(40, 12, 0.0);
  ClassSampleRefs batch2 = {{3, &x3}};

  const CombinedTrainingSet d = build_combined_set(batch2, mem, 3);
  const DistillationTargets q = record_targets(p, d, 3);

  RngStream rng_with(41), rng_without(41);
  const ModelParams with_distill =
      update_representation(p, batch2, mem, cfg, rng_with);
  const ModelParams without_distill = detail::run_update(
      p, batch2, mem, cfg, rng_without, /*use_distillation=*/false, {});

  auto mean_abs_gap = [&](const ModelParams& model) {
    double gap = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!d.entries[i].from_exemplar) continue;
      const Vec g = network_outputs(model, d.entries[i].input);
      for (int y = 1; y <= 2; ++y) {
        gap += std::abs(g[static_cast<std::size_t>(y - 1)] - q.at(i, y));
        ++count;
      }
    }
    return gap / static_cast<double>(count);
  };
  EXPECT_LT(mean_abs_gap(with_distill), mean_abs_gap(without_distill));
}
