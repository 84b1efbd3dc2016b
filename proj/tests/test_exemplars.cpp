#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "incrlearn/exemplars.hpp"
#include "incrlearn/rng.hpp"

using namespace incrlearn;

namespace {

// Raw-normalize feature map; enough structure for herding behavior.
auto raw_features() {
  return [](const Vec& x) { return l2_normalize(x); };
}

std::vector<Vec> random_class(std::uint64_t seed, int n, std::size_t dim,
                              double center_scale = 2.0) {
  RngStream rng(seed);
  Vec center(dim);
  for (double& c : center) c = center_scale * rng.next_gaussian();
  std::vector<Vec> out;
  for (int i = 0; i < n; ++i) {
    Vec x(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      x[j] = center[j] + rng.next_gaussian();
    }
    out.push_back(std::move(x));
  }
  return out;
}

// Independent greedy oracle: re-evaluates the argmin from scratch at every
// step, recomputing the candidate prefix mean two-pass instead of keeping a
// running sum.
template <class ExtractFn>
std::vector<std::size_t> brute_force_herding(const std::vector<Vec>& samples,
                                             int m, ExtractFn&& extract) {
  std::vector<FeatureVector> phi;
  for (const Vec& x : samples) phi.push_back(extract(x));
  const FeatureVector mu = renormalized_mean(phi);
  std::vector<std::size_t> chosen;
  for (int k = 1; k <= m; ++k) {
    std::size_t best = samples.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) {
        continue;
      }
      Vec sum(mu.dim(), 0.0);
      for (std::size_t c : chosen) {
        for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += phi[c][j];
      }
      for (std::size_t j = 0; j < sum.size(); ++j) {
        sum[j] = (sum[j] + phi[i][j]) / k;
      }
      const double d = euclidean_distance(mu, l2_normalize(sum));
      if (d < best_dist) {
        best_dist = d;
        best = i;
      }
    }
    chosen.push_back(best);
  }
  return chosen;
}

}  // namespace

TEST(PerClassBudget, PaperScaleExample) {
  EXPECT_EQ(per_class_budget(2000, 10), 200);
}

TEST(PerClassBudget, FloorsAndExhausts) {
  EXPECT_EQ(per_class_budget(7, 3), 2);
  EXPECT_THROW(per_class_budget(5, 10), BudgetExhaustedError);
  EXPECT_THROW(per_class_budget(0, 1), ConfigError);
  EXPECT_THROW(per_class_budget(5, 0), ConfigError);
}

TEST(ConstructExemplarSet, SingleExemplarIsNearestToMean) {
  const std::vector<Vec> samples = random_class(1, 12, 6);
  const auto extract = raw_features();
  const ExemplarList list = construct_exemplar_set(samples, 1, 1, extract);
  ASSERT_EQ(list.size(), 1u);

  std::vector<FeatureVector> phi;
  for (const Vec& x : samples) phi.push_back(extract(x));
  const FeatureVector mu = renormalized_mean(phi);
  std::size_t expected = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double d = euclidean_distance(mu, phi[i]);
    if (d < best) {
      best = d;
      expected = i;
    }
  }
  EXPECT_EQ(list.items[0], samples[expected]);
}

TEST(ConstructExemplarSet, FullSizeIsAPermutation) {
  const std::vector<Vec> samples = random_class(2, 9, 5);
  const ExemplarList list =
      construct_exemplar_set(samples, 1, 9, raw_features());
  ASSERT_EQ(list.size(), samples.size());
  std::vector<bool> used(samples.size(), false);
  for (const Vec& item : list.items) {
    bool matched = false;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (!used[i] && samples[i] == item) {
        used[i] = true;
        matched = true;
        break;
      }
    }
    EXPECT_TRUE(matched);
  }
}

TEST(ConstructExemplarSet, MatchesBruteForceOracle) {
  for (std::uint64_t seed = 10; seed < 16; ++seed) {
    const std::vector<Vec> samples = random_class(seed, 6, 4);
    const auto extract = raw_features();
    const ExemplarList list = construct_exemplar_set(samples, 1, 3, extract);
    const std::vector<std::size_t> oracle =
        brute_force_herding(samples, 3, extract);
    ASSERT_EQ(list.size(), oracle.size());
    for (std::size_t k = 0; k < oracle.size(); ++k) {
      EXPECT_EQ(list.items[k], samples[oracle[k]]) << "seed " << seed;
    }
  }
}

TEST(ConstructExemplarSet, TooManyRequested) {
  const std::vector<Vec> samples = random_class(3, 4, 4);
  EXPECT_THROW(construct_exemplar_set(samples, 1, 5, raw_features()),
               InsufficientSamplesError);
  EXPECT_THROW(construct_exemplar_set(samples, 1, 0, raw_features()),
               ConfigError);
}

TEST(ConstructExemplarSet, WithReplacementCanRepeat) {
  // One sample sits exactly on the class mean direction; the literal
  // argmin over all of X keeps choosing it.
  const std::vector<Vec> samples = {
      Vec{1.0, 0.0}, Vec{0.8, 0.6}, Vec{0.8, -0.6}};
  const ExemplarList with = construct_exemplar_set(
      samples, 1, 3, raw_features(), /*with_replacement=*/true);
  EXPECT_EQ(with.items[0], samples[0]);
  EXPECT_EQ(with.items[1], samples[0]);
  EXPECT_EQ(with.items[2], samples[0]);

  const ExemplarList without =
      construct_exemplar_set(samples, 1, 3, raw_features());
  EXPECT_EQ(without.items[0], samples[0]);
  EXPECT_NE(without.items[1], without.items[2]);
}

TEST(ReduceExemplarSet, IdentityAndEmpty) {
  const std::vector<Vec> samples = random_class(4, 5, 4);
  const ExemplarList list =
      construct_exemplar_set(samples, 7, 5, raw_features());
  EXPECT_EQ(reduce_exemplar_set(list, 5), list);
  const ExemplarList empty = reduce_exemplar_set(list, 0);
  EXPECT_EQ(empty.size(), 0u);
  EXPECT_EQ(empty.class_id, 7);
  EXPECT_THROW(reduce_exemplar_set(list, 6), InvalidReductionError);
}

// Prefix consistency: reducing a larger construction equals constructing
// the smaller set directly, exactly.
TEST(ReduceExemplarSet, PrefixConsistentWithConstruction) {
  for (std::uint64_t seed = 20; seed < 24; ++seed) {
    const std::vector<Vec> samples = random_class(seed, 10, 6);
    const auto extract = raw_features();
    const ExemplarList big = construct_exemplar_set(samples, 1, 5, extract);
    for (int m = 1; m <= 5; ++m) {
      const ExemplarList direct = construct_exemplar_set(samples, 1, m, extract);
      EXPECT_EQ(reduce_exemplar_set(big, m).items, direct.items);
    }
  }
}

TEST(ExemplarMemory, BudgetEnforced) {
  ExemplarMemory mem(4);
  ExemplarList a;
  a.class_id = 1;
  a.items = {Vec{1.0}, Vec{2.0}};
  mem.set_class(a);
  ExemplarList b;
  b.class_id = 2;
  b.items = {Vec{3.0}, Vec{4.0}, Vec{5.0}};
  EXPECT_THROW(mem.set_class(b), BudgetExhaustedError);
  b.items.pop_back();
  mem.set_class(b);
  EXPECT_EQ(mem.total_count(), 4u);
  EXPECT_THROW(mem.list(3), MissingExemplarsError);
}

TEST(RebalanceMemory, UnchangedWhenWithinBudget) {
  ExemplarMemory mem(10);
  for (int y = 1; y <= 2; ++y) {
    ExemplarList list;
    list.class_id = y;
    for (int i = 0; i < 5; ++i) list.items.push_back(Vec{double(y), double(i)});
    mem.set_class(list);
  }
  const ExemplarMemory out = rebalance_memory(mem, 2);
  EXPECT_EQ(out, mem);
}

TEST(RebalanceMemory, CutsToNewBudget) {
  ExemplarMemory mem(10);
  for (int y = 1; y <= 2; ++y) {
    ExemplarList list;
    list.class_id = y;
    for (int i = 0; i < 5; ++i) list.items.push_back(Vec{double(y), double(i)});
    mem.set_class(list);
  }
  const ExemplarMemory out = rebalance_memory(mem, 5);
  EXPECT_EQ(out.list(1).size(), 2u);
  EXPECT_EQ(out.list(2).size(), 2u);
  // Prefixes preserved.
  EXPECT_EQ(out.list(1).items[0], mem.list(1).items[0]);
  EXPECT_EQ(out.list(1).items[1], mem.list(1).items[1]);
}

TEST(RebalanceMemory, TotalStaysWithinBudget) {
  RngStream rng(30);
  ExemplarMemory mem(17);
  int total = 0;
  for (int y = 1; y <= 4; ++y) {
    ExemplarList list;
    list.class_id = y;
    const int n = 3 + static_cast<int>(rng.next_below(2));
    for (int i = 0; i < n; ++i) list.items.push_back(Vec{double(y), double(i)});
    total += n;
    mem.set_class(list);
  }
  ASSERT_LE(total, 17);
  for (int t = 4; t <= 17; ++t) {
    const ExemplarMemory out = rebalance_memory(mem, t);
    std::size_t recount = 0;
    for (int y : out.classes()) recount += out.list(y).size();
    EXPECT_EQ(recount, out.total_count());
    EXPECT_LE(recount, 17u);
  }
}

// Herding prefixes approximate the class mean at least as well as random
// subsets of the same size, on average.
TEST(Herding, BeatsRandomSubsets) {
  const auto extract = raw_features();
  const std::vector<int> ks = {1, 5, 10, 20};
  std::vector<double> herd_err(ks.size(), 0.0);
  std::vector<double> rand_err(ks.size(), 0.0);
  const int num_seeds = 8;
  for (std::uint64_t seed = 0; seed < num_seeds; ++seed) {
    const std::vector<Vec> samples = random_class(100 + seed, 60, 16);
    std::vector<FeatureVector> phi;
    for (const Vec& x : samples) phi.push_back(extract(x));
    const FeatureVector mu = renormalized_mean(phi);

    const ExemplarList list = construct_exemplar_set(samples, 1, 20, extract);
    std::vector<FeatureVector> chosen;
    for (const Vec& p : list.items) chosen.push_back(extract(p));

    RngStream rng(500 + seed);
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      const int k = ks[ki];
      const std::vector<FeatureVector> prefix(chosen.begin(),
                                              chosen.begin() + k);
      herd_err[ki] += euclidean_distance(mu, renormalized_mean(prefix));
      double avg = 0.0;
      const int draws = 30;
      for (int d = 0; d < draws; ++d) {
        std::vector<std::size_t> idx(samples.size());
        std::iota(idx.begin(), idx.end(), 0);
        shuffle(idx, rng);
        std::vector<FeatureVector> subset;
        for (int j = 0; j < k; ++j) subset.push_back(phi[idx[j]]);
        avg += euclidean_distance(mu, renormalized_mean(subset));
      }
      rand_err[ki] += avg / draws;
    }
  }
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    EXPECT_LE(herd_err[ki] / num_seeds, rand_err[ki] / num_seeds)
        << "k = " << ks[ki];
  }
}
