#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "incrlearn/dataset.hpp"
#include "incrlearn/errors.hpp"
#include "incrlearn/rng.hpp"
#include "incrlearn/strategy.hpp"
#include "incrlearn/trainer.hpp"

namespace incrlearn {

/// Published full-scale reference results (average incremental accuracy,
/// percent) for the 100-class image benchmark trained in batches of 10.
/// The desk-scale tasks in this repo do not attempt to reproduce these
/// numbers; they document the method ordering the suite checks for.
namespace reference {
inline constexpr double kMeanOfExemplars100ClassBatch10 = 64.1;
inline constexpr double kLwfMc100ClassBatch10 = 44.4;
}  // namespace reference

/// A fixed random class order, consumed in consecutive slices of
/// batch_size (final partial batch allowed).
struct ClassSchedule {
  std::vector<int> order;  // permutation of dataset class ids 1..C
  int batch_size = 1;
  std::uint64_t seed = 0;

  int num_batches() const {
    return static_cast<int>((order.size() +
                             static_cast<std::size_t>(batch_size) - 1) /
                            static_cast<std::size_t>(batch_size));
  }

  std::vector<int> batch(int k) const {
    const std::size_t begin =
        static_cast<std::size_t>(k) * static_cast<std::size_t>(batch_size);
    const std::size_t end =
        std::min(begin + static_cast<std::size_t>(batch_size), order.size());
    return std::vector<int>(order.begin() + static_cast<std::ptrdiff_t>(begin),
                            order.begin() + static_cast<std::ptrdiff_t>(end));
  }
};

/// Deterministic seeded permutation of 1..num_classes.
inline ClassSchedule make_schedule(int num_classes, int batch_size,
                                   std::uint64_t seed) {
  if (num_classes < 1) {
    throw ConfigError("make_schedule: num_classes must be >= 1");
  }
  if (batch_size < 1 || batch_size > num_classes) {
    throw ConfigError("make_schedule: batch_size outside 1..num_classes");
  }
  ClassSchedule s;
  s.batch_size = batch_size;
  s.seed = seed;
  s.order.resize(static_cast<std::size_t>(num_classes));
  std::iota(s.order.begin(), s.order.end(), 1);
  RngStream rng(seed);
  shuffle(s.order, rng);
  return s;
}

/// counts[true][predicted] over internal class ids 1..t. Internal ids are
/// arrival order, so "late batch" structure is visible directly in the
/// columns. The log(1+x) transform happens only at rendering.
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<long> counts;  // row-major t x t

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int t)
      : num_classes(t),
        counts(static_cast<std::size_t>(t) * static_cast<std::size_t>(t), 0) {}

  long& at(int true_class, int predicted) {
    return counts[static_cast<std::size_t>(true_class - 1) *
                      static_cast<std::size_t>(num_classes) +
                  static_cast<std::size_t>(predicted - 1)];
  }
  long at(int true_class, int predicted) const {
    return counts[static_cast<std::size_t>(true_class - 1) *
                      static_cast<std::size_t>(num_classes) +
                  static_cast<std::size_t>(predicted - 1)];
  }

  long row_sum(int true_class) const {
    long s = 0;
    for (int p = 1; p <= num_classes; ++p) s += at(true_class, p);
    return s;
  }

  long total() const {
    long s = 0;
    for (long c : counts) s += c;
    return s;
  }

  /// Fraction of all predictions landing in classes [first, last].
  double prediction_mass(int first, int last) const {
    long in_range = 0;
    for (int y = 1; y <= num_classes; ++y) {
      for (int p = first; p <= last; ++p) in_range += at(y, p);
    }
    const long all = total();
    return all == 0 ? 0.0 : static_cast<double>(in_range) /
                                static_cast<double>(all);
  }
};

struct StepResult {
  int step = 0;
  int classes_seen = 0;
  double accuracy = 0.0;
  double wall_ms = 0.0;
};

/// Everything one repeat of the protocol produced.
struct RunReport {
  std::uint64_t run_seed = 0;
  std::vector<int> class_order;  // dataset class ids in arrival order
  std::vector<StepResult> steps;
  double average_incremental_accuracy = 0.0;
  ConfusionMatrix confusion;  // final step
  std::string error;          // nonempty if the repeat failed

  bool failed() const { return !error.empty(); }
};

struct BenchmarkConfig {
  NetSpec net;  // net.input_dim == 0 means "take it from the dataset"
  TrainConfig train;
  int memory_budget = 100;
  int repeats = 1;
  int max_threads = 1;
};

inline double average_incremental_accuracy(const std::vector<double>& curve) {
  if (curve.empty()) {
    throw EmptyInputError("average_incremental_accuracy: empty curve");
  }
  return std::accumulate(curve.begin(), curve.end(), 0.0) /
         static_cast<double>(curve.size());
}

/// Multi-class accuracy of `predict` over (sample, true id) pairs.
template <class PredictFn>
double multiclass_accuracy(PredictFn&& predict,
                           const std::vector<std::pair<const Vec*, int>>& test) {
  if (test.empty()) throw EmptyInputError("multiclass_accuracy: no test data");
  long correct = 0;
  for (const auto& [x, label] : test) {
    if (predict(*x) == label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

template <class PredictFn>
ConfusionMatrix confusion_matrix(PredictFn&& predict,
                                 const std::vector<std::pair<const Vec*, int>>& test,
                                 int num_classes) {
  ConfusionMatrix m(num_classes);
  for (const auto& [x, label] : test) {
    ++m.at(label, predict(*x));
  }
  return m;
}

namespace detail {

/// Runs fn(0..n-1) across up to `threads` workers. Results must be written
/// to caller-preallocated slots so aggregation stays deterministic.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers = std::max<std::size_t>(
      1, std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)),
                               n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        fn(i);
      }
    });
  }
  for (std::thread& t : pool) t.join();
}

/// (sample, internal id) pairs for the test data of the classes observed
/// so far, in schedule order.
inline std::vector<std::pair<const Vec*, int>> observed_test_set(
    const Dataset& ds, const std::vector<int>& order, int observed,
    const ClassRegistry& registry) {
  std::vector<std::pair<const Vec*, int>> test;
  for (int i = 0; i < observed; ++i) {
    const ClassData& cd = ds.class_data(order[static_cast<std::size_t>(i)]);
    const int internal = registry.internal_id(cd.external_label);
    for (const Vec& x : cd.test) test.emplace_back(&x, internal);
  }
  if (test.empty()) {
    throw MissingDataError("observed classes have no test samples");
  }
  return test;
}

inline RunReport run_one_repeat(const StrategySpec& strategy,
                                const Dataset& ds,
                                const ClassSchedule& schedule,
                                const BenchmarkConfig& cfg,
                                std::uint64_t run_seed) {
  RunReport report;
  report.run_seed = run_seed;
  report.class_order = schedule.order;

  NetSpec net = cfg.net;
  if (net.input_dim == 0) net.input_dim = ds.input_dim;
  TrainConfig train = cfg.train;
  train.shuffle_seed = derive_seed(run_seed, 2);

  LearnerState state =
      make_initial_state(net, cfg.memory_budget, derive_seed(run_seed, 1));

  try {
    std::vector<double> curve;
    for (int k = 0; k < schedule.num_batches(); ++k) {
      const std::vector<int> batch_classes = schedule.batch(k);
      ClassBatch batch;
      for (int c : batch_classes) {
        const ClassData& cd = ds.class_data(c);
        batch.emplace_back(cd.external_label, &cd.train);
      }
      const auto t0 = std::chrono::steady_clock::now();
      state = run_strategy(strategy, std::move(state), batch, train);
      const auto t1 = std::chrono::steady_clock::now();

      const int observed = static_cast<int>(
          std::min<std::size_t>(static_cast<std::size_t>(k + 1) *
                                    static_cast<std::size_t>(schedule.batch_size),
                                schedule.order.size()));
      const auto test =
          observed_test_set(ds, schedule.order, observed, state.registry);

      ClassSampleRefs full_train;
      if (strategy.requires_full_training_data()) {
        for (int i = 0; i < observed; ++i) {
          const ClassData& cd =
              ds.class_data(schedule.order[static_cast<std::size_t>(i)]);
          full_train[state.registry.internal_id(cd.external_label)] =
              &cd.train;
        }
      }
      const Predictor predictor(strategy, state,
                                strategy.requires_full_training_data()
                                    ? &full_train
                                    : nullptr);
      auto predict = [&](const Vec& x) { return predictor.predict(x); };

      StepResult step;
      step.step = k;
      step.classes_seen = state.num_classes();
      step.accuracy = multiclass_accuracy(predict, test);
      step.wall_ms =
          std::chrono::duration<double, std::milli>(t1 - t0).count();
      report.steps.push_back(step);
      curve.push_back(step.accuracy);

      if (k + 1 == schedule.num_batches()) {
        report.confusion =
            confusion_matrix(predict, test, state.num_classes());
      }
    }
    report.average_incremental_accuracy =
        average_incremental_accuracy(curve);
  } catch (const Error& e) {
    report.error = e.what();
  }
  return report;
}

}  // namespace detail

/// The evaluation protocol: train in class batches, after each batch score
/// multi-class accuracy over the classes observed so far. Repeat
/// `cfg.repeats` times with schedule and learner seeds derived from
/// schedule.seed. A repeat that throws has its error recorded; the other
/// repeats still run. Evaluation is read-only on the learner state.
inline std::vector<RunReport> evaluate_incremental(
    const StrategySpec& strategy, const Dataset& ds,
    const ClassSchedule& schedule, const BenchmarkConfig& cfg) {
  if (cfg.repeats < 1) {
    throw ConfigError("evaluate_incremental: repeats must be >= 1");
  }
  std::vector<RunReport> reports(static_cast<std::size_t>(cfg.repeats));
  detail::parallel_for(
      reports.size(), cfg.max_threads, [&](std::size_t r) {
        const std::uint64_t run_seed =
            derive_seed(schedule.seed, static_cast<std::uint64_t>(r));
        const ClassSchedule repeat_schedule =
            make_schedule(static_cast<int>(schedule.order.size()),
                          schedule.batch_size, derive_seed(run_seed, 0));
        reports[r] = detail::run_one_repeat(strategy, ds, repeat_schedule,
                                            cfg, run_seed);
      });
  return reports;
}

/// Mean and sample standard deviation of per-step accuracy over the
/// successful repeats.
struct StepAggregate {
  int step = 0;
  int classes_seen = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  int repeats = 0;
};

inline std::vector<StepAggregate> aggregate_steps(
    const std::vector<RunReport>& reports) {
  std::vector<StepAggregate> out;
  std::size_t max_steps = 0;
  for (const RunReport& r : reports) {
    if (!r.failed()) max_steps = std::max(max_steps, r.steps.size());
  }
  for (std::size_t k = 0; k < max_steps; ++k) {
    StepAggregate agg;
    agg.step = static_cast<int>(k);
    std::vector<double> acc;
    for (const RunReport& r : reports) {
      if (r.failed() || k >= r.steps.size()) continue;
      acc.push_back(r.steps[k].accuracy);
      agg.classes_seen = r.steps[k].classes_seen;
    }
    agg.repeats = static_cast<int>(acc.size());
    if (!acc.empty()) {
      agg.mean_accuracy = average_incremental_accuracy(acc);
      double var = 0.0;
      for (double a : acc) {
        var += (a - agg.mean_accuracy) * (a - agg.mean_accuracy);
      }
      agg.std_accuracy =
          acc.size() > 1 ? std::sqrt(var / static_cast<double>(acc.size() - 1))
                         : 0.0;
    }
    out.push_back(agg);
  }
  return out;
}

/// One (strategy, K) cell of a memory sweep.
struct SweepPoint {
  std::string strategy;
  int memory_budget = 0;
  std::vector<RunReport> reports;
};

/// Runs every strategy at every budget. Budgets must be positive and
/// strictly ascending.
inline std::vector<SweepPoint> memory_sweep(
    const std::vector<StrategySpec>& strategies, const Dataset& ds,
    const ClassSchedule& schedule, const std::vector<int>& budgets,
    const BenchmarkConfig& cfg) {
  if (budgets.empty()) throw ConfigError("memory_sweep: no budgets");
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (budgets[i] < 1 || (i > 0 && budgets[i] <= budgets[i - 1])) {
      throw ConfigError("memory_sweep: budgets must be positive ascending");
    }
  }
  std::vector<SweepPoint> out;
  for (const StrategySpec& strategy : strategies) {
    for (int k : budgets) {
      BenchmarkConfig point_cfg = cfg;
      point_cfg.memory_budget = k;
      SweepPoint point;
      point.strategy = strategy.name;
      point.memory_budget = k;
      point.reports = evaluate_incremental(strategy, ds, schedule, point_cfg);
      out.push_back(std::move(point));
    }
  }
  return out;
}

}  // namespace incrlearn
