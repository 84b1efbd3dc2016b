#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "incrlearn/benchmark.hpp"
#include "incrlearn/errors.hpp"

namespace incrlearn {

namespace detail {

/// Round-trip decimal form, identical on every run for identical values.
inline std::string csv_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  return out;
}

}  // namespace detail

/// Per-step accuracies, one row per (repeat, step). Deterministic: repeated
/// runs with the same configuration produce byte-identical files. Timing
/// goes to the separate timings file.
inline void write_results_csv(const std::string& path,
                              const std::string& strategy,
                              const std::vector<RunReport>& reports) {
  std::ofstream out = detail::open_out(path);
  out << "strategy,repeat,seed,step,classes_seen,accuracy\n";
  for (std::size_t r = 0; r < reports.size(); ++r) {
    if (reports[r].failed()) continue;
    for (const StepResult& s : reports[r].steps) {
      out << strategy << ',' << r << ',' << reports[r].run_seed << ','
          << s.step << ',' << s.classes_seen << ','
          << detail::csv_double(s.accuracy) << '\n';
    }
  }
}

/// Wall-clock time per training step. Not expected to be reproducible.
inline void write_timings_csv(const std::string& path,
                              const std::string& strategy,
                              const std::vector<RunReport>& reports) {
  std::ofstream out = detail::open_out(path);
  out << "strategy,repeat,seed,step,wall_ms\n";
  for (std::size_t r = 0; r < reports.size(); ++r) {
    if (reports[r].failed()) continue;
    for (const StepResult& s : reports[r].steps) {
      char ms[32];
      std::snprintf(ms, sizeof(ms), "%.3f", s.wall_ms);
      out << strategy << ',' << r << ',' << reports[r].run_seed << ','
          << s.step << ',' << ms << '\n';
    }
  }
}

/// Mean/std accuracy per step plus the per-repeat average incremental
/// accuracy rows.
inline void write_summary_csv(const std::string& path,
                              const std::string& strategy,
                              const std::vector<RunReport>& reports) {
  std::ofstream out = detail::open_out(path);
  out << "strategy,step,classes_seen,mean_accuracy,std_accuracy,repeats\n";
  for (const StepAggregate& a : aggregate_steps(reports)) {
    out << strategy << ',' << a.step << ',' << a.classes_seen << ','
        << detail::csv_double(a.mean_accuracy) << ','
        << detail::csv_double(a.std_accuracy) << ',' << a.repeats << '\n';
  }
  out << "\nstrategy,repeat,seed,average_incremental_accuracy\n";
  for (std::size_t r = 0; r < reports.size(); ++r) {
    if (reports[r].failed()) continue;
    out << strategy << ',' << r << ',' << reports[r].run_seed << ','
        << detail::csv_double(reports[r].average_incremental_accuracy)
        << '\n';
  }
}

/// t x t counts, one row per true class.
inline void write_confusion_csv(const std::string& path,
                                const ConfusionMatrix& m) {
  std::ofstream out = detail::open_out(path);
  for (int y = 1; y <= m.num_classes; ++y) {
    for (int p = 1; p <= m.num_classes; ++p) {
      if (p > 1) out << ',';
      out << m.at(y, p);
    }
    out << '\n';
  }
}

/// Errors of failed repeats, one row each; no file content when all passed.
inline void write_failures_csv(const std::string& path,
                               const std::string& strategy,
                               const std::vector<RunReport>& reports) {
  std::ofstream out = detail::open_out(path);
  out << "strategy,repeat,seed,error\n";
  for (std::size_t r = 0; r < reports.size(); ++r) {
    if (!reports[r].failed()) continue;
    std::string sanitized = reports[r].error;
    for (char& c : sanitized) {
      if (c == ',' || c == '\n') c = ';';
    }
    out << strategy << ',' << r << ',' << reports[r].run_seed << ','
        << sanitized << '\n';
  }
}

/// Sweep rows: average incremental accuracy per (strategy, K, repeat).
inline void write_sweep_csv(const std::string& path,
                            const std::vector<SweepPoint>& points) {
  std::ofstream out = detail::open_out(path);
  out << "strategy,memory_k,repeat,seed,average_incremental_accuracy\n";
  for (const SweepPoint& p : points) {
    for (std::size_t r = 0; r < p.reports.size(); ++r) {
      if (p.reports[r].failed()) continue;
      out << p.strategy << ',' << p.memory_budget << ',' << r << ','
          << p.reports[r].run_seed << ','
          << detail::csv_double(p.reports[r].average_incremental_accuracy)
          << '\n';
    }
  }
}

}  // namespace incrlearn
