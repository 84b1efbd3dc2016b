#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "incrlearn/errors.hpp"
#include "incrlearn/math.hpp"
#include "incrlearn/rng.hpp"

namespace incrlearn {

/// One class worth of data. Class ids inside a Dataset are the contiguous
/// range 1..num_classes(); the label the data arrived with is kept in
/// external_label.
struct ClassData {
  long external_label = 0;
  std::vector<Vec> train;
  std::vector<Vec> test;
};

struct Dataset {
  std::size_t input_dim = 0;
  std::vector<ClassData> classes;  // class id y = index + 1

  int num_classes() const { return static_cast<int>(classes.size()); }

  const ClassData& class_data(int y) const {
    return classes.at(static_cast<std::size_t>(y - 1));
  }

  std::size_t total_train() const {
    std::size_t n = 0;
    for (const ClassData& c : classes) n += c.train.size();
    return n;
  }
};

struct SyntheticSpec {
  int num_classes = 10;
  std::size_t dim = 64;
  int modes_per_class = 2;
  double separation = 3.0;
  double noise = 1.0;
  int train_per_class = 200;
  int test_per_class = 100;
  std::uint64_t seed = 1;
};

/// Gaussian-mixture classes, deterministic from the seed.
///
/// Class y gets modes_per_class centers with i.i.d. N(0, separation^2)
/// coordinates; sample i of the class is assigned to mode i % modes and
/// drawn as center + noise * N(0, I). Train samples are drawn before test
/// samples, classes in id order, each class from its own derived stream.
inline Dataset gen_synthetic(const SyntheticSpec& spec) {
  if (spec.num_classes < 1 || spec.dim < 1 || spec.modes_per_class < 1 ||
      spec.train_per_class < 1 || spec.test_per_class < 1) {
    throw ConfigError("gen_synthetic: all counts must be >= 1");
  }
  if (!(spec.separation > 0.0)) {
    throw ConfigError("gen_synthetic: separation must be > 0");
  }
  if (spec.noise < 0.0) {
    throw ConfigError("gen_synthetic: noise must be >= 0");
  }
  Dataset ds;
  ds.input_dim = spec.dim;
  RngStream master(spec.seed);
  for (int y = 1; y <= spec.num_classes; ++y) {
    RngStream rng = master.split(static_cast<std::uint64_t>(y));
    std::vector<Vec> centers;
    centers.reserve(static_cast<std::size_t>(spec.modes_per_class));
    for (int m = 0; m < spec.modes_per_class; ++m) {
      Vec c(spec.dim);
      for (double& x : c) x = spec.separation * rng.next_gaussian();
      centers.push_back(std::move(c));
    }
    auto draw = [&](int count, std::vector<Vec>& out) {
      for (int i = 0; i < count; ++i) {
        const Vec& c = centers[static_cast<std::size_t>(
            i % spec.modes_per_class)];
        Vec x(spec.dim);
        for (std::size_t j = 0; j < spec.dim; ++j) {
          x[j] = c[j] + spec.noise * rng.next_gaussian();
        }
        out.push_back(std::move(x));
      }
    };
    ClassData cd;
    cd.external_label = y;
    draw(spec.train_per_class, cd.train);
    draw(spec.test_per_class, cd.test);
    ds.classes.push_back(std::move(cd));
  }
  return ds;
}

/// The default desk-scale benchmark task: 10 classes, 64 dims, 2 modes
/// per class, 200 train / 100 test per class.
inline Dataset make_toy_benchmark(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.seed = seed;
  return gen_synthetic(spec);
}

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line,
                                             char delimiter) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == delimiter) {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  if (pos != s.size()) return std::nullopt;
  return v;
}

inline std::optional<long> parse_long(const std::string& s) {
  const std::optional<double> v = parse_double(s);
  if (!v) return std::nullopt;
  const long l = static_cast<long>(*v);
  if (static_cast<double>(l) != *v) return std::nullopt;
  return l;
}

struct RawRows {
  std::vector<std::pair<long, Vec>> rows;  // (external label, sample)
};

/// Reads delimited rows "label <delim> x1 .. xd", optionally with a split
/// column right after the label. Leading rows whose first field is not
/// numeric are treated as headers and skipped.
inline void read_rows(const std::string& path, char delimiter,
                      bool has_split_column, RawRows& train, RawRows& test) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path);
  std::string line;
  std::size_t line_no = 0;
  bool saw_data = false;
  std::size_t expected_fields = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> fields = split_fields(line, delimiter);
    const std::size_t min_fields = has_split_column ? 3u : 2u;
    if (!saw_data) {
      // Header allowed only as the very first non-empty line.
      if (!parse_long(fields.front())) {
        continue;
      }
    }
    if (fields.size() < min_fields) {
      std::ostringstream msg;
      msg << path << ":" << line_no << ": expected at least " << min_fields
          << " fields, got " << fields.size();
      throw ParseError(line_no, msg.str());
    }
    const std::optional<long> label = parse_long(fields[0]);
    if (!label) {
      std::ostringstream msg;
      msg << path << ":" << line_no << ": bad label '" << fields[0] << "'";
      throw ParseError(line_no, msg.str());
    }
    bool is_test = false;
    std::size_t feature_start = 1;
    if (has_split_column) {
      const std::string& s = fields[1];
      if (s == "train" || s == "0") {
        is_test = false;
      } else if (s == "test" || s == "1") {
        is_test = true;
      } else {
        std::ostringstream msg;
        msg << path << ":" << line_no << ": bad split value '" << s
            << "' (want train/test or 0/1)";
        throw ParseError(line_no, msg.str());
      }
      feature_start = 2;
    }
    Vec x;
    x.reserve(fields.size() - feature_start);
    for (std::size_t i = feature_start; i < fields.size(); ++i) {
      const std::optional<double> v = parse_double(fields[i]);
      if (!v) {
        std::ostringstream msg;
        msg << path << ":" << line_no << ": bad numeric field '" << fields[i]
            << "'";
        throw ParseError(line_no, msg.str());
      }
      x.push_back(*v);
    }
    if (!saw_data) {
      expected_fields = fields.size();
      saw_data = true;
    } else if (fields.size() != expected_fields) {
      std::ostringstream msg;
      msg << path << ":" << line_no << ": row has " << fields.size()
          << " fields, earlier rows had " << expected_fields;
      throw ShapeError(msg.str());
    }
    (is_test ? test : train).rows.emplace_back(*label, std::move(x));
  }
}

inline Dataset assemble(const RawRows& train, const RawRows& test) {
  if (train.rows.empty()) {
    throw EmptyDatasetError("dataset has no training rows");
  }
  std::map<long, ClassData> by_label;
  for (const auto& [label, x] : train.rows) by_label[label].train.push_back(x);
  for (const auto& [label, x] : test.rows) by_label[label].test.push_back(x);
  Dataset ds;
  ds.input_dim = train.rows.front().second.size();
  for (auto& [label, cd] : by_label) {
    if (cd.train.empty()) {
      std::ostringstream msg;
      msg << "class with label " << label << " has test rows but no train rows";
      throw EmptyDatasetError(msg.str());
    }
    cd.external_label = label;
    ds.classes.push_back(std::move(cd));
  }
  return ds;
}

}  // namespace detail

/// Single-file form: "label,split,x1,...,xd" per row, split one of
/// train/test/0/1. Labels are remapped to class ids 1..C in ascending
/// label order.
inline Dataset load_delimited(const std::string& path, char delimiter = ',') {
  detail::RawRows train, test;
  detail::read_rows(path, delimiter, /*has_split_column=*/true, train, test);
  return detail::assemble(train, test);
}

/// Two-file form: "label,x1,...,xd" per row in each file.
inline Dataset load_delimited(const std::string& train_path,
                              const std::string& test_path,
                              char delimiter = ',') {
  detail::RawRows train, test;
  detail::read_rows(train_path, delimiter, /*has_split_column=*/false, train,
                    test);
  detail::RawRows dummy;
  detail::read_rows(test_path, delimiter, /*has_split_column=*/false, test,
                    dummy);
  (void)dummy;
  return detail::assemble(train, test);
}

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Writes the single-file split-column form read by load_delimited(path).
/// Floats are printed with round-trip precision.
inline void write_delimited(const Dataset& ds, const std::string& path,
                            char delimiter = ',') {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  auto write_rows = [&](const ClassData& cd, const std::vector<Vec>& rows,
                        const char* split) {
    for (const Vec& x : rows) {
      out << cd.external_label << delimiter << split;
      for (double v : x) out << delimiter << detail::format_double(v);
      out << '\n';
    }
  };
  for (const ClassData& cd : ds.classes) {
    write_rows(cd, cd.train, "train");
    write_rows(cd, cd.test, "test");
  }
}

}  // namespace incrlearn
