#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "recgraph/types.hpp"

namespace recgraph {

/// Formats a double with 17 significant digits: text round-trips losslessly.
inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  if (s == "inf" || s == "infinity") return kInfinity;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw ConfigError(where + ": cannot parse number '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size())
    throw ConfigError(where + ": cannot parse integer '" + s + "'");
  return v;
}

inline std::vector<double> parse_double_list(const std::string& raw, const std::string& where) {
  std::vector<double> out;
  for (const std::string& tok : split(raw, ','))
    if (!trim(tok).empty()) out.push_back(parse_double(tok, where));
  if (out.empty()) throw ConfigError(where + ": empty list");
  return out;
}

// ---------------------------------------------------------------------------
// Matrix text files: space-delimited decimal, one row per line.
// ---------------------------------------------------------------------------

inline void save_matrix(std::ostream& os, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ' ';
      os << format_g17(m(i, j));
    }
    os << '\n';
  }
}

inline void save_matrix(const std::string& path, const Matrix& m) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open '" + path + "' for writing");
  save_matrix(os, m);
}

inline Matrix load_matrix(std::istream& is, const std::string& name = "<stream>") {
  std::vector<std::vector<double>> rows;
  std::string line;
  Index line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    std::istringstream ls(t);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) row.push_back(parse_double(tok, name + " line " + std::to_string(line_no)));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ConfigError(name + " line " + std::to_string(line_no) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError(name + ": empty matrix");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

inline Matrix load_matrix(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open '" + path + "'");
  return load_matrix(is, path);
}

// ---------------------------------------------------------------------------
// Tabular data: numeric feature cells plus categorical label columns.
// ---------------------------------------------------------------------------

/// Loaded table: features plus label columns mapped to 1..c. Class ids
/// follow sorted token order (numeric when every token parses as an
/// integer, lexicographic otherwise); '?' marks a missing label.
struct Table {
  Matrix features;
  std::vector<LabelColumn> labels;
  std::vector<int> classes;
  std::vector<std::vector<std::string>> class_tokens;  // id-1 -> token, per label column
};

inline Table load_table(const std::string& path, char delimiter,
                        const std::vector<Index>& label_columns) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open '" + path + "'");
  std::vector<std::vector<std::string>> cells;
  std::string line;
  Index line_no = 0;
  std::size_t width = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> row = split(line, delimiter);
    for (std::string& c : row) c = trim(c);
    if (cells.empty()) {
      width = row.size();
    } else if (row.size() != width) {
      throw ConfigError(path + " line " + std::to_string(line_no) + ": expected " +
                        std::to_string(width) + " fields, got " + std::to_string(row.size()));
    }
    cells.push_back(std::move(row));
  }
  if (cells.empty()) throw ConfigError(path + ": no data rows");

  std::vector<bool> is_label(width, false);
  for (Index c : label_columns) {
    if (c < 0 || c >= static_cast<Index>(width))
      throw ConfigError(path + ": label column " + std::to_string(c + 1) + " out of range");
    is_label[static_cast<std::size_t>(c)] = true;
  }

  const Index n = static_cast<Index>(cells.size());
  const Index d = static_cast<Index>(width - label_columns.size());
  Table table;
  table.features.resize(n, d);
  std::vector<std::vector<std::string>> raw_labels(label_columns.size(),
                                                   std::vector<std::string>(cells.size()));
  for (Index i = 0; i < n; ++i) {
    Index fj = 0, lj = 0;
    for (std::size_t j = 0; j < width; ++j) {
      const std::string& cell = cells[static_cast<std::size_t>(i)][j];
      if (is_label[j]) {
        raw_labels[static_cast<std::size_t>(lj++)][static_cast<std::size_t>(i)] = cell;
      } else {
        table.features(i, fj++) = parse_double(
            cell, path + " line " + std::to_string(i + 1) + " column " + std::to_string(j + 1));
      }
    }
  }

  for (auto& column : raw_labels) {
    std::vector<std::string> tokens;
    for (const std::string& cell : column)
      if (cell != "?") tokens.push_back(cell);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    const bool numeric = std::all_of(tokens.begin(), tokens.end(), [](const std::string& t) {
      char* end = nullptr;
      std::strtoll(t.c_str(), &end, 10);
      return !t.empty() && end == t.c_str() + t.size();
    });
    if (numeric)
      std::sort(tokens.begin(), tokens.end(), [](const std::string& a, const std::string& b) {
        return std::strtoll(a.c_str(), nullptr, 10) < std::strtoll(b.c_str(), nullptr, 10);
      });
    std::map<std::string, int> id;
    for (std::size_t t = 0; t < tokens.size(); ++t) id[tokens[t]] = static_cast<int>(t) + 1;
    LabelColumn mapped(column.size(), kMissingLabel);
    for (std::size_t i = 0; i < column.size(); ++i)
      if (column[i] != "?") mapped[i] = id[column[i]];
    table.labels.push_back(std::move(mapped));
    table.classes.push_back(static_cast<int>(tokens.size()));
    table.class_tokens.push_back(std::move(tokens));
  }
  return table;
}

// ---------------------------------------------------------------------------
// View splitting.
// ---------------------------------------------------------------------------

/// Feature-column partition: "halves" (first ceil(d/2) columns, then the
/// rest, original order) or explicit 1-based inclusive ranges.
struct ViewSplit {
  bool halves = true;
  std::vector<std::pair<Index, Index>> ranges;  // 1-based inclusive, one per view

  Index view_count(Index d) const {
    return halves ? 2 : static_cast<Index>(ranges.size());
  }
};

inline std::vector<Matrix> split_views(const Matrix& features, const ViewSplit& spec) {
  const Index d = features.cols();
  if (spec.halves) {
    if (d < 2) throw ConfigError("halves split needs at least two feature columns");
    const Index first = (d + 1) / 2;
    return {features.leftCols(first), features.rightCols(d - first)};
  }
  std::vector<bool> covered(static_cast<std::size_t>(d), false);
  std::vector<Matrix> views;
  for (const auto& [begin, end] : spec.ranges) {
    if (begin < 1 || end > d || begin > end)
      throw ConfigError("view range " + std::to_string(begin) + "-" + std::to_string(end) +
                        " out of bounds for " + std::to_string(d) + " feature columns");
    for (Index c = begin; c <= end; ++c) {
      if (covered[static_cast<std::size_t>(c - 1)])
        throw ConfigError("view ranges overlap at column " + std::to_string(c));
      covered[static_cast<std::size_t>(c - 1)] = true;
    }
    views.push_back(features.middleCols(begin - 1, end - begin + 1));
  }
  for (Index c = 0; c < d; ++c)
    if (!covered[static_cast<std::size_t>(c)])
      throw ConfigError("view ranges leave column " + std::to_string(c + 1) + " uncovered");
  return views;
}

/// Scales each nonzero row to unit Euclidean length.
inline Matrix normalize_rows(Matrix m) {
  for (Index i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    if (norm > 0.0) m.row(i) /= norm;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Experiment configuration: one "key = value" pair per line, '#' comments.
// ---------------------------------------------------------------------------

enum class ExperimentMode { kMultiTask, kMultiView };

struct ExperimentConfig {
  std::string data;
  ExperimentMode mode = ExperimentMode::kMultiView;
  ViewSplit view_split;
  bool view_split_set = false;
  double label_fraction = 0.0;
  int trials = 1;
  std::uint64_t seed = 0;
  std::vector<double> alphas;  // empty -> ones per view
  std::vector<double> betas;   // empty -> one task with weight 1
  double lambda = 1.0;
  double gamma = kInfinity;
  double xi = 1e-4;
  int z = 2;
  Neighborhood neighborhood = Neighborhood::full();
  InferenceMode inference = InferenceMode::kBatch;
  int max_iters = 20;
  double tol = 1e-6;
  std::vector<GridCandidate> cp_grid;
  Index embed_dim = 0;  // 0 disables the embedding artifact
  std::string out = ".";

  /// Number of tasks; label columns are the trailing task_count() columns
  /// of the data file.
  Index task_count() const { return betas.empty() ? 1 : static_cast<Index>(betas.size()); }
};

inline ViewSplit parse_view_split(const std::string& raw) {
  ViewSplit vs;
  const std::string s = trim(raw);
  if (s == "halves") return vs;
  vs.halves = false;
  for (const std::string& part : split(s, ';')) {
    const std::string range = trim(part);
    if (range.empty()) continue;
    const auto dash = range.find('-');
    if (dash == std::string::npos)
      throw ConfigError("view_split range '" + range + "' must look like begin-end");
    vs.ranges.emplace_back(parse_int(range.substr(0, dash), "view_split"),
                           parse_int(range.substr(dash + 1), "view_split"));
  }
  if (vs.ranges.empty()) throw ConfigError("view_split: no ranges given");
  return vs;
}

inline std::vector<GridCandidate> parse_cp_grid(const std::string& raw) {
  std::vector<GridCandidate> grid;
  for (const std::string& part : split(raw, ';')) {
    const std::string s = trim(part);
    if (s.empty()) continue;
    GridCandidate cand;
    const auto slash = s.find('/');
    if (slash == std::string::npos) {
      cand.alphas = parse_double_list(s, "cp_grid");
    } else {
      const std::string a = trim(s.substr(0, slash));
      const std::string b = trim(s.substr(slash + 1));
      if (!a.empty()) cand.alphas = parse_double_list(a, "cp_grid");
      if (!b.empty()) cand.betas = parse_double_list(b, "cp_grid");
    }
    grid.push_back(std::move(cand));
  }
  if (grid.empty()) throw ConfigError("cp_grid: no candidates given");
  return grid;
}

inline ExperimentConfig parse_config(std::istream& is, const std::string& name = "<config>") {
  ExperimentConfig cfg;
  std::map<std::string, bool> seen;
  std::string line;
  Index line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string s = trim(line);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(name + " line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (seen[key]) throw ConfigError(name + ": duplicate key '" + key + "'");
    seen[key] = true;

    if (key == "data") {
      cfg.data = value;
    } else if (key == "mode") {
      if (value == "multitask")
        cfg.mode = ExperimentMode::kMultiTask;
      else if (value == "multiview")
        cfg.mode = ExperimentMode::kMultiView;
      else
        throw ConfigError(name + ": mode must be multitask or multiview");
    } else if (key == "view_split") {
      cfg.view_split = parse_view_split(value);
      cfg.view_split_set = true;
    } else if (key == "label_fraction") {
      cfg.label_fraction = parse_double(value, key);
    } else if (key == "trials") {
      cfg.trials = static_cast<int>(parse_int(value, key));
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
    } else if (key == "alpha") {
      cfg.alphas = parse_double_list(value, key);
    } else if (key == "beta") {
      cfg.betas = parse_double_list(value, key);
    } else if (key == "lambda") {
      cfg.lambda = parse_double(value, key);
    } else if (key == "gamma") {
      cfg.gamma = parse_double(value, key);
    } else if (key == "xi") {
      cfg.xi = parse_double(value, key);
    } else if (key == "z") {
      cfg.z = static_cast<int>(parse_int(value, key));
    } else if (key == "neighborhood") {
      cfg.neighborhood = value == "full"
                             ? Neighborhood::full()
                             : Neighborhood::nearest(static_cast<Index>(parse_int(value, key)));
    } else if (key == "inference") {
      if (value == "batch")
        cfg.inference = InferenceMode::kBatch;
      else if (value == "progressive")
        cfg.inference = InferenceMode::kProgressive;
      else
        throw ConfigError(name + ": inference must be batch or progressive");
    } else if (key == "max_iters") {
      cfg.max_iters = static_cast<int>(parse_int(value, key));
    } else if (key == "tol") {
      cfg.tol = parse_double(value, key);
    } else if (key == "cp_grid") {
      cfg.cp_grid = parse_cp_grid(value);
    } else if (key == "embed_dim") {
      cfg.embed_dim = static_cast<Index>(parse_int(value, key));
    } else if (key == "out") {
      cfg.out = value;
    } else {
      throw ConfigError(name + ": unknown key '" + key + "'");
    }
  }
  if (cfg.data.empty()) throw ConfigError(name + ": missing required key 'data'");
  if (!(cfg.label_fraction > 0.0) || !(cfg.label_fraction < 1.0))
    throw ConfigError(name + ": label_fraction must lie in (0, 1)");
  if (cfg.trials < 1) throw ConfigError(name + ": trials must be >= 1");
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open '" + path + "'");
  return parse_config(is, path);
}

}  // namespace recgraph
