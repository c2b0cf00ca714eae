#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "recgraph/types.hpp"

namespace recgraph {

/// Immutable bundle of q feature views over the same n instances plus p
/// partially observed label columns. Instances keep their original order;
/// labeled/unlabeled bookkeeping lives in index lists, never in row
/// permutations of the data itself.
struct Dataset {
  std::vector<Matrix> views;       // each n x d_k
  std::vector<LabelColumn> tasks;  // each length n, entries in {1..c_k} or 0
  std::vector<int> classes;        // c_k per task
  Index n = 0;
  Index q = 0;
  Index p = 0;

  Index view_dim(Index k) const { return views[static_cast<std::size_t>(k)].cols(); }
};

namespace detail {

inline int observed_class_count(const LabelColumn& task, const std::string& where) {
  int cmax = 0;
  Index observed = 0;
  for (int y : task) {
    if (y == kMissingLabel) continue;
    if (y < 1) throw ConfigError(where + ": label " + std::to_string(y) + " out of range");
    cmax = std::max(cmax, y);
    ++observed;
  }
  if (observed == 0) throw ConfigError(where + ": task has no labels");
  std::vector<Index> per_class(static_cast<std::size_t>(cmax), 0);
  for (int y : task)
    if (y != kMissingLabel) ++per_class[static_cast<std::size_t>(y - 1)];
  for (int c = 0; c < cmax; ++c)
    if (per_class[static_cast<std::size_t>(c)] == 0)
      throw ConfigError(where + ": class " + std::to_string(c + 1) + " has no labeled instance");
  return cmax;
}

}  // namespace detail

/// Builds a Dataset from raw arrays, checking shape and label invariants.
/// Idempotent: feeding back a valid Dataset's arrays reproduces it.
inline Dataset validate_dataset(std::vector<Matrix> views, std::vector<LabelColumn> tasks) {
  if (views.empty()) throw ConfigError("dataset needs at least one view");
  if (tasks.empty()) throw ConfigError("dataset needs at least one task");
  const Index n = views.front().rows();
  if (n < 2) throw ConfigError("dataset needs at least two instances");
  for (std::size_t k = 1; k < views.size(); ++k) {
    if (views[k].rows() != n)
      throw ConfigError("view row mismatch: view " + std::to_string(k + 1) + " has " +
                        std::to_string(views[k].rows()) + " rows, expected " + std::to_string(n));
  }
  Dataset ds;
  ds.n = n;
  ds.q = static_cast<Index>(views.size());
  ds.p = static_cast<Index>(tasks.size());
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    if (static_cast<Index>(tasks[k].size()) != n)
      throw ConfigError("task " + std::to_string(k + 1) + " has " +
                        std::to_string(tasks[k].size()) + " entries, expected " + std::to_string(n));
    ds.classes.push_back(detail::observed_class_count(tasks[k], "task " + std::to_string(k + 1)));
  }
  ds.views = std::move(views);
  ds.tasks = std::move(tasks);
  return ds;
}

/// Per-task labeling state. `labeled` is a sequence: row r of Y binarizes
/// the label of instance labeled[r]. `unlabeled` stays sorted ascending.
/// F carries the current classifying matrix over all n instances.
struct LabelState {
  IndexList labeled;
  IndexList unlabeled;
  Matrix Y;  // l x c, one-hot rows
  Vector v;  // node regularizer diagonal (size l); empty until computed
  Matrix F;  // n x c
  int c = 0;

  Index n() const { return F.rows(); }
  Index l() const { return static_cast<Index>(labeled.size()); }
  Index u() const { return static_cast<Index>(unlabeled.size()); }

  /// Rows of V*Y scattered to their instance positions; zero elsewhere.
  /// Falls back to raw Y rows while the regularizer has not been computed.
  Matrix scaled_prior_expanded() const {
    Matrix out = Matrix::Zero(n(), c);
    for (Index r = 0; r < l(); ++r) {
      const double scale = v.size() > 0 ? v[r] : 1.0;
      out.row(labeled[static_cast<std::size_t>(r)]) = scale * Y.row(r);
    }
    return out;
  }
};

/// Expands a label column into one-hot rows over the observed instances.
inline LabelState binarize_labels(const LabelColumn& task, int class_count) {
  if (class_count < 1) throw ConfigError("class count must be >= 1");
  LabelState st;
  st.c = class_count;
  const Index n = static_cast<Index>(task.size());
  for (Index i = 0; i < n; ++i) {
    const int y = task[static_cast<std::size_t>(i)];
    if (y == kMissingLabel)
      st.unlabeled.push_back(i);
    else if (y < 1 || y > class_count)
      throw ConfigError("label " + std::to_string(y) + " outside class range 1.." +
                        std::to_string(class_count));
    else
      st.labeled.push_back(i);
  }
  st.Y = Matrix::Zero(st.l(), class_count);
  st.F = Matrix::Zero(n, class_count);
  for (Index r = 0; r < st.l(); ++r) {
    const Index i = st.labeled[static_cast<std::size_t>(r)];
    st.Y(r, task[static_cast<std::size_t>(i)] - 1) = 1.0;
    st.F.row(i) = st.Y.row(r);
  }
  return st;
}

inline std::vector<LabelState> binarize_all(const Dataset& ds) {
  std::vector<LabelState> states;
  states.reserve(static_cast<std::size_t>(ds.p));
  for (Index k = 0; k < ds.p; ++k)
    states.push_back(binarize_labels(ds.tasks[static_cast<std::size_t>(k)],
                                     ds.classes[static_cast<std::size_t>(k)]));
  return states;
}

/// Signed label matrix used by the cross-propagation score. Binary tasks
/// contribute a single +1/-1 column; tasks with three or more classes are
/// expanded one-vs-rest into one column per class. Instances without a
/// label stay 0 in every column of their task.
struct SignedLabels {
  Matrix columns;                // n x (total expanded columns)
  std::vector<int> task_of_col;  // maps each column back to its task
  Index task_count = 0;
};

inline SignedLabels signed_label_matrix(const std::vector<LabelColumn>& labels,
                                        const std::vector<int>& classes) {
  if (labels.empty()) throw ConfigError("signed label matrix needs at least one task");
  if (labels.size() != classes.size())
    throw ConfigError("signed label matrix: tasks and class counts differ in length");
  const Index n = static_cast<Index>(labels.front().size());
  Index total = 0;
  for (int c : classes) total += (c <= 2 ? 1 : c);
  SignedLabels out;
  out.columns = Matrix::Zero(n, total);
  out.task_count = static_cast<Index>(labels.size());
  Index col = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const LabelColumn& task = labels[k];
    if (static_cast<Index>(task.size()) != n)
      throw ConfigError("signed label matrix: task length mismatch");
    const int c = classes[k];
    if (c <= 2) {
      for (Index i = 0; i < n; ++i) {
        const int y = task[static_cast<std::size_t>(i)];
        if (y != kMissingLabel) out.columns(i, col) = (y == 1 ? 1.0 : -1.0);
      }
      out.task_of_col.push_back(static_cast<int>(k));
      ++col;
    } else {
      for (int cls = 1; cls <= c; ++cls) {
        for (Index i = 0; i < n; ++i) {
          const int y = task[static_cast<std::size_t>(i)];
          if (y != kMissingLabel) out.columns(i, col) = (y == cls ? 1.0 : -1.0);
        }
        out.task_of_col.push_back(static_cast<int>(k));
        ++col;
      }
    }
  }
  return out;
}

/// Convenience overload over label states: only observed labels emit signs.
inline SignedLabels signed_label_matrix(const std::vector<LabelState>& states) {
  std::vector<LabelColumn> labels;
  std::vector<int> classes;
  for (const LabelState& st : states) {
    LabelColumn col(static_cast<std::size_t>(st.n()), kMissingLabel);
    for (Index r = 0; r < st.l(); ++r) {
      Index cls = 0;
      st.Y.row(r).maxCoeff(&cls);
      col[static_cast<std::size_t>(st.labeled[static_cast<std::size_t>(r)])] =
          static_cast<int>(cls) + 1;
    }
    labels.push_back(std::move(col));
    classes.push_back(st.c);
  }
  return signed_label_matrix(labels, classes);
}

}  // namespace recgraph
