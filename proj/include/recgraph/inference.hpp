#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "recgraph/dataset.hpp"
#include "recgraph/types.hpp"
#include "recgraph/weights.hpp"

namespace recgraph {

/// Applies (I - W)^T (I - W) to a matrix without materializing the product.
inline Matrix reconstruction_quadratic_apply(const Matrix& w, const Matrix& f) {
  Matrix t = f - w * f;
  t -= w.transpose() * (f - w * f);
  return t;
}

/// Dense (I - W)^T (I - W); only for the relaxed routines, which need it
/// explicitly.
inline Matrix reconstruction_quadratic(const Matrix& w) {
  Matrix m = Matrix::Identity(w.rows(), w.cols()) - w;
  return m.transpose() * m;
}

/// Fills the unlabeled block by block elimination of the stationarity
/// system: the unlabeled rows of the reconstruction gradient vanish at the
/// returned values. `scaled_prior` is the l x c regularized prior (rows of
/// diag(v) Y, ordered like `labeled`).
inline Matrix infer_closed_form(const WeightGraph& g, const Matrix& scaled_prior,
                                const IndexList& labeled, const IndexList& unlabeled) {
  const Index u = static_cast<Index>(unlabeled.size());
  const Index l = static_cast<Index>(labeled.size());
  if (u < 1) throw ConfigError("closed-form inference: no unlabeled instances");
  if (static_cast<Index>(scaled_prior.rows()) != l)
    throw ConfigError("closed-form inference: prior has wrong row count");
  const Matrix& w = g.weights;
  const Matrix wll = w(labeled, labeled);
  const Matrix wlu = w(labeled, unlabeled);
  const Matrix wul = w(unlabeled, labeled);
  Matrix iuu = -w(unlabeled, unlabeled);
  iuu.diagonal().array() += 1.0;

  Matrix lhs = wlu.transpose() * wlu;
  lhs.noalias() += iuu.transpose() * iuu;
  Matrix ill = -wll;
  ill.diagonal().array() += 1.0;
  Matrix rhs = wlu.transpose() * (ill * scaled_prior);
  rhs.noalias() += iuu.transpose() * (wul * scaled_prior);

  Eigen::LDLT<Matrix> ldlt(lhs);
  Matrix fu = ldlt.solve(rhs);
  const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  const double residual = (lhs * fu - rhs).cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || residual > 1e-8 * scale) {
    Eigen::JacobiSVD<Matrix> svd(lhs);
    throw NumericError("closed-form inference: singular unlabeled system (smallest singular value " +
                       std::to_string(svd.singularValues().tail(1)[0]) + ")");
  }
  return fu;
}

/// One candidate commit: the steepest-descent entry of the unlabeled
/// gradient block. `task` is filled by the drivers.
struct Selection {
  Index task = 0;
  Index instance = 0;
  int cls = 0;
  double gradient = kInfinity;
};

namespace detail {

inline Selection scan_unlabeled_min(const Matrix& gradient, const IndexList& unlabeled) {
  Selection best;
  for (Index i : unlabeled) {
    for (Index j = 0; j < gradient.cols(); ++j) {
      if (gradient(i, j) < best.gradient) {
        best.gradient = gradient(i, j);
        best.instance = i;
        best.cls = static_cast<int>(j) + 1;
      }
    }
  }
  return best;
}

}  // namespace detail

/// Most confident prediction under the hard prior constraint: the minimum
/// entry of the unlabeled block of (I-W)^T (I-W) applied to the expanded
/// prior. Ties resolve to the lowest instance index, then lowest class.
inline Selection select_most_confident(const WeightGraph& g, const Matrix& prior_expanded,
                                       const IndexList& unlabeled) {
  if (unlabeled.empty()) throw ConfigError("selection: no unlabeled instances");
  const Matrix gradient = reconstruction_quadratic_apply(g.weights, prior_expanded);
  return detail::scan_unlabeled_min(gradient, unlabeled);
}

/// Noise-tolerant inference: trades exact prior fit against reconstruction
/// smoothness with weight gamma. Returns the full n x c classifying matrix
/// (labeled rows may drift from the prior; predictions never overwrite
/// given labels). `prior_expanded` is n x c with zeros at unlabeled rows.
inline Matrix relaxed_infer(const WeightGraph& g, const Matrix& prior_expanded, double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("relaxed inference: gamma must be > 0");
  Matrix k = reconstruction_quadratic(g.weights) / gamma;
  k.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(k);
  if (llt.info() != Eigen::Success)
    throw NumericError("relaxed inference: factorization failed");
  return llt.solve(prior_expanded);
}

/// Commit selection for the noise-tolerant variant. Substituting the
/// relaxed minimizer back into the cost leaves a quadratic in the prior;
/// the scan runs over the stated gradient (B^T B applied to the prior).
inline Selection relaxed_select(const WeightGraph& g, const Matrix& prior_expanded,
                                const IndexList& unlabeled, double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("relaxed selection: gamma must be > 0");
  if (unlabeled.empty()) throw ConfigError("relaxed selection: no unlabeled instances");
  const Index n = g.n();
  const Matrix m = reconstruction_quadratic(g.weights);
  Matrix k = m / gamma;
  k.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(k);
  if (llt.info() != Eigen::Success)
    throw NumericError("relaxed selection: factorization failed");
  const Matrix a = llt.solve(Matrix::Identity(n, n));
  const Matrix a_shift = a - Matrix::Identity(n, n);
  Matrix b = a.transpose() * m * a;
  b.noalias() += gamma * (a_shift.transpose() * a_shift);
  const Matrix gradient = b.transpose() * (b * prior_expanded);
  return detail::scan_unlabeled_min(gradient, unlabeled);
}

/// Turns the selected instance/class into ground truth for later rounds:
/// appends a one-hot row to the prior and moves the index across the lists.
inline void progressive_commit(LabelState& st, Index instance, int cls) {
  auto it = std::lower_bound(st.unlabeled.begin(), st.unlabeled.end(), instance);
  if (it == st.unlabeled.end() || *it != instance)
    throw ConfigError("progressive commit: instance " + std::to_string(instance) +
                      " is already labeled");
  if (cls < 1 || cls > st.c)
    throw ConfigError("progressive commit: class out of range");
  st.unlabeled.erase(it);
  st.labeled.push_back(instance);
  const Index l = st.Y.rows();
  st.Y.conservativeResize(l + 1, st.c);
  st.Y.row(l).setZero();
  st.Y(l, cls - 1) = 1.0;
  st.F.row(instance).setZero();
  st.F(instance, cls - 1) = 1.0;
  st.v.resize(0);  // stale; recomputed against the next weight matrix
}

/// Argmax class of a soft row; ties go to the lowest class index.
inline int harden_label(const RowVector& row) {
  if (row.size() == 0) throw ConfigError("harden: empty row");
  Index best = 0;
  for (Index j = 1; j < row.size(); ++j)
    if (row[j] > row[best]) best = j;
  return static_cast<int>(best) + 1;
}

/// Full reconstruction objective: weighted view and label reconstruction
/// errors plus the sparsity penalty.
inline double objective(const Dataset& ds, const std::vector<Matrix>& task_f, const Matrix& w,
                        const HyperParams& hp) {
  double total = hp.lambda * w.squaredNorm();
  for (Index k = 0; k < ds.q; ++k) {
    const Matrix& x = ds.views[static_cast<std::size_t>(k)];
    total += hp.alphas[static_cast<std::size_t>(k)] * (x - w * x).squaredNorm();
  }
  for (std::size_t k = 0; k < task_f.size(); ++k) {
    const Matrix& f = task_f[k];
    total += hp.betas[k] * (f - w * f).squaredNorm();
  }
  return total;
}

struct InferenceResult {
  std::vector<Matrix> soft_f;            // per task, n x c
  std::vector<LabelColumn> predictions;  // per task, length n; given labels preserved
  int iterations = 0;
  std::vector<double> objective_trace;   // value after every half-step
};

struct LearnResult {
  WeightGraph graph;
  InferenceResult inference;
};

namespace detail {

inline std::vector<Matrix> collect_f(const std::vector<LabelState>& states) {
  std::vector<Matrix> fs;
  fs.reserve(states.size());
  for (const LabelState& st : states) fs.push_back(st.F);
  return fs;
}

inline void compute_regularizers(std::vector<LabelState>& states, const WeightGraph& g,
                                 DegreeSource source) {
  for (LabelState& st : states)
    st.v = node_regularizer(st.Y, labeled_degrees(g, st.labeled, source));
}

inline LabelColumn harden_predictions(const LabelState& st, const LabelColumn& given) {
  LabelColumn pred = given;
  for (Index i : st.unlabeled) pred[static_cast<std::size_t>(i)] = harden_label(st.F.row(i));
  for (Index r = 0; r < st.l(); ++r) {
    const Index i = st.labeled[static_cast<std::size_t>(r)];
    if (pred[static_cast<std::size_t>(i)] == kMissingLabel) {
      Index cls = 0;
      st.Y.row(r).maxCoeff(&cls);
      pred[static_cast<std::size_t>(i)] = static_cast<int>(cls) + 1;
    }
  }
  return pred;
}

}  // namespace detail

/// Alternating optimization with the prior constraint folded in once: the
/// first weight solve fixes the node regularizer, after which the sweep
/// alternates exact classifying-matrix updates and exact row re-solves
/// until the classifying matrices stabilize.
inline LearnResult run_batch(const Dataset& ds, const HyperParams& hp, int threads = 1) {
  hp.validate(ds.q, ds.p, ds.n);
  std::vector<LabelState> states = binarize_all(ds);
  const std::vector<IndexList> neighbors = all_neighbor_sets(ds, hp.neighborhood);

  WeightGraph graph = solve_all_weight_rows(ds, detail::collect_f(states), hp, neighbors, threads);
  detail::compute_regularizers(states, graph, hp.degree_source);
  for (LabelState& st : states) {
    for (Index r = 0; r < st.l(); ++r)
      st.F.row(st.labeled[static_cast<std::size_t>(r)]) = st.v[r] * st.Y.row(r);
  }

  InferenceResult result;
  result.objective_trace.push_back(objective(ds, detail::collect_f(states), graph.weights, hp));

  for (int iter = 1; iter <= hp.max_iters; ++iter) {
    double delta = 0.0;
    for (LabelState& st : states) {
      if (st.u() == 0) continue;
      Matrix updated;
      if (std::isinf(hp.gamma)) {
        updated = st.F;
        const Matrix scaled_prior = st.v.asDiagonal() * st.Y;
        const Matrix fu = infer_closed_form(graph, scaled_prior, st.labeled, st.unlabeled);
        for (std::size_t r = 0; r < st.unlabeled.size(); ++r)
          updated.row(st.unlabeled[r]) = fu.row(static_cast<Index>(r));
      } else {
        updated = relaxed_infer(graph, st.scaled_prior_expanded(), hp.gamma);
      }
      delta = std::max(delta, (updated - st.F).cwiseAbs().maxCoeff());
      st.F = std::move(updated);
    }
    result.iterations = iter;
    result.objective_trace.push_back(objective(ds, detail::collect_f(states), graph.weights, hp));
    if (delta < hp.tol || iter == hp.max_iters) break;
    graph = solve_all_weight_rows(ds, detail::collect_f(states), hp, neighbors, threads);
    result.objective_trace.push_back(objective(ds, detail::collect_f(states), graph.weights, hp));
  }

  for (Index k = 0; k < ds.p; ++k) {
    const LabelState& st = states[static_cast<std::size_t>(k)];
    result.soft_f.push_back(st.F);
    result.predictions.push_back(
        detail::harden_predictions(st, ds.tasks[static_cast<std::size_t>(k)]));
  }
  return {std::move(graph), std::move(result)};
}

/// Progressive inference: one commit per round. Each round rebuilds the
/// weight matrix and regularizers against the grown prior, scans every
/// task's unlabeled gradient block, and commits the single most negative
/// entry across tasks (ties: lowest task, instance, then class). Runs for
/// exactly as many rounds as there are missing labels.
inline LearnResult run_progressive(const Dataset& ds, const HyperParams& hp, int threads = 1) {
  hp.validate(ds.q, ds.p, ds.n);
  std::vector<LabelState> states = binarize_all(ds);
  const std::vector<IndexList> neighbors = all_neighbor_sets(ds, hp.neighborhood);

  InferenceResult result;
  std::vector<LabelColumn> predictions = ds.tasks;
  WeightGraph graph;
  for (;;) {
    graph = solve_all_weight_rows(ds, detail::collect_f(states), hp, neighbors, threads);
    result.objective_trace.push_back(objective(ds, detail::collect_f(states), graph.weights, hp));
    Index remaining = 0;
    for (const LabelState& st : states) remaining += st.u();
    if (remaining == 0) break;

    detail::compute_regularizers(states, graph, hp.degree_source);
    Selection best;
    for (Index k = 0; k < ds.p; ++k) {
      LabelState& st = states[static_cast<std::size_t>(k)];
      if (st.u() == 0) continue;
      const Matrix prior = st.scaled_prior_expanded();
      const Selection sel = std::isinf(hp.gamma)
                                ? select_most_confident(graph, prior, st.unlabeled)
                                : relaxed_select(graph, prior, st.unlabeled, hp.gamma);
      if (sel.gradient < best.gradient) {
        best = sel;
        best.task = k;
      }
    }
    progressive_commit(states[static_cast<std::size_t>(best.task)], best.instance, best.cls);
    predictions[static_cast<std::size_t>(best.task)][static_cast<std::size_t>(best.instance)] =
        best.cls;
    ++result.iterations;
  }

  for (Index k = 0; k < ds.p; ++k) {
    result.soft_f.push_back(states[static_cast<std::size_t>(k)].F);
    result.predictions.push_back(predictions[static_cast<std::size_t>(k)]);
  }
  return {std::move(graph), std::move(result)};
}

inline LearnResult run(const Dataset& ds, const HyperParams& hp, int threads = 1) {
  return hp.mode == InferenceMode::kBatch ? run_batch(ds, hp, threads)
                                          : run_progressive(ds, hp, threads);
}

}  // namespace recgraph
