#pragma once

// Straightforward reference implementations used to cross-check the
// optimized paths, both in the test suites and behind the CLI's `oracle`
// subcommand. Everything here recomputes from first principles — direct
// loops, explicit matrices, full-pivot factorizations — and never calls
// the production solvers it is checking.

#include <cmath>
#include <vector>

#include <Eigen/LU>

#include "recgraph/dataset.hpp"
#include "recgraph/types.hpp"
#include "recgraph/weights.hpp"

namespace recgraph::reference {

/// Equality-constrained row solve via the bordered KKT system: minimize
/// w^T L w subject to sum(w) = 1, with L accumulated entry by entry.
inline Vector kkt_weight_row(const Dataset& ds, const std::vector<Matrix>& task_f,
                             const HyperParams& hp, Index i, const IndexList& neighbors) {
  const Index m = static_cast<Index>(neighbors.size());
  Matrix L = Matrix::Zero(m, m);
  for (Index a = 0; a < m; ++a) {
    for (Index b = 0; b < m; ++b) {
      double entry = 0.0;
      for (Index k = 0; k < ds.q; ++k) {
        const Matrix& x = ds.views[static_cast<std::size_t>(k)];
        const RowVector da = x.row(i) - x.row(neighbors[static_cast<std::size_t>(a)]);
        const RowVector db = x.row(i) - x.row(neighbors[static_cast<std::size_t>(b)]);
        entry += hp.alphas[static_cast<std::size_t>(k)] * da.dot(db);
      }
      for (std::size_t k = 0; k < task_f.size(); ++k) {
        const Matrix& f = task_f[k];
        const RowVector da = f.row(i) - f.row(neighbors[static_cast<std::size_t>(a)]);
        const RowVector db = f.row(i) - f.row(neighbors[static_cast<std::size_t>(b)]);
        entry += hp.betas[k] * da.dot(db);
      }
      L(a, b) = entry;
    }
  }
  L.diagonal().array() += hp.lambda;
  const double trace = L.trace();
  L.diagonal().array() += trace == 0.0 ? 1e-8 : hp.xi * trace / static_cast<double>(m);

  Matrix kkt = Matrix::Zero(m + 1, m + 1);
  kkt.topLeftCorner(m, m) = 2.0 * L;
  kkt.topRightCorner(m, 1).setOnes();
  kkt.bottomLeftCorner(1, m).setOnes();
  Vector rhs = Vector::Zero(m + 1);
  rhs[m] = 1.0;
  const Vector sol = kkt.fullPivLu().solve(rhs);

  Vector row = Vector::Zero(ds.n);
  for (Index a = 0; a < m; ++a) row[neighbors[static_cast<std::size_t>(a)]] = sol[a];
  return row;
}

/// Unlabeled block of the stationarity system solved through the explicit
/// global quadratic: build (I-W)^T (I-W) in full, slice, full-pivot solve.
inline Matrix dense_stationarity_solve(const Matrix& w, const Matrix& scaled_prior,
                                       const IndexList& labeled, const IndexList& unlabeled) {
  const Index n = w.rows();
  Matrix residual_op = Matrix::Identity(n, n) - w;
  const Matrix quad = residual_op.transpose() * residual_op;
  const Matrix quu = quad(unlabeled, unlabeled);
  const Matrix qul = quad(unlabeled, labeled);
  return quu.fullPivLu().solve(-qul * scaled_prior);
}

/// Max-abs of the unlabeled gradient rows at a candidate completion.
inline double stationarity_residual(const Matrix& w, const Matrix& scaled_prior,
                                    const IndexList& labeled, const IndexList& unlabeled,
                                    const Matrix& fu) {
  const Index n = w.rows();
  Matrix f = Matrix::Zero(n, scaled_prior.cols());
  for (std::size_t r = 0; r < labeled.size(); ++r)
    f.row(labeled[r]) = scaled_prior.row(static_cast<Index>(r));
  for (std::size_t r = 0; r < unlabeled.size(); ++r)
    f.row(unlabeled[r]) = fu.row(static_cast<Index>(r));
  Matrix residual_op = Matrix::Identity(n, n) - w;
  const Matrix gradient = residual_op.transpose() * (residual_op * f);
  double worst = 0.0;
  for (Index i : unlabeled) worst = std::max(worst, gradient.row(i).cwiseAbs().maxCoeff());
  return worst;
}

/// Gradient norm of the relaxed (noise-tolerant) objective at F.
inline double relaxed_gradient_residual(const Matrix& w, const Matrix& prior_expanded,
                                        double gamma, const Matrix& f) {
  const Index n = w.rows();
  Matrix residual_op = Matrix::Identity(n, n) - w;
  const Matrix gradient =
      residual_op.transpose() * (residual_op * f) + gamma * (f - prior_expanded);
  return gradient.cwiseAbs().maxCoeff();
}

/// Cross-propagation with the z-step matrix materialized outright.
inline Matrix explicit_power_cp(const Matrix& w, const SignedLabels& signed_labels, int z) {
  Matrix power = w;
  for (int step = 1; step < z; ++step) power = (power * w).eval();
  const Matrix expanded = signed_labels.columns.transpose() * power * signed_labels.columns;
  const Index p = signed_labels.task_count;
  Matrix by_task = Matrix::Zero(p, p);
  for (Index a = 0; a < expanded.rows(); ++a)
    for (Index b = 0; b < expanded.cols(); ++b)
      by_task(signed_labels.task_of_col[static_cast<std::size_t>(a)],
              signed_labels.task_of_col[static_cast<std::size_t>(b)]) += expanded(a, b);
  return by_task;
}

/// Minimal single-view, single-task learner: k nearest neighbors on
/// standardized features, per-row bordered KKT solves of the blended
/// feature/label system (label share `label_weight`, no ridge), and dense
/// harmonic completion with the given labels pinned. Mirrors the driver's
/// sweep order so results are comparable at solver precision.
struct SingleViewResult {
  Matrix w;
  Matrix f;  // n x c
  LabelColumn predictions;
};

inline SingleViewResult single_view_reference(const Matrix& x, const LabelColumn& labels,
                                              int classes, Index k, double label_weight,
                                              int sweeps) {
  const Index n = x.rows();

  Matrix z = x;
  for (Index j = 0; j < z.cols(); ++j) {
    const double mean = z.col(j).mean();
    z.col(j).array() -= mean;
    const double sd = std::sqrt(z.col(j).squaredNorm() / static_cast<double>(n));
    if (sd > 0.0) z.col(j) /= sd;
  }
  std::vector<IndexList> nbs(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    std::vector<std::pair<double, Index>> dist;
    for (Index j = 0; j < n; ++j)
      if (j != i) dist.emplace_back((z.row(j) - z.row(i)).squaredNorm(), j);
    std::sort(dist.begin(), dist.end());
    IndexList nb(static_cast<std::size_t>(k));
    for (Index t = 0; t < k; ++t) nb[static_cast<std::size_t>(t)] = dist[static_cast<std::size_t>(t)].second;
    std::sort(nb.begin(), nb.end());
    nbs[static_cast<std::size_t>(i)] = std::move(nb);
  }

  IndexList labeled, unlabeled;
  Matrix f = Matrix::Zero(n, classes);
  for (Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y == kMissingLabel) {
      unlabeled.push_back(i);
    } else {
      labeled.push_back(i);
      f(i, y - 1) = 1.0;
    }
  }

  auto solve_rows = [&]() {
    Matrix w = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
      const IndexList& nb = nbs[static_cast<std::size_t>(i)];
      const Index m = static_cast<Index>(nb.size());
      Matrix L(m, m);
      for (Index a = 0; a < m; ++a)
        for (Index b = 0; b < m; ++b) {
          const RowVector dxa = x.row(i) - x.row(nb[static_cast<std::size_t>(a)]);
          const RowVector dxb = x.row(i) - x.row(nb[static_cast<std::size_t>(b)]);
          const RowVector dfa = f.row(i) - f.row(nb[static_cast<std::size_t>(a)]);
          const RowVector dfb = f.row(i) - f.row(nb[static_cast<std::size_t>(b)]);
          L(a, b) = (1.0 - label_weight) * dxa.dot(dxb) + label_weight * dfa.dot(dfb);
        }
      Matrix kkt = Matrix::Zero(m + 1, m + 1);
      kkt.topLeftCorner(m, m) = 2.0 * L;
      kkt.topRightCorner(m, 1).setOnes();
      kkt.bottomLeftCorner(1, m).setOnes();
      Vector rhs = Vector::Zero(m + 1);
      rhs[m] = 1.0;
      const Vector sol = kkt.fullPivLu().solve(rhs);
      for (Index a = 0; a < m; ++a) w(i, nb[static_cast<std::size_t>(a)]) = sol[a];
    }
    return w;
  };

  SingleViewResult out;
  out.w = solve_rows();
  for (int sweep = 1; sweep <= sweeps; ++sweep) {
    Matrix prior(labeled.size(), classes);
    for (std::size_t r = 0; r < labeled.size(); ++r) prior.row(static_cast<Index>(r)) = f.row(labeled[r]);
    const Matrix fu = dense_stationarity_solve(out.w, prior, labeled, unlabeled);
    for (std::size_t r = 0; r < unlabeled.size(); ++r) f.row(unlabeled[r]) = fu.row(static_cast<Index>(r));
    if (sweep == sweeps) break;
    out.w = solve_rows();
  }
  out.f = f;
  out.predictions = labels;
  for (Index i : unlabeled) {
    Index best = 0;
    for (Index j = 1; j < classes; ++j)
      if (f(i, j) > f(i, best)) best = j;
    out.predictions[static_cast<std::size_t>(i)] = static_cast<int>(best) + 1;
  }
  return out;
}

}  // namespace recgraph::reference
