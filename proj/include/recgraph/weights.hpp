#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>

#include "recgraph/dataset.hpp"
#include "recgraph/parallel.hpp"
#include "recgraph/types.hpp"

namespace recgraph {

/// Learnt reconstruction graph: dense row-stochastic weights with a zero
/// diagonal (entries may be negative) and per-node degrees d_j = sum_i w_ij.
struct WeightGraph {
  Matrix weights;
  Vector degrees;

  Index n() const { return weights.rows(); }
};

inline constexpr double kRowSumTolerance = 1e-8;
inline constexpr double kConditioningFloor = 1e-8;

/// Stacks all views side by side after standardizing each feature column to
/// zero mean and unit variance. This is the metric space for the k-nearest
/// neighbor restriction, so no single view dominates by scale.
inline Matrix standardized_view_concat(const Dataset& ds) {
  Index total = 0;
  for (Index k = 0; k < ds.q; ++k) total += ds.view_dim(k);
  Matrix out(ds.n, total);
  Index at = 0;
  for (Index k = 0; k < ds.q; ++k) {
    const Matrix& view = ds.views[static_cast<std::size_t>(k)];
    for (Index j = 0; j < view.cols(); ++j) {
      const double mean = view.col(j).mean();
      Vector centered = view.col(j).array() - mean;
      const double sd = std::sqrt(centered.squaredNorm() / static_cast<double>(ds.n));
      out.col(at + j) = sd > 0.0 ? (centered / sd).eval() : centered;
    }
    at += view.cols();
  }
  return out;
}

namespace detail {

inline IndexList knn_of_row(const Matrix& points, Index i, Index k) {
  const Index n = points.rows();
  std::vector<std::pair<double, Index>> dist;
  dist.reserve(static_cast<std::size_t>(n - 1));
  for (Index j = 0; j < n; ++j) {
    if (j == i) continue;
    dist.emplace_back((points.row(j) - points.row(i)).squaredNorm(), j);
  }
  // ties go to the lower index
  std::sort(dist.begin(), dist.end());
  IndexList nb(static_cast<std::size_t>(k));
  for (Index t = 0; t < k; ++t) nb[static_cast<std::size_t>(t)] = dist[static_cast<std::size_t>(t)].second;
  std::sort(nb.begin(), nb.end());
  return nb;
}

}  // namespace detail

/// Indices instance i may reconstruct from: everyone else, or its k nearest
/// neighbors in the standardized concatenated-view space. Never contains i.
inline IndexList neighbor_set(const Dataset& ds, Index i, const Neighborhood& nb) {
  if (i < 0 || i >= ds.n) throw ConfigError("neighbor_set: instance index out of range");
  if (nb.is_full()) {
    IndexList all;
    all.reserve(static_cast<std::size_t>(ds.n - 1));
    for (Index j = 0; j < ds.n; ++j)
      if (j != i) all.push_back(j);
    return all;
  }
  if (nb.k() >= ds.n) throw ConfigError("neighbor_set: k must be < n");
  return detail::knn_of_row(standardized_view_concat(ds), i, nb.k());
}

/// Precomputes every instance's neighbor list (standardizing views once).
inline std::vector<IndexList> all_neighbor_sets(const Dataset& ds, const Neighborhood& nb) {
  std::vector<IndexList> sets(static_cast<std::size_t>(ds.n));
  if (nb.is_full()) {
    for (Index i = 0; i < ds.n; ++i) {
      IndexList& all = sets[static_cast<std::size_t>(i)];
      all.reserve(static_cast<std::size_t>(ds.n - 1));
      for (Index j = 0; j < ds.n; ++j)
        if (j != i) all.push_back(j);
    }
    return sets;
  }
  if (nb.k() >= ds.n) throw ConfigError("neighbor sets: k must be < n");
  const Matrix z = standardized_view_concat(ds);
  for (Index i = 0; i < ds.n; ++i) sets[static_cast<std::size_t>(i)] = detail::knn_of_row(z, i, nb.k());
  return sets;
}

/// Gram matrix of the difference vectors between a center row and its
/// neighbor rows; the instance itself acts as the mean.
inline Matrix local_covariance(const RowVector& center, const Matrix& neighbors) {
  if (neighbors.rows() == 0) throw ConfigError("local_covariance: empty neighbor set");
  const Matrix diff = (-neighbors).rowwise() + center;
  return diff * diff.transpose();
}

/// Diagonal shift keyed to the trace: L + (xi * tr(L) / m) I. A zero-trace
/// system (duplicate points) gets an absolute floor instead, since the
/// relative shift would add nothing.
inline Matrix condition_system(Matrix L, double xi) {
  const Index m = L.rows();
  const double trace = L.trace();
  double shift = xi * trace / static_cast<double>(m);
  if (trace == 0.0) shift = kConditioningFloor;
  L.diagonal().array() += shift;
  return L;
}

/// Mixed local system for one weight row: accumulated view and task
/// covariances plus the sparsity ridge, over the row's neighbor support.
struct MixedLocalSystem {
  Matrix L;
  IndexList neighbors;
};

/// Dense assembly of the mixed local system (unconditioned).
inline MixedLocalSystem build_mixed_local_system(const Dataset& ds,
                                                 const std::vector<Matrix>& task_f,
                                                 const HyperParams& hp, Index i,
                                                 IndexList neighbors) {
  const Index m = static_cast<Index>(neighbors.size());
  MixedLocalSystem sys;
  sys.L = Matrix::Zero(m, m);
  for (Index k = 0; k < ds.q; ++k) {
    const double a = hp.alphas[static_cast<std::size_t>(k)];
    if (a == 0.0) continue;
    const Matrix& view = ds.views[static_cast<std::size_t>(k)];
    sys.L.noalias() += a * local_covariance(view.row(i), view(neighbors, Eigen::all));
  }
  for (std::size_t k = 0; k < task_f.size(); ++k) {
    const double b = hp.betas[k];
    if (b == 0.0) continue;
    const Matrix& f = task_f[k];
    sys.L.noalias() += b * local_covariance(f.row(i), f(neighbors, Eigen::all));
  }
  sys.L.diagonal().array() += hp.lambda;
  sys.neighbors = std::move(neighbors);
  return sys;
}

namespace detail {

/// Scaled difference columns for the low-rank route: one block per active
/// view and task, so that L = lambda I + B B^T.
inline Matrix difference_factor(const Dataset& ds, const std::vector<Matrix>& task_f,
                                const HyperParams& hp, Index i, const IndexList& nb) {
  const Index m = static_cast<Index>(nb.size());
  Index rank = 0;
  for (Index k = 0; k < ds.q; ++k)
    if (hp.alphas[static_cast<std::size_t>(k)] != 0.0) rank += ds.view_dim(k);
  for (std::size_t k = 0; k < task_f.size(); ++k)
    if (hp.betas[k] != 0.0) rank += task_f[k].cols();
  Matrix b(m, rank);
  Index at = 0;
  for (Index k = 0; k < ds.q; ++k) {
    const double a = hp.alphas[static_cast<std::size_t>(k)];
    if (a == 0.0) continue;
    const Matrix& view = ds.views[static_cast<std::size_t>(k)];
    b.middleCols(at, view.cols()) =
        std::sqrt(a) * ((-view(nb, Eigen::all)).rowwise() + view.row(i));
    at += view.cols();
  }
  for (std::size_t k = 0; k < task_f.size(); ++k) {
    const double bk = hp.betas[k];
    if (bk == 0.0) continue;
    const Matrix& f = task_f[k];
    b.middleCols(at, f.cols()) = std::sqrt(bk) * ((-f(nb, Eigen::all)).rowwise() + f.row(i));
    at += f.cols();
  }
  return b;
}

inline Vector scatter_row(const Vector& local, const IndexList& nb, Index n, Index i) {
  const double sum = local.sum();
  if (!(std::abs(sum) > 1e-300))
    throw NumericError("weight row " + std::to_string(i) + ": weights sum to zero");
  Vector row = Vector::Zero(n);
  for (std::size_t t = 0; t < nb.size(); ++t) row[nb[t]] = local[static_cast<Index>(t)] / sum;
  return row;
}

}  // namespace detail

/// Solves one reconstruction-weight row: minimize w^T L w subject to the
/// weights summing to one, restricted to the neighbor support. Returns the
/// full-length row (zeros outside the support, zero at i itself).
///
/// Two equivalent routes share the same conditioning: a dense Cholesky of
/// the m x m system, and a factored route that solves through the r x r
/// Gram of the difference columns (r = total feature + label dimensions),
/// which is what makes full-neighborhood rebuilds affordable.
inline Vector solve_weight_row(const Dataset& ds, const std::vector<Matrix>& task_f,
                               const HyperParams& hp, Index i, const IndexList& neighbors,
                               SolvePath path = SolvePath::kAuto) {
  const Index m = static_cast<Index>(neighbors.size());
  if (m < 1) throw ConfigError("weight row solve: empty neighbor set");
  const Matrix b = detail::difference_factor(ds, task_f, hp, i, neighbors);
  const Index rank = b.cols();

  const double trace = hp.lambda * static_cast<double>(m) + b.squaredNorm();
  double shift = hp.xi * trace / static_cast<double>(m);
  if (trace == 0.0) shift = kConditioningFloor;
  const double ridge = hp.lambda + shift;

  bool low_rank = path == SolvePath::kLowRank;
  if (path == SolvePath::kAuto) low_rank = ridge > 0.0 && rank < m;
  if (low_rank && !(ridge > 0.0))
    throw NumericError("weight row " + std::to_string(i) +
                       ": factored path needs a positive ridge");

  Vector local(m);
  if (rank == 0) {
    if (!(ridge > 0.0))
      throw NumericError("weight row " + std::to_string(i) + ": singular local system");
    local.setConstant(1.0 / ridge);
  } else if (low_rank) {
    Matrix gram = b.transpose() * b;
    gram.diagonal().array() += ridge;
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success)
      throw NumericError("weight row " + std::to_string(i) + ": singular local system");
    const Vector bt1 = b.colwise().sum();
    local = (Vector::Ones(m) - b * llt.solve(bt1)) / ridge;
  } else {
    Matrix L = b * b.transpose();
    L.diagonal().array() += ridge;
    Eigen::LLT<Matrix> llt(L);
    if (llt.info() != Eigen::Success)
      throw NumericError("weight row " + std::to_string(i) + ": singular local system");
    local = llt.solve(Vector::Ones(m));
  }
  return detail::scatter_row(local, neighbors, ds.n, i);
}

/// Places per-row solutions into a dense weight matrix, verifying the
/// sum-to-one constraint and the empty diagonal, and computes degrees.
inline WeightGraph assemble_weight_matrix(Matrix rows) {
  if (rows.rows() != rows.cols()) throw ConfigError("weight matrix must be square");
  const Index n = rows.rows();
  for (Index i = 0; i < n; ++i) {
    if (rows(i, i) != 0.0)
      throw ConfigError("weight matrix row " + std::to_string(i) + " has a nonzero diagonal");
    const double sum = rows.row(i).sum();
    if (std::abs(sum - 1.0) > kRowSumTolerance)
      throw ConfigError("weight matrix row " + std::to_string(i) + " sums to " +
                        std::to_string(sum) + ", expected 1");
  }
  WeightGraph g;
  g.degrees = rows.colwise().sum();
  g.weights = std::move(rows);
  return g;
}

/// Rebuilds every weight row against the current classifying matrices.
inline WeightGraph solve_all_weight_rows(const Dataset& ds, const std::vector<Matrix>& task_f,
                                         const HyperParams& hp,
                                         const std::vector<IndexList>& neighbors,
                                         int threads = 1, SolvePath path = SolvePath::kAuto) {
  Matrix rows(ds.n, ds.n);
  parallel_for(Index{0}, ds.n, threads, [&](Index i) {
    rows.row(i) = solve_weight_row(ds, task_f, hp, i, neighbors[static_cast<std::size_t>(i)], path)
                      .transpose();
  });
  return assemble_weight_matrix(std::move(rows));
}

/// Degrees of the labeled instances, either restricted to mass arriving
/// from other labeled instances or taken from full column sums.
inline Vector labeled_degrees(const WeightGraph& g, const IndexList& labeled,
                              DegreeSource source) {
  const Index l = static_cast<Index>(labeled.size());
  Vector d(l);
  if (source == DegreeSource::kAllRows) {
    for (Index r = 0; r < l; ++r) d[r] = g.degrees[labeled[static_cast<std::size_t>(r)]];
  } else {
    const Matrix block = g.weights(labeled, labeled);
    d = block.colwise().sum();
  }
  return d;
}

/// Degree-weighted class normalizer: v_r = d_r / (total degree of r's
/// class), so each column of diag(v) * Y sums to exactly one.
inline Vector node_regularizer(const Matrix& Y, const Vector& labeled_degs) {
  const Index l = Y.rows();
  if (labeled_degs.size() != l)
    throw ConfigError("node regularizer: degree vector length mismatch");
  const Vector class_mass = Y.transpose() * labeled_degs;
  for (Index c = 0; c < class_mass.size(); ++c)
    if (!(class_mass[c] > 1e-12))
      throw NumericError("node regularizer: class " + std::to_string(c + 1) +
                         " has no positive degree mass");
  Vector v(l);
  for (Index r = 0; r < l; ++r) {
    Index cls = 0;
    Y.row(r).maxCoeff(&cls);
    v[r] = labeled_degs[r] / class_mass[cls];
  }
  return v;
}

}  // namespace recgraph
