#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "recgraph/types.hpp"
#include "recgraph/weights.hpp"

namespace recgraph {

/// Quadratic form behind the embedding cost, symmetrized against rounding.
/// Row-stochastic weights make the all-ones vector a null direction.
inline Matrix embedding_cost_matrix(const WeightGraph& g) {
  Matrix m = Matrix::Identity(g.n(), g.n()) - g.weights;
  Matrix cost = m.transpose() * m;
  cost = 0.5 * (cost + cost.transpose()).eval();
  return cost;
}

/// Low-dimensional coordinates: the d smallest-eigenvalue directions of the
/// cost matrix after the trivial constant direction is projected away.
struct Embedding {
  Matrix coords;             // n x d, orthonormal columns, each orthogonal to 1
  double cost = 0.0;         // value of the embedding cost at coords
  Vector eigenvalues;        // retained eigenvalues, ascending
  double discarded_eigenvalue = 0.0;  // cost along the constant direction (~0)
};

/// Keeps eigenvectors 2..d+1 by ascending eigenvalue. The constant
/// direction is deflated explicitly (shifted above the spectrum) so the
/// retained columns stay orthogonal to the all-ones vector even when the
/// zero eigenvalue is degenerate, e.g. on disconnected graphs. Each
/// column's first nonzero component is made positive so output files are
/// reproducible.
inline Embedding spectral_embed(const Matrix& cost_matrix, Index d) {
  const Index n = cost_matrix.rows();
  if (cost_matrix.cols() != n) throw ConfigError("spectral embed: matrix must be square");
  if (d < 1 || d > n - 1)
    throw ConfigError("spectral embed: dimension must lie in [1, " + std::to_string(n - 1) + "]");

  const Vector constant = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  const double lift = cost_matrix.trace() + 1.0;
  Matrix deflated = cost_matrix;
  deflated.noalias() += lift * (constant * constant.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> eig(deflated);
  if (eig.info() != Eigen::Success) throw NumericError("spectral embed: eigensolver failed");

  Embedding out;
  out.coords = eig.eigenvectors().leftCols(d);
  out.eigenvalues = eig.eigenvalues().head(d);
  out.discarded_eigenvalue = constant.dot(cost_matrix * constant);
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double x = out.coords(i, j);
      if (std::abs(x) > 1e-12) {
        if (x < 0.0) out.coords.col(j) = -out.coords.col(j);
        break;
      }
    }
  }
  out.cost = (out.coords.transpose() * (cost_matrix * out.coords)).trace();
  return out;
}

inline Embedding spectral_embed(const WeightGraph& g, Index d) {
  return spectral_embed(embedding_cost_matrix(g), d);
}

}  // namespace recgraph
