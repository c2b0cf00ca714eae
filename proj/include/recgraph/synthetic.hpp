#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "recgraph/dataset.hpp"
#include "recgraph/rng.hpp"
#include "recgraph/types.hpp"
#include "recgraph/weights.hpp"

namespace recgraph {

/// Two Gaussian clusters with known membership; the workhorse fixture for
/// driver and experiment tests.
struct BlobData {
  Matrix points;       // n x dim
  LabelColumn labels;  // 1 or 2
};

inline BlobData two_blobs(Index n, double separation, std::uint64_t seed, Index dim = 2) {
  Rng rng(seed);
  BlobData data;
  data.points.resize(n, dim);
  data.labels.resize(static_cast<std::size_t>(n));
  const Index half = n / 2;
  for (Index i = 0; i < n; ++i) {
    const bool second = i >= half;
    for (Index j = 0; j < dim; ++j)
      data.points(i, j) = rng.gaussian() + (second && j == 0 ? separation : 0.0);
    data.labels[static_cast<std::size_t>(i)] = second ? 2 : 1;
  }
  return data;
}

/// Flips exactly `count` randomly chosen labels to a different class.
inline LabelColumn flip_labels(const LabelColumn& labels, Index count, int classes,
                               std::uint64_t seed) {
  Rng rng(seed);
  IndexList order(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) order[i] = static_cast<Index>(i);
  rng.shuffle(order);
  LabelColumn noisy = labels;
  for (Index t = 0; t < count && t < static_cast<Index>(order.size()); ++t) {
    const std::size_t i = static_cast<std::size_t>(order[static_cast<std::size_t>(t)]);
    if (noisy[i] == kMissingLabel) continue;
    int other = 1 + static_cast<int>(rng.next_index(classes - 1));
    if (other >= noisy[i]) ++other;
    noisy[i] = other;
  }
  return noisy;
}

/// Small random problem used by the property suites: shapes, features,
/// partially observed labels and weights all drawn from the seed. Every
/// class is observed at least once and at least one label is missing.
struct RandomInstance {
  Dataset ds;
  HyperParams hp;
};

inline RandomInstance random_instance(std::uint64_t seed, Index max_n = 10, Index max_dim = 5,
                                      Index max_views = 2, Index max_tasks = 2) {
  Rng rng(seed);
  const Index n = 5 + rng.next_index(max_n - 4);
  const Index q = 1 + rng.next_index(max_views);
  const Index p = 1 + rng.next_index(max_tasks);

  std::vector<Matrix> views;
  for (Index k = 0; k < q; ++k) {
    const Index d = 1 + rng.next_index(max_dim);
    Matrix x(n, d);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < d; ++j) x(i, j) = rng.gaussian();
    views.push_back(std::move(x));
  }

  std::vector<LabelColumn> tasks;
  for (Index k = 0; k < p; ++k) {
    const int c = 2 + static_cast<int>(rng.next_index(2));
    LabelColumn col(static_cast<std::size_t>(n), kMissingLabel);
    for (int cls = 0; cls < c; ++cls) col[static_cast<std::size_t>(cls)] = cls + 1;
    bool any_missing = false;
    for (Index i = c; i < n; ++i) {
      if (rng.next_double() < 0.5)
        col[static_cast<std::size_t>(i)] = 1 + static_cast<int>(rng.next_index(c));
      else
        any_missing = true;
    }
    if (!any_missing) col[static_cast<std::size_t>(n - 1)] = kMissingLabel;
    tasks.push_back(std::move(col));
  }

  RandomInstance inst;
  inst.ds = validate_dataset(std::move(views), std::move(tasks));
  for (Index k = 0; k < q; ++k) inst.hp.alphas.push_back(rng.uniform(0.1, 1.0));
  for (Index k = 0; k < p; ++k) inst.hp.betas.push_back(rng.uniform(0.1, 1.0));
  inst.hp.lambda = rng.uniform(0.1, 2.0);
  const double xis[3] = {0.0, 1e-4, 1e-3};
  inst.hp.xi = xis[rng.next_index(3)];
  return inst;
}

/// Random row-stochastic weight matrix with a zero diagonal and a sprinkle
/// of negative entries, for exercising the solvers off the learning path.
inline WeightGraph random_weight_graph(std::uint64_t seed, Index n) {
  Rng rng(seed);
  Matrix w(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) w(i, j) = i == j ? 0.0 : rng.uniform(0.0, 1.0) - 0.15;
    w.row(i) /= w.row(i).sum();
  }
  return assemble_weight_matrix(std::move(w));
}

/// Random labeled/unlabeled split plus a positively scaled one-hot prior
/// (the shape the inference routines consume).
struct RandomPrior {
  IndexList labeled;
  IndexList unlabeled;
  Matrix scaled;    // l x c
  Matrix expanded;  // n x c, zeros at unlabeled rows
  int classes = 0;
};

inline RandomPrior random_prior(std::uint64_t seed, Index n) {
  Rng rng(seed);
  RandomPrior prior;
  prior.classes = 2 + static_cast<int>(rng.next_index(2));
  const Index c = prior.classes;
  const Index l = c + rng.next_index(n - c);  // keep at least one unlabeled
  IndexList order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  rng.shuffle(order);
  prior.labeled.assign(order.begin(), order.begin() + l);
  prior.unlabeled.assign(order.begin() + l, order.end());
  std::sort(prior.labeled.begin(), prior.labeled.end());
  std::sort(prior.unlabeled.begin(), prior.unlabeled.end());
  prior.scaled = Matrix::Zero(l, c);
  prior.expanded = Matrix::Zero(n, c);
  for (Index r = 0; r < l; ++r) {
    const Index cls = r < c ? r : rng.next_index(c);
    prior.scaled(r, cls) = rng.uniform(0.5, 1.5);
    prior.expanded(prior.labeled[static_cast<std::size_t>(r)], cls) = prior.scaled(r, cls);
  }
  return prior;
}

}  // namespace recgraph
