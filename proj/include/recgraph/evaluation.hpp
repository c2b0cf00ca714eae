#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "recgraph/dataset.hpp"
#include "recgraph/inference.hpp"
#include "recgraph/parallel.hpp"
#include "recgraph/types.hpp"
#include "recgraph/weights.hpp"

namespace recgraph {

/// Task-by-task transfer score. Entry (s, t) accumulates how much signed
/// label mass of task s reaches instances labeled for task t after z
/// propagation steps; off-diagonal mass measures cross-task transfer.
struct CpReport {
  Matrix matrix;  // p x p, one-vs-rest blocks summed per task pair
  double off_diagonal_sum = 0.0;
  double diagonal_sum = 0.0;

  /// Selection score: off-diagonal transfer when several tasks exist,
  /// otherwise the single intra-task value.
  double score() const { return matrix.rows() > 1 ? off_diagonal_sum : matrix(0, 0); }
};

/// F^T W^z F computed by z successive propagations of the signed columns
/// (the z-step matrix itself is never formed).
inline CpReport cross_propagation(const WeightGraph& g, const SignedLabels& signed_labels,
                                  int z) {
  if (z < 1) throw ConfigError("cross propagation: z must be >= 1");
  if (signed_labels.columns.rows() != g.n())
    throw ConfigError("cross propagation: label matrix row count mismatch");
  Matrix propagated = signed_labels.columns;
  for (int step = 0; step < z; ++step) propagated = g.weights * propagated;
  const Matrix expanded = signed_labels.columns.transpose() * propagated;

  CpReport report;
  const Index p = signed_labels.task_count;
  report.matrix = Matrix::Zero(p, p);
  for (Index a = 0; a < expanded.rows(); ++a)
    for (Index b = 0; b < expanded.cols(); ++b)
      report.matrix(signed_labels.task_of_col[static_cast<std::size_t>(a)],
                    signed_labels.task_of_col[static_cast<std::size_t>(b)]) += expanded(a, b);
  report.diagonal_sum = report.matrix.diagonal().sum();
  report.off_diagonal_sum = report.matrix.sum() - report.diagonal_sum;
  return report;
}

/// Learns once per grid point and keeps the candidate whose graph scores
/// highest under cross propagation of the *given* labels (predictions never
/// feed back into the score). Ties keep the earliest grid entry.
inline HyperParams select_params_by_cp(const Dataset& ds, const std::vector<GridCandidate>& grid,
                                       const HyperParams& base, int threads = 1,
                                       std::vector<double>* scores_out = nullptr) {
  if (grid.empty()) throw ConfigError("parameter selection: empty grid");
  const SignedLabels given = signed_label_matrix(ds.tasks, ds.classes);
  std::vector<double> scores(grid.size());
  parallel_for(Index{0}, static_cast<Index>(grid.size()), threads, [&](Index g) {
    HyperParams hp = base;
    if (!grid[static_cast<std::size_t>(g)].alphas.empty())
      hp.alphas = grid[static_cast<std::size_t>(g)].alphas;
    if (!grid[static_cast<std::size_t>(g)].betas.empty())
      hp.betas = grid[static_cast<std::size_t>(g)].betas;
    const LearnResult res = run(ds, hp, 1);
    scores[static_cast<std::size_t>(g)] = cross_propagation(res.graph, given, hp.z).score();
  });
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (scores[g] > scores[best]) best = g;
  if (scores_out) *scores_out = scores;
  HyperParams chosen = base;
  if (!grid[best].alphas.empty()) chosen.alphas = grid[best].alphas;
  if (!grid[best].betas.empty()) chosen.betas = grid[best].betas;
  return chosen;
}

namespace detail {

struct PooledCounts {
  double tp = 0.0, fp = 0.0, fn = 0.0, wrong = 0.0, total = 0.0;
};

inline PooledCounts pool_counts(const std::vector<LabelColumn>& predictions,
                                const std::vector<LabelColumn>& truth,
                                const std::vector<IndexList>& eval_idx,
                                const std::vector<int>* positive_class) {
  if (predictions.size() != truth.size() || predictions.size() != eval_idx.size())
    throw ConfigError("metrics: prediction/truth/index lists differ in length");
  PooledCounts counts;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    if (predictions[k].size() != truth[k].size())
      throw ConfigError("metrics: prediction/truth length mismatch in task " +
                        std::to_string(k + 1));
    const int positive = positive_class ? (*positive_class)[k] : 0;
    for (Index i : eval_idx[k]) {
      const int t = truth[k][static_cast<std::size_t>(i)];
      if (t == kMissingLabel) continue;
      const int p = predictions[k][static_cast<std::size_t>(i)];
      counts.total += 1.0;
      if (p != t) counts.wrong += 1.0;
      if (positive == 0) {
        if (p == t) {
          counts.tp += 1.0;
        } else {
          counts.fp += 1.0;
          counts.fn += 1.0;
        }
      } else {
        if (p == positive && t == positive) counts.tp += 1.0;
        if (p == positive && t != positive) counts.fp += 1.0;
        if (p != positive && t == positive) counts.fn += 1.0;
      }
    }
  }
  return counts;
}

}  // namespace detail

/// Micro-averaged F1 pooled over tasks and instances: 2TP/(2TP+FP+FN).
/// Without a positive-class map every class counts one-vs-rest; with one,
/// only the designated class of each task contributes. Zero denominator
/// yields 0.
inline double f1_micro(const std::vector<LabelColumn>& predictions,
                       const std::vector<LabelColumn>& truth,
                       const std::vector<IndexList>& eval_idx,
                       const std::vector<int>* positive_class = nullptr) {
  const auto counts = detail::pool_counts(predictions, truth, eval_idx, positive_class);
  const double denom = 2.0 * counts.tp + counts.fp + counts.fn;
  return denom == 0.0 ? 0.0 : 2.0 * counts.tp / denom;
}

/// Fraction of evaluation entries whose hardened label differs from truth.
inline double error_rate(const std::vector<LabelColumn>& predictions,
                         const std::vector<LabelColumn>& truth,
                         const std::vector<IndexList>& eval_idx) {
  const auto counts = detail::pool_counts(predictions, truth, eval_idx, nullptr);
  return counts.total == 0.0 ? 0.0 : counts.wrong / counts.total;
}

/// Single-task conveniences.
inline double f1_micro(const LabelColumn& predictions, const LabelColumn& truth,
                       const IndexList& eval_idx, int positive_class = 0) {
  const std::vector<int> map{positive_class};
  return f1_micro({predictions}, {truth}, {eval_idx}, positive_class == 0 ? nullptr : &map);
}

inline double error_rate(const LabelColumn& predictions, const LabelColumn& truth,
                         const IndexList& eval_idx) {
  return error_rate(std::vector<LabelColumn>{predictions}, {truth}, {eval_idx});
}

/// Per-trial metric row plus aggregates; means and standard deviations are
/// always recomputed from the rows.
struct TrialMetrics {
  std::uint64_t seed = 0;
  double error_rate = 0.0;
  double f1_micro = 0.0;
  double cp_off_diag = 0.0;
};

struct MetricReport {
  std::vector<TrialMetrics> per_trial;
  double mean_error = 0.0, std_error = 0.0;
  double mean_f1 = 0.0, std_f1 = 0.0;
  double mean_cp_off_diag = 0.0;

  void recompute() {
    const double n = static_cast<double>(per_trial.size());
    if (n == 0.0) return;
    double se = 0.0, sf = 0.0, sc = 0.0;
    for (const TrialMetrics& t : per_trial) {
      se += t.error_rate;
      sf += t.f1_micro;
      sc += t.cp_off_diag;
    }
    mean_error = se / n;
    mean_f1 = sf / n;
    mean_cp_off_diag = sc / n;
    double ve = 0.0, vf = 0.0;
    for (const TrialMetrics& t : per_trial) {
      ve += (t.error_rate - mean_error) * (t.error_rate - mean_error);
      vf += (t.f1_micro - mean_f1) * (t.f1_micro - mean_f1);
    }
    std_error = n > 1.0 ? std::sqrt(ve / (n - 1.0)) : 0.0;
    std_f1 = n > 1.0 ? std::sqrt(vf / (n - 1.0)) : 0.0;
  }
};

}  // namespace recgraph
