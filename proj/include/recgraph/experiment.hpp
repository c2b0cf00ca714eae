#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "recgraph/dataset.hpp"
#include "recgraph/embedding.hpp"
#include "recgraph/evaluation.hpp"
#include "recgraph/inference.hpp"
#include "recgraph/io.hpp"
#include "recgraph/parallel.hpp"
#include "recgraph/rng.hpp"
#include "recgraph/types.hpp"

namespace recgraph {

/// Which instances keep their label in a trial, per task (sorted).
struct LabelMask {
  std::vector<IndexList> labeled;
};

/// Stratified label masking: every observed class keeps at least one
/// (seeded) representative, then the budget ceil(fraction * n) — raised to
/// the class count when smaller — is filled uniformly from the remaining
/// observed instances. Deterministic in the seed.
inline LabelMask mask_labels(const std::vector<LabelColumn>& truth, double fraction,
                             std::uint64_t seed) {
  if (!(fraction > 0.0) || !(fraction < 1.0))
    throw ConfigError("label fraction must lie in (0, 1)");
  LabelMask mask;
  Rng rng(seed);
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const LabelColumn& column = truth[k];
    const Index n = static_cast<Index>(column.size());
    int classes = 0;
    for (int y : column) classes = std::max(classes, y);
    if (classes < 1) throw ConfigError("mask: task " + std::to_string(k + 1) + " has no labels");

    std::vector<IndexList> members(static_cast<std::size_t>(classes));
    Index observed = 0;
    for (Index i = 0; i < n; ++i) {
      const int y = column[static_cast<std::size_t>(i)];
      if (y == kMissingLabel) continue;
      members[static_cast<std::size_t>(y - 1)].push_back(i);
      ++observed;
    }
    for (int c = 0; c < classes; ++c)
      if (members[static_cast<std::size_t>(c)].empty())
        throw ConfigError("mask: task " + std::to_string(k + 1) + " class " +
                          std::to_string(c + 1) + " has no observed instance");

    Index budget = static_cast<Index>(
        std::ceil(fraction * static_cast<double>(n)));
    budget = std::max<Index>(budget, classes);
    if (budget > observed)
      throw ConfigError("mask: task " + std::to_string(k + 1) + ": budget exceeds observed labels");

    IndexList chosen;
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    for (int c = 0; c < classes; ++c) {
      const IndexList& pool = members[static_cast<std::size_t>(c)];
      const Index pick = pool[static_cast<std::size_t>(rng.next_index(static_cast<Index>(pool.size())))];
      chosen.push_back(pick);
      taken[static_cast<std::size_t>(pick)] = true;
    }
    IndexList rest;
    for (int c = 0; c < classes; ++c)
      for (Index i : members[static_cast<std::size_t>(c)])
        if (!taken[static_cast<std::size_t>(i)]) rest.push_back(i);
    std::sort(rest.begin(), rest.end());
    rng.shuffle(rest);
    for (Index t = 0; t < budget - static_cast<Index>(classes); ++t)
      chosen.push_back(rest[static_cast<std::size_t>(t)]);
    std::sort(chosen.begin(), chosen.end());
    mask.labeled.push_back(std::move(chosen));
  }
  return mask;
}

/// Hides every label outside the mask. The learner only ever sees this.
inline std::vector<LabelColumn> apply_mask(const std::vector<LabelColumn>& truth,
                                           const LabelMask& mask) {
  std::vector<LabelColumn> masked(truth.size());
  for (std::size_t k = 0; k < truth.size(); ++k) {
    masked[k].assign(truth[k].size(), kMissingLabel);
    for (Index i : mask.labeled[k])
      masked[k][static_cast<std::size_t>(i)] = truth[k][static_cast<std::size_t>(i)];
  }
  return masked;
}

/// Evaluation indices: observed in truth but hidden from the learner.
inline std::vector<IndexList> hidden_indices(const std::vector<LabelColumn>& truth,
                                             const LabelMask& mask) {
  std::vector<IndexList> hidden(truth.size());
  for (std::size_t k = 0; k < truth.size(); ++k) {
    std::vector<bool> kept(truth[k].size(), false);
    for (Index i : mask.labeled[k]) kept[static_cast<std::size_t>(i)] = true;
    for (std::size_t i = 0; i < truth[k].size(); ++i)
      if (!kept[i] && truth[k][i] != kMissingLabel) hidden[k].push_back(static_cast<Index>(i));
  }
  return hidden;
}

struct TrialOutcome {
  LearnResult learn;
  HyperParams chosen;
  TrialMetrics metrics;
};

/// One masked trial: optional grid selection, learn, score on the hidden
/// labels. The dataset handed to the learner is built from the masked
/// columns only, so hidden truth cannot leak into training.
inline TrialOutcome run_trial(const std::vector<Matrix>& views,
                              const std::vector<LabelColumn>& truth,
                              const std::vector<int>& classes, const LabelMask& mask,
                              const HyperParams& base, const std::vector<GridCandidate>& grid,
                              int threads = 1) {
  const std::vector<LabelColumn> masked = apply_mask(truth, mask);
  Dataset ds = validate_dataset(views, masked);
  for (std::size_t k = 0; k < classes.size(); ++k)
    if (ds.classes[k] > classes[k])
      throw ConfigError("trial: masked labels exceed declared class count");
  ds.classes.assign(classes.begin(), classes.end());

  TrialOutcome outcome;
  outcome.chosen = grid.empty() ? base : select_params_by_cp(ds, grid, base, threads);
  outcome.learn = run(ds, outcome.chosen, threads);

  const std::vector<IndexList> hidden = hidden_indices(truth, mask);
  outcome.metrics.error_rate = error_rate(outcome.learn.inference.predictions, truth, hidden);
  outcome.metrics.f1_micro = f1_micro(outcome.learn.inference.predictions, truth, hidden);
  const SignedLabels given = signed_label_matrix(ds.tasks, ds.classes);
  outcome.metrics.cp_off_diag =
      cross_propagation(outcome.learn.graph, given, outcome.chosen.z).score();
  return outcome;
}

/// Full per-trial record as written to the trial log.
struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  std::vector<double> alphas, betas;
  TrialMetrics metrics;
  double wall_ms = 0.0;
};

struct ExperimentResult {
  MetricReport report;
  std::vector<TrialRecord> records;
  Index n = 0, q = 0, p = 0;
};

namespace detail {

inline std::string join_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_g17(v[i]);
  }
  return s;
}

inline HyperParams config_hyperparams(const ExperimentConfig& cfg, Index q, Index p) {
  HyperParams hp;
  hp.alphas = cfg.alphas.empty() ? std::vector<double>(static_cast<std::size_t>(q), 1.0)
                                 : cfg.alphas;
  hp.betas = cfg.betas.empty() ? std::vector<double>(static_cast<std::size_t>(p), 1.0)
                               : cfg.betas;
  hp.lambda = cfg.lambda;
  hp.gamma = cfg.gamma;
  hp.xi = cfg.xi;
  hp.z = cfg.z;
  hp.neighborhood = cfg.neighborhood;
  hp.mode = cfg.inference;
  hp.max_iters = cfg.max_iters;
  hp.tol = cfg.tol;
  return hp;
}

inline void write_summary(std::ostream& os, const ExperimentConfig& cfg,
                          const ExperimentResult& result, const HyperParams& base) {
  os << "mode = " << (cfg.mode == ExperimentMode::kMultiTask ? "multitask" : "multiview") << '\n';
  os << "data = " << cfg.data << '\n';
  os << "instances = " << result.n << '\n';
  os << "views = " << result.q << '\n';
  os << "tasks = " << result.p << '\n';
  os << "label_fraction = " << format_g17(cfg.label_fraction) << '\n';
  os << "trials = " << cfg.trials << '\n';
  os << "seed = " << cfg.seed << '\n';
  os << "alpha = " << join_list(base.alphas) << '\n';
  os << "beta = " << join_list(base.betas) << '\n';
  os << "lambda = " << format_g17(base.lambda) << '\n';
  os << "gamma = " << format_g17(base.gamma) << '\n';
  os << "xi = " << format_g17(base.xi) << '\n';
  os << "z = " << base.z << '\n';
  os << "neighborhood = "
     << (base.neighborhood.is_full() ? std::string("full") : std::to_string(base.neighborhood.k()))
     << '\n';
  os << "inference = " << (base.mode == InferenceMode::kBatch ? "batch" : "progressive") << '\n';
  os << "max_iters = " << base.max_iters << '\n';
  os << "tol = " << format_g17(base.tol) << '\n';
  os << "cp_grid_size = " << cfg.cp_grid.size() << '\n';
  os << "mean_error_rate = " << format_g17(result.report.mean_error) << '\n';
  os << "std_error_rate = " << format_g17(result.report.std_error) << '\n';
  os << "mean_f1_micro = " << format_g17(result.report.mean_f1) << '\n';
  os << "std_f1_micro = " << format_g17(result.report.std_f1) << '\n';
  os << "mean_cp_off_diag = " << format_g17(result.report.mean_cp_off_diag) << '\n';
}

inline void write_trial_log(std::ostream& os, const std::vector<TrialRecord>& records) {
  for (const TrialRecord& r : records) {
    os << "trial=" << r.trial << " seed=" << r.seed << " alpha=" << join_list(r.alphas)
       << " beta=" << join_list(r.betas) << " error_rate=" << format_g17(r.metrics.error_rate)
       << " f1_micro=" << format_g17(r.metrics.f1_micro)
       << " cp_off_diag=" << format_g17(r.metrics.cp_off_diag) << " wall_ms=" << r.wall_ms
       << '\n';
  }
}

}  // namespace detail

/// Runs every trial of an experiment over pre-split views and truth labels.
/// Trials use independent derived seeds and may run concurrently; records
/// land in trial order, so aggregates do not depend on the thread count.
/// When `write_files` is set, writes summary.txt, trials.txt and the first
/// trial's weight matrix / soft labels / predictions (plus the spectral
/// embedding when embed_dim is set) under cfg.out.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       const std::vector<Matrix>& views,
                                       const std::vector<LabelColumn>& truth,
                                       const std::vector<int>& classes, int threads = 1,
                                       bool write_files = false) {
  if (truth.empty()) throw ConfigError("experiment: no label columns");
  const Index n = static_cast<Index>(truth.front().size());
  const Index q = static_cast<Index>(views.size());
  const Index p = static_cast<Index>(truth.size());
  const HyperParams base = detail::config_hyperparams(cfg, q, p);
  base.validate(q, p, n);

  ExperimentResult result;
  result.n = n;
  result.q = q;
  result.p = p;
  result.records.resize(static_cast<std::size_t>(cfg.trials));

  const int outer = std::min<int>(threads, cfg.trials);
  const int inner = cfg.trials == 1 ? threads : 1;
  std::filesystem::path out_dir(cfg.out);
  if (write_files) std::filesystem::create_directories(out_dir);

  parallel_for(Index{0}, Index{cfg.trials}, outer, [&](Index t) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t trial_seed = Rng::derive(cfg.seed, static_cast<std::uint64_t>(t));
    const LabelMask mask = mask_labels(truth, cfg.label_fraction, trial_seed);
    const TrialOutcome outcome = run_trial(views, truth, classes, mask, base, cfg.cp_grid, inner);
    TrialRecord rec;
    rec.trial = static_cast<int>(t);
    rec.seed = trial_seed;
    rec.alphas = outcome.chosen.alphas;
    rec.betas = outcome.chosen.betas;
    rec.metrics = outcome.metrics;
    rec.metrics.seed = trial_seed;
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                            start)
                      .count();
    result.records[static_cast<std::size_t>(t)] = std::move(rec);

    if (write_files && t == 0) {
      save_matrix((out_dir / "trial0_weights.txt").string(), outcome.learn.graph.weights);
      for (std::size_t k = 0; k < outcome.learn.inference.soft_f.size(); ++k)
        save_matrix((out_dir / ("trial0_soft_labels_task" + std::to_string(k + 1) + ".txt")).string(),
                    outcome.learn.inference.soft_f[k]);
      std::ofstream pf(out_dir / "trial0_predictions.txt");
      for (Index i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < outcome.learn.inference.predictions.size(); ++k) {
          if (k) pf << ' ';
          pf << outcome.learn.inference.predictions[k][static_cast<std::size_t>(i)];
        }
        pf << '\n';
      }
      if (cfg.embed_dim > 0) {
        const Embedding emb = spectral_embed(outcome.learn.graph, cfg.embed_dim);
        save_matrix((out_dir / "trial0_embedding.txt").string(), emb.coords);
      }
    }
  });

  for (const TrialRecord& r : result.records) result.report.per_trial.push_back(r.metrics);
  result.report.recompute();

  if (write_files) {
    std::ofstream summary(out_dir / "summary.txt");
    detail::write_summary(summary, cfg, result, base);
    std::ofstream log(out_dir / "trials.txt");
    detail::write_trial_log(log, result.records);
  }
  return result;
}

/// Loads the data file named by the config (trailing task_count() columns
/// are labels, comma-delimited) and runs the experiment.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads = 1,
                                       bool write_files = true) {
  // probe the file width to locate the trailing label columns
  std::ifstream probe(cfg.data);
  if (!probe) throw ConfigError("cannot open '" + cfg.data + "'");
  std::string first_line;
  do {
    if (!std::getline(probe, first_line)) throw ConfigError(cfg.data + ": no data rows");
  } while (trim(first_line).empty());
  const Index width = static_cast<Index>(split(first_line, ',').size());
  const Index p = cfg.task_count();
  if (width <= p) throw ConfigError(cfg.data + ": fewer columns than label columns");
  std::vector<Index> label_cols;
  for (Index c = width - p; c < width; ++c) label_cols.push_back(c);
  const Table table = load_table(cfg.data, ',', label_cols);

  ViewSplit vs = cfg.view_split;
  if (!cfg.view_split_set && cfg.mode == ExperimentMode::kMultiTask) {
    vs.halves = false;
    vs.ranges = {{1, table.features.cols()}};
  }
  const std::vector<Matrix> views = split_views(table.features, vs);
  return run_experiment(cfg, views, table.labels, table.classes, threads, write_files);
}

}  // namespace recgraph
