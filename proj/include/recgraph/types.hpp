#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace recgraph {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

/// Class labels are 1..c per task; 0 marks a missing entry.
using LabelColumn = std::vector<int>;
inline constexpr int kMissingLabel = 0;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Bad user input: dimensions, ranges, malformed files, config keys.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A solve that cannot proceed: singular systems, empty class mass.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

enum class InferenceMode { kBatch, kProgressive };

/// Which rows contribute to the degree of a labeled instance when the
/// node regularizer is formed: column sums over labeled rows only, or
/// over the whole weight matrix.
enum class DegreeSource { kLabeledRows, kAllRows };

/// Row solve strategy; kAuto picks the cheaper of the two equivalent paths.
enum class SolvePath { kAuto, kDense, kLowRank };

/// Reconstruction support per instance: every other instance, or the k
/// nearest under the standardized concatenated-view metric.
class Neighborhood {
 public:
  Neighborhood() = default;
  static Neighborhood full() { return Neighborhood(); }
  static Neighborhood nearest(Index k) {
    if (k < 1) throw ConfigError("neighborhood size must be >= 1");
    Neighborhood nb;
    nb.k_ = k;
    return nb;
  }
  bool is_full() const { return k_ < 0; }
  Index k() const { return k_; }
  bool operator==(const Neighborhood& o) const { return k_ == o.k_; }

 private:
  Index k_ = -1;
};

/// One grid point for cross-propagation-guided parameter selection; empty
/// lists mean "keep the template's value".
struct GridCandidate {
  std::vector<double> alphas;
  std::vector<double> betas;
};

struct HyperParams {
  std::vector<double> alphas;  // view weights, one per view
  std::vector<double> betas;   // task weights, one per task
  double lambda = 1.0;         // sparsity penalty on the weight rows
  double gamma = kInfinity;    // label-fit penalty; infinity pins given labels
  double xi = 1e-4;            // relative diagonal shift for conditioning
  int z = 2;                   // propagation steps in the cross-propagation score
  Neighborhood neighborhood = Neighborhood::full();
  InferenceMode mode = InferenceMode::kBatch;
  int max_iters = 20;
  double tol = 1e-6;
  DegreeSource degree_source = DegreeSource::kLabeledRows;

  /// Checks ranges against a dataset shape (q views, p tasks, n instances).
  void validate(Index q, Index p, Index n) const {
    if (static_cast<Index>(alphas.size()) != q)
      throw ConfigError("expected " + std::to_string(q) + " view weights, got " +
                        std::to_string(alphas.size()));
    if (static_cast<Index>(betas.size()) != p)
      throw ConfigError("expected " + std::to_string(p) + " task weights, got " +
                        std::to_string(betas.size()));
    for (double a : alphas)
      if (!(a >= 0.0) || a > 1.0) throw ConfigError("view weights must lie in [0, 1]");
    for (double b : betas)
      if (!(b >= 0.0) || b > 1.0) throw ConfigError("task weights must lie in [0, 1]");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    if (!(gamma > 0.0)) throw ConfigError("gamma must be > 0 (or infinite)");
    if (!(xi >= 0.0) || xi >= 0.1) throw ConfigError("xi must lie in [0, 0.1)");
    if (z < 1) throw ConfigError("z must be >= 1");
    if (!neighborhood.is_full() && neighborhood.k() >= n)
      throw ConfigError("neighborhood size must be < number of instances");
    if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
    if (!(tol >= 0.0)) throw ConfigError("tol must be >= 0");
  }
};

}  // namespace recgraph
