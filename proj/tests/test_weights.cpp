#include <catch2/catch_amalgamated.hpp>

#include <Eigen/QR>

#include "recgraph/dataset.hpp"
#include "recgraph/inference.hpp"
#include "recgraph/reference.hpp"
#include "recgraph/rng.hpp"
#include "recgraph/synthetic.hpp"
#include "recgraph/weights.hpp"

using namespace recgraph;

namespace {

Dataset one_dim_dataset(std::initializer_list<double> xs, LabelColumn labels) {
  Matrix x(static_cast<Index>(xs.size()), 1);
  Index i = 0;
  for (double v : xs) x(i++, 0) = v;
  return validate_dataset({x}, {std::move(labels)});
}

std::vector<Matrix> initial_f(const Dataset& ds) {
  std::vector<Matrix> fs;
  for (const LabelState& st : binarize_all(ds)) fs.push_back(st.F);
  return fs;
}

HyperParams simple_params(const Dataset& ds, double lambda = 1.0, double xi = 0.0) {
  HyperParams hp;
  hp.alphas.assign(static_cast<std::size_t>(ds.q), 1.0);
  hp.betas.assign(static_cast<std::size_t>(ds.p), 0.5);
  hp.lambda = lambda;
  hp.xi = xi;
  return hp;
}

Matrix random_orthogonal(Index d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix g(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) g(i, j) = rng.gaussian();
  return Eigen::HouseholderQR<Matrix>(g).householderQ();
}

}  // namespace

TEST_CASE("full neighborhoods cover everyone else") {
  const Dataset ds = one_dim_dataset({0, 1, 2, 3}, {1, 2, kMissingLabel, kMissingLabel});
  for (Index i = 0; i < 4; ++i) {
    const IndexList nb = neighbor_set(ds, i, Neighborhood::full());
    CHECK(nb.size() == 3);
    CHECK(std::find(nb.begin(), nb.end(), i) == nb.end());
  }
}

TEST_CASE("nearest neighborhood picks by distance, never itself") {
  const Dataset ds = one_dim_dataset({0, 1, 10}, {1, 2, kMissingLabel});
  CHECK(neighbor_set(ds, 0, Neighborhood::nearest(1)) == IndexList{1});
  CHECK(neighbor_set(ds, 2, Neighborhood::nearest(1)) == IndexList{1});
  CHECK_THROWS_AS(neighbor_set(ds, 0, Neighborhood::nearest(3)), ConfigError);
}

TEST_CASE("nearest neighborhood breaks distance ties by lower index") {
  // instance 1 sits exactly between 0 and 2
  const Dataset ds = one_dim_dataset({-1, 0, 1, 5}, {1, 2, 1, kMissingLabel});
  CHECK(neighbor_set(ds, 1, Neighborhood::nearest(1)) == IndexList{0});
}

TEST_CASE("local covariance of coincident points vanishes") {
  const RowVector center = RowVector::Constant(3, 2.0);
  const Matrix neighbors = Matrix::Constant(4, 3, 2.0);
  CHECK(local_covariance(center, neighbors).isZero());
}

TEST_CASE("local covariance of a mirrored pair") {
  RowVector center(1);
  center << 0.0;
  Matrix neighbors(2, 1);
  neighbors << 1.0, -1.0;
  const Matrix cov = local_covariance(center, neighbors);
  Matrix expected(2, 2);
  expected << 1.0, -1.0, -1.0, 1.0;
  CHECK(cov == expected);
}

TEST_CASE("local covariance ignores translations") {
  Rng rng(7);
  Matrix neighbors(4, 3);
  RowVector center(3);
  RowVector offset(3);
  for (Index j = 0; j < 3; ++j) {
    center[j] = rng.gaussian();
    offset[j] = rng.gaussian();
    for (Index i = 0; i < 4; ++i) neighbors(i, j) = rng.gaussian();
  }
  const Matrix base = local_covariance(center, neighbors);
  const Matrix shifted = local_covariance(center + offset, neighbors.rowwise() + offset);
  CHECK((base - shifted).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("conditioning adds a trace-scaled shift with an absolute floor") {
  const Matrix eye = Matrix::Identity(2, 2);
  CHECK((condition_system(eye, 0.01) - 1.01 * eye).cwiseAbs().maxCoeff() == 0.0);
  CHECK(condition_system(Matrix::Zero(3, 3), 0.01) == 1e-8 * Matrix::Identity(3, 3));
  const Matrix well = Matrix::Identity(4, 4) * 5.0;
  CHECK(condition_system(well, 0.0) == well);
}

TEST_CASE("mirror-symmetric neighbors share the weight equally") {
  const Dataset ds = one_dim_dataset({0, 1, -1}, {1, 2, kMissingLabel});
  HyperParams hp = simple_params(ds, GENERATE(0.0, 0.5, 10.0));
  hp.betas = {0.0};
  const Vector row = solve_weight_row(ds, initial_f(ds), hp, 0, {1, 2});
  CHECK(row[0] == 0.0);
  CHECK(row[1] == Catch::Approx(0.5).margin(1e-12));
  CHECK(row[2] == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("ridge-dominated rows are uniform") {
  const Dataset ds = one_dim_dataset({0, 3, 7, 20}, {1, 2, kMissingLabel, kMissingLabel});
  HyperParams hp = simple_params(ds, 2.5);
  hp.alphas = {0.0};
  hp.betas = {0.0};
  const Vector row = solve_weight_row(ds, initial_f(ds), hp, 2, {0, 1, 3});
  for (Index j : {0, 1, 3}) CHECK(row[j] == Catch::Approx(1.0 / 3).margin(1e-14));
}

TEST_CASE("row solve matches the bordered KKT oracle on a seeded instance") {
  Rng rng(42);
  Matrix x(5, 3);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 3; ++j) x(i, j) = rng.gaussian();
  const Dataset ds = validate_dataset({x}, {{1, 2, 1, kMissingLabel, kMissingLabel}});
  const HyperParams hp = simple_params(ds, 0.7);
  const auto fs = initial_f(ds);
  for (Index i = 0; i < ds.n; ++i) {
    const IndexList nb = neighbor_set(ds, i, Neighborhood::full());
    const Vector fast = solve_weight_row(ds, fs, hp, i, nb);
    const Vector oracle = reference::kkt_weight_row(ds, fs, hp, i, nb);
    CHECK((fast - oracle).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("row solve equals the KKT oracle across random instances") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const RandomInstance inst = random_instance(seed);
    const auto fs = initial_f(inst.ds);
    const auto neighbors = all_neighbor_sets(inst.ds, Neighborhood::full());
    for (Index i = 0; i < inst.ds.n; ++i) {
      const Vector fast =
          solve_weight_row(inst.ds, fs, inst.hp, i, neighbors[static_cast<std::size_t>(i)]);
      const Vector oracle = reference::kkt_weight_row(inst.ds, fs, inst.hp, i,
                                                      neighbors[static_cast<std::size_t>(i)]);
      REQUIRE((fast - oracle).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("factored and dense row solves agree") {
  for (std::uint64_t seed = 200; seed < 230; ++seed) {
    const RandomInstance inst = random_instance(seed, 12, 6);
    const auto fs = initial_f(inst.ds);
    const auto neighbors = all_neighbor_sets(inst.ds, Neighborhood::full());
    for (Index i = 0; i < inst.ds.n; ++i) {
      const IndexList& nb = neighbors[static_cast<std::size_t>(i)];
      const Vector dense = solve_weight_row(inst.ds, fs, inst.hp, i, nb, SolvePath::kDense);
      const Vector fact = solve_weight_row(inst.ds, fs, inst.hp, i, nb, SolvePath::kLowRank);
      REQUIRE((dense - fact).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("a genuinely singular local system is a hard error naming the row") {
  // rank-1 feature geometry, no ridge, no conditioning
  const Dataset ds = one_dim_dataset({0, 1, 2, 5}, {1, 2, kMissingLabel, kMissingLabel});
  HyperParams hp = simple_params(ds, 0.0, 0.0);
  hp.betas = {0.0};
  CHECK_THROWS_WITH(solve_weight_row(ds, initial_f(ds), hp, 3, {0, 1, 2}, SolvePath::kDense),
                    Catch::Matchers::ContainsSubstring("row 3"));
}

TEST_CASE("assembly checks row sums and the diagonal") {
  Matrix ok(2, 2);
  ok << 0, 1, 1, 0;
  const WeightGraph g = assemble_weight_matrix(ok);
  CHECK(g.degrees == Vector::Ones(2));

  Matrix bad = ok;
  bad(0, 1) = 0.9;
  CHECK_THROWS_AS(assemble_weight_matrix(bad), ConfigError);

  Matrix diag(2, 2);
  diag << 0.5, 0.5, 1, 0;
  CHECK_THROWS_WITH(assemble_weight_matrix(diag),
                    Catch::Matchers::ContainsSubstring("diagonal"));

  Matrix uniform = Matrix::Constant(3, 3, 0.5);
  uniform.diagonal().setZero();
  const WeightGraph u = assemble_weight_matrix(uniform);
  CHECK((u.degrees - Vector::Ones(3)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("node regularizer normalizes class mass") {
  Matrix y(5, 2);
  y << 1, 0, 1, 0, 0, 1, 0, 1, 0, 1;
  const Vector v = node_regularizer(y, Vector::Ones(5));
  Vector expected(5);
  expected << 0.5, 0.5, 1.0 / 3, 1.0 / 3, 1.0 / 3;
  CHECK((v - expected).cwiseAbs().maxCoeff() < 1e-15);

  Matrix singles = Matrix::Identity(3, 3);
  Vector degs(3);
  degs << 0.3, 1.7, 2.2;
  CHECK(node_regularizer(singles, degs) == Vector::Ones(3));

  Vector dead = Vector::Ones(5);
  dead[2] = dead[3] = dead[4] = 0.0;  // class 2 loses all its degree
  CHECK_THROWS_AS(node_regularizer(y, dead), NumericError);
}

TEST_CASE("columns of the regularized prior always sum to one") {
  for (std::uint64_t seed = 300; seed < 320; ++seed) {
    Rng rng(seed);
    const Index l = 4 + rng.next_index(6);
    const int c = 2 + static_cast<int>(rng.next_index(2));
    Matrix y = Matrix::Zero(l, c);
    for (Index r = 0; r < l; ++r) y(r, r < c ? r : rng.next_index(c)) = 1.0;
    Vector degs(l);
    for (Index r = 0; r < l; ++r) degs[r] = rng.uniform(0.1, 3.0);
    const Vector v = node_regularizer(y, degs);
    const Vector colsum = y.transpose() * v;
    CHECK((colsum - Vector::Ones(c)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("weights are invariant to rotating, translating or rescaling a view") {
  const RandomInstance inst = random_instance(77, 9, 4);
  const auto fs = initial_f(inst.ds);
  const auto neighbors = all_neighbor_sets(inst.ds, Neighborhood::full());
  const WeightGraph base = solve_all_weight_rows(inst.ds, fs, inst.hp, neighbors);

  Dataset rotated = inst.ds;
  rotated.views[0] = inst.ds.views[0] * random_orthogonal(inst.ds.view_dim(0), 5);
  const WeightGraph rot = solve_all_weight_rows(rotated, fs, inst.hp, neighbors);
  CHECK((rot.weights - base.weights).cwiseAbs().maxCoeff() < 1e-10);

  Dataset shifted = inst.ds;
  shifted.views[0] = inst.ds.views[0].rowwise() + RowVector::Constant(inst.ds.view_dim(0), 3.25);
  const WeightGraph shift = solve_all_weight_rows(shifted, fs, inst.hp, neighbors);
  CHECK((shift.weights - base.weights).cwiseAbs().maxCoeff() < 1e-10);

  // scaling a view by s while dividing its weight by s^2 changes nothing
  Dataset scaled = inst.ds;
  scaled.views[0] = 2.0 * inst.ds.views[0];
  HyperParams compensated = inst.hp;
  compensated.alphas[0] /= 4.0;
  const WeightGraph sc = solve_all_weight_rows(scaled, fs, compensated, neighbors);
  CHECK((sc.weights - base.weights).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("re-solving any row never increases the objective") {
  for (std::uint64_t seed = 400; seed < 420; ++seed) {
    RandomInstance inst = random_instance(seed);
    inst.hp.xi = 0.0;  // evaluate and minimize the same quadratic
    const auto fs = initial_f(inst.ds);
    const auto neighbors = all_neighbor_sets(inst.ds, Neighborhood::full());
    Matrix w = random_weight_graph(seed + 1, inst.ds.n).weights;
    double before = objective(inst.ds, fs, w, inst.hp);
    for (Index i = 0; i < inst.ds.n; ++i) {
      w.row(i) =
          solve_weight_row(inst.ds, fs, inst.hp, i, neighbors[static_cast<std::size_t>(i)])
              .transpose();
      const double after = objective(inst.ds, fs, w, inst.hp);
      REQUIRE(after <= before + 1e-9 * std::max(1.0, std::abs(before)));
      before = after;
    }
  }
}
