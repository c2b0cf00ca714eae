#include <catch2/catch_amalgamated.hpp>

#include "recgraph/dataset.hpp"
#include "recgraph/synthetic.hpp"

using namespace recgraph;

namespace {

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index i = 0;
  for (const auto& row : rows) {
    Index j = 0;
    for (double x : row) m(i, j++) = x;
    ++i;
  }
  return m;
}

}  // namespace

TEST_CASE("dataset validation accepts a small two-view problem") {
  const Matrix v1 = Matrix::Random(4, 3);
  const Matrix v2 = Matrix::Random(4, 2);
  const Dataset ds = validate_dataset({v1, v2}, {{1, 2, kMissingLabel, kMissingLabel}});
  CHECK(ds.n == 4);
  CHECK(ds.q == 2);
  CHECK(ds.p == 1);
  CHECK(ds.classes == std::vector<int>{2});
}

TEST_CASE("dataset validation rejects bad shapes and labels") {
  const Matrix v4 = Matrix::Random(4, 2);
  const Matrix v5 = Matrix::Random(5, 2);
  CHECK_THROWS_WITH(validate_dataset({v4, v5}, {{1, 2, 1, 2}}),
                    Catch::Matchers::ContainsSubstring("view row mismatch"));
  CHECK_THROWS_WITH(validate_dataset({v4}, {LabelColumn(4, kMissingLabel)}),
                    Catch::Matchers::ContainsSubstring("no labels"));
  CHECK_THROWS(validate_dataset({Matrix::Random(1, 2)}, {{1}}));
  // a class index with no instance anywhere is a gap, not a bigger label set
  CHECK_THROWS_WITH(validate_dataset({v4}, {{1, 3, 1, kMissingLabel}}),
                    Catch::Matchers::ContainsSubstring("class 2"));
}

TEST_CASE("dataset validation is idempotent") {
  const Matrix v = Matrix::Random(5, 3);
  const LabelColumn task{1, 2, kMissingLabel, 1, 2};
  const Dataset once = validate_dataset({v}, {task});
  const Dataset twice = validate_dataset(once.views, once.tasks);
  CHECK(once.n == twice.n);
  CHECK(once.classes == twice.classes);
  CHECK(once.views[0] == twice.views[0]);
  CHECK(once.tasks[0] == twice.tasks[0]);
}

TEST_CASE("binarize produces one-hot rows over the observed instances") {
  const LabelState st = binarize_labels({1, 2, kMissingLabel}, 2);
  CHECK(st.labeled == IndexList{0, 1});
  CHECK(st.unlabeled == IndexList{2});
  CHECK(st.Y == from_rows({{1, 0}, {0, 1}}));
  CHECK(st.F.row(2).isZero());

  const LabelState same_class = binarize_labels({2, 2}, 2);
  CHECK(same_class.Y == from_rows({{0, 1}, {0, 1}}));

  CHECK_THROWS_WITH(binarize_labels({3}, 2),
                    Catch::Matchers::ContainsSubstring("outside class range"));
}

TEST_CASE("binarize invariants hold on random instances") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const RandomInstance inst = random_instance(seed);
    for (Index k = 0; k < inst.ds.p; ++k) {
      const LabelState st = binarize_labels(inst.ds.tasks[static_cast<std::size_t>(k)],
                                            inst.ds.classes[static_cast<std::size_t>(k)]);
      CHECK(st.l() + st.u() == inst.ds.n);
      for (Index r = 0; r < st.l(); ++r) {
        CHECK(st.Y.row(r).sum() == 1.0);
        CHECK(st.Y.row(r).maxCoeff() == 1.0);
      }
      // labeled and unlabeled partition the instance range
      std::vector<bool> hit(static_cast<std::size_t>(inst.ds.n), false);
      for (Index i : st.labeled) hit[static_cast<std::size_t>(i)] = true;
      for (Index i : st.unlabeled) {
        CHECK_FALSE(hit[static_cast<std::size_t>(i)]);
        hit[static_cast<std::size_t>(i)] = true;
      }
      CHECK(std::all_of(hit.begin(), hit.end(), [](bool b) { return b; }));
    }
  }
}

TEST_CASE("signed label matrix: binary task gives a single signed column") {
  const SignedLabels s = signed_label_matrix({LabelColumn{1, 2}}, {2});
  CHECK(s.columns.rows() == 2);
  CHECK(s.columns.cols() == 1);
  CHECK(s.columns(0, 0) == 1.0);
  CHECK(s.columns(1, 0) == -1.0);
}

TEST_CASE("signed label matrix: missing labels stay zero") {
  const SignedLabels s = signed_label_matrix({LabelColumn(3, kMissingLabel)}, {2});
  CHECK(s.columns.isZero());
}

TEST_CASE("signed label matrix: multi-class tasks expand one-vs-rest") {
  const SignedLabels s = signed_label_matrix({LabelColumn{1, 2, 3}}, {3});
  REQUIRE(s.columns.cols() == 3);
  CHECK(s.columns.col(0) == Vector(from_rows({{1}, {-1}, {-1}})));
  CHECK(s.columns.col(1) == Vector(from_rows({{-1}, {1}, {-1}})));
  CHECK(s.columns.col(2) == Vector(from_rows({{-1}, {-1}, {1}})));
  CHECK(s.task_of_col == std::vector<int>{0, 0, 0});
}

TEST_CASE("signed label matrix has no zeros on labeled rows") {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const RandomInstance inst = random_instance(seed);
    const SignedLabels s = signed_label_matrix(inst.ds.tasks, inst.ds.classes);
    for (Index col = 0; col < s.columns.cols(); ++col) {
      const int task = s.task_of_col[static_cast<std::size_t>(col)];
      for (Index i = 0; i < inst.ds.n; ++i) {
        const bool labeled =
            inst.ds.tasks[static_cast<std::size_t>(task)][static_cast<std::size_t>(i)] !=
            kMissingLabel;
        if (labeled)
          CHECK(s.columns(i, col) != 0.0);
        else
          CHECK(s.columns(i, col) == 0.0);
      }
    }
  }
}
