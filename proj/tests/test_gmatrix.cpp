#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "gm/errors.hpp"
#include "gm/gmatrix.hpp"
#include "gm/numeric.hpp"
#include "support/oracles.hpp"

using namespace gm;

TEST_CASE("build_s structure") {
  SUBCASE("2-node single edge") {
    DirectedGraph g = DirectedGraph::from_edges(2, {{0, 1}});
    StochasticMatrix s = StochasticMatrix::from_graph(g);
    CHECK(s.n == 2);
    CHECK(s.dangling == std::vector<int>{1});
    CHECK(s.col_ptr[1] - s.col_ptr[0] == 1);
    CHECK(s.row_idx[0] == 1);
    CHECK(s.col_value[0] == doctest::Approx(1.0));
    CHECK(s.col_value[1] == 0.0);
  }
  SUBCASE("3-cycle is a permutation") {
    DirectedGraph g = DirectedGraph::from_edges(3, {{0, 1}, {1, 2}, {2, 0}});
    StochasticMatrix s = StochasticMatrix::from_graph(g);
    CHECK(s.dangling.empty());
    for (int j = 0; j < 3; ++j) {
      CHECK(s.col_ptr[j + 1] - s.col_ptr[j] == 1);
      CHECK(s.col_value[j] == doctest::Approx(1.0));
      CHECK(s.row_idx[s.col_ptr[j]] == (j + 1) % 3);
    }
  }
  SUBCASE("three out-links weight 1/3") {
    DirectedGraph g = DirectedGraph::from_edges(4, {{0, 1}, {0, 2}, {0, 3}});
    StochasticMatrix s = StochasticMatrix::from_graph(g);
    CHECK(s.col_value[0] == doctest::Approx(1.0 / 3.0));
    CHECK(s.dangling == std::vector<int>{1, 2, 3});
  }
  SUBCASE("non-dangling columns sum to 1") {
    Rng rng(3);
    DirectedGraph g = oracle::random_graph(60, 0.05, rng);
    StochasticMatrix s = StochasticMatrix::from_graph(g);
    for (int j = 0; j < s.n; ++j) {
      const int entries = s.col_ptr[j + 1] - s.col_ptr[j];
      if (entries == 0) continue;
      CHECK(std::abs(entries * s.col_value[j] - 1.0) < 1e-12);
      CHECK(s.col_value[j] > 0.0);
    }
  }
}

TEST_CASE("GoogleOperator validates alpha") {
  DirectedGraph g = DirectedGraph::from_edges(2, {{0, 1}});
  CHECK_THROWS_AS(GoogleOperator(StochasticMatrix::from_graph(g), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(GoogleOperator(StochasticMatrix::from_graph(g), 1.0), std::invalid_argument);
  CHECK_NOTHROW(GoogleOperator(StochasticMatrix::from_graph(g), 1.0 - 1e-12));
}

TEST_CASE("apply_g") {
  SUBCASE("zero maps to zero") {
    DirectedGraph g = DirectedGraph::from_edges(3, {{0, 1}, {1, 2}});
    GoogleOperator op(StochasticMatrix::from_graph(g));
    std::vector<double> zero(3, 0.0);
    for (double y : apply_g(op, zero)) CHECK(y == 0.0);
  }
  SUBCASE("complete graph fixes the uniform vector") {
    const int n = 6;
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < n; ++u)
      for (int v = 0; v < n; ++v)
        if (u != v) edges.emplace_back(u, v);
    GoogleOperator op(StochasticMatrix::from_graph(DirectedGraph::from_edges(n, edges)));
    std::vector<double> uniform(n, 1.0 / n);
    for (double y : apply_g(op, uniform)) CHECK(y == doctest::Approx(1.0 / n).epsilon(1e-13));
  }
  SUBCASE("matches the dense oracle on random graphs") {
    Rng rng(7);
    for (int trial = 0; trial < 25; ++trial) {
      DirectedGraph g = oracle::random_graph(8, 0.3, rng);
      GoogleOperator op(StochasticMatrix::from_graph(g), 0.85);
      std::vector<double> v(8);
      for (auto& x : v) x = rng.next_signed();
      const auto sparse = apply_g(op, v);
      const auto dense = oracle::dense_matvec(oracle::reference_google(g, 0.85), v);
      const auto materialized = oracle::dense_matvec(materialize_dense(op), v);
      for (int i = 0; i < 8; ++i) {
        CHECK(std::abs(sparse[i] - dense[i]) <= 1e-12);
        CHECK(std::abs(sparse[i] - materialized[i]) <= 1e-12);
      }
    }
  }
  SUBCASE("preserves total mass and linearity") {
    Rng rng(11);
    DirectedGraph g = oracle::random_graph(50, 0.06, rng);
    GoogleOperator op(StochasticMatrix::from_graph(g), 0.85);
    std::vector<double> v(50), w(50);
    for (auto& x : v) x = rng.next_double();
    for (auto& x : w) x = rng.next_signed();
    const auto gv = apply_g(op, v);
    CHECK(std::abs(kahan_sum(gv) - kahan_sum(v)) <= 1e-12 * l1_norm(v));
    std::vector<double> combo(50);
    for (int i = 0; i < 50; ++i) combo[i] = 2.0 * v[i] - 3.0 * w[i];
    const auto g_combo = apply_g(op, combo);
    const auto gw = apply_g(op, w);
    for (int i = 0; i < 50; ++i)
      CHECK(g_combo[i] == doctest::Approx(2.0 * gv[i] - 3.0 * gw[i]).epsilon(1e-12));
  }
  SUBCASE("dimension mismatch throws") {
    DirectedGraph g = DirectedGraph::from_edges(3, {{0, 1}});
    GoogleOperator op(StochasticMatrix::from_graph(g));
    std::vector<double> bad(2, 0.0);
    CHECK_THROWS_AS(apply_g(op, bad), std::invalid_argument);
  }
}

TEST_CASE("materialize_dense") {
  SUBCASE("hand-evaluated 2-node matrix") {
    DirectedGraph g = DirectedGraph::from_edges(2, {{0, 1}});
    DenseMatrix dense = materialize_dense(GoogleOperator(StochasticMatrix::from_graph(g), 0.85));
    CHECK(dense.at(0, 0) == doctest::Approx(0.075));
    CHECK(dense.at(1, 0) == doctest::Approx(0.925));
    CHECK(dense.at(0, 1) == doctest::Approx(0.5));
    CHECK(dense.at(1, 1) == doctest::Approx(0.5));
  }
  SUBCASE("column sums and entry floor") {
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
      DirectedGraph g = oracle::random_graph(30, 0.08, rng);
      const double alpha = 0.85;
      DenseMatrix dense = materialize_dense(GoogleOperator(StochasticMatrix::from_graph(g), alpha));
      for (int j = 0; j < dense.n; ++j) {
        double sum = 0.0;
        for (int i = 0; i < dense.n; ++i) {
          sum += dense.at(i, j);
          CHECK(dense.at(i, j) >= (1.0 - alpha) / dense.n - 1e-15);
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
      }
    }
  }
  SUBCASE("alpha near 1 approaches S") {
    DirectedGraph g = DirectedGraph::from_edges(3, {{0, 1}, {1, 2}, {2, 0}, {0, 2}});
    DenseMatrix dense =
        materialize_dense(GoogleOperator(StochasticMatrix::from_graph(g), 1.0 - 1e-12));
    CHECK(dense.at(1, 0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(dense.at(0, 0) == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("cap is enforced") {
    const int n = dense_cap() + 1;
    DirectedGraph g = DirectedGraph::from_edges(n, {{0, 1}});
    GoogleOperator op(StochasticMatrix::from_graph(g));
    CHECK_THROWS_AS(materialize_dense(op), NumericalError);
  }
}
