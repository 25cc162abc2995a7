#include "graphuq/sparse.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "graphuq/rng.hpp"
#include "testutil.hpp"

namespace {

using graphuq::CsrMatrix;
using graphuq::DenseMatrix;
using graphuq::Triplet;

testutil::Dense to_oracle(const CsrMatrix& m) {
  testutil::Dense d = testutil::dense_zero(m.n_rows(), m.n_cols());
  for (std::size_t i = 0; i < m.n_rows(); ++i)
    for (std::size_t j = 0; j < m.n_cols(); ++j) d[i][j] = m.at(i, j);
  return d;
}

void expect_dense_eq(const CsrMatrix& got, const testutil::Dense& want, double tol) {
  ASSERT_EQ(got.n_rows(), want.size());
  for (std::size_t i = 0; i < got.n_rows(); ++i)
    for (std::size_t j = 0; j < got.n_cols(); ++j)
      EXPECT_NEAR(got.at(i, j), want[i][j], tol) << "(" << i << "," << j << ")";
}

// Random sparse matrix with roughly `density` fill.
CsrMatrix random_sparse(std::size_t rows, std::size_t cols, double density, graphuq::Rng& rng) {
  std::vector<Triplet> ts;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      if (rng.uniform() < density) ts.push_back({i, j, rng.normal()});
  return CsrMatrix::from_triplets(rows, cols, std::move(ts));
}

// Random row-stochastic matrix with a guaranteed diagonal entry.
CsrMatrix random_stochastic(std::size_t n, double density, graphuq::Rng& rng) {
  std::vector<Triplet> ts;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(n, 0.0);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || rng.uniform() < density) {
        row[j] = rng.gamma(1.0);
        sum += row[j];
      }
    }
    for (std::size_t j = 0; j < n; ++j)
      if (row[j] > 0.0) ts.push_back({i, j, row[j] / sum});
  }
  return CsrMatrix::from_triplets(n, n, std::move(ts));
}

CsrMatrix undirected_edges(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> edges) {
  std::vector<Triplet> ts;
  for (auto [u, v] : edges) {
    ts.push_back({u, v, 1.0});
    ts.push_back({v, u, 1.0});
  }
  return CsrMatrix::from_triplets(n, n, std::move(ts));
}

TEST(CsrMatrix, FromTripletsCanonicalizes) {
  // Duplicates summed, zeros (explicit and cancelled) dropped, columns sorted.
  const CsrMatrix m = CsrMatrix::from_triplets(
      2, 3, {{0, 2, 1.0}, {0, 0, 2.0}, {0, 2, 3.0}, {1, 1, 5.0}, {1, 1, -5.0}, {1, 0, 0.0}});
  EXPECT_TRUE(m.structurally_valid());
  EXPECT_EQ(m.nnz(), 2u);
  EXPECT_DOUBLE_EQ(m.at(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(m.at(0, 2), 4.0);
  EXPECT_DOUBLE_EQ(m.at(1, 1), 0.0);
  EXPECT_THROW(CsrMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), std::invalid_argument);
  EXPECT_THROW(m.at(5, 0), std::out_of_range);
}

TEST(CsrMatrix, IdentityAndToDense) {
  const CsrMatrix id = CsrMatrix::identity(4);
  EXPECT_TRUE(id.structurally_valid());
  const DenseMatrix d = id.to_dense();
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(d.at(i, j), i == j ? 1.0 : 0.0);
}

TEST(Transpose, MatchesDenseOracle) {
  graphuq::Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const CsrMatrix m = random_sparse(6, 4, 0.4, rng);
    const CsrMatrix t = graphuq::transpose(m);
    EXPECT_TRUE(t.structurally_valid());
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(t.at(j, i), m.at(i, j));
    const CsrMatrix round = graphuq::transpose(t);
    EXPECT_EQ(round.row_offsets(), m.row_offsets());
    EXPECT_EQ(round.col_indices(), m.col_indices());
    EXPECT_EQ(round.values(), m.values());
  }
}

TEST(NormalizeRw, SpecExamples) {
  // Single undirected edge: both rows have exactly one neighbour.
  expect_dense_eq(graphuq::normalize_rw(undirected_edges(2, {{0, 1}}), false),
                  {{0, 1}, {1, 0}}, 0.0);
  // Path 0-1-2.
  expect_dense_eq(graphuq::normalize_rw(undirected_edges(3, {{0, 1}, {1, 2}}), false),
                  {{0, 1, 0}, {0.5, 0, 0.5}, {0, 1, 0}}, 0.0);
  // Single node, no edges, self-loop fallback enabled.
  expect_dense_eq(graphuq::normalize_rw(CsrMatrix(1, 1), true), {{1}}, 0.0);
}

TEST(NormalizeRw, ErrorsOnBadInput) {
  EXPECT_THROW(graphuq::normalize_rw(CsrMatrix(1, 1), false), std::invalid_argument);
  EXPECT_THROW(graphuq::normalize_rw(CsrMatrix(2, 3), true), std::invalid_argument);
  // Non-binary values.
  EXPECT_THROW(graphuq::normalize_rw(
                   CsrMatrix::from_triplets(2, 2, {{0, 1, 0.5}, {1, 0, 0.5}}), true),
               std::invalid_argument);
  // Asymmetric adjacency.
  EXPECT_THROW(graphuq::normalize_rw(CsrMatrix::from_triplets(2, 2, {{0, 1, 1.0}}), true),
               std::invalid_argument);
}

TEST(NormalizeRw, RowsAreStochastic) {
  graphuq::Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    const std::size_t n = 8;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (rng.uniform() < 0.3) edges.emplace_back(i, j);
    const CsrMatrix norm = graphuq::normalize_rw(undirected_edges(n, edges), true);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(norm.row_sum(i), 1.0, 1e-12);
  }
}

TEST(NormalizeSym, SpecExamples) {
  expect_dense_eq(graphuq::normalize_sym(undirected_edges(2, {{0, 1}})), {{0, 1}, {1, 0}}, 0.0);
  const CsrMatrix path = graphuq::normalize_sym(undirected_edges(3, {{0, 1}, {1, 2}}));
  EXPECT_NEAR(path.at(1, 0), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(path.at(0, 1), 1.0 / std::sqrt(2.0), 1e-15);
  // All-self-loop adjacency is a fixed point.
  const CsrMatrix loops = graphuq::normalize_sym(CsrMatrix::identity(3));
  expect_dense_eq(loops, testutil::dense_identity(3), 0.0);
}

TEST(NormalizeSym, MatchesDenseOracleAndStaysSymmetric) {
  graphuq::Rng rng(13);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    const std::size_t n = 7;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (rng.uniform() < 0.4) edges.emplace_back(i, j);
    const CsrMatrix a = graphuq::add_self_loops(undirected_edges(n, edges));
    const CsrMatrix s = graphuq::normalize_sym(a);
    // Dense oracle: s_ij = a_ij / sqrt(d_i d_j).
    std::vector<double> deg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) deg[i] += a.at(i, j);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        EXPECT_NEAR(s.at(i, j), a.at(i, j) / std::sqrt(deg[i] * deg[j]), 1e-14);
    // Exact structural symmetry, values within 1e-15.
    const CsrMatrix t = graphuq::transpose(s);
    ASSERT_EQ(t.col_indices(), s.col_indices());
    ASSERT_EQ(t.row_offsets(), s.row_offsets());
    for (std::size_t k = 0; k < s.nnz(); ++k)
      EXPECT_NEAR(t.values()[k], s.values()[k], 1e-15);
  }
}

TEST(NormalizeSym, ErrorsOnZeroDegree) {
  EXPECT_THROW(graphuq::normalize_sym(CsrMatrix(2, 2)), std::invalid_argument);
}

TEST(AddSelfLoops, IdempotentAndMinimal) {
  const CsrMatrix a = undirected_edges(3, {{0, 1}});
  const CsrMatrix b = graphuq::add_self_loops(a);
  EXPECT_DOUBLE_EQ(b.at(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(b.at(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(b.at(2, 2), 1.0);
  EXPECT_DOUBLE_EQ(b.at(0, 1), 1.0);
  const CsrMatrix c = graphuq::add_self_loops(b);
  EXPECT_EQ(c.nnz(), b.nnz());
}

TEST(Spmm, SpecExamples) {
  DenseMatrix b(2, 2);
  b.at(0, 0) = 1;
  b.at(0, 1) = 2;
  b.at(1, 0) = 3;
  b.at(1, 1) = 4;
  const DenseMatrix same = graphuq::spmm(CsrMatrix::identity(2), b);
  EXPECT_EQ(same.values, b.values);
  const CsrMatrix swap = CsrMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}});
  const DenseMatrix swapped = graphuq::spmm(swap, b);
  EXPECT_DOUBLE_EQ(swapped.at(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(swapped.at(0, 1), 4.0);
  EXPECT_DOUBLE_EQ(swapped.at(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(swapped.at(1, 1), 2.0);
  EXPECT_THROW(graphuq::spmm(CsrMatrix::identity(3), b), std::invalid_argument);
}

TEST(Spmm, MatchesDenseOracle) {
  graphuq::Rng rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const CsrMatrix a = random_sparse(5, 5, 0.5, rng);
    DenseMatrix b(5, 3);
    for (auto& v : b.values) v = rng.normal();
    const DenseMatrix got = graphuq::spmm(a, b);
    testutil::Dense bo = testutil::dense_zero(5, 3);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 3; ++j) bo[i][j] = b.at(i, j);
    const testutil::Dense want = testutil::dense_matmul(to_oracle(a), bo);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(got.at(i, j), want[i][j], 1e-12);
  }
}

TEST(Spspmm, SpecExamples) {
  graphuq::Rng rng(19);
  const CsrMatrix s = random_sparse(4, 4, 0.5, rng);
  const CsrMatrix left = graphuq::spspmm(CsrMatrix::identity(4), s);
  EXPECT_EQ(left.col_indices(), s.col_indices());
  EXPECT_EQ(left.values(), s.values());
  // Permutation composition: p1 = (0 1), p2 = (1 2) acting on rows.
  const CsrMatrix p1 = CsrMatrix::from_triplets(3, 3, {{0, 1, 1.0}, {1, 0, 1.0}, {2, 2, 1.0}});
  const CsrMatrix p2 = CsrMatrix::from_triplets(3, 3, {{0, 0, 1.0}, {1, 2, 1.0}, {2, 1, 1.0}});
  const CsrMatrix comp = graphuq::spspmm(p1, p2);
  expect_dense_eq(comp, {{0, 0, 1}, {1, 0, 0}, {0, 1, 0}}, 0.0);
  EXPECT_THROW(graphuq::spspmm(CsrMatrix(3, 4), CsrMatrix(3, 4)), std::invalid_argument);
}

TEST(Spspmm, MatchesDenseOracleUpTo8x8) {
  graphuq::Rng rng(23);
  for (std::size_t n = 2; n <= 8; ++n) {
    for (int rep = 0; rep < 10; ++rep) {
      const CsrMatrix a = random_sparse(n, n, 0.45, rng);
      const CsrMatrix b = random_sparse(n, n, 0.45, rng);
      const CsrMatrix got = graphuq::spspmm(a, b);
      EXPECT_TRUE(got.structurally_valid());
      const testutil::Dense want = testutil::dense_matmul(to_oracle(a), to_oracle(b));
      expect_dense_eq(got, want, 1e-12);
    }
  }
}

TEST(SparsifyToDiagonal, SpecExamples) {
  // Row [0.5, 0.5] with delta 0.1: nothing below threshold.
  const CsrMatrix half = CsrMatrix::from_triplets(
      2, 2, {{0, 0, 0.5}, {0, 1, 0.5}, {1, 0, 0.5}, {1, 1, 0.5}});
  expect_dense_eq(graphuq::sparsify_to_diagonal(half, 0.1), {{0.5, 0.5}, {0.5, 0.5}}, 0.0);

  // Diagonal entries themselves are never folded, however small.
  const CsrMatrix diag_small = CsrMatrix::from_triplets(
      2, 2, {{0, 0, 0.05}, {0, 1, 0.95}, {1, 0, 0.95}, {1, 1, 0.05}});
  expect_dense_eq(graphuq::sparsify_to_diagonal(diag_small, 0.1), {{0.05, 0.95}, {0.95, 0.05}},
                  0.0);

  // Off-diagonal mass below delta returns to the diagonal.
  const CsrMatrix off_small = CsrMatrix::from_triplets(
      2, 2, {{0, 0, 0.95}, {0, 1, 0.05}, {1, 0, 0.05}, {1, 1, 0.95}});
  expect_dense_eq(graphuq::sparsify_to_diagonal(off_small, 0.1), {{1.0, 0.0}, {0.0, 1.0}}, 0.0);
}

TEST(SparsifyToDiagonal, CreatesMissingDiagonal) {
  const CsrMatrix m = CsrMatrix::from_triplets(
      3, 3, {{0, 1, 0.9}, {0, 2, 0.1}, {1, 0, 1.0}, {2, 0, 0.2}, {2, 1, 0.8}});
  const CsrMatrix out = graphuq::sparsify_to_diagonal(m, 0.25);
  // Row 0: 0.1 folded onto absent diagonal; row 2: 0.2 folded onto (2,2).
  expect_dense_eq(out, {{0.1, 0.9, 0.0}, {1.0, 0.0, 0.0}, {0.0, 0.8, 0.2}}, 1e-15);
  EXPECT_TRUE(out.structurally_valid());
}

TEST(SparsifyToDiagonal, RandomStochasticAgainstScalarOracle) {
  graphuq::Rng rng(29);
  for (int rep = 0; rep < 20; ++rep) {
    const CsrMatrix m = random_stochastic(8, 0.7, rng);
    const double delta = 0.2;
    const CsrMatrix out = graphuq::sparsify_to_diagonal(m, delta);
    EXPECT_TRUE(out.structurally_valid());
    std::size_t off_in = 0, off_out = 0;
    for (std::size_t i = 0; i < 8; ++i) {
      // Scalar oracle: walk the dense row and fold manually.
      double fold = 0.0;
      for (std::size_t j = 0; j < 8; ++j) {
        const double v = m.at(i, j);
        if (j != i && v != 0.0 && v < delta) {
          fold += v;
          EXPECT_DOUBLE_EQ(out.at(i, j), 0.0);
          ++off_in;
        } else if (j != i) {
          EXPECT_DOUBLE_EQ(out.at(i, j), v);
          off_in += v != 0.0;
          off_out += v != 0.0;
        }
      }
      EXPECT_NEAR(out.at(i, i), m.at(i, i) + fold, 1e-15);
      EXPECT_NEAR(out.row_sum(i), 1.0, 1e-12);
      // Support bound: every surviving off-diagonal entry is >= delta.
      const std::size_t row_nnz = out.row_offsets()[i + 1] - out.row_offsets()[i];
      EXPECT_LE(static_cast<double>(row_nnz), 1.0 + 1.0 / delta);
    }
    EXPECT_LE(off_out, off_in);
  }
}

TEST(SparsifyToDiagonal, RejectsBadInput) {
  const CsrMatrix ok = CsrMatrix::identity(2);
  EXPECT_THROW(graphuq::sparsify_to_diagonal(ok, 0.0), std::invalid_argument);
  EXPECT_THROW(graphuq::sparsify_to_diagonal(ok, 1.0), std::invalid_argument);
  EXPECT_THROW(graphuq::sparsify_to_diagonal(CsrMatrix(2, 3), 0.5), std::invalid_argument);
  const CsrMatrix not_stochastic = CsrMatrix::from_triplets(2, 2, {{0, 0, 0.7}, {1, 1, 1.0}});
  EXPECT_THROW(graphuq::sparsify_to_diagonal(not_stochastic, 0.5), std::invalid_argument);
}

}  // namespace
