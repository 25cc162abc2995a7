#pragma once

// Personalized-PageRank style propagation by truncated power iteration.
//
// Given a normalized adjacency A_hat, the teleport-augmented operator is
//   A_eps = eps * I + (1 - eps) * A_hat,
// and propagation applies its L-th power.  Two evaluation strategies exist:
//   * propagate_dense: right-to-left application to a dense payload, never
//     materializing the matrix power (cost O(L * nnz * payload cols));
//   * ppr_matrix: explicit left-accumulated power, optionally re-sparsified
//     after every multiply by folding off-diagonal mass below delta back to
//     the diagonal. The rows of this matrix serve as mixture weights.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

#include "graphuq/sparse.hpp"

namespace graphuq {

enum class Normalization { random_walk, symmetric };

inline std::string to_string(Normalization n) {
  return n == Normalization::random_walk ? "random_walk" : "symmetric";
}

inline Normalization normalization_from_string(const std::string& s) {
  if (s == "random_walk") return Normalization::random_walk;
  if (s == "symmetric") return Normalization::symmetric;
  throw std::invalid_argument("unknown normalization: " + s);
}

struct PprConfig {
  double teleport_epsilon = 0.1;
  std::size_t power_iterations = 10;
  std::optional<double> sparsify_delta;  // absent => no thresholding on small graphs
  Normalization normalization = Normalization::random_walk;

  void validate() const {
    if (!(teleport_epsilon >= 0.0) || !(teleport_epsilon <= 1.0))
      throw std::invalid_argument("PprConfig: teleport_epsilon must lie in [0,1]");
    if (sparsify_delta && (!(*sparsify_delta > 0.0) || !(*sparsify_delta < 1.0)))
      throw std::invalid_argument("PprConfig: sparsify_delta must lie in (0,1)");
  }
};

// Node count above which delta-thresholding kicks in automatically when the
// caller did not choose a delta, and the default threshold then used.
inline constexpr std::size_t kAutoSparsifyNodeThreshold = 10000;
inline constexpr double kDefaultSparsifyDelta = 1e-4;

// eps*I + (1-eps)*A_hat over an already-normalized adjacency.
inline CsrMatrix a_eps(const CsrMatrix& normalized_adj, const PprConfig& cfg) {
  cfg.validate();
  if (normalized_adj.n_rows() != normalized_adj.n_cols())
    throw std::invalid_argument("a_eps: adjacency must be square");
  const std::size_t n = normalized_adj.n_rows();
  const double eps = cfg.teleport_epsilon;
  std::vector<Triplet> out;
  out.reserve(normalized_adj.nnz() + n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({i, i, eps});
    if (eps == 1.0) continue;
    for (std::size_t k = normalized_adj.row_offsets()[i]; k < normalized_adj.row_offsets()[i + 1];
         ++k)
      out.push_back({i, normalized_adj.col_indices()[k], (1.0 - eps) * normalized_adj.values()[k]});
  }
  return CsrMatrix::from_triplets(n, n, std::move(out));
}

// A_eps^L * payload via L sparse-dense multiplies (right-to-left evaluation).
inline DenseMatrix propagate_dense(const CsrMatrix& normalized_adj, const DenseMatrix& payload,
                                   const PprConfig& cfg) {
  cfg.validate();
  if (payload.n_rows != normalized_adj.n_rows())
    throw std::invalid_argument("propagate_dense: payload rows must equal node count");
  const CsrMatrix op = a_eps(normalized_adj, cfg);
  DenseMatrix current = payload;
  for (std::size_t t = 0; t < cfg.power_iterations; ++t) current = spmm(op, current);
  return current;
}

// Explicit Pi = A_eps^L, left-accumulated, re-sparsified after every multiply
// when a delta is in force. Large graphs auto-enable the default delta so the
// per-row support stays bounded by 1 + 1/delta.
inline CsrMatrix ppr_matrix(const CsrMatrix& normalized_adj, const PprConfig& cfg) {
  cfg.validate();
  if (normalized_adj.n_rows() != normalized_adj.n_cols())
    throw std::invalid_argument("ppr_matrix: adjacency must be square");
  std::optional<double> delta = cfg.sparsify_delta;
  if (!delta && normalized_adj.n_rows() > kAutoSparsifyNodeThreshold)
    delta = kDefaultSparsifyDelta;
  const CsrMatrix op = a_eps(normalized_adj, cfg);
  CsrMatrix pi = CsrMatrix::identity(normalized_adj.n_rows());
  for (std::size_t t = 0; t < cfg.power_iterations; ++t) {
    pi = spspmm(pi, op);
    if (delta) pi = sparsify_to_diagonal(pi, *delta);
  }
  return pi;
}

}  // namespace graphuq
