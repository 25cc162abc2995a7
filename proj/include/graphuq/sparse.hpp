#pragma once

// Compressed sparse-row matrices plus the handful of operations the graph
// pipeline needs: adjacency normalization (random-walk and symmetric),
// sparse-dense and sparse-sparse products, transposition, and the
// delta-thresholding sparsifier that folds small off-diagonal probability
// mass back onto the diagonal.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace graphuq {

struct Triplet {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

// Small row-major dense matrix. Deliberately minimal: the heavy lifting in
// this library happens either in CSR form or on the autodiff tape.
struct DenseMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> values;  // row-major, n_rows * n_cols entries

  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : n_rows(rows), n_cols(cols), values(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> vals)
      : n_rows(rows), n_cols(cols), values(std::move(vals)) {
    if (values.size() != rows * cols)
      throw std::invalid_argument("dense matrix: value count does not match shape");
  }

  double& at(std::size_t i, std::size_t j) { return values[i * n_cols + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * n_cols + j]; }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }
};

// Canonical CSR: per row, strictly increasing column indices, no explicit
// zeros. Construction sums duplicate coordinates and drops entries that
// cancel to zero.
class CsrMatrix {
 public:
  CsrMatrix() : row_offsets_(1, 0) {}

  CsrMatrix(std::size_t n_rows, std::size_t n_cols)
      : n_rows_(n_rows), n_cols_(n_cols), row_offsets_(n_rows + 1, 0) {}

  static CsrMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                 std::vector<Triplet> entries) {
    for (const auto& t : entries) {
      if (t.row >= n_rows || t.col >= n_cols)
        throw std::invalid_argument("CsrMatrix::from_triplets: index out of range");
    }
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    CsrMatrix m(n_rows, n_cols);
    m.col_indices_.reserve(entries.size());
    m.values_.reserve(entries.size());
    std::size_t i = 0;
    for (std::size_t row = 0; row < n_rows; ++row) {
      while (i < entries.size() && entries[i].row == row) {
        double v = entries[i].value;
        const std::size_t col = entries[i].col;
        ++i;
        while (i < entries.size() && entries[i].row == row && entries[i].col == col) {
          v += entries[i].value;  // duplicates are summed
          ++i;
        }
        if (v != 0.0) {
          m.col_indices_.push_back(col);
          m.values_.push_back(v);
        }
      }
      m.row_offsets_[row + 1] = m.col_indices_.size();
    }
    return m;
  }

  static CsrMatrix identity(std::size_t n) {
    CsrMatrix m(n, n);
    m.col_indices_.resize(n);
    m.values_.assign(n, 1.0);
    std::iota(m.col_indices_.begin(), m.col_indices_.end(), std::size_t{0});
    std::iota(m.row_offsets_.begin(), m.row_offsets_.end(), std::size_t{0});
    return m;
  }

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return n_cols_; }
  std::size_t nnz() const { return values_.size(); }
  const std::vector<std::size_t>& row_offsets() const { return row_offsets_; }
  const std::vector<std::size_t>& col_indices() const { return col_indices_; }
  const std::vector<double>& values() const { return values_; }

  // Value at (i, j); zero when the entry is not stored.
  double at(std::size_t i, std::size_t j) const {
    if (i >= n_rows_ || j >= n_cols_) throw std::out_of_range("CsrMatrix::at: index out of range");
    const auto begin = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
    const auto end = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
    const auto it = std::lower_bound(begin, end, j);
    if (it == end || *it != j) return 0.0;
    return values_[static_cast<std::size_t>(it - col_indices_.begin())];
  }

  double row_sum(std::size_t i) const {
    double s = 0.0;
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) s += values_[k];
    return s;
  }

  DenseMatrix to_dense() const {
    DenseMatrix d(n_rows_, n_cols_, 0.0);
    for (std::size_t i = 0; i < n_rows_; ++i)
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
        d.at(i, col_indices_[k]) = values_[k];
    return d;
  }

  bool structurally_valid() const {
    if (row_offsets_.size() != n_rows_ + 1 || row_offsets_.front() != 0 ||
        row_offsets_.back() != values_.size() || col_indices_.size() != values_.size())
      return false;
    for (std::size_t i = 0; i < n_rows_; ++i) {
      if (row_offsets_[i] > row_offsets_[i + 1]) return false;
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
        if (col_indices_[k] >= n_cols_) return false;
        if (k > row_offsets_[i] && col_indices_[k] <= col_indices_[k - 1]) return false;
        if (values_[k] == 0.0) return false;
      }
    }
    return true;
  }

 private:
  friend CsrMatrix transpose(const CsrMatrix&);
  friend CsrMatrix spspmm(const CsrMatrix&, const CsrMatrix&);
  friend CsrMatrix sparsify_to_diagonal(const CsrMatrix&, double);
  friend CsrMatrix scale_rows(const CsrMatrix&, const std::vector<double>&);

  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_offsets_;
  std::vector<std::size_t> col_indices_;
  std::vector<double> values_;
};

inline CsrMatrix transpose(const CsrMatrix& m) {
  CsrMatrix t(m.n_cols(), m.n_rows());
  std::vector<std::size_t> counts(m.n_cols() + 1, 0);
  for (std::size_t c : m.col_indices()) counts[c + 1]++;
  for (std::size_t c = 0; c < m.n_cols(); ++c) counts[c + 1] += counts[c];
  t.row_offsets_ = counts;
  t.col_indices_.resize(m.nnz());
  t.values_.resize(m.nnz());
  std::vector<std::size_t> cursor(counts.begin(), counts.end() - 1);
  for (std::size_t i = 0; i < m.n_rows(); ++i) {
    for (std::size_t k = m.row_offsets()[i]; k < m.row_offsets()[i + 1]; ++k) {
      const std::size_t c = m.col_indices()[k];
      t.col_indices_[cursor[c]] = i;  // rows visited in order => sorted per row
      t.values_[cursor[c]] = m.values()[k];
      ++cursor[c];
    }
  }
  return t;
}

inline bool is_symmetric(const CsrMatrix& m, double tol = 0.0) {
  if (m.n_rows() != m.n_cols()) return false;
  const CsrMatrix t = transpose(m);
  if (t.nnz() != m.nnz()) return false;
  if (t.row_offsets() != m.row_offsets() || t.col_indices() != m.col_indices()) return false;
  for (std::size_t k = 0; k < m.nnz(); ++k)
    if (std::fabs(t.values()[k] - m.values()[k]) > tol) return false;
  return true;
}

namespace detail {

inline void check_adjacency(const CsrMatrix& a, const char* op) {
  if (a.n_rows() != a.n_cols())
    throw std::invalid_argument(std::string(op) + ": adjacency must be square");
  for (double v : a.values())
    if (v != 0.0 && v != 1.0)
      throw std::invalid_argument(std::string(op) + ": adjacency values must be 0 or 1");
  if (!is_symmetric(a))
    throw std::invalid_argument(std::string(op) + ": adjacency must be symmetric");
}

}  // namespace detail

// Row-stochastic (random-walk) normalization D^{-1} A. Every row of the
// result sums to one; nodes without any incident edge either receive a unit
// self-loop (when the flag is set) or trigger an error.
inline CsrMatrix normalize_rw(const CsrMatrix& adjacency, bool add_self_loops_to_isolated) {
  detail::check_adjacency(adjacency, "normalize_rw");
  const std::size_t n = adjacency.n_rows();
  std::vector<Triplet> out;
  out.reserve(adjacency.nnz() + n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t begin = adjacency.row_offsets()[i], end = adjacency.row_offsets()[i + 1];
    const double degree = static_cast<double>(end - begin);
    if (degree == 0.0) {
      if (!add_self_loops_to_isolated)
        throw std::invalid_argument("normalize_rw: isolated node " + std::to_string(i) +
                                    " (enable self-loop fallback or connect the node)");
      out.push_back({i, i, 1.0});
      continue;
    }
    for (std::size_t k = begin; k < end; ++k)
      out.push_back({i, adjacency.col_indices()[k], 1.0 / degree});
  }
  return CsrMatrix::from_triplets(n, n, std::move(out));
}

// Symmetric normalization D^{-1/2} A D^{-1/2}. Zero-degree nodes are an
// error here: callers wanting self-loop behaviour must insert them first.
inline CsrMatrix normalize_sym(const CsrMatrix& adjacency) {
  detail::check_adjacency(adjacency, "normalize_sym");
  const std::size_t n = adjacency.n_rows();
  std::vector<double> inv_sqrt_degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double degree =
        static_cast<double>(adjacency.row_offsets()[i + 1] - adjacency.row_offsets()[i]);
    if (degree == 0.0)
      throw std::invalid_argument("normalize_sym: zero-degree node " + std::to_string(i) +
                                  "; insert self-loops before normalizing");
    inv_sqrt_degree[i] = 1.0 / std::sqrt(degree);
  }
  std::vector<Triplet> out;
  out.reserve(adjacency.nnz());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = adjacency.row_offsets()[i]; k < adjacency.row_offsets()[i + 1]; ++k) {
      const std::size_t j = adjacency.col_indices()[k];
      out.push_back({i, j, inv_sqrt_degree[i] * inv_sqrt_degree[j]});
    }
  return CsrMatrix::from_triplets(n, n, std::move(out));
}

// A + I for nodes lacking a self-loop (idempotent).
inline CsrMatrix add_self_loops(const CsrMatrix& adjacency) {
  if (adjacency.n_rows() != adjacency.n_cols())
    throw std::invalid_argument("add_self_loops: matrix must be square");
  std::vector<Triplet> out;
  out.reserve(adjacency.nnz() + adjacency.n_rows());
  for (std::size_t i = 0; i < adjacency.n_rows(); ++i) {
    bool has_diag = false;
    for (std::size_t k = adjacency.row_offsets()[i]; k < adjacency.row_offsets()[i + 1]; ++k) {
      out.push_back({i, adjacency.col_indices()[k], adjacency.values()[k]});
      has_diag |= (adjacency.col_indices()[k] == i);
    }
    if (!has_diag) out.push_back({i, i, 1.0});
  }
  return CsrMatrix::from_triplets(adjacency.n_rows(), adjacency.n_cols(), std::move(out));
}

// Sparse-dense product a * b. Cost O(nnz(a) * b.n_cols).
inline DenseMatrix spmm(const CsrMatrix& a, const DenseMatrix& b) {
  if (a.n_cols() != b.n_rows) throw std::invalid_argument("spmm: inner dimensions disagree");
  DenseMatrix out(a.n_rows(), b.n_cols, 0.0);
  for (std::size_t i = 0; i < a.n_rows(); ++i)
    for (std::size_t k = a.row_offsets()[i]; k < a.row_offsets()[i + 1]; ++k) {
      const std::size_t j = a.col_indices()[k];
      const double v = a.values()[k];
      const double* src = &b.values[j * b.n_cols];
      double* dst = &out.values[i * b.n_cols];
      for (std::size_t c = 0; c < b.n_cols; ++c) dst[c] += v * src[c];
    }
  return out;
}

// Sparse-sparse product in canonical form (classic Gustavson row merge).
inline CsrMatrix spspmm(const CsrMatrix& a, const CsrMatrix& b) {
  if (a.n_cols() != b.n_rows()) throw std::invalid_argument("spspmm: inner dimensions disagree");
  CsrMatrix out(a.n_rows(), b.n_cols());
  std::vector<double> acc(b.n_cols(), 0.0);
  std::vector<std::size_t> touched;
  touched.reserve(b.n_cols());
  for (std::size_t i = 0; i < a.n_rows(); ++i) {
    touched.clear();
    for (std::size_t k = a.row_offsets()[i]; k < a.row_offsets()[i + 1]; ++k) {
      const std::size_t j = a.col_indices()[k];
      const double v = a.values()[k];
      for (std::size_t l = b.row_offsets()[j]; l < b.row_offsets()[j + 1]; ++l) {
        const std::size_t c = b.col_indices()[l];
        if (acc[c] == 0.0) touched.push_back(c);
        acc[c] += v * b.values()[l];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (std::size_t c : touched) {
      if (acc[c] != 0.0) {
        out.col_indices_.push_back(c);
        out.values_.push_back(acc[c]);
      }
      acc[c] = 0.0;
    }
    out.row_offsets_[i + 1] = out.col_indices_.size();
  }
  return out;
}

// Per row of a row-stochastic matrix, every off-diagonal entry strictly below
// delta is removed and its mass added onto the diagonal (created if absent).
// Row sums are preserved, so the result stays row-stochastic.
inline CsrMatrix sparsify_to_diagonal(const CsrMatrix& m, double delta) {
  if (m.n_rows() != m.n_cols())
    throw std::invalid_argument("sparsify_to_diagonal: matrix must be square");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::invalid_argument("sparsify_to_diagonal: delta must lie in (0,1)");
  for (std::size_t i = 0; i < m.n_rows(); ++i)
    if (std::fabs(m.row_sum(i) - 1.0) > 1e-9)
      throw std::invalid_argument("sparsify_to_diagonal: row " + std::to_string(i) +
                                  " is not stochastic within 1e-9");
  CsrMatrix out(m.n_rows(), m.n_cols());
  out.col_indices_.reserve(m.nnz());
  out.values_.reserve(m.nnz());
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  for (std::size_t i = 0; i < m.n_rows(); ++i) {
    cols.clear();
    vals.clear();
    double folded = 0.0;
    bool diag_seen = false;
    for (std::size_t k = m.row_offsets()[i]; k < m.row_offsets()[i + 1]; ++k) {
      const std::size_t j = m.col_indices()[k];
      const double v = m.values()[k];
      if (j != i && v < delta) {
        folded += v;
        continue;
      }
      if (j == i) diag_seen = true;
      cols.push_back(j);
      vals.push_back(v);
    }
    if (folded != 0.0) {
      if (diag_seen) {
        for (std::size_t k = 0; k < cols.size(); ++k)
          if (cols[k] == i) vals[k] += folded;
      } else {
        // Insert the diagonal while keeping columns sorted.
        const auto pos = std::lower_bound(cols.begin(), cols.end(), i);
        const auto idx = static_cast<std::size_t>(pos - cols.begin());
        cols.insert(pos, i);
        vals.insert(vals.begin() + static_cast<std::ptrdiff_t>(idx), folded);
      }
    }
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (vals[k] == 0.0) continue;
      out.col_indices_.push_back(cols[k]);
      out.values_.push_back(vals[k]);
    }
    out.row_offsets_[i + 1] = out.col_indices_.size();
  }
  return out;
}

}  // namespace graphuq
