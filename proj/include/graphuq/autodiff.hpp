#pragma once

// Minimal define-by-run reverse-mode automatic differentiation over rank-2
// double tensors: exactly the primitives the encoder, radial flows and
// Dirichlet losses need, plus Adam and global-norm gradient clipping.
//
// Usage pattern: a Tape is rebuilt for every forward pass. Leaves are created
// with Tape::variable (tracked) or Tape::constant (untracked); ops append
// nodes with closures that push adjoints to their parents. backward(root)
// seeds a scalar root with 1 and accumulates d(root)/d(leaf) into each
// tracked node's grad. Repeated backward calls keep accumulating until
// zero_all_grads is called.
//
// Elementwise binary ops broadcast along either axis (a dimension of 1
// stretches to match), mirroring the handful of shapes the models use:
// (N,K)op(N,1), (N,K)op(1,K) and scalars.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "graphuq/sparse.hpp"
#include "graphuq/special.hpp"

namespace graphuq {

struct Shape {
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
};

class Tape;

// Lightweight handle into a tape.
class Tensor {
 public:
  Tensor() = default;
  bool valid() const { return tape_ != nullptr; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // ---- leaves ----

  Tensor variable(Shape shape, std::vector<double> values) {
    return make_leaf(shape, std::move(values), true);
  }

  Tensor constant(Shape shape, std::vector<double> values) {
    return make_leaf(shape, std::move(values), false);
  }

  Tensor constant_scalar(double v) { return constant({1, 1}, {v}); }

  Tensor constant_matrix(const DenseMatrix& m) {
    return constant({m.n_rows, m.n_cols}, m.values);
  }

  // ---- inspection ----

  const Shape& shape(Tensor t) const { return node(t).shape; }
  const std::vector<double>& values(Tensor t) const { return node(t).values; }

  double value_scalar(Tensor t) const {
    if (node(t).shape.size() != 1) throw std::invalid_argument("value_scalar: tensor not scalar");
    return node(t).values[0];
  }

  const std::vector<double>& grad(Tensor t) const {
    if (!node(t).requires_grad) throw std::invalid_argument("grad: tensor is not tracked");
    return node(t).grad;
  }

  void zero_all_grads() {
    for (auto& n : nodes_)
      if (n.requires_grad) n.grad.assign(n.grad.size(), 0.0);
  }

  // ---- elementwise binary ops (broadcasting) ----

  Tensor add(Tensor a, Tensor b) {
    return binary(
        a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
        [](double, double) { return 1.0; });
  }

  Tensor sub(Tensor a, Tensor b) {
    return binary(
        a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
        [](double, double) { return -1.0; });
  }

  Tensor mul(Tensor a, Tensor b) {
    return binary(
        a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
        [](double x, double) { return x; });
  }

  Tensor div(Tensor a, Tensor b) {
    return binary(
        a, b, [](double x, double y) { return x / y; }, [](double, double y) { return 1.0 / y; },
        [](double x, double y) { return -x / (y * y); });
  }

  // ---- elementwise unary ops ----

  Tensor exp(Tensor a) {
    return unary(
        a, [](double x) { return std::exp(x); }, [](double, double fx) { return fx; });
  }

  Tensor log(Tensor a) {
    check_positive(a, "log");
    return unary(
        a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
  }

  Tensor tanh(Tensor a) {
    return unary(
        a, [](double x) { return std::tanh(x); },
        [](double, double fx) { return 1.0 - fx * fx; });
  }

  Tensor relu(Tensor a) {
    return unary(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
  }

  Tensor softplus(Tensor a) {
    return unary(a, &softplus_fwd, [](double x, double) { return sigmoid(x); });
  }

  Tensor sqrt(Tensor a) {
    check_positive(a, "sqrt");
    return unary(
        a, [](double x) { return std::sqrt(x); },
        [](double, double fx) { return 0.5 / fx; });
  }

  Tensor lgamma(Tensor a) {
    check_positive(a, "lgamma");
    return unary(
        a, [](double x) { return log_gamma(x); }, [](double x, double) { return graphuq::digamma(x); });
  }

  Tensor digamma(Tensor a) {
    check_positive(a, "digamma");
    return unary(
        a, [](double x) { return graphuq::digamma(x); },
        [](double x, double) { return trigamma(x); });
  }

  Tensor scale(Tensor a, double c) {
    return unary(
        a, [c](double x) { return c * x; }, [c](double, double) { return c; });
  }

  Tensor add_scalar(Tensor a, double c) {
    return unary(
        a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
  }

  Tensor neg(Tensor a) { return scale(a, -1.0); }

  // ---- reductions ----

  Tensor sum(Tensor a) {
    check_owned(a);
    const Node& n = node(a);
    double s = 0.0;
    for (double v : n.values) s += v;
    const std::size_t pid = a.id();
    return make_op({1, 1}, {s}, n.requires_grad,
                   [pid](Tape& t, const std::vector<double>& gout,
                         std::vector<std::vector<double>>& adj) {
                     auto& g = t.adj_slot(adj, pid);
                     for (double& v : g) v += gout[0];
                   });
  }

  Tensor mean(Tensor a) {
    check_owned(a);
    const Node& n = node(a);
    const double inv = 1.0 / static_cast<double>(n.shape.size());
    double s = 0.0;
    for (double v : n.values) s += v;
    const std::size_t pid = a.id();
    return make_op({1, 1}, {s * inv}, n.requires_grad,
                   [pid, inv](Tape& t, const std::vector<double>& gout,
                              std::vector<std::vector<double>>& adj) {
                     auto& g = t.adj_slot(adj, pid);
                     for (double& v : g) v += gout[0] * inv;
                   });
  }

  Tensor row_sum(Tensor a) {
    check_owned(a);
    const Node& n = node(a);
    const Shape out_shape{n.shape.rows, 1};
    std::vector<double> out(n.shape.rows, 0.0);
    for (std::size_t i = 0; i < n.shape.rows; ++i)
      for (std::size_t j = 0; j < n.shape.cols; ++j) out[i] += n.values[i * n.shape.cols + j];
    const std::size_t pid = a.id();
    const Shape in_shape = n.shape;
    return make_op(out_shape, std::move(out), n.requires_grad,
                   [pid, in_shape](Tape& t, const std::vector<double>& gout,
                                   std::vector<std::vector<double>>& adj) {
                     auto& g = t.adj_slot(adj, pid);
                     for (std::size_t i = 0; i < in_shape.rows; ++i)
                       for (std::size_t j = 0; j < in_shape.cols; ++j)
                         g[i * in_shape.cols + j] += gout[i];
                   });
  }

  // ---- structural ops ----

  Tensor matmul(Tensor a, Tensor b) {
    check_owned(a);
    check_owned(b);
    const Node& na = node(a);
    const Node& nb = node(b);
    if (na.shape.cols != nb.shape.rows)
      throw std::invalid_argument("matmul: inner dimensions disagree");
    const std::size_t r = na.shape.rows, inner = na.shape.cols, c = nb.shape.cols;
    std::vector<double> out(r * c, 0.0);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t k = 0; k < inner; ++k) {
        const double v = na.values[i * inner + k];
        if (v == 0.0) continue;
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] += v * nb.values[k * c + j];
      }
    const std::size_t aid = a.id(), bid = b.id();
    return make_op(
        {r, c}, std::move(out), na.requires_grad || nb.requires_grad,
        [aid, bid, r, inner, c](Tape& t, const std::vector<double>& gout,
                                std::vector<std::vector<double>>& adj) {
          const Node& pa = t.nodes_[aid];
          const Node& pb = t.nodes_[bid];
          if (pa.requires_grad) {
            auto& ga = t.adj_slot(adj, aid);  // gA += G B^T
            for (std::size_t i = 0; i < r; ++i)
              for (std::size_t j = 0; j < c; ++j) {
                const double g = gout[i * c + j];
                if (g == 0.0) continue;
                for (std::size_t k = 0; k < inner; ++k)
                  ga[i * inner + k] += g * pb.values[k * c + j];
              }
          }
          if (pb.requires_grad) {
            auto& gb = t.adj_slot(adj, bid);  // gB += A^T G
            for (std::size_t i = 0; i < r; ++i)
              for (std::size_t k = 0; k < inner; ++k) {
                const double av = pa.values[i * inner + k];
                if (av == 0.0) continue;
                for (std::size_t j = 0; j < c; ++j) gb[k * c + j] += av * gout[i * c + j];
              }
          }
        });
  }

  // Product of a constant sparse matrix with a tracked dense tensor.
  Tensor spmm(const CsrMatrix& s, Tensor b) {
    check_owned(b);
    const Node& nb = node(b);
    if (s.n_cols() != nb.shape.rows)
      throw std::invalid_argument("spmm: inner dimensions disagree");
    const std::size_t c = nb.shape.cols;
    std::vector<double> out(s.n_rows() * c, 0.0);
    for (std::size_t i = 0; i < s.n_rows(); ++i)
      for (std::size_t k = s.row_offsets()[i]; k < s.row_offsets()[i + 1]; ++k) {
        const double v = s.values()[k];
        const std::size_t j = s.col_indices()[k];
        for (std::size_t col = 0; col < c; ++col) out[i * c + col] += v * nb.values[j * c + col];
      }
    const std::size_t bid = b.id();
    // Backward multiplies by the transpose; precompute it once.
    const CsrMatrix st = transpose(s);
    return make_op({s.n_rows(), c}, std::move(out), nb.requires_grad,
                   [bid, st, c](Tape& t, const std::vector<double>& gout,
                                std::vector<std::vector<double>>& adj) {
                     if (!t.nodes_[bid].requires_grad) return;
                     auto& gb = t.adj_slot(adj, bid);
                     for (std::size_t i = 0; i < st.n_rows(); ++i)
                       for (std::size_t k = st.row_offsets()[i]; k < st.row_offsets()[i + 1]; ++k) {
                         const double v = st.values()[k];
                         const std::size_t j = st.col_indices()[k];
                         for (std::size_t col = 0; col < c; ++col)
                           gb[i * c + col] += v * gout[j * c + col];
                       }
                   });
  }

  Tensor index_select(Tensor a, std::vector<std::size_t> rows) {
    check_owned(a);
    const Node& n = node(a);
    for (std::size_t r : rows)
      if (r >= n.shape.rows) throw std::invalid_argument("index_select: row index out of range");
    const std::size_t c = n.shape.cols;
    std::vector<double> out(rows.size() * c);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < c; ++j) out[i * c + j] = n.values[rows[i] * c + j];
    const std::size_t pid = a.id();
    const std::size_t n_out = rows.size();  // hoisted: the lambda capture below moves `rows`
    return make_op({n_out, c}, std::move(out), n.requires_grad,
                   [pid, rows = std::move(rows), c](Tape& t, const std::vector<double>& gout,
                                                    std::vector<std::vector<double>>& adj) {
                     auto& g = t.adj_slot(adj, pid);
                     for (std::size_t i = 0; i < rows.size(); ++i)
                       for (std::size_t j = 0; j < c; ++j) g[rows[i] * c + j] += gout[i * c + j];
                   });
  }

  // Concatenate along columns (axis 1): all inputs share the row count.
  Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: need at least one tensor");
    for (const Tensor& p : parts) check_owned(p);
    const std::size_t rows = node(parts[0]).shape.rows;
    std::size_t cols = 0;
    bool tracked = false;
    for (const Tensor& p : parts) {
      if (node(p).shape.rows != rows)
        throw std::invalid_argument("concat_cols: row counts disagree");
      cols += node(p).shape.cols;
      tracked |= node(p).requires_grad;
    }
    std::vector<double> out(rows * cols);
    std::size_t offset = 0;
    std::vector<std::pair<std::size_t, std::size_t>> layout;  // (id, col offset)
    for (const Tensor& p : parts) {
      const Node& n = node(p);
      layout.emplace_back(p.id(), offset);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < n.shape.cols; ++j)
          out[i * cols + offset + j] = n.values[i * n.shape.cols + j];
      offset += n.shape.cols;
    }
    return make_op({rows, cols}, std::move(out), tracked,
                   [layout = std::move(layout), rows, cols](
                       Tape& t, const std::vector<double>& gout,
                       std::vector<std::vector<double>>& adj) {
                     for (const auto& [pid, off] : layout) {
                       const Node& p = t.nodes_[pid];
                       if (!p.requires_grad) continue;
                       auto& g = t.adj_slot(adj, pid);
                       for (std::size_t i = 0; i < rows; ++i)
                         for (std::size_t j = 0; j < p.shape.cols; ++j)
                           g[i * p.shape.cols + j] += gout[i * cols + off + j];
                     }
                   });
  }

  // Concatenate along rows (axis 0): all inputs share the column count.
  Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: need at least one tensor");
    for (const Tensor& p : parts) check_owned(p);
    const std::size_t cols = node(parts[0]).shape.cols;
    std::size_t rows = 0;
    bool tracked = false;
    for (const Tensor& p : parts) {
      if (node(p).shape.cols != cols)
        throw std::invalid_argument("concat_rows: column counts disagree");
      rows += node(p).shape.rows;
      tracked |= node(p).requires_grad;
    }
    std::vector<double> out;
    out.reserve(rows * cols);
    std::vector<std::pair<std::size_t, std::size_t>> layout;  // (id, element offset)
    for (const Tensor& p : parts) {
      layout.emplace_back(p.id(), out.size());
      const auto& v = node(p).values;
      out.insert(out.end(), v.begin(), v.end());
    }
    return make_op({rows, cols}, std::move(out), tracked,
                   [layout = std::move(layout)](Tape& t, const std::vector<double>& gout,
                                                std::vector<std::vector<double>>& adj) {
                     for (const auto& [pid, off] : layout) {
                       const Node& p = t.nodes_[pid];
                       if (!p.requires_grad) continue;
                       auto& g = t.adj_slot(adj, pid);
                       for (std::size_t e = 0; e < g.size(); ++e) g[e] += gout[off + e];
                     }
                   });
  }

  // Row-wise softmax, expressed through primitives with a constant row-max
  // shift (softmax is shift-invariant, so values and gradients stay exact).
  Tensor softmax_rows(Tensor a) {
    const Node& n = node(a);
    std::vector<double> shift(n.shape.rows, 0.0);
    for (std::size_t i = 0; i < n.shape.rows; ++i) {
      double mx = n.values[i * n.shape.cols];
      for (std::size_t j = 1; j < n.shape.cols; ++j)
        mx = std::max(mx, n.values[i * n.shape.cols + j]);
      shift[i] = mx;
    }
    const Tensor shifted = sub(a, constant({n.shape.rows, 1}, std::move(shift)));
    const Tensor e = exp(shifted);
    return div(e, row_sum(e));
  }

  // ---- backward ----

  void backward(Tensor root) {
    check_owned(root);
    if (node(root).shape.size() != 1)
      throw std::invalid_argument("backward: root must be a scalar");
    if (!node(root).requires_grad) return;  // nothing tracked below
    std::vector<std::vector<double>> adj(nodes_.size());
    adj[root.id()] = {1.0};
    for (std::size_t i = root.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (adj[i].empty() || !n.requires_grad) continue;
      if (n.backprop) n.backprop(*this, adj[i], adj);
    }
    for (std::size_t i = 0; i <= root.id(); ++i) {
      Node& n = nodes_[i];
      if (!n.requires_grad || adj[i].empty()) continue;
      for (std::size_t e = 0; e < n.grad.size(); ++e) n.grad[e] += adj[i][e];
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // only allocated when requires_grad
    bool requires_grad = false;
    std::function<void(Tape&, const std::vector<double>&, std::vector<std::vector<double>>&)>
        backprop;
  };

  static double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }

  static double softplus_fwd(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
  }

  const Node& node(Tensor t) const {
    check_owned(t);
    return nodes_[t.id()];
  }

  void check_owned(Tensor t) const {
    if (t.tape_ != this) throw std::invalid_argument("tensor does not belong to this tape");
    if (t.id_ >= nodes_.size()) throw std::invalid_argument("tensor id out of range");
  }

  void check_positive(Tensor a, const char* op) const {
    for (double v : node(a).values)
      if (!(v > 0.0))
        throw std::domain_error(std::string(op) + ": requires strictly positive inputs, got " +
                                std::to_string(v));
  }

  std::vector<double>& adj_slot(std::vector<std::vector<double>>& adj, std::size_t id) {
    if (adj[id].empty()) adj[id].assign(nodes_[id].shape.size(), 0.0);
    return adj[id];
  }

  Tensor make_leaf(Shape shape, std::vector<double> values, bool requires_grad) {
    if (values.size() != shape.size())
      throw std::invalid_argument("tensor construction: value count does not match shape");
    Node n;
    n.shape = shape;
    n.values = std::move(values);
    n.requires_grad = requires_grad;
    if (requires_grad) n.grad.assign(shape.size(), 0.0);
    nodes_.push_back(std::move(n));
    return Tensor(this, nodes_.size() - 1);
  }

  template <typename Backprop>
  Tensor make_op(Shape shape, std::vector<double> values, bool requires_grad, Backprop bp) {
    Node n;
    n.shape = shape;
    n.values = std::move(values);
    n.requires_grad = requires_grad;
    if (requires_grad) {
      n.grad.assign(shape.size(), 0.0);
      n.backprop = std::move(bp);
    }
    nodes_.push_back(std::move(n));
    return Tensor(this, nodes_.size() - 1);
  }

  template <typename F, typename DF>
  Tensor unary(Tensor a, F f, DF df) {
    check_owned(a);
    const Node& n = node(a);
    std::vector<double> out(n.values.size());
    for (std::size_t e = 0; e < out.size(); ++e) out[e] = f(n.values[e]);
    const std::size_t pid = a.id();
    const std::size_t self_id = nodes_.size();  // id the new node is about to get
    return make_op(n.shape, std::move(out), n.requires_grad,
                   [pid, self_id, df](Tape& t, const std::vector<double>& gout,
                                      std::vector<std::vector<double>>& adj) {
                     const Node& parent = t.nodes_[pid];
                     const Node& self = t.nodes_[self_id];
                     auto& g = t.adj_slot(adj, pid);
                     // df receives (input value, forward output value) so ops
                     // like exp/tanh/sqrt can reuse the stored result.
                     for (std::size_t e = 0; e < g.size(); ++e)
                       g[e] += gout[e] * df(parent.values[e], self.values[e]);
                   });
  }

  template <typename F, typename DFA, typename DFB>
  Tensor binary(Tensor a, Tensor b, F f, DFA dfa, DFB dfb) {
    check_owned(a);
    check_owned(b);
    const Node& na = node(a);
    const Node& nb = node(b);
    const Shape out_shape = broadcast_shape(na.shape, nb.shape);
    std::vector<double> out(out_shape.size());
    for (std::size_t i = 0; i < out_shape.rows; ++i)
      for (std::size_t j = 0; j < out_shape.cols; ++j)
        out[i * out_shape.cols + j] =
            f(bval(na, i, j), bval(nb, i, j));
    const std::size_t aid = a.id(), bid = b.id();
    return make_op(out_shape, std::move(out), na.requires_grad || nb.requires_grad,
                   [aid, bid, dfa, dfb, out_shape](Tape& t, const std::vector<double>& gout,
                                                   std::vector<std::vector<double>>& adj) {
                     const Node& pa = t.nodes_[aid];
                     const Node& pb = t.nodes_[bid];
                     for (std::size_t i = 0; i < out_shape.rows; ++i)
                       for (std::size_t j = 0; j < out_shape.cols; ++j) {
                         const double g = gout[i * out_shape.cols + j];
                         if (g == 0.0) continue;
                         const double av = bval(pa, i, j);
                         const double bv = bval(pb, i, j);
                         if (pa.requires_grad)
                           t.adj_slot(adj, aid)[bindex(pa.shape, i, j)] += g * dfa(av, bv);
                         if (pb.requires_grad)
                           t.adj_slot(adj, bid)[bindex(pb.shape, i, j)] += g * dfb(av, bv);
                       }
                   });
  }

  static Shape broadcast_shape(const Shape& a, const Shape& b) {
    const auto axis = [](std::size_t x, std::size_t y) {
      if (x == y) return x;
      if (x == 1) return y;
      if (y == 1) return x;
      throw std::invalid_argument("broadcast: incompatible shapes");
    };
    return {axis(a.rows, b.rows), axis(a.cols, b.cols)};
  }

  static std::size_t bindex(const Shape& s, std::size_t i, std::size_t j) {
    return (s.rows == 1 ? 0 : i) * s.cols + (s.cols == 1 ? 0 : j);
  }

  static double bval(const Node& n, std::size_t i, std::size_t j) {
    return n.values[bindex(n.shape, i, j)];
  }

  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Trainable parameters live outside any tape; per forward pass they are bound
// to fresh variable leaves, and after backward the leaf gradients are pulled
// back into Parameter::grad for the optimizer.

struct Parameter {
  std::string name;
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;

  Parameter() = default;
  Parameter(std::string n, Shape s, std::vector<double> v)
      : name(std::move(n)), shape(s), values(std::move(v)), grad(shape.size(), 0.0) {
    if (values.size() != shape.size())
      throw std::invalid_argument("Parameter: value count does not match shape");
  }
};

class TapeBindings {
 public:
  explicit TapeBindings(Tape& tape) : tape_(tape) {}

  Tensor bind(Parameter& p) {
    for (const auto& [param, leaf] : bound_)
      if (param == &p) return leaf;
    const Tensor leaf = tape_.variable(p.shape, p.values);
    bound_.emplace_back(&p, leaf);
    return leaf;
  }

  // Accumulate leaf gradients into the parameters (call after backward).
  void pull_grads() {
    for (auto& [param, leaf] : bound_) {
      const auto& g = tape_.grad(leaf);
      for (std::size_t e = 0; e < g.size(); ++e) param->grad[e] += g[e];
    }
  }

  Tape& tape() { return tape_; }

 private:
  Tape& tape_;
  std::vector<std::pair<Parameter*, Tensor>> bound_;
};

// ---------------------------------------------------------------------------
// Adam with bias correction, plus global-norm clipping.

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_stability = 1e-8;
};

class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Parameter*> params, AdamConfig cfg = {})
      : params_(std::move(params)), cfg_(cfg) {
    for (Parameter* p : params_) {
      m_.emplace_back(p->values.size(), 0.0);
      v_.emplace_back(p->values.size(), 0.0);
    }
  }

  void zero_grad() {
    for (Parameter* p : params_) p->grad.assign(p->grad.size(), 0.0);
  }

  void step() {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
    for (std::size_t p = 0; p < params_.size(); ++p) {
      auto& values = params_[p]->values;
      const auto& grad = params_[p]->grad;
      for (std::size_t e = 0; e < values.size(); ++e) {
        m_[p][e] = cfg_.beta1 * m_[p][e] + (1.0 - cfg_.beta1) * grad[e];
        v_[p][e] = cfg_.beta2 * v_[p][e] + (1.0 - cfg_.beta2) * grad[e] * grad[e];
        const double mhat = m_[p][e] / bc1;
        const double vhat = v_[p][e] / bc2;
        values[e] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.eps_stability);
      }
    }
  }

  std::size_t step_count() const { return step_count_; }

 private:
  std::vector<Parameter*> params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t step_count_ = 0;
};

// Scales all gradients so their joint Euclidean norm is at most max_norm.
// Returns the pre-clip norm.
inline double clip_global_norm(const std::vector<Parameter*>& params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params)
    for (double g : p->grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (Parameter* p : params)
      for (double& g : p->grad) g *= s;
  }
  return norm;
}

}  // namespace graphuq
