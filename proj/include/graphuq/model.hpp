#pragma once

// Node classifiers with second-order (Dirichlet-valued) outputs.
//
// The shared backbone is a PostNet-style predictor: a 2-layer MLP encoder
// maps features to a latent point, per-class radial-flow densities and class
// priors convert the latent into evidence pseudo-counts
//   alpha_k = 1 + N * p(z | k) * P(k),
// where N is the certainty budget.  Three graph models consume it:
//   appnp_baseline  softmax class probabilities from a linear head, dispersed
//                   with personalized-PageRank propagation (first-order only)
//   gpn_rw/gpn_sym  pseudo-counts dispersed through the graph: one Dirichlet
//                   per node (random-walk or symmetric normalization)
//   lop_gpn         linear opinion pooling of per-node Dirichlet densities:
//                   a Dirichlet mixture per node, weights from the PPR matrix

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "graphuq/autodiff.hpp"
#include "graphuq/dataset.hpp"
#include "graphuq/dirichlet.hpp"
#include "graphuq/errors.hpp"
#include "graphuq/flows.hpp"
#include "graphuq/propagation.hpp"
#include "graphuq/rng.hpp"
#include "graphuq/sparse.hpp"

namespace graphuq {

enum class ModelKind { appnp_baseline, gpn_rw, gpn_sym, lop_gpn };

inline constexpr ModelKind kAllModelKinds[] = {ModelKind::appnp_baseline, ModelKind::gpn_rw,
                                               ModelKind::gpn_sym, ModelKind::lop_gpn};

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::appnp_baseline: return "appnp_baseline";
    case ModelKind::gpn_rw: return "gpn_rw";
    case ModelKind::gpn_sym: return "gpn_sym";
    case ModelKind::lop_gpn: return "lop_gpn";
  }
  throw std::invalid_argument("unknown model kind");
}

inline ModelKind model_kind_from_string(const std::string& s) {
  for (const ModelKind k : kAllModelKinds)
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown model kind '" + s +
                              "'; valid: appnp_baseline, gpn_rw, gpn_sym, lop_gpn");
}

struct ModelConfig {
  std::size_t hidden_dim = 64;
  std::size_t latent_dim = 16;
  std::size_t flow_layers = 8;
  double entropy_weight = 1e-4;
  double certainty_budget = 0.0;  // 0 = use the number of training nodes
  PprConfig ppr;
  std::size_t max_epochs = 2000;
  std::size_t patience = 50;
  AdamConfig adam;
  double grad_clip = 10.0;

  void validate() const {
    if (hidden_dim == 0 || latent_dim == 0)
      throw std::invalid_argument("model: hidden_dim and latent_dim must be positive");
    if (flow_layers == 0) throw std::invalid_argument("model: flow_layers must be positive");
    if (!(entropy_weight >= 0.0) || !std::isfinite(entropy_weight))
      throw std::invalid_argument("model: entropy_weight must be finite and >= 0");
    if (!(certainty_budget >= 0.0) || !std::isfinite(certainty_budget))
      throw std::invalid_argument("model: certainty_budget must be finite and >= 0");
    if (!(grad_clip > 0.0)) throw std::invalid_argument("model: grad_clip must be positive");
    ppr.validate();
  }
};

// The per-kind graph operator.  lop_gpn mathematically requires random-walk
// normalization (mixture weights must be a probability vector); gpn_sym is
// the symmetric variant with self-loops added so every degree is positive.
inline Normalization normalization_for(ModelKind k) {
  return k == ModelKind::gpn_sym ? Normalization::symmetric : Normalization::random_walk;
}

inline PprConfig effective_ppr(ModelKind kind, const ModelConfig& cfg) {
  if (kind == ModelKind::lop_gpn && cfg.ppr.normalization == Normalization::symmetric)
    throw std::invalid_argument("lop_gpn requires random-walk normalization");
  PprConfig p = cfg.ppr;
  p.normalization = normalization_for(kind);
  return p;
}

inline CsrMatrix normalized_adjacency(ModelKind kind, const CsrMatrix& adjacency) {
  if (normalization_for(kind) == Normalization::symmetric)
    return normalize_sym(add_self_loops(adjacency));
  return normalize_rw(adjacency, /*add_self_loops_to_isolated=*/true);
}

// ---------------------------------------------------------------------------
// Predictor
// ---------------------------------------------------------------------------

struct PostNetPredictor {
  ModelKind kind = ModelKind::gpn_rw;
  std::size_t in_dim = 0;
  std::size_t n_classes = 0;
  ModelConfig config;

  Parameter enc_w1, enc_b1;  // in_dim -> hidden
  Parameter enc_w2, enc_b2;  // hidden -> latent
  Parameter head_w, head_b;  // latent -> classes (appnp_baseline only)
  std::vector<RadialFlowStack> flows;  // one stack per class (evidence kinds)

  std::vector<double> class_priors;  // P(k); zero for classes absent from train
  double certainty_budget = 0.0;     // resolved N

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out{&enc_w1, &enc_b1, &enc_w2, &enc_b2};
    if (kind == ModelKind::appnp_baseline) {
      out.push_back(&head_w);
      out.push_back(&head_b);
    } else {
      for (auto& f : flows) f.collect_parameters(out);
    }
    return out;
  }
};

namespace detail {

inline Parameter xavier_uniform(const std::string& name, std::size_t fan_in, std::size_t fan_out,
                                Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> w(fan_in * fan_out);
  for (auto& v : w) v = limit * (2.0 * rng.uniform() - 1.0);
  return Parameter(name, {fan_in, fan_out}, std::move(w));
}

}  // namespace detail

inline PostNetPredictor init_predictor(ModelKind kind, std::size_t in_dim, std::size_t n_classes,
                                       const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (in_dim == 0 || n_classes == 0)
    throw std::invalid_argument("model: in_dim and n_classes must be positive");
  PostNetPredictor m;
  m.kind = kind;
  m.in_dim = in_dim;
  m.n_classes = n_classes;
  m.config = cfg;
  m.config.ppr = effective_ppr(kind, cfg);
  m.certainty_budget = cfg.certainty_budget;
  m.class_priors.assign(n_classes, 1.0 / static_cast<double>(n_classes));

  Rng rng(mix_seed(seed, 0x141717ULL));
  m.enc_w1 = detail::xavier_uniform("enc.w1", in_dim, cfg.hidden_dim, rng);
  m.enc_b1 = Parameter("enc.b1", {1, cfg.hidden_dim}, std::vector<double>(cfg.hidden_dim, 0.0));
  m.enc_w2 = detail::xavier_uniform("enc.w2", cfg.hidden_dim, cfg.latent_dim, rng);
  m.enc_b2 = Parameter("enc.b2", {1, cfg.latent_dim}, std::vector<double>(cfg.latent_dim, 0.0));
  if (kind == ModelKind::appnp_baseline) {
    m.head_w = detail::xavier_uniform("head.w", cfg.latent_dim, n_classes, rng);
    m.head_b = Parameter("head.b", {1, n_classes}, std::vector<double>(n_classes, 0.0));
  } else {
    m.flows.reserve(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c)
      m.flows.emplace_back("flow.class" + std::to_string(c), cfg.latent_dim, cfg.flow_layers,
                           rng);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Tape-level graph builders
// ---------------------------------------------------------------------------

inline Tensor encode_t(PostNetPredictor& m, TapeBindings& tb, Tensor x) {
  Tape& t = tb.tape();
  const Tensor h = t.relu(t.add(t.matmul(x, tb.bind(m.enc_w1)), tb.bind(m.enc_b1)));
  return t.add(t.matmul(h, tb.bind(m.enc_w2)), tb.bind(m.enc_b2));
}

// Pseudo-count matrix alpha^ft (N x K) on the tape.  Classes with zero prior
// contribute the constant column 1 (no evidence can be collected for them),
// which also keeps the graph clear of 0 * exp(large) products.
inline Tensor feature_alphas_t(PostNetPredictor& m, TapeBindings& tb, Tensor x) {
  Tape& t = tb.tape();
  const Tensor z = encode_t(m, tb, x);
  const std::size_t n = t.shape(z).rows;
  std::vector<Tensor> cols;
  cols.reserve(m.n_classes);
  for (std::size_t c = 0; c < m.n_classes; ++c) {
    const double scale = m.certainty_budget * m.class_priors[c];
    if (scale > 0.0) {
      const Tensor logd = m.flows[c].log_density(tb, z);
      cols.push_back(t.add_scalar(t.exp(t.add_scalar(logd, std::log(scale))), 1.0));
    } else {
      cols.push_back(t.constant({n, 1}, std::vector<double>(n, 1.0)));
    }
  }
  return t.concat_cols(cols);
}

// Propagated softmax probabilities (appnp_baseline).
inline Tensor appnp_probs_t(PostNetPredictor& m, TapeBindings& tb, Tensor x,
                            const CsrMatrix& a_eps_op, std::size_t power_iterations) {
  Tape& t = tb.tape();
  const Tensor z = encode_t(m, tb, x);
  Tensor p = t.softmax_rows(t.add(t.matmul(z, tb.bind(m.head_w)), tb.bind(m.head_b)));
  for (std::size_t l = 0; l < power_iterations; ++l) p = t.spmm(a_eps_op, p);
  return p;
}

namespace detail {

inline std::vector<double> one_hot(const std::vector<int>& labels, std::size_t n_classes) {
  std::vector<double> y(labels.size() * n_classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i)
    y[i * n_classes + static_cast<std::size_t>(labels[i])] = 1.0;
  return y;
}

// uce(Dir(alpha_i), y_i) per node: psi(alpha_0) - psi(alpha_y).
inline Tensor uce_column(Tape& t, Tensor alphas, Tensor y_onehot) {
  const Tensor psi_a0 = t.digamma(t.row_sum(alphas));
  const Tensor psi_ay = t.row_sum(t.mul(t.digamma(alphas), y_onehot));
  return t.sub(psi_a0, psi_ay);
}

// Differential entropy of Dir(alpha_i) per node:
//   log B(alpha) + (alpha_0 - K) psi(alpha_0) - sum_k (alpha_k - 1) psi(alpha_k)
inline Tensor entropy_column(Tape& t, Tensor alphas) {
  const std::size_t k = t.shape(alphas).cols;
  const Tensor a0 = t.row_sum(alphas);
  const Tensor log_b = t.sub(t.row_sum(t.lgamma(alphas)), t.lgamma(a0));
  const Tensor mid = t.mul(t.add_scalar(a0, -static_cast<double>(k)), t.digamma(a0));
  const Tensor tail = t.row_sum(t.mul(t.add_scalar(alphas, -1.0), t.digamma(alphas)));
  return t.sub(t.add(log_b, mid), tail);
}

}  // namespace detail

// GPN objective over the masked nodes: sum_i uce(Dir(alpha^agg_i), y_i)
// minus entropy_weight times the Dirichlet entropy regularizer.
inline Tensor loss_gpn_t(TapeBindings& tb, Tensor alphas_agg, const std::vector<int>& labels,
                         std::size_t n_classes, const std::vector<std::size_t>& mask_indices,
                         double entropy_weight) {
  Tape& t = tb.tape();
  const Tensor y = t.constant({labels.size(), n_classes}, detail::one_hot(labels, n_classes));
  const Tensor per_node = t.sub(detail::uce_column(t, alphas_agg, y),
                                t.scale(detail::entropy_column(t, alphas_agg), entropy_weight));
  return t.sum(t.index_select(per_node, mask_indices));
}

// LOP objective: the pooled upper bound
//   sum_{i in mask} sum_j Pi_ij [ uce(Dir(alpha^ft_j), y_i)
//                                 - entropy_weight * entropy(Dir(alpha^ft_j)) ].
// Rearranged into per-component form with constants
//   c_j = sum_{i in mask} Pi_ij     and   M_{j,y} = sum_{i in mask, y_i = y} Pi_ij:
//   loss = sum_j c_j psi(alpha0_j) - sum_{j,y} M_{j,y} psi(alpha_{j,y})
//          - entropy_weight * sum_j c_j entropy_j.
inline Tensor loss_lop_t(TapeBindings& tb, Tensor alphas_ft, const CsrMatrix& pi,
                         const std::vector<int>& labels, std::size_t n_classes,
                         const std::vector<std::size_t>& mask_indices, double entropy_weight) {
  Tape& t = tb.tape();
  const std::size_t n = pi.n_rows();
  std::vector<double> c(n, 0.0);
  std::vector<double> m(n * n_classes, 0.0);
  for (const std::size_t i : mask_indices) {
    const auto y = static_cast<std::size_t>(labels[i]);
    for (std::size_t e = pi.row_offsets()[i]; e < pi.row_offsets()[i + 1]; ++e) {
      const std::size_t j = pi.col_indices()[e];
      const double w = pi.values()[e];
      c[j] += w;
      m[j * n_classes + y] += w;
    }
  }
  const Tensor c_t = t.constant({n, 1}, std::move(c));
  const Tensor m_t = t.constant({n, n_classes}, std::move(m));
  const Tensor psi_a0 = t.digamma(t.row_sum(alphas_ft));
  const Tensor uce_part =
      t.sub(t.sum(t.mul(psi_a0, c_t)), t.sum(t.mul(t.digamma(alphas_ft), m_t)));
  const Tensor ent_part = t.sum(t.mul(detail::entropy_column(t, alphas_ft), c_t));
  return t.sub(uce_part, t.scale(ent_part, entropy_weight));
}

// Cross-entropy of propagated probabilities over the masked nodes.
inline Tensor loss_appnp_t(TapeBindings& tb, Tensor probs, const std::vector<int>& labels,
                           std::size_t n_classes, const std::vector<std::size_t>& mask_indices) {
  Tape& t = tb.tape();
  const Tensor y = t.constant({labels.size(), n_classes}, detail::one_hot(labels, n_classes));
  const Tensor ll = t.row_sum(t.mul(t.log(probs), y));
  return t.neg(t.sum(t.index_select(ll, mask_indices)));
}

// ---------------------------------------------------------------------------
// Value-level forward passes
// ---------------------------------------------------------------------------

// alpha^ft as plain numbers; throws NumericalError (with the node index) when
// a flow density blows up.
inline DenseMatrix feature_alphas(const PostNetPredictor& model, const DenseMatrix& features) {
  if (features.n_cols != model.in_dim)
    throw std::invalid_argument("feature_alphas: feature dim mismatch");
  PostNetPredictor& m = const_cast<PostNetPredictor&>(model);
  Tape t;
  TapeBindings tb(t);
  const Tensor x = t.constant({features.n_rows, features.n_cols}, features.values);
  const Tensor a = feature_alphas_t(m, tb, x);
  DenseMatrix out{features.n_rows, model.n_classes, t.values(a)};
  for (std::size_t i = 0; i < out.n_rows; ++i)
    for (std::size_t k = 0; k < out.n_cols; ++k)
      if (!std::isfinite(out.at(i, k)))
        throw NumericalError("non-finite pseudo-count at node " + std::to_string(i));
  return out;
}

// alpha^agg rows as Dirichlets (gpn_rw / gpn_sym).
inline std::vector<Dirichlet> forward_gpn(const DenseMatrix& alphas_ft,
                                          const CsrMatrix& normalized_adj,
                                          const PprConfig& cfg) {
  const DenseMatrix agg = propagate_dense(normalized_adj, alphas_ft, cfg);
  std::vector<Dirichlet> out;
  out.reserve(agg.n_rows);
  for (std::size_t i = 0; i < agg.n_rows; ++i) {
    std::vector<double> row(agg.n_cols);
    for (std::size_t k = 0; k < agg.n_cols; ++k) row[k] = agg.at(i, k);
    out.emplace_back(std::move(row));
  }
  return out;
}

// Per-node Dirichlet mixtures weighted by the PPR matrix rows (lop_gpn).
// Zero-weight components are dropped (the CSR support is the mixture).
inline std::vector<DirichletMixture> forward_lop(const DenseMatrix& alphas_ft,
                                                 const CsrMatrix& normalized_adj,
                                                 const PprConfig& cfg) {
  if (cfg.normalization != Normalization::random_walk)
    throw std::invalid_argument("forward_lop: linear opinion pooling requires random-walk "
                                "normalization");
  const CsrMatrix pi = ppr_matrix(normalized_adj, cfg);
  std::vector<Dirichlet> components;
  components.reserve(alphas_ft.n_rows);
  for (std::size_t j = 0; j < alphas_ft.n_rows; ++j) {
    std::vector<double> row(alphas_ft.n_cols);
    for (std::size_t k = 0; k < alphas_ft.n_cols; ++k) row[k] = alphas_ft.at(j, k);
    components.emplace_back(std::move(row));
  }
  std::vector<DirichletMixture> out;
  out.reserve(pi.n_rows());
  for (std::size_t i = 0; i < pi.n_rows(); ++i) {
    std::vector<double> weights;
    std::vector<Dirichlet> comps;
    for (std::size_t e = pi.row_offsets()[i]; e < pi.row_offsets()[i + 1]; ++e) {
      weights.push_back(pi.values()[e]);
      comps.push_back(components[pi.col_indices()[e]]);
    }
    out.emplace_back(std::move(weights), std::move(comps));
  }
  return out;
}

// Propagated first-order probabilities (appnp_baseline).
inline DenseMatrix forward_appnp(const PostNetPredictor& model, const DenseMatrix& features,
                                 const CsrMatrix& normalized_adj, const PprConfig& cfg) {
  PostNetPredictor& m = const_cast<PostNetPredictor&>(model);
  Tape t;
  TapeBindings tb(t);
  const Tensor x = t.constant({features.n_rows, features.n_cols}, features.values);
  const Tensor p = appnp_probs_t(m, tb, x, a_eps(normalized_adj, cfg), cfg.power_iterations);
  return DenseMatrix{features.n_rows, model.n_classes, t.values(p)};
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainingLogRow {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainingLog {
  std::vector<TrainingLogRow> rows;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
  double best_val_loss = std::numeric_limits<double>::quiet_NaN();
  double final_val_accuracy = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  PostNetPredictor model;
  TrainingLog log;
};

namespace detail {

inline std::size_t argmax_row(const double* row, std::size_t k) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < k; ++c)
    if (row[c] > row[best]) best = c;  // ties keep the lowest index
  return best;
}

inline double accuracy_on(const std::vector<double>& scores, std::size_t n_classes,
                          const std::vector<int>& labels,
                          const std::vector<std::size_t>& indices) {
  if (indices.empty()) return 1.0;
  std::size_t hits = 0;
  for (const std::size_t i : indices)
    if (static_cast<int>(argmax_row(scores.data() + i * n_classes, n_classes)) == labels[i])
      ++hits;
  return static_cast<double>(hits) / static_cast<double>(indices.size());
}

// Row-normalizes alpha values into mixture-component means and pools them
// with Pi, yielding the mixture mean per node.
inline std::vector<double> lop_mean_scores(const std::vector<double>& alphas, std::size_t n,
                                           std::size_t k, const CsrMatrix& pi) {
  DenseMatrix means{n, k, std::vector<double>(n * k, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    double a0 = 0.0;
    for (std::size_t c = 0; c < k; ++c) a0 += alphas[i * k + c];
    for (std::size_t c = 0; c < k; ++c) means.values[i * k + c] = alphas[i * k + c] / a0;
  }
  return spmm(pi, means).values;
}

}  // namespace detail

// Full-batch training with Adam, global-norm gradient clipping, and
// early stopping on validation loss (best parameters restored).
inline TrainResult train(ModelKind kind, const GraphDataset& ds, const ModelConfig& cfg,
                         std::uint64_t seed) {
  cfg.validate();
  ds.validate();
  if (!ds.has_masks()) throw std::invalid_argument("train: dataset has no split masks");
  const auto train_idx = ds.train_indices();
  const auto val_idx = ds.val_indices();
  if (train_idx.empty()) throw std::invalid_argument("train: empty train mask");
  if (val_idx.empty()) throw std::invalid_argument("train: empty validation mask");

  const PprConfig ppr = effective_ppr(kind, cfg);
  const CsrMatrix norm_adj = normalized_adjacency(kind, ds.adjacency);
  const CsrMatrix prop_op = a_eps(norm_adj, ppr);
  CsrMatrix pi;  // lop_gpn only
  if (kind == ModelKind::lop_gpn) pi = ppr_matrix(norm_adj, ppr);

  TrainResult res;
  res.model = init_predictor(kind, ds.feature_dim(), ds.n_classes, cfg, seed);
  res.model.config.ppr = ppr;
  if (kind != ModelKind::appnp_baseline) {
    std::vector<double> counts(ds.n_classes, 0.0);
    for (const std::size_t i : train_idx) counts[static_cast<std::size_t>(ds.labels[i])] += 1.0;
    for (auto& v : counts) v /= static_cast<double>(train_idx.size());
    res.model.class_priors = counts;
    res.model.certainty_budget = cfg.certainty_budget > 0.0
                                     ? cfg.certainty_budget
                                     : static_cast<double>(train_idx.size());
    res.model.config.certainty_budget = res.model.certainty_budget;
  }
  PostNetPredictor& m = res.model;

  const auto params = m.parameters();
  AdamOptimizer opt(params, cfg.adam);

  std::vector<std::vector<double>> best_values;
  std::size_t epochs_since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Tape t;
    TapeBindings tb(t);
    const Tensor x = t.constant({ds.features.n_rows, ds.features.n_cols}, ds.features.values);

    Tensor train_loss_t, val_loss_t;
    std::vector<double> scores;  // value-level class scores for accuracy
    try {
      if (kind == ModelKind::appnp_baseline) {
        const Tensor probs = appnp_probs_t(m, tb, x, prop_op, ppr.power_iterations);
        train_loss_t = loss_appnp_t(tb, probs, ds.labels, ds.n_classes, train_idx);
        val_loss_t = loss_appnp_t(tb, probs, ds.labels, ds.n_classes, val_idx);
        scores = t.values(probs);
      } else if (kind == ModelKind::lop_gpn) {
        const Tensor af = feature_alphas_t(m, tb, x);
        train_loss_t =
            loss_lop_t(tb, af, pi, ds.labels, ds.n_classes, train_idx, cfg.entropy_weight);
        val_loss_t = loss_lop_t(tb, af, pi, ds.labels, ds.n_classes, val_idx, cfg.entropy_weight);
        scores = detail::lop_mean_scores(t.values(af), ds.n_nodes(), ds.n_classes, pi);
      } else {
        Tensor agg = feature_alphas_t(m, tb, x);
        for (std::size_t l = 0; l < ppr.power_iterations; ++l) agg = t.spmm(prop_op, agg);
        train_loss_t =
            loss_gpn_t(tb, agg, ds.labels, ds.n_classes, train_idx, cfg.entropy_weight);
        val_loss_t = loss_gpn_t(tb, agg, ds.labels, ds.n_classes, val_idx, cfg.entropy_weight);
        scores = t.values(agg);
      }
    } catch (const std::domain_error& e) {
      // Parameters left the numeric domain of the loss (e.g. log of an exactly
      // zero probability): report it as divergence so callers learn the epoch.
      throw NumericalError("training diverged: " + std::string(e.what()) + " at epoch " +
                           std::to_string(epoch));
    }

    const double train_loss = t.value_scalar(train_loss_t);
    const double val_loss = t.value_scalar(val_loss_t);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
      throw NumericalError("training diverged: non-finite loss at epoch " +
                           std::to_string(epoch));
    const double val_acc = detail::accuracy_on(scores, ds.n_classes, ds.labels, val_idx);
    res.log.rows.push_back({epoch, train_loss, val_loss, val_acc});

    if (res.log.best_epoch == 0 || val_loss < res.log.best_val_loss) {
      res.log.best_epoch = epoch;
      res.log.best_val_loss = val_loss;
      res.log.final_val_accuracy = val_acc;
      best_values.clear();
      for (const Parameter* p : params) best_values.push_back(p->values);
      epochs_since_best = 0;
    } else if (++epochs_since_best >= cfg.patience) {
      break;
    }

    opt.zero_grad();
    t.backward(train_loss_t);
    tb.pull_grads();
    clip_global_norm(params, cfg.grad_clip);
    opt.step();
  }

  if (!best_values.empty())
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->values = best_values[i];
  return res;
}

// ---------------------------------------------------------------------------
// Prediction reports
// ---------------------------------------------------------------------------

struct Predictions {
  std::vector<UncertaintyReport> reports;
  std::vector<int> predicted;
};

// Per-node uncertainty report plus the argmax-of-posterior-mean class.
// appnp_baseline populates total uncertainty only; its first-order output
// cannot separate aleatoric from epistemic mass.
inline Predictions predict_report(const PostNetPredictor& model, const GraphDataset& ds) {
  if (ds.feature_dim() != model.in_dim || ds.n_classes != model.n_classes)
    throw std::invalid_argument("predict: dataset does not match the model");
  const PprConfig ppr = effective_ppr(model.kind, model.config);
  const CsrMatrix norm_adj = normalized_adjacency(model.kind, ds.adjacency);

  Predictions out;
  out.reports.reserve(ds.n_nodes());
  out.predicted.reserve(ds.n_nodes());
  const auto argmax = [](const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < v.size(); ++c)
      if (v[c] > v[best]) best = c;
    return static_cast<int>(best);
  };

  if (model.kind == ModelKind::appnp_baseline) {
    const DenseMatrix probs = forward_appnp(model, ds.features, norm_adj, ppr);
    for (std::size_t i = 0; i < probs.n_rows; ++i) {
      std::vector<double> row(probs.n_cols);
      for (std::size_t k = 0; k < probs.n_cols; ++k) row[k] = probs.at(i, k);
      UncertaintyReport r;
      r.tu = shannon_entropy(row);
      out.reports.push_back(r);
      out.predicted.push_back(argmax(row));
    }
    return out;
  }

  const DenseMatrix af = feature_alphas(model, ds.features);
  if (model.kind == ModelKind::lop_gpn) {
    for (const auto& q : forward_lop(af, norm_adj, ppr)) {
      out.reports.push_back(make_report(q));
      out.predicted.push_back(argmax(q.mean()));
    }
  } else {
    for (const auto& d : forward_gpn(af, norm_adj, ppr)) {
      out.reports.push_back(make_report(d));
      out.predicted.push_back(argmax(d.mean()));
    }
  }
  return out;
}

}  // namespace graphuq
