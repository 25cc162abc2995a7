#pragma once

// Built-in diagnostics: Monte-Carlo verification of the uncertainty measures,
// finite-difference verification of the reverse-mode gradients, and
// sparse-vs-dense propagation oracles.  Used by the `selfcheck` CLI command;
// every check is deterministic for a given `quick` setting.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "graphuq/autodiff.hpp"
#include "graphuq/dirichlet.hpp"
#include "graphuq/flows.hpp"
#include "graphuq/propagation.hpp"
#include "graphuq/rng.hpp"
#include "graphuq/sparse.hpp"

namespace graphuq {

struct SelfCheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace selfcheck_detail {

inline Dirichlet random_dirichlet(Rng& rng, std::size_t k) {
  std::vector<double> a(k);
  for (auto& v : a) v = 0.2 + 19.8 * rng.uniform();
  return Dirichlet(a);
}

inline DirichletMixture random_mixture(Rng& rng, std::size_t k, std::size_t n_comp) {
  std::vector<double> w(n_comp);
  double sum = 0.0;
  for (auto& v : w) {
    v = rng.uniform_pos();
    sum += v;
  }
  for (auto& v : w) v /= sum;
  std::vector<Dirichlet> comps;
  comps.reserve(n_comp);
  for (std::size_t j = 0; j < n_comp; ++j) comps.push_back(random_dirichlet(rng, k));
  return DirichletMixture(std::move(w), std::move(comps));
}

struct MonteCarlo {
  double mean = 0.0;
  double se = 0.0;
};

template <typename F>
MonteCarlo mc_estimate(std::size_t n, F&& draw) {
  double sum = 0.0, sq = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double v = draw(t);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / static_cast<double>(n);
  const double var = (sq / static_cast<double>(n) - mean * mean) /
                     static_cast<double>(n - 1) * static_cast<double>(n);
  return {mean, std::sqrt(std::max(0.0, var) / static_cast<double>(n))};
}

// Central finite differences on a scalar graph; perturbs the parameters in
// place through the given pointers, so the graph builder can own them.
struct FdCheck {
  double max_rel_err = 0.0;
  std::size_t coords = 0;
};

template <typename Build>
FdCheck fd_check(const std::vector<Parameter*>& params, Build&& build, double h = 1e-5,
                 double analytic_bias = 0.0) {
  std::vector<std::vector<double>> analytic;
  {
    Tape t;
    TapeBindings tb(t);
    const Tensor loss = build(tb);
    t.backward(loss);
    tb.pull_grads();
    for (Parameter* p : params) {
      analytic.push_back(p->grad);
      std::fill(p->grad.begin(), p->grad.end(), 0.0);
    }
  }
  FdCheck res;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    for (std::size_t e = 0; e < params[pi]->values.size(); ++e) {
      const double saved = params[pi]->values[e];
      const auto eval = [&](double x) {
        params[pi]->values[e] = x;
        Tape t;
        TapeBindings tb(t);
        const double v = t.value_scalar(build(tb));
        params[pi]->values[e] = saved;
        return v;
      };
      const double fd = (eval(saved + h) - eval(saved - h)) / (2.0 * h);
      const double an = analytic[pi][e] + analytic_bias;
      const double rel = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
      res.max_rel_err = std::max(res.max_rel_err, rel);
      ++res.coords;
    }
  }
  return res;
}

}  // namespace selfcheck_detail

// Closed-form expected-entropy linearity plus Monte-Carlo agreement.
inline SelfCheckResult selfcheck_measures_mc(bool quick) {
  namespace d = selfcheck_detail;
  const std::size_t n_mixtures = quick ? 4 : 12;
  const std::size_t n_samples = quick ? 20000 : 200000;
  Rng rng(20240001);
  double worst_lin = 0.0, worst_z = 0.0;
  for (std::size_t trial = 0; trial < n_mixtures; ++trial) {
    const std::size_t k = 2 + rng.below(4);
    const std::size_t n_comp = 1 + rng.below(5);
    const DirichletMixture q = d::random_mixture(rng, k, n_comp);
    double linear = 0.0;
    for (std::size_t j = 0; j < q.weights().size(); ++j)
      linear += q.weights()[j] * au(q.components()[j]);
    worst_lin = std::max(worst_lin, std::abs(au(q) - linear));

    const auto draws = sample(q, 99000 + trial, n_samples);
    const auto mc = d::mc_estimate(n_samples, [&](std::size_t t) {
      return shannon_entropy(draws[t]);
    });
    if (mc.se > 0.0)
      worst_z = std::max(worst_z, std::abs(mc.mean - au(q)) / mc.se);
  }
  SelfCheckResult r;
  r.name = "measures: expected-entropy linearity + Monte-Carlo";
  r.passed = worst_lin < 1e-12 && worst_z < 3.0;
  r.detail = "max linearity gap " + std::to_string(worst_lin) + ", max |z| " +
             std::to_string(worst_z);
  return r;
}

// Mixture differential entropy lies inside the pooled entropy sandwich.
inline SelfCheckResult selfcheck_entropy_sandwich(bool quick) {
  namespace d = selfcheck_detail;
  const std::size_t n_mixtures = quick ? 4 : 10;
  const std::size_t n_samples = quick ? 20000 : 100000;
  Rng rng(20240002);
  bool ok = true;
  std::string detail;
  for (std::size_t trial = 0; trial < n_mixtures; ++trial) {
    const std::size_t k = 2 + rng.below(3);
    const DirichletMixture q = d::random_mixture(rng, k, 1 + rng.below(4));
    const EntropyBounds b = eu_so_bounds(q);
    const auto draws = sample(q, 77000 + trial, n_samples);
    const auto mc = d::mc_estimate(n_samples, [&](std::size_t t) {
      return -q.log_pdf(draws[t]);
    });
    const bool inside = mc.mean >= b.lower - 3.0 * mc.se && mc.mean <= b.upper + 3.0 * mc.se;
    if (!inside && ok) {
      ok = false;
      detail = "trial " + std::to_string(trial) + ": MC " + std::to_string(mc.mean) +
               " outside [" + std::to_string(b.lower) + ", " + std::to_string(b.upper) + "]";
    }
  }
  SelfCheckResult r;
  r.name = "measures: differential-entropy sandwich";
  r.passed = ok;
  r.detail = ok ? "all mixtures inside bounds" : detail;
  return r;
}

// Finite differences over a graph exercising every primitive op.  The
// `digamma_adjoint_bias` knob exists so tests can verify the checker notices
// a wrong gradient; it must be 0 in real runs.
inline SelfCheckResult selfcheck_gradients(bool quick, double digamma_adjoint_bias = 0.0) {
  namespace d = selfcheck_detail;
  Rng rng(20240003);
  const std::size_t rows = quick ? 2 : 3;
  const std::size_t cols = 3;
  const auto rand_values = [&](std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
    return v;
  };
  Parameter pa("a", Shape{rows, cols}, rand_values(rows * cols, 0.3, 2.0));
  Parameter pb("b", Shape{rows, cols}, rand_values(rows * cols, 0.3, 2.0));
  Parameter pw("w", Shape{cols, 2}, rand_values(cols * 2, -1.0, 1.0));

  const auto build = [&](TapeBindings& tb) {
    Tape& t = tb.tape();
    const Tensor a = tb.bind(pa);
    const Tensor b = tb.bind(pb);
    const Tensor w = tb.bind(pw);
    const Tensor mix = t.add(t.mul(a, b), t.div(a, b));
    const Tensor elem = t.add(t.exp(t.neg(mix)), t.add(t.tanh(mix), t.softplus(mix)));
    const Tensor pos = t.add(t.log(a), t.add(t.sqrt(b), t.add(t.lgamma(a), t.digamma(b))));
    const Tensor mm = t.softmax_rows(t.matmul(t.relu(elem), w));
    return t.add(t.sum(t.mul(pos, pos)), t.add(t.mean(mm), t.sum(t.row_sum(elem))));
  };
  const auto res = d::fd_check({&pa, &pb, &pw}, build, 1e-5, digamma_adjoint_bias);

  SelfCheckResult r;
  r.name = "gradients: primitive battery vs finite differences";
  r.passed = res.max_rel_err < 1e-4;
  r.detail = "max rel err " + std::to_string(res.max_rel_err) + " over " +
             std::to_string(res.coords) + " coordinates";
  return r;
}

// Finite differences through a radial-flow log-density stack.
inline SelfCheckResult selfcheck_flow_gradients(bool quick) {
  namespace d = selfcheck_detail;
  Rng rng(20240004);
  const std::size_t n = quick ? 3 : 5;
  const std::size_t latent = 3;
  RadialFlowStack stack("chk", latent, 2, rng);
  std::vector<double> zvals(n * latent);
  for (auto& v : zvals) v = 2.0 * rng.normal();
  Parameter pz("z", Shape{n, latent}, std::move(zvals));

  std::vector<Parameter*> params{&pz};
  stack.collect_parameters(params);
  const auto build = [&](TapeBindings& tb) {
    Tape& t = tb.tape();
    const Tensor ld = stack.log_density(tb, tb.bind(pz));
    return t.sum(t.mul(ld, ld));
  };
  const auto res = d::fd_check(params, build, 1e-5);

  SelfCheckResult r;
  r.name = "gradients: radial-flow log-density vs finite differences";
  r.passed = res.max_rel_err < 1e-4;
  r.detail = "max rel err " + std::to_string(res.max_rel_err) + " over " +
             std::to_string(res.coords) + " coordinates";
  return r;
}

// ppr_matrix against the dense matrix power, plus sparsified-row guarantees.
inline SelfCheckResult selfcheck_sparse_vs_dense(bool quick) {
  Rng rng(20240005);
  const std::size_t trials = quick ? 10 : 50;
  double worst = 0.0;
  bool stochastic_ok = true, support_ok = true;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t n = 2 + rng.below(11);
    std::vector<Triplet> trips;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (rng.bernoulli(0.4)) {
          trips.push_back({i, j, 1.0});
          trips.push_back({j, i, 1.0});
        }
    const CsrMatrix adj = CsrMatrix::from_triplets(n, n, trips);
    const CsrMatrix rw = normalize_rw(adj, true);
    PprConfig cfg;
    cfg.teleport_epsilon = 0.05 + 0.9 * rng.uniform();
    cfg.power_iterations = 1 + rng.below(6);

    const CsrMatrix pi = ppr_matrix(rw, cfg);
    DenseMatrix dense = DenseMatrix::identity(n);
    dense = propagate_dense(rw, dense, cfg);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        worst = std::max(worst, std::abs(pi.at(i, j) - dense.at(i, j)));

    PprConfig scfg = cfg;
    scfg.sparsify_delta = 0.05;
    const CsrMatrix pis = ppr_matrix(rw, scfg);
    const std::size_t max_nnz = 1 + static_cast<std::size_t>(1.0 / *scfg.sparsify_delta);
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(pis.row_sum(i) - 1.0) > 1e-9) stochastic_ok = false;
      if (pis.row_offsets()[i + 1] - pis.row_offsets()[i] > max_nnz) support_ok = false;
    }
  }
  SelfCheckResult r;
  r.name = "propagation: sparse power vs dense oracle";
  r.passed = worst < 1e-12 && stochastic_ok && support_ok;
  r.detail = "max abs gap " + std::to_string(worst) +
             (stochastic_ok ? "" : "; sparsified rows not stochastic") +
             (support_ok ? "" : "; sparsified row support exceeds bound");
  return r;
}

inline std::vector<SelfCheckResult> run_selfchecks(bool quick) {
  return {selfcheck_measures_mc(quick), selfcheck_entropy_sandwich(quick),
          selfcheck_gradients(quick), selfcheck_flow_gradients(quick),
          selfcheck_sparse_vs_dense(quick)};
}

}  // namespace graphuq
