#pragma once

// Per-class latent density models: a stack of radial flows over a standard
// normal base distribution.
//
// Each layer applies  f(z) = z + beta * h(a, r) * (z - z0)  with
// h(a, r) = 1 / (a + r), r = |z - z0|.  The log-density of a latent point is
// evaluated in the normalizing direction:
//   log p(z) = log N(f_L(...f_1(z)); 0, I) + sum_l log|det J_l|,
// with the closed-form determinant
//   log|det J| = (H-1) log(1 + beta h) + log(1 + beta h - beta r h^2).
//
// Invertibility requires beta >= -a; the layer therefore stores an
// unconstrained parameter and maps it through beta = -a + softplus(raw).
// With a = 1 and softplus(raw) = 1 the layer starts as the identity.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "graphuq/autodiff.hpp"
#include "graphuq/rng.hpp"

namespace graphuq {

struct RadialLayer {
  Parameter center;     // z0, (1 x H)
  Parameter log_alpha;  // a = exp(log_alpha), (1 x 1)
  Parameter beta_raw;   // beta = -a + softplus(beta_raw), (1 x 1)
};

inline constexpr double kIdentityBetaRaw = 0.5413248546129181;  // softplus^-1(1) = ln(e-1)

class RadialFlowStack {
 public:
  RadialFlowStack() = default;

  // Identity-initialised stack; centers get small random offsets so layers
  // differentiate during training.
  RadialFlowStack(std::string name_prefix, std::size_t latent_dim, std::size_t n_layers,
                  Rng& rng) {
    layers_.reserve(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
      std::vector<double> z0(latent_dim);
      for (auto& v : z0) v = 0.1 * rng.normal();
      const std::string base = name_prefix + ".layer" + std::to_string(l);
      RadialLayer layer{Parameter(base + ".center", {1, latent_dim}, std::move(z0)),
                        Parameter(base + ".log_alpha", {1, 1}, {0.0}),
                        Parameter(base + ".beta_raw", {1, 1}, {kIdentityBetaRaw})};
      layers_.push_back(std::move(layer));
    }
  }

  std::size_t n_layers() const { return layers_.size(); }
  std::vector<RadialLayer>& layers() { return layers_; }
  const std::vector<RadialLayer>& layers() const { return layers_; }

  void collect_parameters(std::vector<Parameter*>& out) {
    for (auto& l : layers_) {
      out.push_back(&l.center);
      out.push_back(&l.log_alpha);
      out.push_back(&l.beta_raw);
    }
  }

  // Log-density column (N x 1) for the latent rows z (N x H).
  Tensor log_density(TapeBindings& tb, Tensor z) {
    Tape& t = tb.tape();
    const std::size_t latent_dim = t.shape(z).cols;
    Tensor logdet_total;  // starts unset; initialised on the first layer
    for (auto& layer : layers_) {
      const Tensor z0 = tb.bind(layer.center);
      const Tensor alpha = t.exp(tb.bind(layer.log_alpha));
      const Tensor beta = t.sub(t.softplus(tb.bind(layer.beta_raw)), alpha);
      const Tensor diff = t.sub(z, z0);                                   // (N,H)
      const Tensor r2 = t.row_sum(t.mul(diff, diff));                     // (N,1)
      const Tensor r = t.sqrt(t.add_scalar(r2, 1e-24));                   // keep sqrt off zero
      const Tensor h = t.div(t.constant_scalar(1.0), t.add(alpha, r));    // (N,1)
      const Tensor bh = t.mul(beta, h);                                   // (N,1)
      z = t.add(z, t.mul(bh, diff));
      // (H-1) log(1 + bh) + log(1 + bh - beta r h^2)
      const Tensor one_bh = t.add_scalar(bh, 1.0);
      const Tensor edge = t.sub(one_bh, t.mul(beta, t.mul(r, t.mul(h, h))));
      const Tensor ld = t.add(t.scale(t.log(one_bh), static_cast<double>(latent_dim - 1)),
                              t.log(edge));
      logdet_total = logdet_total.valid() ? t.add(logdet_total, ld) : ld;
    }
    // Standard normal base log-density of the transformed points.
    const double norm_const =
        -0.5 * static_cast<double>(latent_dim) * std::log(2.0 * 3.14159265358979323846);
    const Tensor base =
        t.add_scalar(t.scale(t.row_sum(t.mul(z, z)), -0.5), norm_const);  // (N,1)
    return logdet_total.valid() ? t.add(base, logdet_total) : base;
  }

 private:
  std::vector<RadialLayer> layers_;
};

}  // namespace graphuq
