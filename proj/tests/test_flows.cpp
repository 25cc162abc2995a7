#include "graphuq/flows.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "graphuq/rng.hpp"
#include "testutil.hpp"

namespace {

using graphuq::Parameter;
using graphuq::RadialFlowStack;
using graphuq::Rng;
using graphuq::Shape;
using graphuq::Tape;
using graphuq::TapeBindings;
using graphuq::Tensor;

constexpr double kLn2Pi = 1.8378770664093454836;  // log(2*pi)

double std_normal_log_density(const std::vector<double>& z) {
  double s = -0.5 * static_cast<double>(z.size()) * kLn2Pi;
  for (const double v : z) s -= 0.5 * v * v;
  return s;
}

// Evaluates the stack's log-density for one latent row on a throwaway tape.
double eval_log_density(RadialFlowStack& stack, const std::vector<double>& z) {
  Tape t;
  TapeBindings tb(t);
  const Tensor zt = t.constant({1, z.size()}, z);
  return t.value_scalar(stack.log_density(tb, zt));
}

TEST(RadialFlow, IdentityInitialisationMatchesStandardNormal) {
  // beta_raw is chosen so that beta = -exp(0) + softplus(beta_raw) = 0, which
  // turns every layer into the identity map with zero log-determinant.
  EXPECT_NEAR(std::log(std::exp(1.0) - 1.0), graphuq::kIdentityBetaRaw, 4e-15);
  const double beta = -1.0 + std::log1p(std::exp(graphuq::kIdentityBetaRaw));
  EXPECT_NEAR(beta, 0.0, 4e-15);

  Rng rng(11);
  RadialFlowStack stack("f", 4, 3, rng);
  ASSERT_EQ(stack.n_layers(), 3u);
  Rng pts(12);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> z(4);
    for (auto& v : z) v = 2.0 * pts.normal();
    EXPECT_NEAR(eval_log_density(stack, z), std_normal_log_density(z), 1e-9);
  }
}

TEST(RadialFlow, ParameterNamesAndShapes) {
  Rng rng(5);
  RadialFlowStack stack("flow.class2", 16, 2, rng);
  std::vector<Parameter*> params;
  stack.collect_parameters(params);
  ASSERT_EQ(params.size(), 6u);
  EXPECT_EQ(params[0]->name, "flow.class2.layer0.center");
  EXPECT_EQ(params[1]->name, "flow.class2.layer0.log_alpha");
  EXPECT_EQ(params[2]->name, "flow.class2.layer0.beta_raw");
  EXPECT_EQ(params[3]->name, "flow.class2.layer1.center");
  EXPECT_EQ(params[0]->shape.rows, 1u);
  EXPECT_EQ(params[0]->shape.cols, 16u);
  EXPECT_EQ(params[1]->shape.cols, 1u);
}

// Pushes the layers away from the identity so the transform actually warps
// space, then checks the reported log-determinant against a numerical
// Jacobian of the forward map.
TEST(RadialFlow, LogDeterminantMatchesNumericalJacobian) {
  Rng rng(21);
  const std::size_t latent = 2;
  RadialFlowStack stack("f", latent, 2, rng);
  for (auto& layer : stack.layers()) {
    layer.log_alpha.values[0] = 0.3;
    layer.beta_raw.values[0] = 1.4;
  }

  // Value-level forward map mirroring the layer definition.
  const auto forward = [&](std::vector<double> z) {
    for (const auto& layer : stack.layers()) {
      const double alpha = std::exp(layer.log_alpha.values[0]);
      const double beta = -alpha + std::log1p(std::exp(layer.beta_raw.values[0]));
      double r2 = 0.0;
      for (std::size_t j = 0; j < latent; ++j) {
        const double d = z[j] - layer.center.values[j];
        r2 += d * d;
      }
      const double r = std::sqrt(r2 + 1e-24);
      const double bh = beta / (alpha + r);
      for (std::size_t j = 0; j < latent; ++j) z[j] += bh * (z[j] - layer.center.values[j]);
    }
    return z;
  };

  Rng pts(22);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> z(latent);
    for (auto& v : z) v = 1.5 * pts.normal();

    // log|det J| via central differences of the composed map.
    const double h = 1e-6;
    double jac[2][2];
    for (std::size_t j = 0; j < latent; ++j) {
      std::vector<double> zp = z, zm = z;
      zp[j] += h;
      zm[j] -= h;
      const auto fp = forward(zp), fm = forward(zm);
      for (std::size_t i = 0; i < latent; ++i) jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
    }
    const double det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    ASSERT_GT(det, 0.0);
    const double want = std_normal_log_density(forward(z)) + std::log(det);
    EXPECT_NEAR(eval_log_density(stack, z), want, 1e-6);
  }
}

// A valid change of variables must integrate to one.  With a 1-d latent the
// density can be integrated directly by quadrature.
TEST(RadialFlow, DensityIntegratesToOne) {
  Rng rng(31);
  RadialFlowStack stack("f", 1, 2, rng);
  stack.layers()[0].log_alpha.values[0] = 0.2;
  stack.layers()[0].beta_raw.values[0] = 1.8;
  stack.layers()[0].center.values[0] = 0.7;
  stack.layers()[1].log_alpha.values[0] = -0.4;
  stack.layers()[1].beta_raw.values[0] = 0.1;
  stack.layers()[1].center.values[0] = -0.9;

  const double mass = testutil::integrate(
      [&](double z) { return std::exp(eval_log_density(stack, {z})); }, -14.0, 14.0, 1e-10);
  EXPECT_NEAR(mass, 1.0, 1e-7);
}

TEST(RadialFlow, GradientsMatchFiniteDifferences) {
  Rng rng(41);
  const std::size_t latent = 3;
  RadialFlowStack stack("f", latent, 2, rng);
  // Move off the identity so every parameter has a live gradient path.
  for (auto& layer : stack.layers()) {
    layer.log_alpha.values[0] = 0.25;
    layer.beta_raw.values[0] = 1.1;
  }
  std::vector<double> zvals(2 * latent);
  Rng pts(42);
  for (auto& v : zvals) v = pts.normal();
  Parameter pz("z", Shape{2, latent}, std::move(zvals));

  std::vector<Parameter*> params{&pz};
  stack.collect_parameters(params);

  // Analytic gradients of sum(log p(z)).
  std::vector<std::vector<double>> analytic;
  {
    Tape t;
    TapeBindings tb(t);
    t.backward(t.sum(stack.log_density(tb, tb.bind(pz))));
    tb.pull_grads();
    for (Parameter* p : params) {
      analytic.push_back(p->grad);
      std::fill(p->grad.begin(), p->grad.end(), 0.0);
    }
  }

  const double h = 1e-5;
  double max_rel = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    for (std::size_t e = 0; e < params[pi]->values.size(); ++e) {
      const double saved = params[pi]->values[e];
      const auto eval = [&](double x) {
        params[pi]->values[e] = x;
        Tape t;
        TapeBindings tb(t);
        const double v = t.value_scalar(t.sum(stack.log_density(tb, tb.bind(pz))));
        params[pi]->values[e] = saved;
        return v;
      };
      const double fd = (eval(saved + h) - eval(saved - h)) / (2.0 * h);
      const double an = analytic[pi][e];
      max_rel = std::max(max_rel,
                         std::fabs(fd - an) / std::max({1.0, std::fabs(fd), std::fabs(an)}));
    }
  }
  EXPECT_LT(max_rel, 1e-5);
}

// The density must stay finite exactly at a layer center (r = 0).
TEST(RadialFlow, FiniteAtLayerCenter) {
  Rng rng(51);
  RadialFlowStack stack("f", 2, 1, rng);
  stack.layers()[0].center.values = {0.3, -0.2};
  stack.layers()[0].beta_raw.values[0] = 1.5;
  const double ld = eval_log_density(stack, {0.3, -0.2});
  EXPECT_TRUE(std::isfinite(ld));
}

}  // namespace
