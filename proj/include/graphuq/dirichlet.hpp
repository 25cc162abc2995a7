#pragma once

// Dirichlet distributions, Dirichlet mixtures (linear opinion pools), and the
// second-order uncertainty measures defined on them:
//
//   tu     total uncertainty: Shannon entropy of the mean prediction
//   au     aleatoric uncertainty: expected first-order entropy
//   eu     epistemic uncertainty: tu - au (mutual information)
//   eu_so  differential entropy of the second-order distribution
//          (for mixtures: sandwiched by eu_so_bounds; the upper bound is the
//          reported surrogate)
//   eu_pc  negative total pseudo-count
//   lconf  least confidence of the mean prediction
//   uce    expected cross-entropy against a label
//
// All entropies are in nats. Measures for mixtures that are weight-linear
// (au, eu_pc) use exactly that linear form.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphuq/rng.hpp"
#include "graphuq/special.hpp"

namespace graphuq {

class Dirichlet {
 public:
  explicit Dirichlet(std::vector<double> alpha) : alpha_(std::move(alpha)) {
    if (alpha_.empty()) throw std::invalid_argument("Dirichlet: alpha must be non-empty");
    alpha0_ = 0.0;
    for (double a : alpha_) {
      if (!(a > 0.0) || !std::isfinite(a))
        throw std::invalid_argument("Dirichlet: every pseudo-count must be positive and finite");
      alpha0_ += a;
    }
  }

  std::size_t num_classes() const { return alpha_.size(); }
  const std::vector<double>& alpha() const { return alpha_; }
  double alpha0() const { return alpha0_; }

  std::vector<double> mean() const {
    std::vector<double> m(alpha_.size());
    for (std::size_t k = 0; k < alpha_.size(); ++k) m[k] = alpha_[k] / alpha0_;
    return m;
  }

  // log B(alpha) = sum_k log Gamma(alpha_k) - log Gamma(alpha_0)
  double log_beta() const {
    double s = 0.0;
    for (double a : alpha_) s += log_gamma(a);
    return s - log_gamma(alpha0_);
  }

  // Log density at an interior simplex point.
  double log_pdf(const std::vector<double>& theta) const {
    if (theta.size() != alpha_.size())
      throw std::invalid_argument("Dirichlet::log_pdf: dimension mismatch");
    double lp = -log_beta();
    for (std::size_t k = 0; k < alpha_.size(); ++k) {
      if (theta[k] <= 0.0) {
        if (alpha_[k] > 1.0) return -std::numeric_limits<double>::infinity();
        if (alpha_[k] == 1.0) continue;  // (alpha-1)=0 contributes nothing
        return std::numeric_limits<double>::infinity();
      }
      lp += (alpha_[k] - 1.0) * std::log(theta[k]);
    }
    return lp;
  }

 private:
  std::vector<double> alpha_;
  double alpha0_ = 0.0;
};

class DirichletMixture {
 public:
  DirichletMixture(std::vector<double> weights, std::vector<Dirichlet> components)
      : weights_(std::move(weights)), components_(std::move(components)) {
    if (weights_.empty() || weights_.size() != components_.size())
      throw std::invalid_argument("DirichletMixture: need matching, non-empty weights/components");
    double sum = 0.0;
    for (double w : weights_) {
      if (w < 0.0) throw std::invalid_argument("DirichletMixture: weights must be non-negative");
      sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("DirichletMixture: weights must sum to 1 within 1e-9");
    const std::size_t k = components_.front().num_classes();
    for (const auto& c : components_)
      if (c.num_classes() != k)
        throw std::invalid_argument("DirichletMixture: components must share the class count");
  }

  std::size_t num_components() const { return components_.size(); }
  std::size_t num_classes() const { return components_.front().num_classes(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Dirichlet>& components() const { return components_; }

  std::vector<double> mean() const {
    std::vector<double> m(num_classes(), 0.0);
    for (std::size_t j = 0; j < components_.size(); ++j) {
      const auto cm = components_[j].mean();
      for (std::size_t k = 0; k < m.size(); ++k) m[k] += weights_[j] * cm[k];
    }
    return m;
  }

  double log_pdf(const std::vector<double>& theta) const {
    // log-sum-exp over component log densities.
    double max_lp = -std::numeric_limits<double>::infinity();
    std::vector<double> lps(components_.size());
    for (std::size_t j = 0; j < components_.size(); ++j) {
      lps[j] = weights_[j] > 0.0 ? components_[j].log_pdf(theta)
                                 : -std::numeric_limits<double>::infinity();
      if (weights_[j] > 0.0 && lps[j] > max_lp) max_lp = lps[j];
    }
    if (!std::isfinite(max_lp)) return max_lp;
    double acc = 0.0;
    for (std::size_t j = 0; j < components_.size(); ++j)
      if (weights_[j] > 0.0) acc += weights_[j] * std::exp(lps[j] - max_lp);
    return max_lp + std::log(acc);
  }

 private:
  std::vector<double> weights_;
  std::vector<Dirichlet> components_;
};

// Shannon entropy of a probability vector, with 0*log(0) := 0.
inline double shannon_entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) {
    if (v < 0.0) throw std::invalid_argument("shannon_entropy: negative probability");
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

// --- Total uncertainty -------------------------------------------------------

inline double tu(const Dirichlet& d) { return shannon_entropy(d.mean()); }
inline double tu(const DirichletMixture& m) { return shannon_entropy(m.mean()); }

// --- Aleatoric uncertainty ---------------------------------------------------

// Closed form: AU = sum_k (alpha_k/alpha_0) (psi(alpha_0 + 1) - psi(alpha_k + 1)).
inline double au(const Dirichlet& d) {
  const double psi0 = digamma(d.alpha0() + 1.0);
  double s = 0.0;
  for (double a : d.alpha()) s += a / d.alpha0() * (psi0 - digamma(a + 1.0));
  return s;
}

// Weight-linear for mixtures.
inline double au(const DirichletMixture& m) {
  double s = 0.0;
  for (std::size_t j = 0; j < m.num_components(); ++j)
    s += m.weights()[j] * au(m.components()[j]);
  return s;
}

// --- Epistemic uncertainty (mutual information) ------------------------------

inline double eu(const Dirichlet& d) { return tu(d) - au(d); }
inline double eu(const DirichletMixture& m) { return tu(m) - au(m); }

// --- Differential entropy of the second-order distribution --------------------

// Closed form for a Dirichlet:
//   H(Q) = log B(alpha) + (alpha_0 - K) psi(alpha_0) - sum_k (alpha_k - 1) psi(alpha_k).
inline double eu_so(const Dirichlet& d) {
  const double K = static_cast<double>(d.num_classes());
  double s = d.log_beta() + (d.alpha0() - K) * digamma(d.alpha0());
  for (double a : d.alpha()) s -= (a - 1.0) * digamma(a);
  return s;
}

struct EntropyBounds {
  double lower = 0.0;
  double upper = 0.0;
};

// Mixture differential entropy is intractable; these bounds sandwich it:
//   lower = sum_j w_j H(Q_j),  upper = lower + H(Cat(w)).
inline EntropyBounds eu_so_bounds(const DirichletMixture& m) {
  double lower = 0.0;
  for (std::size_t j = 0; j < m.num_components(); ++j)
    lower += m.weights()[j] * eu_so(m.components()[j]);
  const double upper = lower + shannon_entropy(m.weights());
  return {lower, upper};
}

// The reported surrogate for a mixture is the upper bound.
inline double eu_so(const DirichletMixture& m) { return eu_so_bounds(m).upper; }

// --- Pseudo-count epistemic uncertainty --------------------------------------

inline double eu_pc(const Dirichlet& d) { return -d.alpha0(); }

inline double eu_pc(const DirichletMixture& m) {
  double s = 0.0;
  for (std::size_t j = 0; j < m.num_components(); ++j)
    s += m.weights()[j] * m.components()[j].alpha0();
  return -s;
}

// --- Least confidence ---------------------------------------------------------

inline double lconf_of_mean(const std::vector<double>& mean) {
  double best = 0.0;
  for (double v : mean) best = std::max(best, v);
  return 1.0 - best;
}

inline double lconf(const Dirichlet& d) { return lconf_of_mean(d.mean()); }
inline double lconf(const DirichletMixture& m) { return lconf_of_mean(m.mean()); }

// --- Uncertain cross-entropy ---------------------------------------------------

// uce(Q, y) = E_Q[-log theta_y] = psi(alpha_0) - psi(alpha_y).
inline double uce(const Dirichlet& d, std::size_t label) {
  if (label >= d.num_classes()) throw std::out_of_range("uce: label out of range");
  return digamma(d.alpha0()) - digamma(d.alpha()[label]);
}

// --- Sampling -------------------------------------------------------------------

inline std::vector<double> sample_one(const Dirichlet& d, Rng& rng) {
  std::vector<double> draw(d.num_classes());
  for (;;) {
    double sum = 0.0;
    for (std::size_t k = 0; k < draw.size(); ++k) {
      draw[k] = rng.gamma(d.alpha()[k]);
      sum += draw[k];
    }
    if (sum > 0.0) {
      for (auto& v : draw) v /= sum;
      return draw;
    }
    // All gammas underflowed to zero (only possible for extreme alphas); retry.
  }
}

inline std::vector<std::vector<double>> sample(const Dirichlet& d, std::uint64_t seed,
                                               std::size_t n) {
  if (n == 0) throw std::invalid_argument("sample: need n >= 1");
  Rng rng(seed);
  std::vector<std::vector<double>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_one(d, rng));
  return out;
}

inline std::vector<std::vector<double>> sample(const DirichletMixture& m, std::uint64_t seed,
                                               std::size_t n) {
  if (n == 0) throw std::invalid_argument("sample: need n >= 1");
  Rng rng(seed);
  std::vector<std::vector<double>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Inverse-CDF component choice, then a Dirichlet draw from it.
    const double u = rng.uniform();
    double cum = 0.0;
    std::size_t pick = m.num_components() - 1;
    for (std::size_t j = 0; j < m.num_components(); ++j) {
      cum += m.weights()[j];
      if (u < cum) {
        pick = j;
        break;
      }
    }
    out.push_back(sample_one(m.components()[pick], rng));
  }
  return out;
}

// --- Reports ----------------------------------------------------------------------

// One row of model output: the five measures. Fields are optional because the
// first-order baseline can only report total uncertainty.
struct UncertaintyReport {
  std::optional<double> tu;
  std::optional<double> au;
  std::optional<double> eu;
  std::optional<double> eu_pc;
  std::optional<double> eu_so;
};

inline UncertaintyReport make_report(const Dirichlet& d) {
  return {tu(d), au(d), eu(d), eu_pc(d), eu_so(d)};
}

inline UncertaintyReport make_report(const DirichletMixture& m) {
  return {tu(m), au(m), eu(m), eu_pc(m), eu_so(m)};
}

enum class Measure { tu, au, eu, eu_pc, eu_so };

inline const std::vector<Measure>& all_measures() {
  static const std::vector<Measure> ms = {Measure::tu, Measure::au, Measure::eu, Measure::eu_pc,
                                          Measure::eu_so};
  return ms;
}

inline std::string to_string(Measure m) {
  switch (m) {
    case Measure::tu: return "tu";
    case Measure::au: return "au";
    case Measure::eu: return "eu";
    case Measure::eu_pc: return "eu_pc";
    case Measure::eu_so: return "eu_so";
  }
  throw std::logic_error("unreachable");
}

inline Measure measure_from_string(const std::string& s) {
  for (Measure m : all_measures())
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown measure '" + s + "' (valid: tu, au, eu, eu_pc, eu_so)");
}

inline std::optional<double> measure_value(const UncertaintyReport& r, Measure m) {
  switch (m) {
    case Measure::tu: return r.tu;
    case Measure::au: return r.au;
    case Measure::eu: return r.eu;
    case Measure::eu_pc: return r.eu_pc;
    case Measure::eu_so: return r.eu_so;
  }
  throw std::logic_error("unreachable");
}

}  // namespace graphuq
