#include "svl/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace svl {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

inline double log_beta_fn(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Density of x in (-1, 1) when (x + 1) / 2 ~ Beta(a, b).
inline double log_shifted_beta(double x, double a, double b) {
  return (a - 1.0) * std::log((1.0 + x) / 2.0) + (b - 1.0) * std::log((1.0 - x) / 2.0) -
         log_beta_fn(a, b) - std::numbers::ln2;
}

}  // namespace

bool Params::valid() const {
  return std::isfinite(phi) && std::isfinite(rho) && std::isfinite(sigma) && std::isfinite(mu) &&
         std::abs(phi) < 1.0 && std::abs(rho) < 1.0 && sigma > 0.0;
}

void ReturnSeries::validate() const {
  if (y.size() < 2) {
    throw InputError("return series needs at least 2 observations, got " +
                     std::to_string(y.size()));
  }
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (!std::isfinite(y[t])) {
      throw InputError("non-finite return at index " + std::to_string(t));
    }
  }
}

void PriorConfig::validate() const {
  const double positive[] = {a_phi, b_phi, a_rho, b_rho, alpha_sigma, beta_sigma, sigma2_mu};
  for (const double v : positive) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InputError("prior shape, rate and variance parameters must be positive and finite");
    }
  }
  if (!std::isfinite(mu_mu)) throw InputError("prior mean of mu must be finite");
}

TransformedParams to_transformed(const Params& p) {
  return {std::atanh(p.phi), std::atanh(p.rho), 2.0 * std::log(p.sigma), p.mu};
}

Params from_transformed(const TransformedParams& t) {
  return {std::tanh(t.z_phi), std::tanh(t.z_rho), std::exp(0.5 * t.log_sigma2), t.mu};
}

double log_jacobian(const TransformedParams& t) {
  // d tanh(z)/dz = 1 - tanh^2(z) = 1 / cosh^2(z); computed via cosh to keep
  // precision when |z| is large.
  const double log_dphi = -2.0 * std::log(std::cosh(t.z_phi));
  const double log_drho = -2.0 * std::log(std::cosh(t.z_rho));
  return log_dphi + log_drho + t.log_sigma2;
}

LogPriorTerms log_prior_terms(const Params& p, const PriorConfig& cfg) {
  LogPriorTerms terms;
  terms.phi = log_shifted_beta(p.phi, cfg.a_phi, cfg.b_phi);
  terms.rho = log_shifted_beta(p.rho, cfg.a_rho, cfg.b_rho);
  const double s2 = p.sigma * p.sigma;
  terms.sigma2 = cfg.alpha_sigma * std::log(cfg.beta_sigma) - std::lgamma(cfg.alpha_sigma) +
                 (cfg.alpha_sigma - 1.0) * std::log(s2) - cfg.beta_sigma * s2;
  terms.mu = log_normal_pdf(p.mu, cfg.mu_mu, cfg.sigma2_mu);
  return terms;
}

double log_prior(const Params& p, const PriorConfig& cfg) { return log_prior_terms(p, cfg).total(); }

Params prior_mean(const PriorConfig& cfg) {
  Params p;
  p.phi = 2.0 * cfg.a_phi / (cfg.a_phi + cfg.b_phi) - 1.0;
  p.rho = 2.0 * cfg.a_rho / (cfg.a_rho + cfg.b_rho) - 1.0;
  p.sigma = std::sqrt(cfg.alpha_sigma / cfg.beta_sigma);
  p.mu = cfg.mu_mu;
  return p;
}

double log_joint_centered(std::span<const double> h, std::span<const double> y, const Params& p) {
  if (h.size() != y.size() || h.empty()) {
    throw InputError("latent path and return series lengths differ");
  }
  const double s2 = p.sigma * p.sigma;
  const double cond_var = s2 * (1.0 - p.rho * p.rho);
  const double init_var = s2 / (1.0 - p.phi * p.phi);
  if (!(cond_var > 0.0) || !(init_var > 0.0)) return kNegInf;

  const double log_cond_var = std::log(cond_var);
  const double lever = p.rho * p.sigma;
  const std::size_t n = h.size();

  double lp = log_normal_pdf(h[0], p.mu, init_var);
  for (std::size_t t = 0; t + 1 < n; ++t) {
    const double e = y[t] * std::exp(-0.5 * h[t]);
    lp += -0.5 * (kLog2Pi + h[t] + e * e);
    const double mean = p.mu + p.phi * (h[t] - p.mu) + lever * e;
    const double d = h[t + 1] - mean;
    lp += -0.5 * (kLog2Pi + log_cond_var + d * d / cond_var);
  }
  const double e_last = y[n - 1] * std::exp(-0.5 * h[n - 1]);
  lp += -0.5 * (kLog2Pi + h[n - 1] + e_last * e_last);
  return std::isnan(lp) ? kNegInf : lp;
}

double log_joint_noncentered(std::span<const double> h_tilde, std::span<const double> y,
                             const Params& p) {
  std::vector<double> h(h_tilde.size());
  for (std::size_t t = 0; t < h.size(); ++t) h[t] = p.mu + p.sigma * h_tilde[t];
  return log_joint_centered(h, y, p) + static_cast<double>(h.size()) * std::log(p.sigma);
}

double log_posterior_h_centered(const LatentPath& h, const ReturnSeries& y, const Params& p) {
  if (h.parameterization == Parameterization::Centered) {
    return log_joint_centered(h.values, y.y, p);
  }
  return log_joint_centered(to_centered(h, p).values, y.y, p);
}

LatentPath to_centered(const LatentPath& h, const Params& p) {
  if (h.parameterization == Parameterization::Centered) return h;
  LatentPath out{std::vector<double>(h.size()), Parameterization::Centered};
  for (std::size_t t = 0; t < h.size(); ++t) out.values[t] = p.mu + p.sigma * h.values[t];
  return out;
}

LatentPath to_non_centered(const LatentPath& h, const Params& p) {
  if (h.parameterization == Parameterization::NonCentered) return h;
  LatentPath out{std::vector<double>(h.size()), Parameterization::NonCentered};
  for (std::size_t t = 0; t < h.size(); ++t) out.values[t] = (h.values[t] - p.mu) / p.sigma;
  return out;
}

SimulatedData simulate_svl(const Params& p, std::size_t length, Rng& rng) {
  if (!p.valid()) throw InputError("invalid SVL parameters");
  if (length == 0) throw InputError("series length must be positive");

  SimulatedData out;
  out.returns.y.resize(length);
  out.latent.values.resize(length);
  out.latent.parameterization = Parameterization::Centered;
  auto& y = out.returns.y;
  auto& h = out.latent.values;

  const double rho_c = std::sqrt(1.0 - p.rho * p.rho);
  h[0] = p.mu + p.sigma / std::sqrt(1.0 - p.phi * p.phi) * rng.normal();
  for (std::size_t t = 0; t < length; ++t) {
    const double eps = rng.normal();
    y[t] = std::exp(0.5 * h[t]) * eps;
    if (t + 1 < length) {
      const double eta = p.rho * eps + rho_c * rng.normal();
      h[t + 1] = p.mu + p.phi * (h[t] - p.mu) + p.sigma * eta;
    }
  }
  return out;
}

SimulatedData simulate_svl(const DgpSpec& spec) {
  Rng rng(spec.seed);
  return simulate_svl(spec.params, spec.length, rng);
}

}  // namespace svl
