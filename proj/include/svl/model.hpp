#ifndef SVL_MODEL_HPP_
#define SVL_MODEL_HPP_

// Stochastic volatility with leverage in its centered and non-centered
// parameterizations:
//
//   y_t     = exp(h_t / 2) eps_t
//   h_{t+1} = mu + phi (h_t - mu) + sigma eta_t,   cor(eps_t, eta_t) = rho
//
// with h_1 ~ N(mu, sigma^2 / (1 - phi^2)). The non-centered latent state is
// h~_t = (h_t - mu) / sigma.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "svl/rng.hpp"

namespace svl {

/// Raised for inputs that violate a documented precondition.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Params {
  double phi = 0.0;
  double rho = 0.0;
  double sigma = 1.0;
  double mu = 0.0;

  bool valid() const;
  friend bool operator==(const Params&, const Params&) = default;
};

/// Unconstrained coordinates used by the random-walk moves.
struct TransformedParams {
  double z_phi = 0.0;       // atanh(phi)
  double z_rho = 0.0;       // atanh(rho)
  double log_sigma2 = 0.0;  // log(sigma^2)
  double mu = 0.0;

  friend bool operator==(const TransformedParams&, const TransformedParams&) = default;
};

struct ReturnSeries {
  std::vector<double> y;
  std::string label;

  std::size_t size() const { return y.size(); }
  /// Throws InputError unless T >= 2 and every entry is finite.
  void validate() const;
};

enum class Parameterization { Centered, NonCentered };

struct LatentPath {
  std::vector<double> values;
  Parameterization parameterization = Parameterization::Centered;

  std::size_t size() const { return values.size(); }
};

struct PriorConfig {
  double a_phi = 20.0;  // (phi + 1) / 2 ~ Beta(a_phi, b_phi)
  double b_phi = 1.5;
  double a_rho = 3.0;   // (rho + 1) / 2 ~ Beta(a_rho, b_rho)
  double b_rho = 6.0;
  double alpha_sigma = 0.5;  // sigma^2 ~ Gamma(shape, rate)
  double beta_sigma = 0.5;
  double mu_mu = -10.0;      // mu ~ N(mu_mu, sigma2_mu)
  double sigma2_mu = 100.0;

  void validate() const;
};

struct DgpSpec {
  Params params;
  std::size_t length = 0;
  std::uint64_t seed = 0;
};

TransformedParams to_transformed(const Params& p);
Params from_transformed(const TransformedParams& t);

/// log |d(phi, rho, sigma^2) / d(z_phi, z_rho, log_sigma2)|.
double log_jacobian(const TransformedParams& t);

struct LogPriorTerms {
  double phi = 0.0;
  double rho = 0.0;
  double sigma2 = 0.0;
  double mu = 0.0;

  double total() const { return phi + rho + sigma2 + mu; }
};

/// Log prior densities with respect to (phi, rho, sigma^2, mu).
LogPriorTerms log_prior_terms(const Params& p, const PriorConfig& cfg);
double log_prior(const Params& p, const PriorConfig& cfg);

/// Prior means mapped to Params: phi and rho from the Beta means, sigma from
/// the Gamma mean of sigma^2.
Params prior_mean(const PriorConfig& cfg);

/// Full log p(y, h | theta) for a centered path, all normalizing constants
/// included. Returns -inf when sigma^2 (1 - rho^2) underflows.
double log_joint_centered(std::span<const double> h, std::span<const double> y, const Params& p);

/// log p(y, h~ | theta) = log p(y, h | theta) + T log sigma with h = mu + sigma h~.
double log_joint_noncentered(std::span<const double> h_tilde, std::span<const double> y,
                             const Params& p);

/// log p_C(h | y, theta) up to a constant free of h. Accepts either
/// parameterization; non-centered paths are mapped to h first.
double log_posterior_h_centered(const LatentPath& h, const ReturnSeries& y, const Params& p);

LatentPath to_centered(const LatentPath& h, const Params& p);
LatentPath to_non_centered(const LatentPath& h, const Params& p);

struct SimulatedData {
  ReturnSeries returns;
  LatentPath latent;  // centered
};

SimulatedData simulate_svl(const DgpSpec& spec);
SimulatedData simulate_svl(const Params& p, std::size_t length, Rng& rng);

}  // namespace svl

#endif  // SVL_MODEL_HPP_
