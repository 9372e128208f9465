#ifndef SVL_KALMAN_HPP_
#define SVL_KALMAN_HPP_

// Filtering and simulation smoothing for the scalar-state, conditionally
// Gaussian model
//
//   y_t     = c_t + Z_t x_t + e_t,          Var(e_t) = H_t^2
//   x_{t+1} = g_t + phi x_t + u_t,          Var(u_t) = W_t^2,  Cov(e_t, u_t) = C_t
//   x_1     ~ N(a_1, P_1)
//
// The contemporaneous correlation is removed by regressing u_t on e_t before
// the prediction step, so a single uncorrelated-noise recursion serves every
// entry point below.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "svl/mixture.hpp"
#include "svl/model.hpp"
#include "svl/rng.hpp"

namespace svl {

/// Non-positive innovation variance or a filter variance below -1e-10.
/// Recoverable: samplers reject the move and count it.
class NumericalBreakdown : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SsmStep {
  double obs_intercept = 0.0;
  double obs_loading = 1.0;
  double obs_sd = 1.0;
  double state_intercept = 0.0;
  double state_sd = 1.0;
  double cross_cov = 0.0;
};

struct CondGaussSSM {
  std::vector<double> obs_intercept;
  std::vector<double> obs_loading;
  std::vector<double> obs_sd;
  std::vector<double> state_intercept;
  std::vector<double> state_sd;
  std::vector<double> cross_cov;
  double transition = 0.0;
  double initial_mean = 0.0;
  double initial_var = 1.0;

  explicit CondGaussSSM(std::size_t n = 0);

  std::size_t size() const { return obs_intercept.size(); }
  SsmStep step(std::size_t t) const {
    return {obs_intercept[t], obs_loading[t], obs_sd[t],
            state_intercept[t], state_sd[t], cross_cov[t]};
  }
  void set_step(std::size_t t, const SsmStep& s);
  /// Throws InputError on inconsistent lengths, H_t <= 0, P_1 < 0 or a
  /// non-PSD noise covariance.
  void validate() const;
};

struct FilterResult {
  std::vector<double> predicted_mean;
  std::vector<double> predicted_var;
  std::vector<double> filtered_mean;
  std::vector<double> filtered_var;
  std::vector<double> innovation;
  std::vector<double> innovation_var;
  double log_likelihood = 0.0;
};

/// Auxiliary-model state space for the non-centered state h~ given s.
CondGaussSSM assemble_ssm(const Linearized& lin, const IndicatorVector& s, const Params& p,
                          const MixtureTable& table);

FilterResult kalman_loglik(const CondGaussSSM& m, std::span<const double> y);

/// One exact draw of x_{1:T} | y_{1:T} by forward filtering, backward sampling.
/// The path is returned as NonCentered since that is the state the auxiliary
/// model carries.
LatentPath simulation_smoother(const CondGaussSSM& m, std::span<const double> y, Rng& rng);

/// Gaussian posterior of a constant level that enters every observation with
/// loading 1 and has prior N(level_mean, level_var), with the state path
/// integrated out. `log_likelihood` is the marginal log-likelihood of y.
struct LevelPosterior {
  double log_likelihood = 0.0;
  double mean = 0.0;
  double var = 0.0;
};

LevelPosterior filter_with_level(const CondGaussSSM& m, std::span<const double> y,
                                 double level_mean, double level_var);

/// mu | y*, s, phi, rho, sigma under the auxiliary model, h~ integrated out.
LevelPosterior mu_posterior(const Linearized& lin, const IndicatorVector& s, double phi,
                            double rho, double sigma, const PriorConfig& prior,
                            const MixtureTable& table);

double draw_mu_conjugate(const Linearized& lin, const IndicatorVector& s, double phi, double rho,
                         double sigma, const PriorConfig& prior, const MixtureTable& table,
                         Rng& rng);

/// log p(y* | d, s, phi, rho, sigma) with h~ and mu integrated out.
double collapsed_loglik(const Linearized& lin, const IndicatorVector& s, double phi, double rho,
                        double sigma, const PriorConfig& prior, const MixtureTable& table);

}  // namespace svl

#endif  // SVL_KALMAN_HPP_
