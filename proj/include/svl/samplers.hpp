#ifndef SVL_SAMPLERS_HPP_
#define SVL_SAMPLERS_HPP_

// MCMC samplers for the SVL posterior:
//
//   AUX        auxiliary mixture sampler: s | h, theta; (phi, rho, sigma) | s
//              by an independence MH step with a Laplace proposal on the
//              collapsed posterior; mu | s, ...; h | s, theta by simulation
//              smoothing.
//   RWMH-C/N   latent path proposed from the auxiliary model and corrected by
//              MH, then a Gaussian random walk on theta in the centered (C) or
//              non-centered (N) parameterization.
//   RWMH-ASIS  RWMH with K rounds of [centered theta move, non-centered theta
//              move] interweaving after each latent update.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "svl/kalman.hpp"
#include "svl/mixture.hpp"
#include "svl/model.hpp"
#include "svl/optimize.hpp"
#include "svl/rng.hpp"

namespace svl {

enum class Algorithm { Aux, RwmhCentered, RwmhNonCentered, RwmhAsis };

/// CLI spelling: aux, rwmh-c, rwmh-n, rwmh-asis.
std::string_view algorithm_name(Algorithm a);
/// Throws InputError on unknown names.
Algorithm parse_algorithm(std::string_view name);

inline constexpr std::array<const char*, 4> kParamNames = {"phi", "rho", "sigma", "mu"};

struct SamplerConfig {
  Algorithm algorithm = Algorithm::RwmhAsis;
  int asis_repeats = 5;
  /// Diagonal of the random-walk covariance on (z_phi, z_rho, log_sigma2, mu).
  std::array<double, 4> rw_variance = {0.1, 0.1, 0.1, 0.1};
  std::size_t n_draws = 10000;
  std::size_t n_burnin = 2000;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  double offset = kDefaultOffset;
  OptimizerConfig optimizer;
  /// Proposal variance used when the Laplace Hessian is not positive definite.
  double laplace_fallback_variance = 0.1;
  /// Time points (0-based) whose centered h is stored with every draw.
  std::vector<std::size_t> h_checkpoints;
  /// Width of the acceptance-statistics windows, in sweeps.
  std::size_t window = 1000;

  /// Throws InputError on rw_variance <= 0, K < 1, n_draws < 1 or thin < 1.
  void validate() const;
};

/// Default burn-in: 2000 sweeps for T <= 300, 10000 otherwise.
std::size_t default_burnin(std::size_t length);

struct MoveStats {
  std::uint64_t proposed = 0;
  std::uint64_t accepted = 0;

  double rate() const {
    return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  }
  void record(bool ok) {
    ++proposed;
    accepted += ok ? 1 : 0;
  }
};

struct MoveCounters {
  MoveStats latent;
  MoveStats theta_centered;
  MoveStats theta_noncentered;
  MoveStats aux_theta;
};

struct FlagCounts {
  std::uint64_t smoother_breakdown = 0;
  std::uint64_t filter_breakdown = 0;
  std::uint64_t hessian_fallback = 0;
  std::uint64_t optimizer_failure = 0;

  std::uint64_t total() const {
    return smoother_breakdown + filter_breakdown + hessian_fallback + optimizer_failure;
  }
};

/// Wall-clock seconds spent in each AUX step.
struct AuxTimings {
  double indicators = 0.0;
  double parameters = 0.0;
  double mu = 0.0;
  double latent = 0.0;

  double total() const { return indicators + parameters + mu + latent; }
};

struct ChainState {
  Params params;
  LatentPath h;  // always centered between sweeps
  IndicatorVector s;
  MoveCounters moves;
  FlagCounts flags;
  AuxTimings aux_timings;
  std::size_t iteration = 0;
};

/// Returns and their linearization, built once per data set.
struct ModelData {
  ReturnSeries returns;
  Linearized lin;
};

ModelData make_model_data(ReturnSeries returns, double offset = kDefaultOffset);

/// Target log-density of the latent update; defaults to
/// log_posterior_h_centered. Overridable for testing.
using LatentLogDensity = std::function<double(const LatentPath&, const Params&)>;

/// s | y, h, theta, then h* from the auxiliary model given s, accepted with
/// probability min{1, p_C(h*) p_A(h) / (p_C(h) p_A(h*))}. The refreshed s is
/// kept whether or not h* is accepted.
void latent_update(ChainState& state, const ModelData& data, const MixtureTable& table, Rng& rng,
                   const LatentLogDensity& target = {});

/// log p(y, latent | theta) with the latent held fixed; the argument is the
/// candidate theta.
using ThetaLikelihood = std::function<double(const Params&)>;

/// One Gaussian random-walk MH step on (z_phi, z_rho, log_sigma2, mu) against
/// loglik + log prior + log Jacobian. Returns true on acceptance.
bool rwmh_step(Params& params, const ThetaLikelihood& loglik, const PriorConfig& prior,
               const std::array<double, 4>& rw_variance, Rng& rng);

/// Random-walk move on theta holding h (centered) or h~ (non-centered)
/// fixed. Does not touch state.h; after a non-centered move the caller
/// re-derives h from h~ (asis_interweave does).
void rwmh_theta(ChainState& state, const ModelData& data, Parameterization parameterization,
                const SamplerConfig& cfg, const PriorConfig& prior, Rng& rng);

/// `repeats` rounds of: h~ = (h - mu) / sigma; non-centered theta move;
/// h = mu + sigma h~. A rejected move leaves h bit-for-bit unchanged.
void asis_interweave(ChainState& state, const ModelData& data, const PriorConfig& prior,
                     const SamplerConfig& cfg, Rng& rng, int repeats = 1);

struct LaplaceStepResult {
  bool accepted = false;
  bool hessian_fallback = false;
  bool optimizer_failure = false;
  int evaluations = 0;
};

/// Independence MH step for a log-density on R^k whose proposal is the
/// Gaussian Laplace approximation at the numerically located mode. The
/// optimizer starts at `current`. If the mode search does not converge,
/// `current` is kept; if the Hessian is not positive definite, the proposal
/// covariance falls back to fallback_variance * I.
LaplaceStepResult laplace_independence_step(const Objective& log_target, Eigen::VectorXd& current,
                                            const OptimizerConfig& opt, double fallback_variance,
                                            Rng& rng);

/// Collapsed log posterior of x = (z_phi, z_rho, log_sigma2) given s, with
/// the Jacobian of the transformation included.
double aux_collapsed_log_target(const Eigen::VectorXd& x, const Linearized& lin,
                                const IndicatorVector& s, const PriorConfig& prior,
                                const MixtureTable& table);

/// AUX step 2: (phi, rho, sigma) | y*, s. mu is left unchanged.
void aux_step2(ChainState& state, const Linearized& lin, const MixtureTable& table,
               const PriorConfig& prior, const SamplerConfig& cfg, Rng& rng);

/// Full AUX sweep: indicators, aux_step2, mu, then h~ by simulation
/// smoothing; h is rebuilt as mu + sigma h~.
void aux_sweep(ChainState& state, const ModelData& data, const MixtureTable& table,
               const PriorConfig& prior, const SamplerConfig& cfg, Rng& rng);

class Sampler {
 public:
  Sampler(SamplerConfig cfg, PriorConfig prior,
          const MixtureTable& table = MixtureTable::omori());

  /// theta at the prior means, h at y* recentred around the prior mean of mu.
  ChainState initial_state(const ModelData& data) const;
  void sweep(ChainState& state, const ModelData& data, Rng& rng) const;

  const SamplerConfig& config() const { return cfg_; }
  const PriorConfig& prior() const { return prior_; }

 private:
  SamplerConfig cfg_;
  PriorConfig prior_;
  const MixtureTable& table_;
};

struct WindowStats {
  std::size_t first_sweep = 0;  // index within the sampling phase
  std::size_t sweeps = 0;
  double latent_rate = 0.0;
  double theta_rate = 0.0;  // all theta moves of the algorithm combined
};

using Draw = std::array<double, 4>;  // phi, rho, sigma, mu

struct ChainOutput {
  std::vector<Draw> draws;
  std::vector<std::size_t> h_checkpoints;
  std::vector<std::vector<double>> h_draws;  // one row per stored draw
  double sampling_seconds = 0.0;
  double burnin_seconds = 0.0;
  MoveCounters moves;  // sampling phase only
  FlagCounts flags;    // sampling phase only
  AuxTimings aux_timings;
  std::vector<WindowStats> windows;
  SamplerConfig config;
  PriorConfig prior;
  std::size_t length = 0;

  std::vector<double> column(std::size_t k) const;
};

/// Burn-in then n_draws recorded sweeps; every thin-th sweep is stored.
ChainOutput run_chain(const ReturnSeries& y, const PriorConfig& prior, const SamplerConfig& cfg);

}  // namespace svl

#endif  // SVL_SAMPLERS_HPP_
