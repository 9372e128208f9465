#include "svl/samplers.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace svl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool accept(double log_ratio, Rng& rng) {
  if (std::isnan(log_ratio)) return false;
  return std::log(rng.uniform()) < log_ratio;
}

std::vector<double> non_centered(const std::vector<double>& h, const Params& p) {
  std::vector<double> out(h.size());
  for (std::size_t t = 0; t < h.size(); ++t) out[t] = (h[t] - p.mu) / p.sigma;
  return out;
}

// Non-centered theta move; on acceptance `h_tilde` is the path that h must be
// rebuilt from.
bool theta_move_noncentered(ChainState& state, const ModelData& data, const SamplerConfig& cfg,
                            const PriorConfig& prior, Rng& rng, std::vector<double>& h_tilde) {
  h_tilde = non_centered(state.h.values, state.params);
  const auto& y = data.returns.y;
  const ThetaLikelihood loglik = [&](const Params& q) {
    return log_joint_noncentered(h_tilde, y, q);
  };
  const bool ok = rwmh_step(state.params, loglik, prior, cfg.rw_variance, rng);
  state.moves.theta_noncentered.record(ok);
  return ok;
}

}  // namespace

std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Aux:
      return "aux";
    case Algorithm::RwmhCentered:
      return "rwmh-c";
    case Algorithm::RwmhNonCentered:
      return "rwmh-n";
    case Algorithm::RwmhAsis:
      return "rwmh-asis";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  for (const Algorithm a : {Algorithm::Aux, Algorithm::RwmhCentered, Algorithm::RwmhNonCentered,
                            Algorithm::RwmhAsis}) {
    if (name == algorithm_name(a)) return a;
  }
  throw InputError("unknown sampler '" + std::string(name) +
                   "' (expected aux, rwmh-c, rwmh-n or rwmh-asis)");
}

void SamplerConfig::validate() const {
  for (const double v : rw_variance) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError("random-walk variance must be positive");
  }
  if (asis_repeats < 1) throw InputError("ASIS repeats must be at least 1");
  if (n_draws < 1) throw InputError("number of draws must be at least 1");
  if (thin < 1) throw InputError("thinning interval must be at least 1");
  if (window < 1) throw InputError("acceptance window must be at least 1");
  if (!(offset > 0.0)) throw InputError("linearization offset must be positive");
}

std::size_t default_burnin(std::size_t length) { return length <= 300 ? 2000 : 10000; }

ModelData make_model_data(ReturnSeries returns, double offset) {
  ModelData data;
  data.lin = linearize(returns, offset);
  data.returns = std::move(returns);
  return data;
}

void latent_update(ChainState& state, const ModelData& data, const MixtureTable& table, Rng& rng,
                   const LatentLogDensity& target) {
  const Params& p = state.params;
  const LatentPath current_nc = to_non_centered(state.h, p);
  state.s = sample_indicators(data.lin, current_nc, p, table, rng);

  LatentPath proposal_nc;
  try {
    proposal_nc = simulation_smoother(assemble_ssm(data.lin, state.s, p, table),
                                      data.lin.y_star, rng);
  } catch (const NumericalBreakdown&) {
    ++state.flags.smoother_breakdown;
    state.moves.latent.record(false);
    return;
  }
  LatentPath proposal = to_centered(proposal_nc, p);

  const auto log_exact = [&](const LatentPath& h) {
    return target ? target(h, p) : log_posterior_h_centered(h, data.returns, p);
  };
  const double log_ratio = log_exact(proposal) - log_exact(state.h) +
                           aux_log_density_marginal(current_nc, data.lin, p, table) -
                           aux_log_density_marginal(proposal_nc, data.lin, p, table);
  const bool ok = accept(log_ratio, rng);
  if (ok) state.h = std::move(proposal);
  state.moves.latent.record(ok);
}

bool rwmh_step(Params& params, const ThetaLikelihood& loglik, const PriorConfig& prior,
               const std::array<double, 4>& rw_variance, Rng& rng) {
  const TransformedParams cur = to_transformed(params);
  std::array<double, 4> step;
  for (std::size_t i = 0; i < 4; ++i) step[i] = std::sqrt(rw_variance[i]) * rng.normal();

  const TransformedParams prop_t{cur.z_phi + step[0], cur.z_rho + step[1],
                                 cur.log_sigma2 + step[2], cur.mu + step[3]};
  // Coordinates that do not move keep their natural value exactly.
  Params prop = from_transformed(prop_t);
  if (step[0] == 0.0) prop.phi = params.phi;
  if (step[1] == 0.0) prop.rho = params.rho;
  if (step[2] == 0.0) prop.sigma = params.sigma;
  if (step[3] == 0.0) prop.mu = params.mu;
  if (!prop.valid()) return false;

  const double lt_prop = loglik(prop) + log_prior(prop, prior) + log_jacobian(prop_t);
  const double lt_cur = loglik(params) + log_prior(params, prior) + log_jacobian(cur);
  if (!accept(lt_prop - lt_cur, rng)) return false;
  params = prop;
  return true;
}

void rwmh_theta(ChainState& state, const ModelData& data, Parameterization parameterization,
                const SamplerConfig& cfg, const PriorConfig& prior, Rng& rng) {
  if (parameterization == Parameterization::NonCentered) {
    std::vector<double> h_tilde;
    theta_move_noncentered(state, data, cfg, prior, rng, h_tilde);
    return;
  }
  const auto& h = state.h.values;
  const auto& y = data.returns.y;
  const ThetaLikelihood loglik = [&](const Params& q) { return log_joint_centered(h, y, q); };
  state.moves.theta_centered.record(rwmh_step(state.params, loglik, prior, cfg.rw_variance, rng));
}

void asis_interweave(ChainState& state, const ModelData& data, const PriorConfig& prior,
                     const SamplerConfig& cfg, Rng& rng, int repeats) {
  std::vector<double> h_tilde;
  for (int r = 0; r < repeats; ++r) {
    if (!theta_move_noncentered(state, data, cfg, prior, rng, h_tilde)) continue;
    const Params& p = state.params;
    auto& h = state.h.values;
    for (std::size_t t = 0; t < h.size(); ++t) h[t] = p.mu + p.sigma * h_tilde[t];
  }
}

LaplaceStepResult laplace_independence_step(const Objective& log_target, Eigen::VectorXd& current,
                                            const OptimizerConfig& opt, double fallback_variance,
                                            Rng& rng) {
  LaplaceStepResult result;
  const Objective neg = [&](const Eigen::VectorXd& x) { return -log_target(x); };
  const OptimResult mode = minimize_bfgs(neg, current, opt);
  result.evaluations = mode.evaluations;
  if (!mode.converged) {
    result.optimizer_failure = true;
    return result;
  }

  const Eigen::Index k = current.size();
  Eigen::MatrixXd precision =
      numerical_hessian(neg, mode.x, opt.hessian_step, mode.value, &result.evaluations);
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (!precision.allFinite() || llt.info() != Eigen::Success) {
    result.hessian_fallback = true;
    precision = Eigen::MatrixXd::Identity(k, k) / fallback_variance;
    llt.compute(precision);
  }
  const Eigen::MatrixXd upper = llt.matrixU();  // precision = U' U

  Eigen::VectorXd z(k);
  for (Eigen::Index i = 0; i < k; ++i) z(i) = rng.normal();
  const Eigen::VectorXd proposal =
      mode.x + upper.triangularView<Eigen::Upper>().solve(z);

  const auto log_q = [&](const Eigen::VectorXd& x) {
    return -0.5 * (upper * (x - mode.x)).squaredNorm();
  };
  const double log_ratio =
      log_target(proposal) - log_target(current) + log_q(current) - log_q(proposal);
  result.evaluations += 2;
  if (accept(log_ratio, rng)) {
    current = proposal;
    result.accepted = true;
  }
  return result;
}

double aux_collapsed_log_target(const Eigen::VectorXd& x, const Linearized& lin,
                                const IndicatorVector& s, const PriorConfig& prior,
                                const MixtureTable& table) {
  const TransformedParams t{x(0), x(1), x(2), prior.mu_mu};
  const Params p = from_transformed(t);
  if (!p.valid()) return kNegInf;
  double ll = 0.0;
  try {
    ll = collapsed_loglik(lin, s, p.phi, p.rho, p.sigma, prior, table);
  } catch (const NumericalBreakdown&) {
    return kNegInf;
  }
  const LogPriorTerms lp = log_prior_terms(p, prior);
  const double value = ll + lp.phi + lp.rho + lp.sigma2 + log_jacobian(t);
  return std::isnan(value) ? kNegInf : value;
}

void aux_step2(ChainState& state, const Linearized& lin, const MixtureTable& table,
               const PriorConfig& prior, const SamplerConfig& cfg, Rng& rng) {
  const TransformedParams cur = to_transformed(state.params);
  Eigen::VectorXd x(3);
  x << cur.z_phi, cur.z_rho, cur.log_sigma2;
  const Objective target = [&](const Eigen::VectorXd& v) {
    return aux_collapsed_log_target(v, lin, state.s, prior, table);
  };
  const LaplaceStepResult r =
      laplace_independence_step(target, x, cfg.optimizer, cfg.laplace_fallback_variance, rng);
  if (r.optimizer_failure) ++state.flags.optimizer_failure;
  if (r.hessian_fallback) ++state.flags.hessian_fallback;
  state.moves.aux_theta.record(r.accepted);
  if (r.accepted) {
    const Params p = from_transformed({x(0), x(1), x(2), state.params.mu});
    state.params.phi = p.phi;
    state.params.rho = p.rho;
    state.params.sigma = p.sigma;
  }
}

void aux_sweep(ChainState& state, const ModelData& data, const MixtureTable& table,
               const PriorConfig& prior, const SamplerConfig& cfg, Rng& rng) {
  auto start = Clock::now();
  state.s = sample_indicators(data.lin, to_non_centered(state.h, state.params), state.params,
                              table, rng);
  state.aux_timings.indicators += seconds_since(start);

  start = Clock::now();
  aux_step2(state, data.lin, table, prior, cfg, rng);
  state.aux_timings.parameters += seconds_since(start);

  Params& p = state.params;
  start = Clock::now();
  try {
    p.mu = draw_mu_conjugate(data.lin, state.s, p.phi, p.rho, p.sigma, prior, table, rng);
  } catch (const NumericalBreakdown&) {
    ++state.flags.filter_breakdown;
    state.aux_timings.mu += seconds_since(start);
    return;
  }
  state.aux_timings.mu += seconds_since(start);

  start = Clock::now();
  try {
    const LatentPath h_tilde =
        simulation_smoother(assemble_ssm(data.lin, state.s, p, table), data.lin.y_star, rng);
    state.h = to_centered(h_tilde, p);
  } catch (const NumericalBreakdown&) {
    ++state.flags.smoother_breakdown;
  }
  state.aux_timings.latent += seconds_since(start);
}

Sampler::Sampler(SamplerConfig cfg, PriorConfig prior, const MixtureTable& table)
    : cfg_(std::move(cfg)), prior_(prior), table_(table) {}

ChainState Sampler::initial_state(const ModelData& data) const {
  ChainState state;
  state.params = prior_mean(prior_);
  const auto& ys = data.lin.y_star;
  const std::size_t n = ys.size();
  double mean = 0.0;
  for (const double v : ys) mean += v;
  mean /= static_cast<double>(n);
  state.h.parameterization = Parameterization::Centered;
  state.h.values.resize(n);
  for (std::size_t t = 0; t < n; ++t) state.h.values[t] = state.params.mu + (ys[t] - mean);
  state.s.s.assign(n, 0);
  return state;
}

void Sampler::sweep(ChainState& state, const ModelData& data, Rng& rng) const {
  switch (cfg_.algorithm) {
    case Algorithm::Aux:
      aux_sweep(state, data, table_, prior_, cfg_, rng);
      break;
    case Algorithm::RwmhCentered:
      latent_update(state, data, table_, rng);
      rwmh_theta(state, data, Parameterization::Centered, cfg_, prior_, rng);
      break;
    case Algorithm::RwmhNonCentered:
      latent_update(state, data, table_, rng);
      asis_interweave(state, data, prior_, cfg_, rng, 1);
      break;
    case Algorithm::RwmhAsis:
      latent_update(state, data, table_, rng);
      for (int k = 0; k < cfg_.asis_repeats; ++k) {
        rwmh_theta(state, data, Parameterization::Centered, cfg_, prior_, rng);
        asis_interweave(state, data, prior_, cfg_, rng, 1);
      }
      break;
  }
  ++state.iteration;
}

std::vector<double> ChainOutput::column(std::size_t k) const {
  std::vector<double> out(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) out[i] = draws[i][k];
  return out;
}

namespace {

MoveStats combined_theta(const MoveCounters& m, Algorithm a) {
  switch (a) {
    case Algorithm::Aux:
      return m.aux_theta;
    case Algorithm::RwmhCentered:
      return m.theta_centered;
    case Algorithm::RwmhNonCentered:
      return m.theta_noncentered;
    case Algorithm::RwmhAsis:
      return {m.theta_centered.proposed + m.theta_noncentered.proposed,
              m.theta_centered.accepted + m.theta_noncentered.accepted};
  }
  return {};
}

WindowStats window_stats(const MoveCounters& now, const MoveCounters& then, Algorithm a,
                         std::size_t first, std::size_t sweeps) {
  const MoveStats latent{now.latent.proposed - then.latent.proposed,
                         now.latent.accepted - then.latent.accepted};
  const MoveStats tn = combined_theta(now, a);
  const MoveStats tt = combined_theta(then, a);
  const MoveStats theta{tn.proposed - tt.proposed, tn.accepted - tt.accepted};
  return {first, sweeps, latent.rate(), theta.rate()};
}

}  // namespace

ChainOutput run_chain(const ReturnSeries& y, const PriorConfig& prior, const SamplerConfig& cfg) {
  cfg.validate();
  prior.validate();
  y.validate();
  for (const std::size_t t : cfg.h_checkpoints) {
    if (t >= y.size()) throw InputError("h checkpoint beyond the end of the series");
  }

  const ModelData data = make_model_data(y, cfg.offset);
  const Sampler sampler(cfg, prior);
  ChainState state = sampler.initial_state(data);
  Rng rng(cfg.seed);

  ChainOutput out;
  out.config = cfg;
  out.prior = prior;
  out.length = y.size();
  out.h_checkpoints = cfg.h_checkpoints;

  auto start = Clock::now();
  for (std::size_t i = 0; i < cfg.n_burnin; ++i) sampler.sweep(state, data, rng);
  out.burnin_seconds = seconds_since(start);

  state.moves = {};
  state.flags = {};
  state.aux_timings = {};
  const std::size_t rows = cfg.n_draws / cfg.thin;
  out.draws.reserve(rows);
  if (!cfg.h_checkpoints.empty()) out.h_draws.reserve(rows);

  MoveCounters window_start = state.moves;
  std::size_t window_first = 0;
  start = Clock::now();
  for (std::size_t i = 0; i < cfg.n_draws; ++i) {
    sampler.sweep(state, data, rng);
    if ((i + 1) % cfg.thin == 0) {
      const Params& p = state.params;
      out.draws.push_back({p.phi, p.rho, p.sigma, p.mu});
      if (!cfg.h_checkpoints.empty()) {
        std::vector<double> row;
        row.reserve(cfg.h_checkpoints.size());
        for (const std::size_t t : cfg.h_checkpoints) row.push_back(state.h.values[t]);
        out.h_draws.push_back(std::move(row));
      }
    }
    const std::size_t done = i + 1;
    if (done - window_first == cfg.window || done == cfg.n_draws) {
      out.windows.push_back(
          window_stats(state.moves, window_start, cfg.algorithm, window_first, done - window_first));
      window_start = state.moves;
      window_first = done;
    }
  }
  out.sampling_seconds = seconds_since(start);
  out.moves = state.moves;
  out.flags = state.flags;
  out.aux_timings = state.aux_timings;
  return out;
}

}  // namespace svl
