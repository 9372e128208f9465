#include <doctest.h>

#include <algorithm>
#include <boost/math/distributions/beta.hpp>
#include <cmath>
#include <map>

#include "geweke.hpp"
#include "oracles.hpp"
#include "svl/diagnostics.hpp"
#include "svl/samplers.hpp"

using namespace svl;

namespace {

ModelData toy_data() {
  return make_model_data(ReturnSeries{{0.5, -1.2, 0.3}, "toy"});
}

ChainState state_at(const Params& p, std::vector<double> h) {
  ChainState st;
  st.params = p;
  st.h.values = std::move(h);
  st.s.s.assign(st.h.values.size(), 0);
  return st;
}

// log p_A(h~ | y*, d, theta) up to a constant, indicators summed per time
// point.
double aux_marginal(const std::vector<double>& ht, const Linearized& lin, const Params& p,
                    const MixtureTable& table) {
  const std::size_t n = ht.size();
  double lp = oracle::normal_logpdf(ht[0], 0.0, 1.0 / (1.0 - p.phi * p.phi));
  for (std::size_t t = 0; t < n; ++t) {
    const double a = lin.y_star[t] - p.mu - p.sigma * ht[t];
    double sum = 0.0;
    for (std::size_t j = 0; j < table.size(); ++j) {
      const double l = t + 1 < n ? oracle::aux_pair_logpdf(a, ht[t + 1] - p.phi * ht[t], table[j],
                                                           lin.d[t], p.rho)
                                 : oracle::normal_logpdf(a, table[j].m1, table[j].v1 * table[j].v1);
      sum += table[j].prob * std::exp(l);
    }
    lp += std::log(sum);
  }
  return lp;
}

CondGaussSSM manual_ssm(const Linearized& lin, const std::vector<int>& s, const Params& p,
                        const MixtureTable& table) {
  CondGaussSSM m(s.size());
  for (std::size_t t = 0; t < s.size(); ++t) {
    const MixtureComponent& c = table[static_cast<std::size_t>(s[t])];
    const double r = lin.d[t] * p.rho;
    m.set_step(t, {p.mu + c.m1, p.sigma, c.v1, r * c.m2,
                   std::sqrt(1 - p.rho * p.rho + p.rho * p.rho * c.v2 * c.v2), r * c.v1 * c.v2});
  }
  m.transition = p.phi;
  m.initial_mean = 0.0;
  m.initial_var = 1.0 / (1.0 - p.phi * p.phi);
  return m;
}

}  // namespace

TEST_CASE("algorithm names") {
  for (const Algorithm a : {Algorithm::Aux, Algorithm::RwmhCentered, Algorithm::RwmhNonCentered,
                            Algorithm::RwmhAsis}) {
    CHECK(parse_algorithm(algorithm_name(a)) == a);
  }
  CHECK_THROWS_AS(parse_algorithm("gibbs"), InputError);
}

TEST_CASE("sampler config validation") {
  SamplerConfig c;
  CHECK_NOTHROW(c.validate());
  c.rw_variance[2] = 0.0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = {};
  c.asis_repeats = 0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = {};
  c.n_draws = 0;
  CHECK_THROWS_AS(c.validate(), InputError);
  CHECK(default_burnin(300) == 2000);
  CHECK(default_burnin(3000) == 10000);
}

TEST_CASE("latent update accepts always when both densities agree") {
  const MixtureTable& table = MixtureTable::omori();
  const ModelData data = toy_data();
  const Params p{0.9, -0.5, 0.5, -1.0};
  ChainState st = state_at(p, {-1.0, -0.5, -1.2});
  const LatentLogDensity same = [&](const LatentPath& h, const Params& q) {
    return aux_log_density_marginal(h, data.lin, q, table);
  };
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) latent_update(st, data, table, rng, same);
  CHECK(st.moves.latent.proposed == 2000);
  CHECK(st.moves.latent.accepted == 2000);
}

TEST_CASE("latent update acceptance rate matches an importance-sampling oracle") {
  const MixtureTable& table = MixtureTable::omori();
  const ModelData data = toy_data();
  const Params p{0.9, -0.9, 1.0, -1.0};
  const std::size_t n = 3;

  // Oracle: h ~ p_C(h | y) by self-normalized weighting of prior paths, then
  // s | h and h* | s from independently coded densities.
  Rng orng(17);
  const int samples = 100000;
  double num = 0.0, den = 0.0;
  std::vector<double> h(n), ht(n), w(table.size());
  for (int i = 0; i < samples; ++i) {
    h[0] = p.mu + p.sigma / std::sqrt(1 - p.phi * p.phi) * orng.normal();
    for (std::size_t t = 1; t < n; ++t) h[t] = p.mu + p.phi * (h[t - 1] - p.mu) + p.sigma * orng.normal();
    double lprior = oracle::normal_logpdf(h[0], p.mu, p.sigma * p.sigma / (1 - p.phi * p.phi));
    for (std::size_t t = 1; t < n; ++t) {
      lprior += oracle::normal_logpdf(h[t], p.mu + p.phi * (h[t - 1] - p.mu), p.sigma * p.sigma);
    }
    const double lc = oracle::svl_log_joint(h, data.returns.y, p);
    const double weight = std::exp(lc - lprior);
    for (std::size_t t = 0; t < n; ++t) ht[t] = (h[t] - p.mu) / p.sigma;

    std::vector<int> s(n);
    for (std::size_t t = 0; t < n; ++t) {
      double total = 0.0;
      for (std::size_t j = 0; j < table.size(); ++j) {
        const double a = data.lin.y_star[t] - p.mu - p.sigma * ht[t];
        const double l = t + 1 < n ? oracle::aux_pair_logpdf(a, ht[t + 1] - p.phi * ht[t],
                                                             table[j], data.lin.d[t], p.rho)
                                   : oracle::normal_logpdf(a, table[j].m1, table[j].v1 * table[j].v1);
        total += w[j] = table[j].prob * std::exp(l);
      }
      double u = orng.uniform() * total;
      std::size_t j = 0;
      while (j + 1 < table.size() && u >= w[j]) u -= w[j++];
      s[t] = static_cast<int>(j);
    }
    const oracle::JointGaussian jg = oracle::unroll(manual_ssm(data.lin, s, p, table));
    const auto c = oracle::condition(jg, {0, 1, 2}, {3, 4, 5},
                                     Eigen::Map<const Eigen::VectorXd>(data.lin.y_star.data(), 3));
    const Eigen::LLT<Eigen::MatrixXd> llt(c.cov);
    Eigen::VectorXd z(3);
    for (int k = 0; k < 3; ++k) z(k) = orng.normal();
    const Eigen::VectorXd xs = c.mean + llt.matrixL() * z;
    std::vector<double> hts(xs.data(), xs.data() + 3), hs(3);
    for (std::size_t t = 0; t < n; ++t) hs[t] = p.mu + p.sigma * hts[t];
    const double log_ratio = oracle::svl_log_joint(hs, data.returns.y, p) - lc +
                             aux_marginal(ht, data.lin, p, table) -
                             aux_marginal(hts, data.lin, p, table);
    num += weight * std::min(1.0, std::exp(log_ratio));
    den += weight;
  }
  const double expected = num / den;

  ChainState st = state_at(p, {-1.0, -0.5, -1.2});
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) latent_update(st, data, table, rng);
  st.moves = {};
  for (int i = 0; i < 100000; ++i) latent_update(st, data, table, rng);
  MESSAGE("oracle acceptance " << expected << ", chain " << st.moves.latent.rate());
  CHECK(std::abs(st.moves.latent.rate() - expected) < 0.01);
}

TEST_CASE("zero-variance random walk never moves") {
  const PriorConfig prior;
  Params p{0.9, -0.3, 0.3, -9.0};
  const Params start = p;
  const ThetaLikelihood ll = [](const Params& q) { return -q.mu * q.mu; };
  Rng rng(1);
  int accepted = 0;
  for (int i = 0; i < 1000; ++i) accepted += rwmh_step(p, ll, prior, {0, 0, 0, 0}, rng);
  CHECK(accepted == 1000);
  CHECK(p == start);
}

TEST_CASE("prior-only random walk samples the prior of phi") {
  const PriorConfig prior;
  Params p{0.5, 0.0, 0.5, -10.0};
  const ThetaLikelihood flat = [](const Params&) { return 0.0; };
  Rng rng(2);
  const std::size_t n = 100000, thin = 40;
  std::vector<double> u(n);
  const boost::math::beta_distribution<> beta(prior.a_phi, prior.b_phi);
  for (int i = 0; i < 2000; ++i) rwmh_step(p, flat, prior, {0.1, 0.1, 0.1, 0.1}, rng);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < thin; ++k) rwmh_step(p, flat, prior, {0.1, 0.1, 0.1, 0.1}, rng);
    u[i] = cdf(beta, (p.phi + 1) / 2);
  }
  std::sort(u.begin(), u.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = static_cast<double>(i) / n, hi = static_cast<double>(i + 1) / n;
    d = std::max({d, u[i] - lo, hi - u[i]});
  }
  MESSAGE("KS distance " << d);
  CHECK(d < 1.95 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("random walk satisfies detailed balance on a discretized reduction") {
  const PriorConfig prior;
  Params p{0.5, 0.0, 0.5, -9.0};
  const ThetaLikelihood ll = [](const Params& q) { return -0.5 * (q.mu + 9.0) * (q.mu + 9.0) / 0.25; };
  Rng rng(3);
  const int bins = 50;
  const double lo = -10.5, hi = -7.5;
  const auto bin = [&](double x) {
    return std::clamp(static_cast<int>((x - lo) / (hi - lo) * bins), 0, bins - 1);
  };
  std::vector<std::vector<double>> counts(bins, std::vector<double>(bins, 0.0));
  for (int i = 0; i < 1000; ++i) rwmh_step(p, ll, prior, {0, 0, 0, 0.05}, rng);
  int from = bin(p.mu);
  for (int i = 0; i < 2000000; ++i) {
    rwmh_step(p, ll, prior, {0, 0, 0, 0.05}, rng);
    const int to = bin(p.mu);
    counts[from][to] += 1.0;
    from = to;
  }
  int violations = 0, pairs = 0;
  for (int i = 0; i < bins; ++i) {
    for (int j = i + 1; j < bins; ++j) {
      const double a = counts[i][j], b = counts[j][i];
      if (a + b < 20) continue;
      ++pairs;
      if (std::abs(a - b) > 4.0 * std::sqrt(a + b)) ++violations;
    }
  }
  CHECK(pairs > 50);
  CHECK(violations == 0);
}

TEST_CASE("asis interweaving algebra") {
  const ModelData data = make_model_data(simulate_svl(DgpSpec{{0.95, -0.3, 0.3, -9.0}, 50, 8}).returns);
  const PriorConfig prior;
  const std::vector<double> h0 = simulate_svl(DgpSpec{{0.95, -0.3, 0.3, -9.0}, 50, 8}).latent.values;
  SamplerConfig cfg;

  SUBCASE("rejected move leaves h bit-identical") {
    cfg.rw_variance = {1e4, 1e4, 1e4, 1e4};
    Rng rng(1);
    int checked = 0;
    for (int i = 0; i < 50; ++i) {
      ChainState st = state_at({0.95, -0.3, 0.3, -9.0}, h0);
      asis_interweave(st, data, prior, cfg, rng, 1);
      if (st.moves.theta_noncentered.accepted == 0) {
        CHECK(st.h.values == h0);
        ++checked;
      }
    }
    CHECK(checked > 40);
  }
  SUBCASE("accepted move rescales around the new level") {
    cfg.rw_variance = {1e-4, 1e-4, 1e-4, 1e-4};
    Rng rng(2);
    ChainState st = state_at({0.95, -0.3, 0.3, -9.0}, h0);
    const Params before = st.params;
    asis_interweave(st, data, prior, cfg, rng, 1);
    REQUIRE(st.moves.theta_noncentered.accepted == 1);
    const double c = st.params.sigma / before.sigma;
    for (std::size_t t = 0; t < h0.size(); ++t) {
      CHECK(st.h.values[t] ==
            doctest::Approx(st.params.mu + c * (h0[t] - before.mu)).epsilon(1e-13));
    }
  }
  SUBCASE("identity move round trip") {
    Params p{0.95, -0.3, 0.3, -9.0};
    std::vector<double> ht(h0.size());
    for (std::size_t t = 0; t < h0.size(); ++t) ht[t] = (h0[t] - p.mu) / p.sigma;
    for (std::size_t t = 0; t < h0.size(); ++t) {
      CHECK(std::abs(p.mu + p.sigma * ht[t] - h0[t]) <= 4 * std::numeric_limits<double>::epsilon() * std::abs(h0[t]));
    }
  }
}

TEST_CASE("Laplace step is exact for a Gaussian target") {
  Eigen::Matrix3d S;
  S << 1.0, 0.3, -0.2, 0.3, 0.5, 0.1, -0.2, 0.1, 2.0;
  const Eigen::Matrix3d P = S.inverse();
  const Eigen::Vector3d m(0.4, -1.0, 2.0);
  const Objective target = [&](const Eigen::VectorXd& x) {
    const Eigen::Vector3d d = x - m;
    return -0.5 * d.dot(P * d);
  };
  Eigen::VectorXd x = Eigen::Vector3d(0.0, 0.0, 0.0);
  Rng rng(4);
  int accepted = 0;
  for (int i = 0; i < 500; ++i) {
    const LaplaceStepResult r = laplace_independence_step(target, x, {}, 0.1, rng);
    CHECK_FALSE(r.optimizer_failure);
    CHECK_FALSE(r.hessian_fallback);
    accepted += r.accepted;
  }
  CHECK(accepted >= 495);
}

TEST_CASE("Laplace step acceptance on a skewed target matches quadrature") {
  // x = log g with g ~ Gamma(a, 1): log density a x - exp(x); mode log a,
  // curvature a.
  const double a = 3.0;
  const Objective target = [&](const Eigen::VectorXd& x) { return a * x(0) - std::exp(x(0)); };
  const double mode = std::log(a), var = 1.0 / a;

  const int grid = 3000;
  const double lo = mode - 12.0, hi = mode + 4.0, dx = (hi - lo) / grid;
  std::vector<double> xs(grid), pi(grid), q(grid);
  double zpi = 0.0, zq = 0.0;
  for (int i = 0; i < grid; ++i) {
    xs[i] = lo + (i + 0.5) * dx;
    zpi += pi[i] = std::exp(a * xs[i] - std::exp(xs[i]));
    zq += q[i] = std::exp(-0.5 * (xs[i] - mode) * (xs[i] - mode) / var);
  }
  double expected = 0.0;
  for (int i = 0; i < grid; ++i) {
    const double wi = pi[i] / q[i];
    for (int j = 0; j < grid; ++j) {
      expected += pi[i] / zpi * q[j] / zq * std::min(1.0, (pi[j] / q[j]) / wi);
    }
  }

  Eigen::VectorXd x = Eigen::VectorXd::Constant(1, mode);
  Rng rng(6);
  int accepted = 0;
  const int steps = 20000;
  for (int i = 0; i < steps; ++i) accepted += laplace_independence_step(target, x, {}, 0.1, rng).accepted;
  const double rate = static_cast<double>(accepted) / steps;
  MESSAGE("quadrature " << expected << ", empirical " << rate);
  CHECK(std::abs(rate - expected) < 0.02);
}

TEST_CASE("Laplace step falls back when the Hessian is not positive definite") {
  // Flat in the second coordinate: singular Hessian at any mode.
  const Objective target = [](const Eigen::VectorXd& x) { return -0.5 * x(0) * x(0); };
  Eigen::VectorXd x = Eigen::Vector2d(1.0, 0.5);
  Rng rng(7);
  const LaplaceStepResult r = laplace_independence_step(target, x, {}, 0.1, rng);
  CHECK((r.hessian_fallback || r.optimizer_failure));
}

TEST_CASE("Laplace step keeps the state when the optimizer fails") {
  const Objective bad = [](const Eigen::VectorXd& x) {
    return std::isfinite(x(0)) ? std::numeric_limits<double>::quiet_NaN() : 0.0;
  };
  Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.3);
  Rng rng(8);
  const LaplaceStepResult r = laplace_independence_step(bad, x, {}, 0.1, rng);
  CHECK(r.optimizer_failure);
  CHECK_FALSE(r.accepted);
  CHECK(x(0) == 0.3);
}

TEST_CASE("aux collapsed target") {
  const MixtureTable& table = MixtureTable::omori();
  const SimulatedData sim = simulate_svl(DgpSpec{{0.95, -0.3, 0.3, -9.0}, 100, 5});
  const ModelData data = make_model_data(sim.returns);
  Rng rng(9);
  const IndicatorVector s =
      sample_indicators(data.lin, sim.latent, {0.95, -0.3, 0.3, -9.0}, table, rng);
  const PriorConfig prior;
  Eigen::VectorXd x(3);
  x << std::atanh(0.9), std::atanh(-0.2), std::log(0.1);
  const Params p{0.9, -0.2, std::sqrt(0.1), 0.0};
  const LogPriorTerms lp = log_prior_terms(p, prior);
  const double ref = collapsed_loglik(data.lin, s, p.phi, p.rho, p.sigma, prior, table) + lp.phi +
                     lp.rho + lp.sigma2 + std::log(1 - 0.81) + std::log(1 - 0.04) + std::log(0.1);
  CHECK(aux_collapsed_log_target(x, data.lin, s, prior, table) == doctest::Approx(ref).epsilon(1e-12));
  x(0) = 40.0;  // tanh saturates to 1
  CHECK(aux_collapsed_log_target(x, data.lin, s, prior, table) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("aux sweep is deterministic and keeps mu out of step 2") {
  const MixtureTable& table = MixtureTable::omori();
  const ModelData data = make_model_data(simulate_svl(DgpSpec{{0.95, -0.3, 0.3, -9.0}, 200, 6}).returns);
  const PriorConfig prior;
  SamplerConfig cfg;
  cfg.algorithm = Algorithm::Aux;
  const Sampler sampler(cfg, prior);
  ChainState a = sampler.initial_state(data), b = a;
  Rng ra(11), rb(11);
  for (int i = 0; i < 20; ++i) {
    aux_sweep(a, data, table, prior, cfg, ra);
    aux_sweep(b, data, table, prior, cfg, rb);
  }
  CHECK(a.params == b.params);
  CHECK(a.h.values == b.h.values);
  CHECK(a.s.s == b.s.s);

  ChainState c = a;
  const double mu = c.params.mu;
  aux_step2(c, data.lin, table, prior, cfg, ra);
  CHECK(c.params.mu == mu);
}

TEST_CASE("aux recovers the parameters of data from the auxiliary model") {
  const MixtureTable& table = MixtureTable::omori();
  const Params truth{0.95, -0.4, 0.3, -9.0};
  Rng rng(12);
  auto [ht, lin] = geweke::simulate_aux(truth, 1000, table, rng);
  ModelData data;
  data.returns.y.assign(ht.size(), 1.0);
  data.lin = lin;
  const PriorConfig prior;
  SamplerConfig cfg;
  cfg.algorithm = Algorithm::Aux;
  const Sampler sampler(cfg, prior);
  ChainState st = sampler.initial_state(data);
  for (int i = 0; i < 300; ++i) sampler.sweep(st, data, rng);
  std::vector<Draw> draws;
  for (int i = 0; i < 1500; ++i) {
    sampler.sweep(st, data, rng);
    draws.push_back({st.params.phi, st.params.rho, st.params.sigma, st.params.mu});
  }
  const double truth_v[] = {truth.phi, truth.rho, truth.sigma, truth.mu};
  for (std::size_t k = 0; k < 4; ++k) {
    std::vector<double> col;
    for (const Draw& d : draws) col.push_back(d[k]);
    const PosteriorSummary s = summarize(col);
    MESSAGE(std::string(kParamNames[k]) << " mean " << s.mean << " sd " << s.sd);
    CHECK(std::abs(s.mean - truth_v[k]) < 3.0 * s.sd);
  }
}

TEST_CASE("run_chain contract") {
  const ReturnSeries y = simulate_svl(DgpSpec{{0.95, -0.3, 0.3, -9.0}, 300, 21}).returns;
  const PriorConfig prior;
  for (const Algorithm a : {Algorithm::Aux, Algorithm::RwmhCentered, Algorithm::RwmhNonCentered,
                            Algorithm::RwmhAsis}) {
    CAPTURE(algorithm_name(a));
    SamplerConfig cfg;
    cfg.algorithm = a;
    cfg.n_burnin = 100;
    cfg.n_draws = 1;
    CHECK(run_chain(y, prior, cfg).draws.size() == 1);

    cfg.n_draws = 2000;
    cfg.thin = 3;
    cfg.seed = 5;
    cfg.h_checkpoints = {0, 150, 299};
    const ChainOutput o1 = run_chain(y, prior, cfg);
    const ChainOutput o2 = run_chain(y, prior, cfg);
    CHECK(o1.draws.size() == 666);
    CHECK(o1.h_draws.size() == 666);
    CHECK(o1.h_draws[0].size() == 3);
    CHECK(o1.draws == o2.draws);
    CHECK(o1.sampling_seconds > 0.0);
    CHECK(o1.burnin_seconds > 0.0);
    for (const Draw& d : o1.draws) CHECK(Params{d[0], d[1], d[2], d[3]}.valid());
    REQUIRE(o1.windows.size() == 2);
    for (const WindowStats& w : o1.windows) {
      if (a != Algorithm::Aux) {
        CHECK(w.latent_rate > 0.0);
        CHECK(w.latent_rate < 1.0);
      }
      CHECK(w.theta_rate > 0.0);
      CHECK(w.theta_rate < 1.0);
    }
    CHECK(o1.windows[0].sweeps == 1000);
    CHECK(o1.windows[1].first_sweep == 1000);
  }
  SamplerConfig bad;
  bad.h_checkpoints = {300};
  CHECK_THROWS_AS(run_chain(y, prior, bad), InputError);
}

TEST_CASE("initial state") {
  const ModelData data = make_model_data(ReturnSeries{{0.01, -0.02, 0.03, 0.0}, ""});
  const PriorConfig prior;
  const Sampler sampler({}, prior);
  const ChainState st = sampler.initial_state(data);
  CHECK(st.params == prior_mean(prior));
  double mean = 0.0;
  for (const double v : st.h.values) mean += v;
  CHECK(mean / 4 == doctest::Approx(prior.mu_mu).epsilon(1e-12));
  CHECK(st.h.values[2] - st.h.values[0] == doctest::Approx(data.lin.y_star[2] - data.lin.y_star[0]));
}

TEST_CASE("joint-distribution test detects a wrong prior") {
  // Negative control: the sampler believes a different prior for phi than
  // the one the data were generated from.
  geweke::Config cfg;
  cfg.algorithm = Algorithm::RwmhCentered;
  cfg.replicates = 4000;
  cfg.reference = 20000;
  cfg.steps = 5;
  geweke::Config wrong = cfg;
  wrong.sampler_prior = PriorConfig{};
  wrong.sampler_prior->a_phi = 5.0;
  CHECK(geweke::run(cfg).passed(0.001));
  CHECK_FALSE(geweke::run(wrong).passed(0.001));
}
