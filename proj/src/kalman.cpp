#include "svl/kalman.hpp"

#include <Eigen/Core>
#include <cmath>
#include <string>

namespace svl {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kClampTolerance = 1e-10;

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;
template <int N>
using Mat = Eigen::Matrix<double, N, N>;

template <int N>
void clamp_variance(Mat<N>& P, std::size_t t) {
  for (int i = 0; i < N; ++i) {
    if (P(i, i) < 0.0) {
      if (P(i, i) < -kClampTolerance) {
        throw NumericalBreakdown("negative filter variance at t=" + std::to_string(t));
      }
      P.row(i).setZero();
      P.col(i).setZero();
    }
  }
}

// Quantities of one filter step, handed to the visitor.
template <int N>
struct StepRecord {
  Vec<N> predicted_mean;
  Mat<N> predicted_var;
  Vec<N> filtered_mean;
  Mat<N> filtered_var;
  double innovation;
  double innovation_var;
  // x_{t+1} = intercept + transition x_t + noise (decorrelated form)
  Vec<N> next_intercept;
  Mat<N> next_transition;
  Mat<N> next_var;  // Var(x_{t+1} | y_{1:t})
};

// Runs the filter over `n` steps. With N == 2 the second state coordinate is
// a constant level with observation loading 1.
template <int N, class Steps, class Visit>
double filter_pass(std::size_t n, const Steps& steps, std::span<const double> y, double phi,
                   Vec<N> a, Mat<N> P, Visit&& visit) {
  double log_lik = 0.0;
  StepRecord<N> rec;
  for (std::size_t t = 0; t < n; ++t) {
    const SsmStep st = steps(t);
    Vec<N> z;
    z(0) = st.obs_loading;
    if constexpr (N == 2) z(1) = 1.0;
    const double h2 = st.obs_sd * st.obs_sd;

    const double v = y[t] - st.obs_intercept - z.dot(a);
    const Vec<N> pz = P * z;
    const double f = z.dot(pz) + h2;
    if (!(f > 0.0) || !std::isfinite(f)) {
      throw NumericalBreakdown("non-positive innovation variance at t=" + std::to_string(t));
    }
    const Vec<N> k = pz / f;
    const Vec<N> af = a + k * v;
    Mat<N> pf = P - k * pz.transpose();
    pf = 0.5 * (pf + pf.transpose()).eval();
    clamp_variance<N>(pf, t);
    log_lik -= 0.5 * (kLog2Pi + std::log(f) + v * v / f);

    // Regress the state noise on the observation noise.
    const double reg = st.cross_cov / h2;
    double q = st.state_sd * st.state_sd - reg * st.cross_cov;
    if (q < 0.0) {
      if (q < -kClampTolerance) {
        throw NumericalBreakdown("noise covariance not positive semi-definite at t=" +
                                 std::to_string(t));
      }
      q = 0.0;
    }
    Mat<N> tr = Mat<N>::Zero();
    tr(0, 0) = phi;
    if constexpr (N == 2) tr(1, 1) = 1.0;
    tr.row(0) -= reg * z.transpose();
    Vec<N> g = Vec<N>::Zero();
    g(0) = st.state_intercept + reg * (y[t] - st.obs_intercept);

    Mat<N> pn = tr * pf * tr.transpose();
    pn(0, 0) += q;
    pn = 0.5 * (pn + pn.transpose()).eval();
    clamp_variance<N>(pn, t);

    rec.predicted_mean = a;
    rec.predicted_var = P;
    rec.filtered_mean = af;
    rec.filtered_var = pf;
    rec.innovation = v;
    rec.innovation_var = f;
    rec.next_intercept = g;
    rec.next_transition = tr;
    rec.next_var = pn;
    visit(t, rec);

    a = g + tr * af;
    P = pn;
  }
  return log_lik;
}

struct VectorSteps {
  const CondGaussSSM& m;
  SsmStep operator()(std::size_t t) const { return m.step(t); }
};

// Auxiliary model steps computed on the fly, avoiding a CondGaussSSM
// allocation in the hot optimizer loop.
struct AuxSteps {
  const Linearized& lin;
  const IndicatorVector& s;
  const MixtureTable& table;
  double rho;
  double sigma;
  double mu;

  SsmStep operator()(std::size_t t) const {
    const MixtureComponent& c = table[static_cast<std::size_t>(s.s[t])];
    const double lever = lin.d[t] * rho;
    SsmStep st;
    st.obs_intercept = mu + c.m1;
    st.obs_loading = sigma;
    st.obs_sd = c.v1;
    st.state_intercept = lever * c.m2;
    st.state_sd = std::sqrt(1.0 - rho * rho + rho * rho * c.v2 * c.v2);
    st.cross_cov = lever * c.v1 * c.v2;
    return st;
  }
};

void check_aux_inputs(const Linearized& lin, const IndicatorVector& s, const MixtureTable& table) {
  if (lin.size() != s.size() || lin.d.size() != s.size() || s.size() == 0) {
    throw InputError("indicator and linearized data lengths differ");
  }
  for (const int j : s.s) {
    if (j < 0 || static_cast<std::size_t>(j) >= table.size()) {
      throw InputError("mixture indicator out of range");
    }
  }
}

template <class Steps>
LevelPosterior level_pass(std::size_t n, const Steps& steps, std::span<const double> y,
                          double phi, double a1, double p1, double level_mean, double level_var) {
  Vec<2> a(a1, level_mean);
  Mat<2> P = Mat<2>::Zero();
  P(0, 0) = p1;
  P(1, 1) = level_var;
  LevelPosterior out;
  out.log_likelihood = filter_pass<2>(n, steps, y, phi, a, P, [&](std::size_t t, const auto& r) {
    if (t + 1 == n) {
      out.mean = r.filtered_mean(1);
      out.var = r.filtered_var(1, 1);
    }
  });
  return out;
}

}  // namespace

CondGaussSSM::CondGaussSSM(std::size_t n)
    : obs_intercept(n), obs_loading(n, 1.0), obs_sd(n, 1.0), state_intercept(n),
      state_sd(n, 1.0), cross_cov(n) {}

void CondGaussSSM::set_step(std::size_t t, const SsmStep& s) {
  obs_intercept[t] = s.obs_intercept;
  obs_loading[t] = s.obs_loading;
  obs_sd[t] = s.obs_sd;
  state_intercept[t] = s.state_intercept;
  state_sd[t] = s.state_sd;
  cross_cov[t] = s.cross_cov;
}

void CondGaussSSM::validate() const {
  const std::size_t n = size();
  if (obs_loading.size() != n || obs_sd.size() != n || state_intercept.size() != n ||
      state_sd.size() != n || cross_cov.size() != n) {
    throw InputError("state space model vectors have inconsistent lengths");
  }
  if (!(initial_var >= 0.0)) throw InputError("initial state variance must be non-negative");
  for (std::size_t t = 0; t < n; ++t) {
    if (!(obs_sd[t] > 0.0)) throw InputError("observation noise sd must be positive");
    const double bound = obs_sd[t] * obs_sd[t] * state_sd[t] * state_sd[t];
    if (cross_cov[t] * cross_cov[t] > bound * (1.0 + 1e-12)) {
      throw InputError("noise covariance is not positive semi-definite at t=" +
                       std::to_string(t));
    }
  }
}

CondGaussSSM assemble_ssm(const Linearized& lin, const IndicatorVector& s, const Params& p,
                          const MixtureTable& table) {
  check_aux_inputs(lin, s, table);
  const std::size_t n = s.size();
  CondGaussSSM m(n);
  const AuxSteps steps{lin, s, table, p.rho, p.sigma, p.mu};
  for (std::size_t t = 0; t < n; ++t) m.set_step(t, steps(t));
  m.transition = p.phi;
  m.initial_mean = 0.0;
  m.initial_var = 1.0 / (1.0 - p.phi * p.phi);
  return m;
}

FilterResult kalman_loglik(const CondGaussSSM& m, std::span<const double> y) {
  m.validate();
  const std::size_t n = m.size();
  if (y.size() != n) throw InputError("observation length differs from model length");
  FilterResult r;
  r.predicted_mean.resize(n);
  r.predicted_var.resize(n);
  r.filtered_mean.resize(n);
  r.filtered_var.resize(n);
  r.innovation.resize(n);
  r.innovation_var.resize(n);
  r.log_likelihood = filter_pass<1>(
      n, VectorSteps{m}, y, m.transition, Vec<1>(m.initial_mean), Mat<1>(m.initial_var),
      [&](std::size_t t, const auto& rec) {
        r.predicted_mean[t] = rec.predicted_mean(0);
        r.predicted_var[t] = rec.predicted_var(0, 0);
        r.filtered_mean[t] = rec.filtered_mean(0);
        r.filtered_var[t] = rec.filtered_var(0, 0);
        r.innovation[t] = rec.innovation;
        r.innovation_var[t] = rec.innovation_var;
      });
  return r;
}

LatentPath simulation_smoother(const CondGaussSSM& m, std::span<const double> y, Rng& rng) {
  m.validate();
  const std::size_t n = m.size();
  if (y.size() != n) throw InputError("observation length differs from model length");
  std::vector<double> af(n), pf(n), g(n), tr(n), pn(n);
  filter_pass<1>(n, VectorSteps{m}, y, m.transition, Vec<1>(m.initial_mean),
                 Mat<1>(m.initial_var), [&](std::size_t t, const auto& rec) {
                   af[t] = rec.filtered_mean(0);
                   pf[t] = rec.filtered_var(0, 0);
                   g[t] = rec.next_intercept(0);
                   tr[t] = rec.next_transition(0, 0);
                   pn[t] = rec.next_var(0, 0);
                 });

  LatentPath out{std::vector<double>(n), Parameterization::NonCentered};
  auto& x = out.values;
  x[n - 1] = af[n - 1] + std::sqrt(pf[n - 1]) * rng.normal();
  for (std::size_t i = n - 1; i-- > 0;) {
    double mean = af[i];
    double var = pf[i];
    if (pn[i] > 0.0) {
      const double gain = pf[i] * tr[i] / pn[i];
      mean += gain * (x[i + 1] - g[i] - tr[i] * af[i]);
      var -= gain * tr[i] * pf[i];
    }
    if (var < 0.0) {
      if (var < -kClampTolerance) {
        throw NumericalBreakdown("negative smoothing variance at t=" + std::to_string(i));
      }
      var = 0.0;
    }
    x[i] = mean + std::sqrt(var) * rng.normal();
  }
  return out;
}

LevelPosterior filter_with_level(const CondGaussSSM& m, std::span<const double> y,
                                 double level_mean, double level_var) {
  m.validate();
  if (y.size() != m.size() || m.size() == 0) {
    throw InputError("observation length differs from model length");
  }
  if (!(level_var >= 0.0)) throw InputError("level prior variance must be non-negative");
  return level_pass(m.size(), VectorSteps{m}, y, m.transition, m.initial_mean, m.initial_var,
                    level_mean, level_var);
}

LevelPosterior mu_posterior(const Linearized& lin, const IndicatorVector& s, double phi,
                            double rho, double sigma, const PriorConfig& prior,
                            const MixtureTable& table) {
  check_aux_inputs(lin, s, table);
  const AuxSteps steps{lin, s, table, rho, sigma, 0.0};
  return level_pass(s.size(), steps, lin.y_star, phi, 0.0, 1.0 / (1.0 - phi * phi), prior.mu_mu,
                    prior.sigma2_mu);
}

double draw_mu_conjugate(const Linearized& lin, const IndicatorVector& s, double phi, double rho,
                         double sigma, const PriorConfig& prior, const MixtureTable& table,
                         Rng& rng) {
  const LevelPosterior post = mu_posterior(lin, s, phi, rho, sigma, prior, table);
  return post.mean + std::sqrt(post.var) * rng.normal();
}

double collapsed_loglik(const Linearized& lin, const IndicatorVector& s, double phi, double rho,
                        double sigma, const PriorConfig& prior, const MixtureTable& table) {
  return mu_posterior(lin, s, phi, rho, sigma, prior, table).log_likelihood;
}

}  // namespace svl
