#include "svl/mixture.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace svl {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Ten-component mixture for log eps^2: weights, means and variances, and
// the a_j, b_j coefficients of the linear approximation
// exp(eps*/2) ~ exp(m_j/2) (a_j + b_j (eps* - m_j)).
constexpr std::array<double, 10> kProb = {0.00609, 0.04775, 0.13057, 0.20674, 0.22715,
                                          0.18842, 0.12047, 0.05591, 0.01575, 0.00115};
constexpr std::array<double, 10> kMean = {1.92677,  1.34744,  0.73504,  0.02266,  -0.85173,
                                          -1.97278, -3.46788, -5.55246, -8.68384, -14.65000};
constexpr std::array<double, 10> kVar = {0.11265, 0.17788, 0.26768, 0.40611, 0.62699,
                                         0.98583, 1.57469, 2.54498, 4.16591, 7.33342};
constexpr std::array<double, 10> kA = {1.01418, 1.02248, 1.03403, 1.05207, 1.08153,
                                       1.13114, 1.21754, 1.37454, 1.68327, 2.50097};
constexpr std::array<double, 10> kB = {0.50710, 0.51124, 0.51701, 0.52604, 0.54076,
                                       0.56557, 0.60877, 0.68728, 0.84163, 1.25049};

std::vector<MixtureComponent> omori_components() {
  std::vector<MixtureComponent> out;
  out.reserve(kProb.size());
  for (std::size_t j = 0; j < kProb.size(); ++j) {
    const double v1 = std::sqrt(kVar[j]);
    const double scale = std::exp(kMean[j] / 2.0);
    out.push_back({kProb[j], kMean[j], v1, scale * kA[j], scale * kB[j] * v1});
  }
  return out;
}

// Per-component log weight of s_t = j, dropping terms common to all j.
// `resid` is y*_t - mu - sigma h~_t; `step` is h~_{t+1} - phi h~_t, or NaN
// at the last time point where only the y* margin enters.
inline double component_log_weight(const MixtureTable& table, std::size_t j, double resid,
                                   double step, double lever, double inv_cond_var) {
  const MixtureComponent& c = table[j];
  const double w = (resid - c.m1) * table.inv_v1(j);
  double lw = table.log_prob(j) - table.log_v1(j) - 0.5 * w * w;
  if (!std::isnan(step)) {
    const double e = step - lever * (c.m2 + c.v2 * w);
    lw -= 0.5 * e * e * inv_cond_var;
  }
  return lw;
}

std::vector<double> non_centered_values(const LatentPath& h, const Params& p) {
  if (h.parameterization == Parameterization::NonCentered) return h.values;
  std::vector<double> out(h.size());
  for (std::size_t t = 0; t < h.size(); ++t) out[t] = (h.values[t] - p.mu) / p.sigma;
  return out;
}

void check_lengths(const Linearized& lin, std::size_t n) {
  if (lin.size() != n || lin.d.size() != n) {
    throw InputError("latent path and linearized data lengths differ");
  }
}

}  // namespace

MixtureTable::MixtureTable(std::vector<MixtureComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw InputError("mixture table needs at least one component");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.prob > 0.0) || !(c.v1 > 0.0) || !std::isfinite(c.m1) || !std::isfinite(c.m2) ||
        !std::isfinite(c.v2)) {
      throw InputError("mixture components need positive weights and finite moments");
    }
    total += c.prob;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InputError("mixture weights must sum to 1");
  for (const auto& c : components_) {
    log_prob_.push_back(std::log(c.prob));
    log_v1_.push_back(std::log(c.v1));
    inv_v1_.push_back(1.0 / c.v1);
  }
}

const MixtureTable& MixtureTable::omori() {
  static const MixtureTable table(omori_components());
  return table;
}

double MixtureTable::margin_mean() const {
  double m = 0.0;
  for (const auto& c : components_) m += c.prob * c.m1;
  return m;
}

double MixtureTable::margin_variance() const {
  double second = 0.0;
  for (const auto& c : components_) second += c.prob * (c.v1 * c.v1 + c.m1 * c.m1);
  const double m = margin_mean();
  return second - m * m;
}

Linearized linearize(const ReturnSeries& y, double offset) {
  if (!(offset > 0.0)) throw InputError("linearization offset must be positive");
  Linearized lin;
  lin.offset = offset;
  lin.y_star.resize(y.size());
  lin.d.resize(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) {
    const double a = std::abs(y.y[t]);
    // the second form avoids overflowing y^2 for huge returns
    lin.y_star[t] = a < 1.0 ? std::log(a * a + offset) : 2.0 * std::log(a) + std::log1p(offset / (a * a));
    lin.d[t] = y.y[t] < 0.0 ? -1.0 : 1.0;
  }
  return lin;
}

std::vector<double> indicator_probabilities(const Linearized& lin, std::span<const double> h_tilde,
                                            const Params& p, const MixtureTable& table,
                                            std::size_t t) {
  check_lengths(lin, h_tilde.size());
  const std::size_t k = table.size();
  const std::size_t n = h_tilde.size();
  const double resid = lin.y_star[t] - p.mu - p.sigma * h_tilde[t];
  const double step = t + 1 < n ? h_tilde[t + 1] - p.phi * h_tilde[t]
                                : std::numeric_limits<double>::quiet_NaN();
  const double lever = lin.d[t] * p.rho;
  const double inv_cond_var = 1.0 / (1.0 - p.rho * p.rho);

  std::vector<double> w(k);
  double max_lw = kNegInf;
  for (std::size_t j = 0; j < k; ++j) {
    w[j] = component_log_weight(table, j, resid, step, lever, inv_cond_var);
    if (w[j] > max_lw) max_lw = w[j];
  }
  if (!std::isfinite(max_lw)) {
    for (std::size_t j = 0; j < k; ++j) w[j] = table[j].prob;
    return w;
  }
  double total = 0.0;
  for (auto& x : w) {
    x = std::exp(x - max_lw);
    total += x;
  }
  for (auto& x : w) x /= total;
  return w;
}

IndicatorVector sample_indicators(const Linearized& lin, const LatentPath& h, const Params& p,
                                  const MixtureTable& table, Rng& rng) {
  const std::vector<double> ht = non_centered_values(h, p);
  const std::size_t n = ht.size();
  check_lengths(lin, n);
  const std::size_t k = table.size();
  const double inv_cond_var = 1.0 / (1.0 - p.rho * p.rho);

  IndicatorVector out;
  out.s.resize(n);
  std::vector<double> cum(k);
  for (std::size_t t = 0; t < n; ++t) {
    const double resid = lin.y_star[t] - p.mu - p.sigma * ht[t];
    const double step =
        t + 1 < n ? ht[t + 1] - p.phi * ht[t] : std::numeric_limits<double>::quiet_NaN();
    const double lever = lin.d[t] * p.rho;

    double max_lw = kNegInf;
    for (std::size_t j = 0; j < k; ++j) {
      cum[j] = component_log_weight(table, j, resid, step, lever, inv_cond_var);
      if (cum[j] > max_lw) max_lw = cum[j];
    }
    double total = 0.0;
    if (std::isfinite(max_lw)) {
      for (std::size_t j = 0; j < k; ++j) {
        total += std::exp(cum[j] - max_lw);
        cum[j] = total;
      }
    } else {
      for (std::size_t j = 0; j < k; ++j) {
        total += table[j].prob;
        cum[j] = total;
      }
    }
    const double u = rng.uniform() * total;
    std::size_t j = 0;
    while (j + 1 < k && cum[j] <= u) ++j;
    out.s[t] = static_cast<int>(j);
  }
  return out;
}

double aux_log_density_marginal(const LatentPath& h, const Linearized& lin, const Params& p,
                                const MixtureTable& table) {
  const std::vector<double> ht = non_centered_values(h, p);
  const std::size_t n = ht.size();
  check_lengths(lin, n);
  const std::size_t k = table.size();
  const double cond_var = 1.0 - p.rho * p.rho;
  const double inv_cond_var = 1.0 / cond_var;
  // Constants dropped inside component_log_weight: -log(2 pi) per bivariate
  // term, -0.5 log(2 pi) per univariate term, and -0.5 log(cond_var).
  const double pair_const = -kLog2Pi - 0.5 * std::log(cond_var);
  const double single_const = -0.5 * kLog2Pi;

  const double init_var = 1.0 / (1.0 - p.phi * p.phi);
  double lp = -0.5 * (kLog2Pi + std::log(init_var) + ht[0] * ht[0] / init_var);

  std::vector<double> lw(k);
  for (std::size_t t = 0; t < n; ++t) {
    const double resid = lin.y_star[t] - p.mu - p.sigma * ht[t];
    const bool has_step = t + 1 < n;
    const double step =
        has_step ? ht[t + 1] - p.phi * ht[t] : std::numeric_limits<double>::quiet_NaN();
    const double lever = lin.d[t] * p.rho;
    double max_lw = kNegInf;
    for (std::size_t j = 0; j < k; ++j) {
      lw[j] = component_log_weight(table, j, resid, step, lever, inv_cond_var);
      if (lw[j] > max_lw) max_lw = lw[j];
    }
    if (!std::isfinite(max_lw)) return kNegInf;
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += std::exp(lw[j] - max_lw);
    lp += max_lw + std::log(total) + (has_step ? pair_const : single_const);
  }
  return std::isnan(lp) ? kNegInf : lp;
}

}  // namespace svl
