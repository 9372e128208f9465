#include "svl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace svl {

namespace {

struct Centered {
  std::vector<double> x;
  double c0 = 0.0;
};

Centered center(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  Centered c;
  c.x.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) c.x[i] = x[i] - mean;
  for (const double v : c.x) c.c0 += v * v;
  c.c0 /= n;
  const double scale = std::max(1.0, std::abs(mean));
  if (!(c.c0 > 1e-28 * scale * scale) || !std::isfinite(c.c0)) {
    throw InputError("autocorrelation undefined for a constant series");
  }
  return c;
}

double lag_acf(const Centered& c, std::size_t k) {
  const std::size_t n = c.x.size();
  double s = 0.0;
  for (std::size_t i = 0; i + k < n; ++i) s += c.x[i] * c.x[i + k];
  return s / static_cast<double>(n) / c.c0;
}

}  // namespace

std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag) {
  if (x.size() < max_lag + 2) throw InputError("series too short for the requested lag");
  const Centered c = center(x);
  std::vector<double> out(max_lag + 1);
  out[0] = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) out[k] = lag_acf(c, k);
  return out;
}

std::size_t default_max_lag(std::size_t n) {
  if (n < 2) return 0;
  const auto root = static_cast<std::size_t>(10.0 * std::sqrt(static_cast<double>(n)));
  return std::min(n - 2, root);
}

EssResult ess_detail(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 10) throw InputError("ESS needs at least 10 draws");
  const Centered c = center(x);

  // Gamma_m = rho(2m) + rho(2m+1); keep positive, monotone non-increasing.
  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  std::size_t last = 0;
  for (std::size_t m = 0; 2 * m + 1 < n - 1; ++m) {
    const double r0 = m == 0 ? 1.0 : lag_acf(c, 2 * m);
    const double gamma = r0 + lag_acf(c, 2 * m + 1);
    if (!(gamma > 0.0)) break;
    const double g = std::min(gamma, prev);
    sum += g;
    prev = g;
    last = 2 * m + 1;
  }
  EssResult r;
  const double floor = 1.0 / std::log10(static_cast<double>(n));
  r.tau = std::max(-1.0 + 2.0 * sum, floor);
  r.ess = static_cast<double>(n) / r.tau;
  r.lags = last;
  return r;
}

double ess(std::span<const double> x) { return ess_detail(x).ess; }

double quantile(std::vector<double> x, double p) {
  if (x.empty()) throw InputError("quantile of an empty sample");
  std::sort(x.begin(), x.end());
  const double pos = p * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * x[lo] + w * x[hi];
}

PosteriorSummary summarize(std::span<const double> x) {
  if (x.empty()) throw InputError("summary of an empty sample");
  const double n = static_cast<double>(x.size());
  PosteriorSummary s;
  s.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (const double v : x) ss += (v - s.mean) * (v - s.mean);
  s.sd = x.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const auto q = [&](double p) {
    const double pos = p * (n - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return (1.0 - w) * sorted[lo] + w * sorted[hi];
  };
  s.q025 = q(0.025);
  s.q50 = q(0.5);
  s.q975 = q(0.975);
  return s;
}

EfficiencyReport efficiency_report(const std::vector<Draw>& draws, double seconds,
                                   std::size_t max_lag) {
  EfficiencyReport rep;
  rep.n_draws = draws.size();
  rep.seconds = seconds;
  const std::size_t lag = max_lag ? max_lag : default_max_lag(draws.size());
  rep.min_esr = std::numeric_limits<double>::infinity();
  std::vector<double> col(draws.size());
  for (std::size_t k = 0; k < kParamNames.size(); ++k) {
    ParameterEfficiency pe;
    pe.name = kParamNames[k];
    for (std::size_t i = 0; i < draws.size(); ++i) col[i] = draws[i][k];
    try {
      pe.summary = summarize(col);
      const EssResult e = ess_detail(col);
      pe.ess = e.ess;
      pe.inefficiency = e.tau;
      pe.esr = seconds > 0.0 ? e.ess / seconds : std::numeric_limits<double>::quiet_NaN();
      pe.acf = autocorrelation(col, std::min(lag, draws.size() - 2));
    } catch (const std::exception& ex) {
      pe.error = ex.what();
      pe.ess = pe.inefficiency = pe.esr = std::numeric_limits<double>::quiet_NaN();
    }
    if (std::isnan(pe.esr) || std::isnan(rep.min_esr)) {
      rep.min_esr = std::numeric_limits<double>::quiet_NaN();
    } else {
      rep.min_esr = std::min(rep.min_esr, pe.esr);
    }
    rep.parameters.push_back(std::move(pe));
  }
  return rep;
}

EfficiencyReport efficiency_report(const ChainOutput& out, std::size_t max_lag) {
  return efficiency_report(out.draws, out.sampling_seconds, max_lag);
}

}  // namespace svl
