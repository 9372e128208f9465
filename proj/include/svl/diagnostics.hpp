#ifndef SVL_DIAGNOSTICS_HPP_
#define SVL_DIAGNOSTICS_HPP_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "svl/samplers.hpp"

namespace svl {

/// Biased (divide-by-n) sample autocorrelations at lags 0..max_lag.
/// Throws InputError on a constant series or when n < max_lag + 2.
std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag);

/// min(n - 2, 10 sqrt(n)).
std::size_t default_max_lag(std::size_t n);

struct EssResult {
  double ess = 0.0;
  double tau = 0.0;     // integrated autocorrelation time, n / ess
  std::size_t lags = 0;  // last lag used in the truncated sum
};

/// Effective sample size with Geyer's initial monotone positive sequence
/// truncation. tau is floored at 1/log10(n) so antithetic series stay finite.
EssResult ess_detail(std::span<const double> x);
double ess(std::span<const double> x);

struct PosteriorSummary {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
};

/// Quantiles use linear interpolation between order statistics.
PosteriorSummary summarize(std::span<const double> x);
double quantile(std::vector<double> x, double p);

struct ParameterEfficiency {
  std::string name;
  double inefficiency = 0.0;  // n / ESS
  double ess = 0.0;
  double esr = 0.0;  // ESS per second
  std::vector<double> acf;
  PosteriorSummary summary;
  std::string error;  // non-empty when the estimators failed

  bool ok() const { return error.empty(); }
};

struct EfficiencyReport {
  std::vector<ParameterEfficiency> parameters;
  double min_esr = 0.0;  // NaN if any parameter failed
  std::size_t n_draws = 0;
  double seconds = 0.0;
};

/// Per-column report. Estimator failures are recorded per parameter and do
/// not abort the report.
EfficiencyReport efficiency_report(const std::vector<Draw>& draws, double seconds,
                                   std::size_t max_lag = 0);
EfficiencyReport efficiency_report(const ChainOutput& out, std::size_t max_lag = 0);

}  // namespace svl

#endif  // SVL_DIAGNOSTICS_HPP_
