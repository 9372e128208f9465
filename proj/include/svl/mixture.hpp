#ifndef SVL_MIXTURE_HPP_
#define SVL_MIXTURE_HPP_

// Gaussian mixture approximation of the linearized model. Conditional on the
// indicator s_t = j, the non-centered state space reads
//
//   y*_t      = mu + sigma h~_t + m1_j + v1_j w_t
//   h~_{t+1}  = phi h~_t + sqrt(1 - rho^2) z_t + d_t rho (m2_j + v2_j w_t)
//
// with y*_t = log(y_t^2 + offset) and d_t = sgn(y_t).

#include <cstddef>
#include <span>
#include <vector>

#include "svl/model.hpp"
#include "svl/rng.hpp"

namespace svl {

struct MixtureComponent {
  double prob = 1.0;
  double m1 = 0.0;  // mean of log eps^2
  double v1 = 1.0;  // standard deviation of log eps^2
  double m2 = 0.0;  // mean of the eta coupling term
  double v2 = 0.0;  // loading of w_t in the eta coupling term
};

class MixtureTable {
 public:
  /// Components are used as given; weights must be positive and sum to 1.
  explicit MixtureTable(std::vector<MixtureComponent> components);

  /// The standard ten-component approximation to the joint law of
  /// (log eps^2, eta) under leverage.
  static const MixtureTable& omori();

  std::size_t size() const { return components_.size(); }
  const MixtureComponent& operator[](std::size_t j) const { return components_[j]; }
  const std::vector<MixtureComponent>& components() const { return components_; }

  /// Mixture mean and variance of the log eps^2 margin.
  double margin_mean() const;
  double margin_variance() const;

  // Cached per-component constants.
  double log_prob(std::size_t j) const { return log_prob_[j]; }
  double log_v1(std::size_t j) const { return log_v1_[j]; }
  double inv_v1(std::size_t j) const { return inv_v1_[j]; }

 private:
  std::vector<MixtureComponent> components_;
  std::vector<double> log_prob_;
  std::vector<double> log_v1_;
  std::vector<double> inv_v1_;
};

inline constexpr double kDefaultOffset = 1e-10;

struct Linearized {
  std::vector<double> y_star;
  std::vector<double> d;  // +1 or -1
  double offset = kDefaultOffset;

  std::size_t size() const { return y_star.size(); }
};

/// y*_t = log(y_t^2 + offset), d_t = sgn(y_t) with sgn(0) = +1.
Linearized linearize(const ReturnSeries& y, double offset = kDefaultOffset);

/// Mixture component per time point, as 0-based indices into the table.
struct IndicatorVector {
  std::vector<int> s;

  std::size_t size() const { return s.size(); }
};

/// Normalized posterior probabilities of s_t given (y*, d, h~, theta).
/// `h_tilde` must be non-centered.
std::vector<double> indicator_probabilities(const Linearized& lin, std::span<const double> h_tilde,
                                            const Params& p, const MixtureTable& table,
                                            std::size_t t);

/// Draws every s_t independently by inverse transform sampling. Centered
/// paths are converted to the non-centered form first.
IndicatorVector sample_indicators(const Linearized& lin, const LatentPath& h, const Params& p,
                                  const MixtureTable& table, Rng& rng);

/// log p_A(y*, h~ | d, theta) with the indicators summed out, including the
/// stationary law of h~_1. Centered paths are converted to h~ first; the
/// Jacobian of that map is constant in h and is not added.
double aux_log_density_marginal(const LatentPath& h, const Linearized& lin, const Params& p,
                                const MixtureTable& table);

}  // namespace svl

#endif  // SVL_MIXTURE_HPP_
