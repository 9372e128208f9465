#include "svl/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace svl {

Eigen::VectorXd numerical_gradient(const Objective& f, const Eigen::VectorXd& x, double rel_step,
                                   int* evaluations) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd g(n);
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + h;
    const double fp = f(xp);
    xp(i) = x(i) - h;
    const double fm = f(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  if (evaluations) *evaluations += static_cast<int>(2 * n);
  return g;
}

Eigen::MatrixXd numerical_hessian(const Objective& f, const Eigen::VectorXd& x, double step,
                                  double fx, int* evaluations) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd H(n, n);
  Eigen::VectorXd xp = x;
  const double h = step;
  for (Eigen::Index i = 0; i < n; ++i) {
    xp(i) = x(i) + h;
    const double fp = f(xp);
    xp(i) = x(i) - h;
    const double fm = f(xp);
    xp(i) = x(i);
    H(i, i) = (fp - 2.0 * fx + fm) / (h * h);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      xp(i) = x(i) + h;
      xp(j) = x(j) + h;
      const double fpp = f(xp);
      xp(j) = x(j) - h;
      const double fpm = f(xp);
      xp(i) = x(i) - h;
      const double fmm = f(xp);
      xp(j) = x(j) + h;
      const double fmp = f(xp);
      xp(i) = x(i);
      xp(j) = x(j);
      H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
    }
  }
  if (evaluations) *evaluations += static_cast<int>(2 * n + 2 * n * (n - 1));
  return H;
}

Eigen::MatrixXd numerical_hessian(const Objective& f, const Eigen::VectorXd& x, double step) {
  return numerical_hessian(f, x, step, f(x));
}

OptimResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const OptimizerConfig& cfg) {
  const Eigen::Index n = x0.size();
  OptimResult res;
  res.x = std::move(x0);
  res.value = f(res.x);
  res.evaluations = 1;
  if (!std::isfinite(res.value)) return res;

  Eigen::VectorXd g = numerical_gradient(f, res.x, cfg.gradient_step, &res.evaluations);
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n);  // inverse Hessian approximation
  bool scaled = false;

  while (res.evaluations < cfg.max_evaluations) {
    Eigen::VectorXd dir = -B * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      B.setIdentity();
      dir = -g;
      slope = -g.squaredNorm();
    }
    if (std::abs(slope) <= cfg.rel_tolerance * (std::abs(res.value) + cfg.rel_tolerance)) {
      res.converged = true;
      return res;
    }

    // Backtracking (Armijo) line search.
    double step = 1.0;
    Eigen::VectorXd x_new;
    double f_new = 0.0;
    bool found = false;
    for (int k = 0; k < 40 && res.evaluations < cfg.max_evaluations; ++k) {
      x_new = res.x + step * dir;
      f_new = f(x_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= res.value + 1e-4 * step * slope) {
        found = true;
        break;
      }
      step *= 0.5;
    }
    if (!found) {
      // No decrease along a descent direction: the finite-difference
      // gradient is at its noise floor.
      res.converged = std::abs(slope) <= 1e-6 * (1.0 + std::abs(res.value));
      return res;
    }

    const double f_old = res.value;
    const Eigen::VectorXd s = x_new - res.x;
    res.x = x_new;
    res.value = f_new;
    if (std::abs(f_old - f_new) <= cfg.rel_tolerance * (std::abs(f_new) + cfg.rel_tolerance)) {
      res.converged = true;
      return res;
    }
    if (res.evaluations + 2 * n > cfg.max_evaluations) break;
    const Eigen::VectorXd g_new = numerical_gradient(f, res.x, cfg.gradient_step, &res.evaluations);
    const Eigen::VectorXd yv = g_new - g;
    g = g_new;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      if (!scaled) {
        B *= sy / yv.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd By = B * yv;
      B += (rho * rho * yv.dot(By) + rho) * s * s.transpose() -
           rho * (By * s.transpose() + s * By.transpose());
    }
  }
  return res;
}

}  // namespace svl
