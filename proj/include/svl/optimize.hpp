#ifndef SVL_OPTIMIZE_HPP_
#define SVL_OPTIMIZE_HPP_

#include <Eigen/Core>
#include <functional>

namespace svl {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct OptimizerConfig {
  int max_evaluations = 500;
  double rel_tolerance = 1e-8;
  double gradient_step = 1e-5;  // relative central-difference step for gradients
  double hessian_step = 1e-4;   // absolute central-difference step for the Hessian
};

struct OptimResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Quasi-Newton (BFGS) minimization with central-difference gradients and a
/// backtracking line search. Non-finite objective values are treated as
/// infeasible and trigger backtracking.
OptimResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const OptimizerConfig& cfg = {});

Eigen::VectorXd numerical_gradient(const Objective& f, const Eigen::VectorXd& x, double rel_step,
                                   int* evaluations = nullptr);

/// Central-difference Hessian with a fixed absolute step per coordinate.
/// `fx` is f(x) when already known.
Eigen::MatrixXd numerical_hessian(const Objective& f, const Eigen::VectorXd& x, double step,
                                  double fx, int* evaluations = nullptr);
Eigen::MatrixXd numerical_hessian(const Objective& f, const Eigen::VectorXd& x, double step);

}  // namespace svl

#endif  // SVL_OPTIMIZE_HPP_
