#pragma once

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace gpss::detail {

// Objective callback: returns f(x) and, when `grad` is non-null, writes the
// gradient into it. May return +inf to reject a trial point.
using ObjectiveFn =
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct LbfgsOptions {
  int max_iterations = 2000;
  double relative_tolerance = 1e-9; // stop when |f_new - f_old| <= tol*max(1,|f_old|)
  double gradient_tolerance = 1e-12;
  int memory = 10;
  int max_line_search = 40;
  Eigen::VectorXd lower_bounds; // empty = unconstrained; else elementwise clamp
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double fx = 0.0;
  int iterations = 0;
  bool converged = false;
  bool nonfinite = false;          // objective/gradient went non-finite at an accepted point
  std::vector<double> trace;       // accepted objective values, non-increasing
};

// Limited-memory BFGS with Armijo backtracking line search. Minimizes fg.
// Trial points violating `lower_bounds` are clamped before evaluation, so
// every accepted iterate is feasible.
LbfgsResult lbfgs_minimize(const ObjectiveFn& fg, Eigen::VectorXd x0,
                           const LbfgsOptions& options = {});

} // namespace gpss::detail
