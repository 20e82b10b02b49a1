#include "gpss/detail/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace gpss::detail {

namespace {

void clamp_to_bounds(Eigen::VectorXd& x, const Eigen::VectorXd& lb) {
  if (lb.size() == 0) return;
  x = x.cwiseMax(lb);
}

} // namespace

LbfgsResult lbfgs_minimize(const ObjectiveFn& fg, Eigen::VectorXd x0,
                           const LbfgsOptions& options) {
  const Eigen::Index dim = x0.size();
  clamp_to_bounds(x0, options.lower_bounds);

  LbfgsResult result;
  result.x = x0;

  Eigen::VectorXd grad(dim);
  double fx = fg(x0, &grad);
  result.fx = fx;
  result.trace.push_back(fx);
  if (!std::isfinite(fx) || !grad.allFinite()) {
    result.nonfinite = true;
    return result;
  }

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  Eigen::VectorXd x = x0;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.iterations = iter + 1;

    if (grad.lpNorm<Eigen::Infinity>() <=
        options.gradient_tolerance * std::max(1.0, std::abs(fx))) {
      result.converged = true;
      break;
    }

    // two-loop recursion
    Eigen::VectorXd direction = -grad;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(direction);
      direction -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      const double gamma = s_hist.back().dot(y_hist.back()) /
                           y_hist.back().squaredNorm();
      direction *= gamma;
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(direction);
      direction += (alpha[i] - beta) * s_hist[i];
    }

    double dir_deriv = grad.dot(direction);
    if (!(dir_deriv < 0.0)) { // not a descent direction, fall back
      direction = -grad;
      dir_deriv = grad.dot(direction);
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    // Armijo backtracking
    constexpr double c1 = 1e-4;
    double step = 1.0;
    double fx_new = std::numeric_limits<double>::infinity();
    Eigen::VectorXd x_new, grad_new(dim);
    bool accepted = false;
    for (int ls = 0; ls < options.max_line_search; ++ls) {
      x_new = x + step * direction;
      clamp_to_bounds(x_new, options.lower_bounds);
      fx_new = fg(x_new, &grad_new);
      if (std::isfinite(fx_new) && fx_new <= fx + c1 * step * dir_deriv) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      result.converged = true; // no further progress possible along any tried step
      break;
    }
    if (!grad_new.allFinite()) {
      result.nonfinite = true;
      result.x = x_new;
      result.fx = fx_new;
      result.trace.push_back(fx_new);
      return result;
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yv = grad_new - grad;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > options.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    const double improvement = fx - fx_new;
    x = x_new;
    fx = fx_new;
    grad = grad_new;
    result.trace.push_back(fx);

    if (improvement <= options.relative_tolerance * std::max(1.0, std::abs(fx))) {
      result.converged = true;
      break;
    }
  }

  result.x = x;
  result.fx = fx;
  return result;
}

} // namespace gpss::detail
