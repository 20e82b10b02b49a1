#include "gpss/sparsevi.hpp"

#include "gpss/detail/cholesky.hpp"
#include "gpss/detail/lbfgs.hpp"
#include "gpss/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gpss {

void InducingSet::validate(double t_min, double t_max) const {
  if (points.size() < 1) throw ParameterError("InducingSet: needs at least one point");
  if (!points.allFinite()) throw ParameterError("InducingSet: non-finite point");
  const double slop = 1e-12 * std::max(1.0, std::abs(t_max));
  for (Eigen::Index i = 0; i < points.size(); ++i) {
    if (points[i] < t_min - slop || points[i] > t_max + slop) {
      throw ParameterError("InducingSet: point outside the frame span");
    }
    if (i > 0 && !(points[i] > points[i - 1])) {
      throw ParameterError("InducingSet: points must be sorted and unique");
    }
  }
}

InducingSet select_inducing_extrema(const Eigen::VectorXd& frame_y,
                                    const Eigen::VectorXd& frame_t, int m_max) {
  const Eigen::Index n = frame_y.size();
  if (n < 3 || frame_t.size() != n) {
    throw InputSizeError("select_inducing_extrema: frame length must be >= 3");
  }
  if (m_max < 1) throw ParameterError("select_inducing_extrema: m_max must be >= 1");

  std::vector<Eigen::Index> extrema;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    const bool is_max = frame_y[i] > frame_y[i - 1] && frame_y[i] > frame_y[i + 1];
    const bool is_min = frame_y[i] < frame_y[i - 1] && frame_y[i] < frame_y[i + 1];
    if (is_max || is_min) extrema.push_back(i);
  }

  InducingSet inducing;
  if (extrema.size() < 2) {
    inducing.points =
        Eigen::VectorXd::LinSpaced(m_max, frame_t[0], frame_t[n - 1]);
    return inducing;
  }
  if (static_cast<int>(extrema.size()) > m_max) {
    std::stable_sort(extrema.begin(), extrema.end(),
                     [&](Eigen::Index a, Eigen::Index b) {
                       const double ya = std::abs(frame_y[a]);
                       const double yb = std::abs(frame_y[b]);
                       if (ya != yb) return ya > yb;
                       return a < b; // ties toward earlier time
                     });
    extrema.resize(m_max);
  }
  std::sort(extrema.begin(), extrema.end());
  extrema.erase(std::unique(extrema.begin(), extrema.end()), extrema.end());
  inducing.points.resize(static_cast<Eigen::Index>(extrema.size()));
  for (std::size_t i = 0; i < extrema.size(); ++i) {
    inducing.points[static_cast<Eigen::Index>(i)] = frame_t[extrema[i]];
  }
  return inducing;
}

namespace {

struct BoundParts {
  double value = 0.0;
  double fit = 0.0;
  double trace = 0.0;
};

// Per-source blocks at unit variance; the iterate only rescales them.
class SparseProblem {
public:
  SparseProblem(const GpMixturePrior& prior, const Eigen::VectorXd& t,
                const Eigen::VectorXd& y, const InducingSet& inducing)
      : y_(y), n_(t.size()), m_(inducing.points.size()) {
    for (const auto& kernel : prior.kernels) {
      MsmKernelParams unit = kernel;
      unit.variance = 1.0;
      a_hat_.push_back(detail::gram_values(unit, t, inducing.points));
      b_hat_.push_back(detail::gram_values(unit, inducing.points));
      kappa_.push_back(unit.k0());
    }
  }

  int num_sources() const { return static_cast<int>(a_hat_.size()); }

  // Bound and, optionally, gradients with respect to log sigma2_j / log nu2.
  BoundParts eval(const std::vector<double>& sigma2, double nu2,
                  Eigen::VectorXd* grad_sigma2, double* grad_nu2) const {
    const double n = static_cast<double>(n_);
    const Eigen::Index m = m_;

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, m);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m, m);
    double kf0 = 0.0;
    for (int j = 0; j < num_sources(); ++j) {
      a.noalias() += sigma2[j] * a_hat_[j];
      b.noalias() += sigma2[j] * b_hat_[j];
      kf0 += sigma2[j] * kappa_[j];
    }

    const auto chol_b = detail::cholesky_with_jitter(std::move(b), kf0);
    Eigen::MatrixXd v = chol_b.llt.matrixL().solve(a.transpose()); // m x n
    Eigen::MatrixXd c = v * v.transpose();
    c.diagonal().array() += nu2;
    const auto chol_c = detail::cholesky_with_jitter(std::move(c), nu2);

    const Eigen::VectorXd t1 = v * y_;
    const Eigen::VectorXd t2 = chol_c.llt.solve(t1);
    const double quad = (y_.squaredNorm() - t1.dot(t2)) / nu2;
    const double log_det = (n - static_cast<double>(m)) * std::log(nu2) + chol_c.log_det();
    const double tr_v = v.squaredNorm();
    const double trace = n * kf0 - tr_v;

    BoundParts parts;
    parts.fit = -0.5 * (quad + log_det + n * std::log(2.0 * M_PI));
    parts.trace = -trace / (2.0 * nu2);
    parts.value = parts.fit + parts.trace;

    if (grad_sigma2 == nullptr && grad_nu2 == nullptr) return parts;

    // shared O(n m^2) pieces for all parameter directions
    Eigen::MatrixXd proj = chol_b.llt.matrixU().solve(v); // P = B^-1 A^T, m x n
    Eigen::VectorXd beta = (y_ - v.transpose() * t2) / nu2;
    Eigen::VectorXd q = proj * beta;
    Eigen::MatrixXd x1 = v * proj.transpose();            // m x m
    Eigen::MatrixXd x2 = chol_c.llt.solve(x1);
    Eigen::MatrixXd m2 = (proj.transpose() - v.transpose() * x2) / nu2; // n x m
    Eigen::MatrixXd s = proj * m2;                        // m x m
    Eigen::MatrixXd ppt = proj * proj.transpose();        // m x m

    if (grad_sigma2) {
      grad_sigma2->setZero(num_sources());
      for (int j = 0; j < num_sources(); ++j) {
        const Eigen::VectorXd u = a_hat_[j].transpose() * beta;
        const double term_quad = 2.0 * u.dot(q) - q.dot(b_hat_[j] * q);
        const double term_logdet =
            2.0 * (m2.array() * a_hat_[j].array()).sum() -
            (s.array() * b_hat_[j].array()).sum();
        const double d_trace =
            n * kappa_[j] - (2.0 * (a_hat_[j].array() * proj.transpose().array()).sum() -
                             (b_hat_[j].array() * ppt.array()).sum());
        (*grad_sigma2)[j] =
            sigma2[j] * (0.5 * term_quad - 0.5 * term_logdet - d_trace / (2.0 * nu2));
      }
    }
    if (grad_nu2) {
      const double tr_c_inv =
          chol_c.llt.solve(Eigen::MatrixXd::Identity(m, m)).trace();
      const double tr_sigma_inv = (n - static_cast<double>(m)) / nu2 + tr_c_inv;
      const double d_nu2 =
          0.5 * beta.squaredNorm() - 0.5 * tr_sigma_inv + trace / (2.0 * nu2 * nu2);
      *grad_nu2 = nu2 * d_nu2;
    }
    return parts;
  }

private:
  std::vector<Eigen::MatrixXd> a_hat_;
  std::vector<Eigen::MatrixXd> b_hat_;
  std::vector<double> kappa_;
  Eigen::VectorXd y_;
  Eigen::Index n_, m_;
};

// Dense counterpart driven by the exact log-marginal likelihood.
class DenseProblem {
public:
  DenseProblem(const GpMixturePrior& prior, const Eigen::VectorXd& t,
               const Eigen::VectorXd& y)
      : y_(y), n_(t.size()) {
    for (const auto& kernel : prior.kernels) {
      MsmKernelParams unit = kernel;
      unit.variance = 1.0;
      g_hat_.push_back(detail::gram_values(unit, t));
      kappa_.push_back(unit.k0());
    }
  }

  int num_sources() const { return static_cast<int>(g_hat_.size()); }

  BoundParts eval(const std::vector<double>& sigma2, double nu2,
                  Eigen::VectorXd* grad_sigma2, double* grad_nu2) const {
    const double n = static_cast<double>(n_);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n_, n_);
    double kf0 = 0.0;
    for (int j = 0; j < num_sources(); ++j) {
      h.noalias() += sigma2[j] * g_hat_[j];
      kf0 += sigma2[j] * kappa_[j];
    }
    h.diagonal().array() += nu2;
    const auto chol = detail::cholesky_with_jitter(std::move(h), kf0);
    const Eigen::VectorXd alpha = chol.llt.solve(y_);

    BoundParts parts;
    parts.fit = -0.5 * (y_.dot(alpha) + chol.log_det() + n * std::log(2.0 * M_PI));
    parts.trace = 0.0;
    parts.value = parts.fit;

    if (grad_sigma2 == nullptr && grad_nu2 == nullptr) return parts;
    const Eigen::MatrixXd h_inv =
        chol.llt.solve(Eigen::MatrixXd::Identity(n_, n_));
    if (grad_sigma2) {
      grad_sigma2->setZero(num_sources());
      for (int j = 0; j < num_sources(); ++j) {
        const double quad_part = alpha.dot(g_hat_[j] * alpha);
        const double trace_part = (h_inv.array() * g_hat_[j].array()).sum();
        (*grad_sigma2)[j] = sigma2[j] * 0.5 * (quad_part - trace_part);
      }
    }
    if (grad_nu2) {
      *grad_nu2 = nu2 * 0.5 * (alpha.squaredNorm() - h_inv.trace());
    }
    return parts;
  }

private:
  std::vector<Eigen::MatrixXd> g_hat_;
  std::vector<double> kappa_;
  Eigen::VectorXd y_;
  Eigen::Index n_;
};

void check_frame(const GpMixturePrior& prior, const Eigen::VectorXd& t,
                 const Eigen::VectorXd& y) {
  prior.validate();
  if (t.size() != y.size() || t.size() < 1) {
    throw InputSizeError("sparsevi: frame times and values must have equal, positive length");
  }
  if (!t.allFinite() || !y.allFinite()) {
    throw ParameterError("sparsevi: frame data must be finite");
  }
}

// Shared learner: maximizes problem.eval over log-transformed free
// parameters. Problem must provide eval(sigma2, nu2, grad_sigma2, grad_nu2).
template <typename Problem>
ElboReport learn_impl(const Problem& problem, const GpMixturePrior& prior,
                      const Eigen::VectorXd& frame_y, const FreeMask& free,
                      const LearnOptions& options) {
  const int num_sources = prior.num_sources();
  free.validate(num_sources);

  if (frame_y.squaredNorm() == 0.0) {
    // zero data: the bound is maximized on the boundary, every free source
    // variance at its floor; the noise variance stays where it started
    ElboReport report;
    report.learned = prior;
    report.silent.assign(num_sources, false);
    std::vector<double> sigma2(num_sources);
    for (int j = 0; j < num_sources; ++j) {
      sigma2[j] = prior.kernels[j].variance;
      if (free.sigma2[j]) {
        sigma2[j] *= options.variance_floor_ratio;
        report.learned.kernels[j].variance = sigma2[j];
        report.silent[j] = true;
      }
    }
    const BoundParts parts = problem.eval(sigma2, prior.noise_variance, nullptr, nullptr);
    report.value = parts.value;
    report.fit_term = parts.fit;
    report.trace_term = parts.trace;
    report.converged = true;
    report.elbo_trace = {report.value};
    return report;
  }

  std::vector<int> free_sources;
  for (int j = 0; j < num_sources; ++j) {
    if (free.sigma2[j]) free_sources.push_back(j);
  }
  const int dim = static_cast<int>(free_sources.size()) + (free.noise ? 1 : 0);

  std::vector<double> sigma2_init(num_sources);
  for (int j = 0; j < num_sources; ++j) sigma2_init[j] = prior.kernels[j].variance;
  const double nu2_init = prior.noise_variance;

  Eigen::VectorXd x0(dim), lower(dim);
  for (std::size_t i = 0; i < free_sources.size(); ++i) {
    x0[static_cast<Eigen::Index>(i)] = std::log(sigma2_init[free_sources[i]]);
    lower[static_cast<Eigen::Index>(i)] =
        std::log(options.variance_floor_ratio * sigma2_init[free_sources[i]]);
  }
  if (free.noise) {
    x0[dim - 1] = std::log(nu2_init);
    lower[dim - 1] = std::log(options.variance_floor_ratio * nu2_init);
  }

  const auto unpack = [&](const Eigen::VectorXd& x, std::vector<double>* sigma2,
                          double* nu2) {
    *sigma2 = sigma2_init;
    for (std::size_t i = 0; i < free_sources.size(); ++i) {
      (*sigma2)[free_sources[i]] = std::exp(x[static_cast<Eigen::Index>(i)]);
    }
    *nu2 = free.noise ? std::exp(x[dim - 1]) : nu2_init;
  };

  bool first_call = true;
  const auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    std::vector<double> sigma2;
    double nu2 = 0.0;
    unpack(x, &sigma2, &nu2);
    Eigen::VectorXd grad_sigma2;
    double grad_nu2 = 0.0;
    BoundParts parts;
    const bool propagate = first_call;
    first_call = false;
    try {
      parts = problem.eval(sigma2, nu2, grad ? &grad_sigma2 : nullptr,
                           (grad && free.noise) ? &grad_nu2 : nullptr);
    } catch (const ConditioningError&) {
      if (propagate) throw;
      if (grad) grad->setConstant(x.size(), 0.0);
      return std::numeric_limits<double>::infinity();
    }
    if (grad) {
      grad->resize(dim);
      for (std::size_t i = 0; i < free_sources.size(); ++i) {
        (*grad)[static_cast<Eigen::Index>(i)] =
            -grad_sigma2[free_sources[i]];
      }
      if (free.noise) (*grad)[dim - 1] = -grad_nu2;
    }
    return -parts.value;
  };

  detail::LbfgsOptions lbfgs_options;
  lbfgs_options.max_iterations = options.max_iterations;
  lbfgs_options.relative_tolerance = options.relative_tolerance;
  lbfgs_options.lower_bounds = lower;
  auto opt = detail::lbfgs_minimize(objective, x0, lbfgs_options);

  ElboReport report;
  report.learned = prior;
  std::vector<double> sigma2;
  double nu2 = 0.0;
  unpack(opt.x, &sigma2, &nu2);
  report.silent.assign(num_sources, false);
  for (std::size_t i = 0; i < free_sources.size(); ++i) {
    const int j = free_sources[i];
    const double floor = options.variance_floor_ratio * sigma2_init[j];
    if (sigma2[j] <= floor * (1.0 + 1e-6)) {
      sigma2[j] = floor;
      report.silent[j] = true;
    }
    report.learned.kernels[j].variance = sigma2[j];
  }
  if (free.noise) report.learned.noise_variance = nu2;

  report.iterations = opt.iterations;
  report.converged = opt.converged;
  report.elbo_trace.resize(opt.trace.size());
  std::transform(opt.trace.begin(), opt.trace.end(), report.elbo_trace.begin(),
                 [](double v) { return -v; });

  if (opt.nonfinite) {
    throw OptimizationFailureError("learn_variances: non-finite bound", report);
  }
  const BoundParts parts = problem.eval(sigma2, nu2, nullptr, nullptr);
  report.value = parts.value;
  report.fit_term = parts.fit;
  report.trace_term = parts.trace;
  return report;
}

} // namespace

FreeMask FreeMask::all_sigma2(int num_sources, bool noise) {
  FreeMask mask;
  mask.sigma2.assign(static_cast<std::size_t>(num_sources), 1);
  mask.noise = noise;
  return mask;
}

void FreeMask::validate(int num_sources) const {
  if (static_cast<int>(sigma2.size()) != num_sources) {
    throw ParameterError("FreeMask: sigma2 mask size must equal the source count");
  }
  const bool any = noise || std::any_of(sigma2.begin(), sigma2.end(),
                                        [](char c) { return c != 0; });
  if (!any) throw ParameterError("FreeMask: at least one parameter must be free");
}

ElboReport elbo(const GpMixturePrior& prior, const Eigen::VectorXd& frame_t,
                const Eigen::VectorXd& frame_y, const InducingSet& inducing) {
  check_frame(prior, frame_t, frame_y);
  inducing.validate(frame_t.minCoeff(), frame_t.maxCoeff());
  if (inducing.points.size() > frame_t.size()) {
    throw ParameterError("elbo: more inducing points than frame samples");
  }
  SparseProblem problem(prior, frame_t, frame_y, inducing);
  std::vector<double> sigma2(prior.num_sources());
  for (int j = 0; j < prior.num_sources(); ++j) sigma2[j] = prior.kernels[j].variance;
  const BoundParts parts = problem.eval(sigma2, prior.noise_variance, nullptr, nullptr);

  ElboReport report;
  report.value = parts.value;
  report.fit_term = parts.fit;
  report.trace_term = parts.trace;
  report.learned = prior;
  report.converged = true;
  return report;
}

ElboGradient elbo_gradient(const GpMixturePrior& prior, const Eigen::VectorXd& frame_t,
                           const Eigen::VectorXd& frame_y, const InducingSet& inducing) {
  check_frame(prior, frame_t, frame_y);
  inducing.validate(frame_t.minCoeff(), frame_t.maxCoeff());
  if (inducing.points.size() > frame_t.size()) {
    throw ParameterError("elbo_gradient: more inducing points than frame samples");
  }
  SparseProblem problem(prior, frame_t, frame_y, inducing);
  std::vector<double> sigma2(prior.num_sources());
  for (int j = 0; j < prior.num_sources(); ++j) sigma2[j] = prior.kernels[j].variance;

  ElboGradient gradient;
  const BoundParts parts = problem.eval(sigma2, prior.noise_variance,
                                        &gradient.wrt_log_sigma2, &gradient.wrt_log_noise);
  gradient.value = parts.value;
  return gradient;
}

ElboReport learn_variances(const GpMixturePrior& prior, const Eigen::VectorXd& frame_t,
                           const Eigen::VectorXd& frame_y, const InducingSet& inducing,
                           const FreeMask& free, const LearnOptions& options) {
  check_frame(prior, frame_t, frame_y);
  inducing.validate(frame_t.minCoeff(), frame_t.maxCoeff());
  if (inducing.points.size() > frame_t.size()) {
    throw ParameterError("learn_variances: more inducing points than frame samples");
  }
  SparseProblem problem(prior, frame_t, frame_y, inducing);
  return learn_impl(problem, prior, frame_y, free, options);
}

ElboReport learn_variances_dense(const GpMixturePrior& prior,
                                 const Eigen::VectorXd& frame_t,
                                 const Eigen::VectorXd& frame_y, const FreeMask& free,
                                 const LearnOptions& options) {
  check_frame(prior, frame_t, frame_y);
  DenseProblem problem(prior, frame_t, frame_y);
  return learn_impl(problem, prior, frame_y, free, options);
}

} // namespace gpss
