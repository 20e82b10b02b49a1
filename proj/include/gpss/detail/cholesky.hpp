#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace gpss::detail {

struct CholeskyResult {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0; // absolute diagonal addition that was applied

  double log_det() const {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
};

// Cholesky of a symmetric PSD matrix with an escalating relative jitter
// ladder: 0, then scale*1e-10 growing by x10 up to scale*1e-4. Throws
// ConditioningError once the ladder is exhausted. `scale` is the typical
// diagonal magnitude (k(0) for Gram matrices).
CholeskyResult cholesky_with_jitter(Eigen::MatrixXd matrix, double scale);

} // namespace gpss::detail
