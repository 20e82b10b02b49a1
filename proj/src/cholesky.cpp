#include "gpss/detail/cholesky.hpp"

#include "gpss/errors.hpp"

#include <cmath>
#include <string>

namespace gpss::detail {

CholeskyResult cholesky_with_jitter(Eigen::MatrixXd matrix, double scale) {
  if (!matrix.allFinite()) {
    throw ConditioningError("cholesky: matrix has non-finite entries");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    scale = matrix.diagonal().cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) scale = 1.0;
  }

  double applied = 0.0;
  for (double eps = 0.0; eps <= 1e-4; eps = (eps == 0.0) ? 1e-10 : eps * 10.0) {
    const double target = eps * scale;
    if (target > applied) {
      matrix.diagonal().array() += target - applied;
      applied = target;
    }
    CholeskyResult result;
    result.llt.compute(matrix);
    if (result.llt.info() == Eigen::Success &&
        result.llt.matrixLLT().diagonal().minCoeff() > 0.0) {
      result.jitter = applied;
      return result;
    }
  }
  throw ConditioningError("cholesky: factorization failed at maximum jitter " +
                          std::to_string(1e-4 * scale));
}

} // namespace gpss::detail
