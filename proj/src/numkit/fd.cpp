#include "slotnav/numkit/fd.hpp"

#include <cmath>

#include "slotnav/error.hpp"

namespace slotnav::numkit {

Matrix fd_gradient(const std::function<double(const Matrix&)>& f, const Matrix& theta,
                   double eps) {
  if (!(eps > 0.0)) fail(ErrorKind::Config, "fd_gradient: eps must be positive");
  Matrix grad(theta.rows(), theta.cols());
  Matrix probe = theta;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + eps;
    const double plus = f(probe);
    probe[i] = theta[i] - eps;
    const double minus = f(probe);
    probe[i] = theta[i];
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      fail(ErrorKind::Numeric, "fd_gradient: non-finite function value at coordinate " +
                                   std::to_string(i));
    }
    grad[i] = (plus - minus) / (2.0 * eps);
  }
  return grad;
}

}  // namespace slotnav::numkit
