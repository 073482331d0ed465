#pragma once

#include <functional>

#include "slotnav/numkit/matrix.hpp"

namespace slotnav::numkit {

/// Central-difference gradient of a scalar function:
///   g_i = (f(θ + ε e_i) − f(θ − ε e_i)) / 2ε
/// Throws a numeric error if f returns a non-finite value.
Matrix fd_gradient(const std::function<double(const Matrix&)>& f, const Matrix& theta,
                   double eps = 1e-5);

}  // namespace slotnav::numkit
