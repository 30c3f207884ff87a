#pragma once

#include "lowshot/params.hpp"

#include <functional>
#include <string>

namespace lowshot {

/// A scalar function of a parameter set. When `grads` is non-null it must be
/// filled with the analytic gradient (same names and shapes as `params`).
using DifferentiableFn = std::function<double(const ParamSet& params, ParamSet* grads)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  Eigen::Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
  bool passed = false;
};

inline constexpr double kGradCheckStep = 1e-5;

/// Floor on the denominator of the relative error, so coordinates whose true
/// gradient is zero are judged against an absolute error of this size.
inline constexpr double kGradCheckFloor = 1e-6;

/// Compares every analytic gradient coordinate with the central difference
/// (f(p+h) - f(p-h)) / 2h. Relative error is
/// |analytic - numeric| / max(|analytic|, |numeric|, kGradCheckFloor).
/// Throws NonFiniteLoss if fn returns NaN or Inf anywhere it is evaluated.
GradCheckReport grad_check(const DifferentiableFn& fn, const ParamSet& params, double tol,
                           double step = kGradCheckStep);

}  // namespace lowshot
