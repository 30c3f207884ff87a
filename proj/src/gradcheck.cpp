#include "lowshot/gradcheck.hpp"

#include "lowshot/error.hpp"

#include <algorithm>
#include <cmath>

namespace lowshot {
namespace {

double checked(double v, const char* where) {
  if (!std::isfinite(v)) throw Error(Errc::NonFiniteLoss, std::string("loss is not finite at ") + where);
  return v;
}

}  // namespace

GradCheckReport grad_check(const DifferentiableFn& fn, const ParamSet& params, double tol, double step) {
  ParamSet analytic = params.zeros_like();
  checked(fn(params, &analytic), "the base point");

  GradCheckReport report;
  ParamSet probe = params;
  for (auto& [name, param] : probe) {
    const Matrix& grad = analytic.value(name);
    for (Eigen::Index k = 0; k < param.value.size(); ++k) {
      double& coord = param.value.data()[k];
      const double saved = coord;
      coord = saved + step;
      const double up = checked(fn(probe, nullptr), "p + h");
      coord = saved - step;
      const double down = checked(fn(probe, nullptr), "p - h");
      coord = saved;

      const double numeric = (up - down) / (2.0 * step);
      const double a = grad.data()[k];
      const double denom = std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
      const double rel = std::abs(a - numeric) / denom;
      ++report.coordinates;
      if (report.worst_index < 0 || rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = name;
        report.worst_index = k;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.max_rel_error <= tol;
  return report;
}

}  // namespace lowshot
