#include "tlmdp/core/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tlmdp/core/errors.hpp"

namespace tlmdp {
namespace {

double central(const ScalarFunction& f, std::vector<double>& x, std::size_t i, double h) {
  const double saved = x[i];
  x[i] = saved + h;
  const double plus = f(x);
  x[i] = saved - h;
  const double minus = f(x);
  x[i] = saved;
  return (plus - minus) / (2.0 * h);
}

double ridders(const ScalarFunction& f, std::vector<double>& x, std::size_t i, double h,
               int levels) {
  constexpr double kShrink = 2.0;
  constexpr double kSafe = 2.0;
  const double fac0 = kShrink * kShrink;
  std::vector<std::vector<double>> a(static_cast<std::size_t>(levels),
                                     std::vector<double>(static_cast<std::size_t>(levels)));
  a[0][0] = central(f, x, i, h);
  double best = a[0][0];
  double err = INFINITY;
  for (int c = 1; c < levels; ++c) {
    h /= kShrink;
    a[0][c] = central(f, x, i, h);
    double fac = fac0;
    for (int r = 1; r <= c; ++r) {
      a[r][c] = (a[r - 1][c] * fac - a[r - 1][c - 1]) / (fac - 1.0);
      fac *= fac0;
      const double e = std::max(std::abs(a[r][c] - a[r - 1][c]), std::abs(a[r][c] - a[r - 1][c - 1]));
      if (e <= err) {
        err = e;
        best = a[r][c];
      }
    }
    if (std::abs(a[c][c] - a[c - 1][c - 1]) >= kSafe * err) break;
  }
  return best;
}

}  // namespace

GradCheckReport gradient_check(const ScalarFunction& f, std::span<const double> point,
                               std::span<const double> analytic,
                               const GradCheckOptions& options) {
  if (options.method == FiniteDifference::kRidders && options.ridders_levels < 2) {
    throw ConfigError("gradient_check: Ridders extrapolation needs at least two levels");
  }
  if (!options.coordinate_steps.empty() && options.coordinate_steps.size() != point.size()) {
    throw ConfigError("gradient_check: coordinate_steps length does not match point");
  }
  if (point.size() != analytic.size()) {
    throw ConfigError("gradient_check: analytic gradient length does not match point");
  }
  std::vector<std::size_t> coords;
  if (point.size() <= options.max_coordinates) {
    coords.resize(point.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
  } else {
    SeededRng rng(options.seed);
    std::vector<std::size_t> perm = random_permutation(point.size(), rng);
    coords.assign(perm.begin(), perm.begin() + static_cast<long>(options.max_coordinates));
    std::sort(coords.begin(), coords.end());
  }

  GradCheckReport report;
  std::vector<double> x(point.begin(), point.end());
  for (std::size_t i : coords) {
    const double h = options.coordinate_steps.empty() ? options.step : options.coordinate_steps[i];
    const double numeric = options.method == FiniteDifference::kRidders
                               ? ridders(f, x, i, h, options.ridders_levels)
                               : central(f, x, i, h);
    const double a = analytic[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), options.scale_floor});
    double rel = std::abs(a - numeric) / denom;
    if (!std::isfinite(rel)) rel = INFINITY;
    if (rel > report.max_relative_error || report.coordinates_checked == 0) {
      report.max_relative_error = rel;
      report.worst_index = i;
      report.worst_analytic = a;
      report.worst_numeric = numeric;
    }
    ++report.coordinates_checked;
  }
  report.passed = report.max_relative_error < options.tolerance;
  return report;
}

}  // namespace tlmdp
