#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "tlmdp/core/rng.hpp"

namespace tlmdp {

enum class FiniteDifference {
  kCentral,  // (f(x+h) - f(x-h)) / 2h with h = step
  // Central differences at h = step, step/2, ... extrapolated to h -> 0
  // (Ridders' tableau); the estimate with the smallest error is kept. Needed
  // when f has curvature on a scale shorter than any single usable h.
  kRidders,
};

struct GradCheckOptions {
  FiniteDifference method = FiniteDifference::kCentral;
  double step = 1e-5;
  int ridders_levels = 12;
  // Optional per-coordinate starting step (same length as the point); a
  // caller that knows where f has kinks can keep every probe on one side.
  std::vector<double> coordinate_steps;
  double tolerance = 1e-4;
  // Denominator floor for the relative error, so coordinates whose true
  // derivative is ~0 are judged on absolute error instead.
  double scale_floor = 1e-6;
  // Above this many coordinates a seeded subsample of this size is checked.
  std::size_t max_coordinates = 4096;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates_checked = 0;
  bool passed = false;
};

using ScalarFunction = std::function<double(std::span<const double>)>;

// Compares `analytic` with central finite differences of `f` at `point`.
// rel_err_i = |a_i - n_i| / max(|a_i|, |n_i|, scale_floor).
GradCheckReport gradient_check(const ScalarFunction& f, std::span<const double> point,
                               std::span<const double> analytic,
                               const GradCheckOptions& options = {});

}  // namespace tlmdp
