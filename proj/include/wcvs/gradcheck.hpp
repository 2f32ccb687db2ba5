#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace wcvs {

inline constexpr double kFiniteDifferenceStep = 1e-3;
inline constexpr double kGradTolerance = 1e-4;

// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

using ScalarFunction = std::function<double(const std::vector<double>&)>;

// Central differences, one coordinate at a time.
std::vector<double> numeric_gradient(const ScalarFunction& f, std::vector<double> x,
                                     double step = kFiniteDifferenceStep);

double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric);

struct GradCheckEntry {
  std::string op;
  std::string wrt;
  std::size_t coordinates = 0;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::uint64_t seed = 0;
  std::vector<GradCheckEntry> entries;
  double max_rel_error() const;
  bool passed(double tolerance = kGradTolerance) const { return max_rel_error() < tolerance; }
};

// Operations with an analytic backward pass.
const std::vector<std::string>& differentiable_ops();
// Operations that exist only in forward form.
const std::vector<std::string>& forward_only_ops();

// Builds seeded random inputs for `op`, and compares every analytic gradient
// the op exposes against central finite differences in double precision.
// Throws Error(NoBackward) for forward-only ops, Error(BadSpec) for unknown ids.
GradCheckReport grad_check(const std::string& op, std::uint64_t seed);

// Every differentiable op for seeds seed, seed+1, ..., seed+count-1.
std::vector<GradCheckReport> grad_check_suite(std::uint64_t seed, int count);

}  // namespace wcvs
