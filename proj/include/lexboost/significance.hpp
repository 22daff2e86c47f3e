#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lexboost {

struct TTestResult {
  double t = 0.0;
  double p = 1.0;  // two-sided
  std::size_t df = 0;
};

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// Two-sided p-value of Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

/// Paired t-test on deltas a_i - b_i. Zero variance gives (0, 1) for a zero
/// mean delta and (+-inf, 0) otherwise. Throws LengthMismatch for unequal
/// lengths, InvalidParameter for fewer than two pairs.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// Values of the queries present in both maps, aligned by query id.
std::pair<std::vector<double>, std::vector<double>> align_by_query(const std::map<std::string, double>& a,
                                                                   const std::map<std::string, double>& b);

}  // namespace lexboost
