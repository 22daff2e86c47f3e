#include "lexboost/significance.hpp"

#include <cmath>
#include <limits>

#include "lexboost/error.hpp"

namespace lexboost {

namespace {

// Continued fraction for I_x(a, b), modified Lentz evaluation. Converges
// rapidly for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 300;
  constexpr double kEpsilon = 1e-15;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEpsilon) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw Error(ErrorCode::InvalidParameter, "incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorCode::InvalidParameter, "incomplete beta needs x in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw Error(ErrorCode::InvalidParameter, "degrees of freedom must be > 0");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch, "paired t-test: " + std::to_string(a.size()) + " vs " +
                                               std::to_string(b.size()) + " values");
  }
  const std::size_t m = a.size();
  if (m < 2) throw Error(ErrorCode::InvalidParameter, "paired t-test needs at least 2 pairs");

  double mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dev = (a[i] - b[i]) - mean;
    ss += dev * dev;
  }
  const double sd = std::sqrt(ss / static_cast<double>(m - 1));

  TTestResult result;
  result.df = m - 1;
  if (sd == 0.0) {
    if (mean == 0.0) return result;
    result.t = std::copysign(std::numeric_limits<double>::infinity(), mean);
    result.p = 0.0;
    return result;
  }
  result.t = mean / (sd / std::sqrt(static_cast<double>(m)));
  result.p = student_t_two_sided_p(result.t, static_cast<double>(result.df));
  return result;
}

std::pair<std::vector<double>, std::vector<double>> align_by_query(const std::map<std::string, double>& a,
                                                                   const std::map<std::string, double>& b) {
  std::pair<std::vector<double>, std::vector<double>> out;
  for (const auto& [qid, va] : a) {
    if (auto it = b.find(qid); it != b.end()) {
      out.first.push_back(va);
      out.second.push_back(it->second);
    }
  }
  return out;
}

}  // namespace lexboost
