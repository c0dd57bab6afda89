// ctcseq/logsumexp.hpp — log-space accumulation primitives.
#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace ctcseq {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without overflow; exact when one side is log-zero.
inline double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  return a > b ? a + std::log1p(std::exp(b - a))
               : b + std::log1p(std::exp(a - b));
}

inline double log_add(double a, double b, double c) {
  return log_add(log_add(a, b), c);
}

inline double log_sum_exp(std::span<const double> xs) {
  double m = kLogZero;
  for (double x : xs)
    if (x > m) m = x;
  if (m == kLogZero) return kLogZero;
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - m);
  return m + std::log(sum);
}

}  // namespace ctcseq
