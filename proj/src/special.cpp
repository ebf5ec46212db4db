#include "s3w/special.hpp"

#include <cmath>
#include <stdexcept>

namespace s3w {

namespace {

constexpr double kSeriesCutoff = 30.0;

void check_args(double v, double x) {
  if (!(v >= 0.0)) throw std::invalid_argument("Bessel order must be >= 0");
  if (!(x >= 0.0)) throw std::invalid_argument("Bessel argument must be >= 0");
}

// log of sum_k (x/2)^{2k+v} / (k! Gamma(k+v+1)), with the k = 0 term
// factored out so the remainder is a pure series starting at 1.
double log_series(double v, double x) {
  double h = 0.5 * x;
  double h2 = h * h;
  double sum = 1.0;
  double term = 1.0;
  for (int k = 1; k < 4000; ++k) {
    term *= h2 / (double(k) * (v + double(k)));
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  return v * std::log(h) - std::lgamma(v + 1.0) + std::log(sum);
}

// Large-argument expansion I_v(x) ~ e^x / sqrt(2 pi x) * sum_k (-1)^k a_k(v)/x^k,
// truncated at the smallest term. Valid when the order is small against x.
double log_asymptotic(double v, double x) {
  double mu = 4.0 * v * v;
  double sum = 1.0;
  double term = 1.0;
  double prev = std::abs(term);
  for (int k = 1; k < 40; ++k) {
    double f = (mu - double(2 * k - 1) * double(2 * k - 1)) / (8.0 * double(k) * x);
    term *= -f;
    if (std::abs(term) >= prev) break;  // divergence onset
    sum += term;
    prev = std::abs(term);
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return x - 0.5 * std::log(2.0 * M_PI * x) + std::log(sum);
}

bool use_series(double v, double x) {
  // The asymptotic branch needs x to dominate v^2.
  return x <= kSeriesCutoff || 4.0 * v * v > 2.0 * x;
}

}  // namespace

double log_bessel_i(double v, double x) {
  check_args(v, x);
  if (x == 0.0) {
    if (v == 0.0) return 0.0;  // I_0(0) = 1
    return -INFINITY;          // I_v(0) = 0 for v > 0
  }
  return use_series(v, x) ? log_series(v, x) : log_asymptotic(v, x);
}

double bessel_i(double v, double x) {
  check_args(v, x);
  if (x == 0.0) return v == 0.0 ? 1.0 : 0.0;
  return std::exp(log_bessel_i(v, x));
}

}  // namespace s3w
