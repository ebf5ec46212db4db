#pragma once

#include <cstddef>
#include <vector>

namespace s3w {

// Atoms on the line with non-negative weights summing to 1.
struct WeightedSamples1D {
  std::vector<double> values;
  std::vector<double> weights;

  static WeightedSamples1D from(std::vector<double> values,
                                std::vector<double> weights);
};

// p-Wasserstein distance between equal-size uniform-weight samples:
// ((1/n) sum |u_(i) - v_(i)|^p)^(1/p) over sorted order statistics.
double w1d_uniform(const std::vector<double>& u, const std::vector<double>& v,
                   double p);
// Same without the final root (the quantity slicing averages).
double w1d_uniform_pow(const std::vector<double>& u,
                       const std::vector<double>& v, double p);

// General weighted case via the merged quantile walk:
// (integral_0^1 |F_mu^{-1}(t) - F_nu^{-1}(t)|^p dt)^(1/p) with the
// right-continuous generalized inverse F^{-1}(t) = inf{x : F(x) >= t}.
double w1d_weighted(const WeightedSamples1D& mu, const WeightedSamples1D& nu,
                    double p);
double w1d_weighted_pow(const WeightedSamples1D& mu,
                        const WeightedSamples1D& nu, double p);

namespace detail {

// Cost on pre-sorted arrays of equal length; no allocation.
double w1d_pow_presorted(const double* u, const double* v, std::size_t n,
                         double p);

// Weighted cost on atoms pre-sorted by value; weights may contain zeros.
double w1d_weighted_pow_presorted(const double* u, const double* wu,
                                  std::size_t nu, const double* v,
                                  const double* wv, std::size_t nv, double p);

double pow_cost(double diff, double p);

}  // namespace detail

}  // namespace s3w
