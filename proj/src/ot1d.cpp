#include "s3w/ot1d.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace s3w {

namespace {

void check_order(double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("order p must be >= 1");
}

}  // namespace

WeightedSamples1D WeightedSamples1D::from(std::vector<double> values,
                                          std::vector<double> weights) {
  if (values.empty())
    throw std::invalid_argument("weighted samples must be non-empty");
  if (values.size() != weights.size())
    throw std::invalid_argument("value/weight count mismatch");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0))
      throw std::invalid_argument("weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("weights must sum to 1 within 1e-12");
  return WeightedSamples1D{std::move(values), std::move(weights)};
}

namespace detail {

double pow_cost(double diff, double p) {
  double a = std::abs(diff);
  if (p == 2.0) return a * a;
  if (p == 1.0) return a;
  return std::pow(a, p);
}

double w1d_pow_presorted(const double* u, const double* v, std::size_t n,
                         double p) {
  double acc = 0.0;
  if (p == 2.0) {
    for (std::size_t i = 0; i < n; ++i) {
      double d = u[i] - v[i];
      acc += d * d;
    }
  } else if (p == 1.0) {
    for (std::size_t i = 0; i < n; ++i) acc += std::abs(u[i] - v[i]);
  } else {
    for (std::size_t i = 0; i < n; ++i) acc += std::pow(std::abs(u[i] - v[i]), p);
  }
  return acc / double(n);
}

double w1d_weighted_pow_presorted(const double* u, const double* wu,
                                  std::size_t nu, const double* v,
                                  const double* wv, std::size_t nv, double p) {
  // Walk the merged CDF breakpoints; between consecutive levels both
  // quantile functions are constant, so each segment contributes
  // |u_i - v_j|^p * (level step).
  std::size_t i = 0, j = 0;
  while (i < nu && wu[i] == 0.0) ++i;
  while (j < nv && wv[j] == 0.0) ++j;
  double cu = i < nu ? wu[i] : 1.0;  // CDF after atom i
  double cv = j < nv ? wv[j] : 1.0;
  double prev = 0.0;
  double acc = 0.0;
  while (i < nu && j < nv) {
    double level = std::min(cu, cv);
    double step = level - prev;
    if (step > 0.0) acc += pow_cost(u[i] - v[j], p) * step;
    prev = level;
    if (cu <= level) {
      do {
        ++i;
      } while (i < nu && wu[i] == 0.0);
      if (i < nu) cu += wu[i];
    }
    if (cv <= level) {
      do {
        ++j;
      } while (j < nv && wv[j] == 0.0);
      if (j < nv) cv += wv[j];
    }
  }
  return acc;
}

}  // namespace detail

double w1d_uniform_pow(const std::vector<double>& u,
                       const std::vector<double>& v, double p) {
  check_order(p);
  if (u.empty()) throw std::invalid_argument("samples must be non-empty");
  if (u.size() != v.size())
    throw std::invalid_argument("sample size mismatch");
  std::vector<double> su = u;
  std::vector<double> sv = v;
  std::sort(su.begin(), su.end());
  std::sort(sv.begin(), sv.end());
  return detail::w1d_pow_presorted(su.data(), sv.data(), su.size(), p);
}

double w1d_uniform(const std::vector<double>& u, const std::vector<double>& v,
                   double p) {
  return std::pow(w1d_uniform_pow(u, v, p), 1.0 / p);
}

double w1d_weighted_pow(const WeightedSamples1D& mu,
                        const WeightedSamples1D& nu, double p) {
  check_order(p);
  std::size_t n = mu.values.size();
  std::size_t m = nu.values.size();
  std::vector<std::size_t> ou(n), ov(m);
  std::iota(ou.begin(), ou.end(), std::size_t{0});
  std::iota(ov.begin(), ov.end(), std::size_t{0});
  // Ties resolved by original index: a deterministic total order (the cost
  // itself is tie-insensitive).
  std::sort(ou.begin(), ou.end(), [&](std::size_t a, std::size_t b) {
    if (mu.values[a] != mu.values[b]) return mu.values[a] < mu.values[b];
    return a < b;
  });
  std::sort(ov.begin(), ov.end(), [&](std::size_t a, std::size_t b) {
    if (nu.values[a] != nu.values[b]) return nu.values[a] < nu.values[b];
    return a < b;
  });
  std::vector<double> u(n), wu(n), v(m), wv(m);
  for (std::size_t k = 0; k < n; ++k) {
    u[k] = mu.values[ou[k]];
    wu[k] = mu.weights[ou[k]];
  }
  for (std::size_t k = 0; k < m; ++k) {
    v[k] = nu.values[ov[k]];
    wv[k] = nu.weights[ov[k]];
  }
  return detail::w1d_weighted_pow_presorted(u.data(), wu.data(), n, v.data(),
                                            wv.data(), m, p);
}

double w1d_weighted(const WeightedSamples1D& mu, const WeightedSamples1D& nu,
                    double p) {
  return std::pow(w1d_weighted_pow(mu, nu, p), 1.0 / p);
}

}  // namespace s3w
