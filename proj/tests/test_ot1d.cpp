#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "s3w/ot1d.hpp"
#include "s3w/rng.hpp"

using namespace s3w;

namespace {

double brute_force_pow(const std::vector<double>& u, const std::vector<double>& v,
                       double p) {
  std::vector<std::size_t> perm(v.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
      acc += detail::pow_cost(u[i] - v[perm[i]], p);
    best = std::min(best, acc / double(u.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("sorted matching attains the assignment optimum") {
  Rng r(31);
  for (int inst = 0; inst < 40; ++inst) {
    std::size_t n = 1 + r.bounded(6);
    std::vector<double> u(n), v(n);
    for (auto& x : u) x = 6.0 * r.u01() - 3.0;
    for (auto& x : v) x = 6.0 * r.u01() - 3.0;
    if (inst % 5 == 0)  // provoke ties
      for (auto& x : u) x = std::round(x);
    for (double p : {1.0, 2.0}) {
      CHECK(std::abs(w1d_uniform_pow(u, v, p) - brute_force_pow(u, v, p)) <=
            1e-12);
    }
  }
}

TEST_CASE("hand-checked weighted quantile walk") {
  // mu = 0.3 delta_0 + 0.7 delta_1, nu = 0.5 delta_0 + 0.5 delta_2
  auto mu = WeightedSamples1D::from({0.0, 1.0}, {0.3, 0.7});
  auto nu = WeightedSamples1D::from({0.0, 2.0}, {0.5, 0.5});
  // quantiles differ by 1 on (0.3, 1) and agree elsewhere
  CHECK(w1d_weighted(mu, nu, 1.0) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(w1d_weighted_pow(mu, nu, 2.0) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(w1d_weighted(mu, nu, 2.0) ==
        doctest::Approx(std::sqrt(0.7)).epsilon(1e-14));
}

TEST_CASE("weighted path reduces to the uniform path") {
  Rng r(33);
  for (int inst = 0; inst < 30; ++inst) {
    std::size_t n = 2 + r.bounded(30);
    std::vector<double> u(n), v(n), w(n, 1.0 / double(n));
    for (auto& x : u) x = r.normal();
    for (auto& x : v) x = r.normal();
    auto mu = WeightedSamples1D::from(u, w);
    auto nu = WeightedSamples1D::from(v, w);
    for (double p : {1.0, 2.0, 3.0})
      CHECK(std::abs(w1d_weighted_pow(mu, nu, p) - w1d_uniform_pow(u, v, p)) <=
            1e-12);
  }
}

TEST_CASE("duplicated atoms merge like repeated samples") {
  // two copies of an atom with half the weight each
  auto a = WeightedSamples1D::from({1.0, 1.0, 4.0}, {0.25, 0.25, 0.5});
  auto b = WeightedSamples1D::from({1.0, 4.0}, {0.5, 0.5});
  auto target = WeightedSamples1D::from({0.0, 2.0}, {0.5, 0.5});
  CHECK(w1d_weighted_pow(a, target, 2.0) ==
        doctest::Approx(w1d_weighted_pow(b, target, 2.0)).epsilon(1e-14));
  // zero-weight atoms are invisible
  auto c = WeightedSamples1D::from({-9.0, 1.0, 4.0}, {0.0, 0.5, 0.5});
  CHECK(w1d_weighted_pow(c, target, 2.0) ==
        doctest::Approx(w1d_weighted_pow(b, target, 2.0)).epsilon(1e-14));
}

TEST_CASE("translation and scale behavior") {
  Rng r(35);
  std::vector<double> u(20), v(20);
  for (auto& x : u) x = r.normal();
  for (auto& x : v) x = r.normal();
  double base = w1d_uniform(u, v, 2.0);
  std::vector<double> us = u, vs = v;
  for (auto& x : us) x += 2.5;
  for (auto& x : vs) x += 2.5;
  CHECK(w1d_uniform(us, vs, 2.0) == doctest::Approx(base).epsilon(1e-12));
  for (auto& x : us) x = 3.0 * (x - 2.5);
  for (auto& x : vs) x = 3.0 * (x - 2.5);
  CHECK(w1d_uniform(us, vs, 2.0) == doctest::Approx(3.0 * base).epsilon(1e-12));
  // shifting one side by c costs exactly |c| against itself
  CHECK(w1d_uniform(u, u, 2.0) == 0.0);
  std::vector<double> shifted = u;
  for (auto& x : shifted) x += 0.75;
  CHECK(w1d_uniform(u, shifted, 1.0) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("input order does not matter") {
  std::vector<double> u{3.0, -1.0, 2.0}, v{0.5, 2.5, -2.0};
  double a = w1d_uniform_pow(u, v, 2.0);
  std::reverse(u.begin(), u.end());
  std::swap(v[0], v[2]);
  CHECK(w1d_uniform_pow(u, v, 2.0) == a);
}

TEST_CASE("invalid inputs are rejected") {
  std::vector<double> u{1.0, 2.0}, v{1.0};
  CHECK_THROWS_AS(w1d_uniform(u, v, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(w1d_uniform(u, u, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(WeightedSamples1D::from({1.0}, {-1.0}), std::invalid_argument);
  CHECK_THROWS_AS(WeightedSamples1D::from({1.0, 2.0}, {0.5, 0.6}),
                  std::invalid_argument);
  CHECK_THROWS_AS(WeightedSamples1D::from({}, {}), std::invalid_argument);
}
