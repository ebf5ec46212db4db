#include <cmath>

#include "doctest.h"
#include "s3w/errors.hpp"
#include "s3w/vmf.hpp"

using namespace s3w;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("vmf samples are unit vectors and reproducible") {
  VonMisesFisher d = VonMisesFisher::from(north_pole(2), 4.0);
  Rng a(1), b(1);
  Mat x = sample_vmf_rows(d, 500, a);
  Mat y = sample_vmf_rows(d, 500, b);
  CHECK((x - y).norm() == 0.0);
  for (int i = 0; i < x.rows(); ++i)
    CHECK(x.row(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("vmf mean resultant length tracks the concentration") {
  // E|mean| = coth(kappa) - 1/kappa on S^2
  VonMisesFisher d = VonMisesFisher::from(north_pole(2), 10.0);
  Rng r(2);
  Mat x = sample_vmf_rows(d, 20000, r);
  double resultant = x.colwise().mean().norm();
  double expected = 1.0 / std::tanh(10.0) - 0.1;
  CHECK(resultant == doctest::Approx(expected).epsilon(0.01));
  // concentration pulls the mean toward mu
  Vec mean = x.colwise().mean().transpose();
  CHECK(mean[2] / mean.norm() > 0.999);
}

TEST_CASE("kappa zero reduces to the uniform law") {
  VonMisesFisher d = VonMisesFisher::from(north_pole(2), 0.0);
  Rng r(3);
  Mat x = sample_vmf_rows(d, 20000, r);
  CHECK(x.colwise().mean().norm() < 0.02);
}

TEST_CASE("vmf density normalizes on the sphere") {
  // E_uniform[f] * 4 pi = 1
  VonMisesFisher d = VonMisesFisher::from(south_pole(2), 3.0);
  Rng r(4);
  double acc = 0.0;
  const int n = 40000;
  for (const SpherePoint& s : sample_uniform(2, n, r))
    acc += std::exp(vmf_log_density(d, s));
  CHECK(acc / n * 4.0 * kPi == doctest::Approx(1.0).epsilon(0.02));
  // kappa = 0 is the constant density 1/(4 pi)
  VonMisesFisher u = VonMisesFisher::from(south_pole(2), 0.0);
  CHECK(vmf_log_density(u, north_pole(2)) ==
        doctest::Approx(-std::log(4.0 * kPi)).epsilon(1e-14));
}

TEST_CASE("density helpers agree") {
  VonMisesFisher d = VonMisesFisher::from(north_pole(2), 7.5);
  Rng r(5);
  for (const SpherePoint& s : sample_uniform(2, 50, r)) {
    double dot = d.mu.coords.dot(s.coords);
    CHECK(vmf_log_density(d, s) ==
          doctest::Approx(vmf_log_density_dot(7.5, dot)).epsilon(1e-14));
  }
  VonMisesFisher bad = VonMisesFisher::from(north_pole(3), 1.0);
  CHECK_THROWS_AS(vmf_log_density(bad, north_pole(3)), UnsupportedError);
}

TEST_CASE("mixture density averages its components") {
  VonMisesFisher a = VonMisesFisher::from(north_pole(2), 5.0);
  VonMisesFisher b = VonMisesFisher::from(south_pole(2), 5.0);
  VmfMixture single = VmfMixture::uniform_weights({a});
  VmfMixture mix = VmfMixture::uniform_weights({a, b});
  Rng r(6);
  for (const SpherePoint& s : sample_uniform(2, 20, r)) {
    CHECK(mixture_log_density(single, s) ==
          doctest::Approx(vmf_log_density(a, s)).epsilon(1e-13));
    double expect = std::log(0.5 * std::exp(vmf_log_density(a, s)) +
                             0.5 * std::exp(vmf_log_density(b, s)));
    CHECK(mixture_log_density(mix, s) == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK_THROWS_AS(VmfMixture::from({a, b}, {0.7, 0.4}), std::invalid_argument);
}

TEST_CASE("icosahedron mixture has 12 symmetric modes") {
  VmfMixture mix = icosahedron_mixture(50.0);
  REQUIRE(mix.components.size() == 12);
  for (double w : mix.weights) CHECK(w == doctest::Approx(1.0 / 12).epsilon(1e-15));
  // every vertex has 5 nearest neighbors at the edge angle ~1.1071
  double edge = std::atan(2.0);
  for (const auto& c : mix.components) {
    CHECK(c.mu.coords.norm() == doctest::Approx(1.0).epsilon(1e-12));
    int at_edge = 0;
    for (const auto& o : mix.components) {
      double g = geodesic_distance(c.mu, o.mu);
      if (std::abs(g - edge) < 1e-9) ++at_edge;
    }
    CHECK(at_edge == 5);
  }
  // density peaks at a vertex
  const SpherePoint& v0 = mix.components[0].mu;
  Vec mid = 0.5 * (mix.components[0].mu.coords + mix.components[1].mu.coords);
  CHECK(mixture_log_density(mix, v0) >
        mixture_log_density(mix, SpherePoint::from(mid)));
}

TEST_CASE("mixture sampling is reproducible and respects weights") {
  VonMisesFisher a = VonMisesFisher::from(north_pole(2), 50.0);
  VonMisesFisher b = VonMisesFisher::from(south_pole(2), 50.0);
  VmfMixture mix = VmfMixture::from({a, b}, {0.9, 0.1});
  Rng r1(7), r2(7);
  Mat x = sample_mixture_rows(mix, 2000, r1);
  Mat y = sample_mixture_rows(mix, 2000, r2);
  CHECK((x - y).norm() == 0.0);
  int north = 0;
  for (int i = 0; i < x.rows(); ++i)
    if (x(i, 2) > 0) ++north;
  CHECK(north > 1600);
  CHECK(north < 2000);
}
