#include <cmath>
#include <set>

#include "doctest.h"
#include "s3w/errors.hpp"
#include "s3w/sphere.hpp"

using namespace s3w;

namespace {
constexpr double kPi = 3.14159265358979323846;

SpherePoint pt(double x, double y, double z) {
  Vec v(3);
  v << x, y, z;
  return SpherePoint::from(v);
}
}  // namespace

TEST_CASE("rng streams are deterministic and position-independent") {
  Rng a(42), b(42);
  CHECK(a.next_u64() == b.next_u64());
  // split depends only on (seed, label), not on how much the parent drew
  Rng c(42);
  for (int i = 0; i < 7; ++i) c.next_u64();
  Rng c1 = c.split(5);
  Rng c2 = Rng(42).split(5);
  CHECK(c1.next_u64() == c2.next_u64());
  // distinct labels decorrelate
  CHECK(Rng(42).split(1).next_u64() != Rng(42).split(2).next_u64());
}

TEST_CASE("rng bounded and u01 stay in range") {
  Rng r(7);
  for (int i = 0; i < 1000; ++i) {
    CHECK(r.bounded(13) < 13);
    double u = r.u01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("stereographic projection round trips") {
  Rng r(3);
  for (const SpherePoint& s : sample_uniform(2, 200, r)) {
    if (s.coords[2] > 0.99) continue;
    SpherePoint back = stereo_inverse(stereo_project(s));
    CHECK((back.coords - s.coords).norm() < 1e-12);
  }
  CHECK_THROWS_AS(stereo_project(north_pole(2)), std::domain_error);
}

TEST_CASE("epsilon cap clamps only the polar cap") {
  double eps = 1e-3;
  SpherePoint low = pt(0.0, 1.0, 0.0);
  CHECK((epsilon_cap(low, eps).coords - low.coords).norm() == 0.0);

  SpherePoint high = pt(1e-4, 0.0, std::sqrt(1.0 - 1e-8));
  SpherePoint capped = epsilon_cap(high, eps);
  CHECK(capped.coords[2] == doctest::Approx(1.0 - eps).epsilon(1e-12));
  CHECK(capped.coords.norm() == doctest::Approx(1.0).epsilon(1e-12));
  // heading of the first two coordinates is preserved
  CHECK(capped.coords[0] > 0.0);
  CHECK(capped.coords[1] == 0.0);

  // exact pole falls back to the e1 heading
  SpherePoint np = north_pole(2);
  SpherePoint capped_np = epsilon_cap(np, eps);
  CHECK(capped_np.coords[0] > 0.0);
  CHECK(capped_np.coords[2] == doctest::Approx(1.0 - eps).epsilon(1e-12));
}

TEST_CASE("h1 fixes the origin and maps the unit circle to radius pi/2") {
  Vec zero = Vec::Zero(2);
  CHECK(h1(zero).norm() == 0.0);
  Vec e1 = Vec::Zero(2);
  e1[0] = 1.0;
  Vec out = h1(e1);
  CHECK(out[0] == doctest::Approx(kPi / 2).epsilon(1e-14));
  CHECK(out[1] == 0.0);
}

TEST_CASE("embed is the azimuthal equidistant map from the south pole") {
  double eps = 1e-6;
  CHECK(embed(south_pole(2), eps).norm() == 0.0);

  // radius equals the angle to the south pole along any meridian
  for (double alpha = -kPi / 2; alpha < kPi / 2 - 0.01; alpha += 0.01) {
    SpherePoint s = pt(std::cos(alpha), 0.0, std::sin(alpha));
    Vec v = embed(s, eps);
    CHECK(std::abs(v[0] - (alpha + kPi / 2)) < 1e-9);
    CHECK(std::abs(v[1]) < 1e-9);
  }

  Rng r(11);
  for (const SpherePoint& s : sample_uniform(2, 500, r)) {
    CHECK(embed(s, eps).norm() <= kPi + 1e-12);
  }
}

TEST_CASE("embedded distance dominates small geodesic distances") {
  Rng r(19);
  double eps = 1e-6;
  Mat pts = sample_uniform_rows(2, 400, r);
  Mat emb = embed_rows(pts, eps);
  for (int i = 0; i + 1 < pts.rows(); i += 2) {
    SpherePoint a = SpherePoint::from(pts.row(i).transpose());
    SpherePoint b = SpherePoint::from(pts.row(i + 1).transpose());
    double ge = geodesic_distance(a, b);
    double de = (emb.row(i) - emb.row(i + 1)).norm();
    CHECK(de <= 2 * kPi + 1e-9);
    if (ge < 0.5) CHECK(ge <= de + 1e-9);
  }
}

TEST_CASE("embed_rows matches the per-point map") {
  Rng r(23);
  Mat pts = sample_uniform_rows(3, 50, r);
  Mat emb = embed_rows(pts, 1e-6);
  for (int i = 0; i < pts.rows(); ++i) {
    // rows are already unit; skip the normalizing constructor
    Vec one = embed(SpherePoint{pts.row(i).transpose()}, 1e-6);
    CHECK((emb.row(i).transpose() - one).norm() == 0.0);
  }
}

TEST_CASE("sampled rotations are orthogonal with unit determinant") {
  Rng r(5);
  for (int i = 0; i < 50; ++i) {
    Rotation rot = sample_rotation(3, r);
    Mat err = rot.matrix.transpose() * rot.matrix - Mat::Identity(4, 4);
    CHECK(err.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(rot.matrix.determinant() - 1.0) < 1e-10);
  }
  CHECK_THROWS_AS(Rotation::from(2.0 * Mat::Identity(3, 3)),
                  std::invalid_argument);
}

TEST_CASE("rotation pool subsamples without replacement") {
  Rng r(9);
  RotationPool pool = build_pool(2, 20, r);
  CHECK(pool.size() == 20);
  Rng rs(1);
  auto idx = pool.subsample(8, rs);
  CHECK(idx.size() == 8);
  std::set<std::size_t> uniq(idx.begin(), idx.end());
  CHECK(uniq.size() == 8);
  for (std::size_t i : idx) CHECK(i < 20);
  Rng rs2(1);
  CHECK(pool.subsample(8, rs2) == idx);
  CHECK_THROWS_AS(pool.subsample(21, rs), std::invalid_argument);
}

TEST_CASE("uniform sphere samples are unit and reproducible") {
  Rng a(77), b(77);
  Mat x = sample_uniform_rows(4, 100, a);
  Mat y = sample_uniform_rows(4, 100, b);
  CHECK((x - y).norm() == 0.0);
  for (int i = 0; i < x.rows(); ++i)
    CHECK(x.row(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
  // loose isotropy check
  CHECK(x.colwise().mean().norm() < 0.2);
}

TEST_CASE("retractions stay on the sphere") {
  SpherePoint s = pt(1.0, 0.0, 0.0);
  Vec g(3);
  g << 0.3, -0.2, 0.5;

  TangentVector t = project_tangent(s, g);
  CHECK(std::abs(t.direction.dot(s.coords)) < 1e-12);

  SpherePoint e = exp_map(t);
  CHECK(e.coords.norm() == doctest::Approx(1.0).epsilon(1e-12));
  // zero tangent is a fixed point
  TangentVector zero = TangentVector::from(s, Vec::Zero(3));
  CHECK((exp_map(zero).coords - s.coords).norm() == 0.0);
  // exp follows the geodesic: arc length equals the tangent norm
  double ang = geodesic_distance(s, e);
  CHECK(ang == doctest::Approx(t.direction.norm()).epsilon(1e-10));

  SpherePoint rn = retract_normalize(s, g);
  CHECK(rn.coords.norm() == doctest::Approx(1.0).epsilon(1e-12));
  Vec minus_s = -s.coords;
  CHECK_THROWS_AS(retract_normalize(s, minus_s), DegenerateStepError);
}
