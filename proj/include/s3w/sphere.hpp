#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "s3w/rng.hpp"

namespace s3w {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Point of the unit sphere S^d, stored as a unit vector in R^{d+1}.
struct SpherePoint {
  Vec coords;

  // Normalizes the input; throws std::invalid_argument on a zero vector or
  // ambient dimension < 2.
  static SpherePoint from(Vec v);

  int ambient_dim() const { return static_cast<int>(coords.size()); }
  int sphere_dim() const { return ambient_dim() - 1; }
};

SpherePoint north_pole(int d);
SpherePoint south_pole(int d);

// Tangent vector at a base point; direction orthogonal to base within 1e-10.
struct TangentVector {
  SpherePoint base;
  Vec direction;

  static TangentVector from(SpherePoint base, Vec direction);
};

// Element of SO(d+1).
struct Rotation {
  Mat matrix;

  // Validates orthogonality and det = +1 within 1e-10.
  static Rotation from(Mat m);
};

// Immutable bank of rotations with deterministic without-replacement
// subsampling.
class RotationPool {
 public:
  explicit RotationPool(std::vector<Rotation> rotations);

  std::size_t size() const { return rotations_.size(); }
  const Rotation& at(std::size_t i) const { return rotations_[i]; }

  // n distinct indices, uniform over subsets; throws std::invalid_argument
  // if n exceeds the pool size.
  std::vector<std::size_t> subsample(std::size_t n, Rng& rng) const;

 private:
  std::vector<Rotation> rotations_;
};

// arccos of the clamped inner product; range [0, pi].
double geodesic_distance(const SpherePoint& a, const SpherePoint& b);

// Equator-plane stereographic projection s[0:d] / (1 - s_d); throws
// std::domain_error at or above the north pole. Callers cap first.
Vec stereo_project(const SpherePoint& s);

// Inverse of stereo_project; the last coordinate is (|x|^2-1)/(|x|^2+1).
SpherePoint stereo_inverse(const Vec& x);

// Clamps points with last coordinate above 1-eps onto the circle at height
// 1-eps, preserving the direction of the first d coordinates (e1 when that
// direction is undefined at the exact pole). eps must lie in (0,1).
SpherePoint epsilon_cap(const SpherePoint& s, double eps);

// Distortion correction arccos(-(|x|^2-1)/(|x|^2+1)) * x/|x|, extended by
// h1(0) = 0. Output norm is at most pi.
Vec h1(const Vec& x);

// h1(stereo_project(epsilon_cap(s, eps))): the azimuthal equidistant map
// centered at the south pole (radius = angle to the south pole).
Vec embed(const SpherePoint& s, double eps);

// Row-wise embed for an n x (d+1) matrix of points. Rows need not be unit
// norm; the full composite map is evaluated so that finite differencing the
// rows is consistent with the analytic Jacobian.
Mat embed_rows(const Mat& points, double eps);

// i.i.d. uniform points via normalized Gaussians.
std::vector<SpherePoint> sample_uniform(int d, std::size_t n, Rng& rng);
Mat sample_uniform_rows(int d, std::size_t n, Rng& rng);

// Haar-distributed rotation: QR of a Gaussian matrix with the R diagonal
// made positive, then one column flipped if the determinant is -1.
Rotation sample_rotation(int d, Rng& rng);
RotationPool build_pool(int d, std::size_t n_total, Rng& rng);

// Geodesic retraction exp_x(v) = x cos|v| + (v/|v|) sin|v|.
SpherePoint exp_map(const TangentVector& t);

// Removes the radial component of g at s.
TangentVector project_tangent(const SpherePoint& s, const Vec& g);

// (s + step) / |s + step|; throws DegenerateStepError on a zero norm.
SpherePoint retract_normalize(const SpherePoint& s, const Vec& step);

}  // namespace s3w
