#include "s3w/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "s3w/errors.hpp"

namespace s3w {

namespace {

void check_eps(double eps) {
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("eps must lie in (0,1)");
}

void check_same_dim(const SpherePoint& a, const SpherePoint& b) {
  if (a.coords.size() != b.coords.size())
    throw std::invalid_argument("sphere points have mismatched dimensions");
}

}  // namespace

SpherePoint SpherePoint::from(Vec v) {
  if (v.size() < 2)
    throw std::invalid_argument("sphere points need ambient dimension >= 2");
  double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n))
    throw std::invalid_argument("cannot normalize a zero or non-finite vector");
  v /= n;
  return SpherePoint{std::move(v)};
}

SpherePoint north_pole(int d) {
  Vec v = Vec::Zero(d + 1);
  v[d] = 1.0;
  return SpherePoint{std::move(v)};
}

SpherePoint south_pole(int d) {
  Vec v = Vec::Zero(d + 1);
  v[d] = -1.0;
  return SpherePoint{std::move(v)};
}

TangentVector TangentVector::from(SpherePoint base, Vec direction) {
  if (base.coords.size() != direction.size())
    throw std::invalid_argument("tangent direction dimension mismatch");
  if (std::abs(base.coords.dot(direction)) > 1e-10)
    throw std::invalid_argument("direction is not tangent to the base point");
  return TangentVector{std::move(base), std::move(direction)};
}

Rotation Rotation::from(Mat m) {
  if (m.rows() != m.cols() || m.rows() < 2)
    throw std::invalid_argument("rotation matrix must be square, size >= 2");
  Mat gram = m.transpose() * m;
  double ortho_err = (gram - Mat::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff();
  if (ortho_err > 1e-10)
    throw std::invalid_argument("matrix is not orthogonal within 1e-10");
  if (std::abs(m.determinant() - 1.0) > 1e-10)
    throw std::invalid_argument("matrix determinant is not +1 within 1e-10");
  return Rotation{std::move(m)};
}

RotationPool::RotationPool(std::vector<Rotation> rotations)
    : rotations_(std::move(rotations)) {
  if (rotations_.empty())
    throw std::invalid_argument("rotation pool must be non-empty");
}

std::vector<std::size_t> RotationPool::subsample(std::size_t n, Rng& rng) const {
  if (n > rotations_.size())
    throw std::invalid_argument("subsample size exceeds rotation pool size");
  // Partial Fisher-Yates over an index vector; only the first n slots are
  // consumed, so the cost is O(pool + n).
  std::vector<std::size_t> idx(rotations_.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.bounded(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

double geodesic_distance(const SpherePoint& a, const SpherePoint& b) {
  check_same_dim(a, b);
  double c = a.coords.dot(b.coords);
  c = std::clamp(c, -1.0, 1.0);
  return std::acos(c);
}

Vec stereo_project(const SpherePoint& s) {
  int d = s.sphere_dim();
  double last = s.coords[d];
  if (last >= 1.0)
    throw std::domain_error("stereographic projection undefined at the north pole");
  return s.coords.head(d) / (1.0 - last);
}

SpherePoint stereo_inverse(const Vec& x) {
  int d = static_cast<int>(x.size());
  double n2 = x.squaredNorm();
  double last = (n2 - 1.0) / (n2 + 1.0);
  Vec s(d + 1);
  s.head(d) = (1.0 - last) * x;
  s[d] = last;
  // The formula lands on the sphere analytically; renormalize to keep the
  // construction invariant tight after rounding.
  s /= s.norm();
  return SpherePoint{std::move(s)};
}

SpherePoint epsilon_cap(const SpherePoint& s, double eps) {
  check_eps(eps);
  int d = s.sphere_dim();
  double cap = 1.0 - eps;
  if (s.coords[d] <= cap) return s;
  double radial = std::sqrt(std::max(0.0, 1.0 - cap * cap));
  Vec out = Vec::Zero(d + 1);
  double head_norm = s.coords.head(d).norm();
  if (head_norm > 0.0) {
    out.head(d) = s.coords.head(d) * (radial / head_norm);
  } else {
    out[0] = radial;  // deterministic tie-break at the exact pole
  }
  out[d] = cap;
  return SpherePoint{std::move(out)};
}

Vec h1(const Vec& x) {
  double m = x.norm();
  if (m == 0.0) return Vec::Zero(x.size());
  double m2 = m * m;
  double cosine = std::clamp(-(m2 - 1.0) / (m2 + 1.0), -1.0, 1.0);
  return (std::acos(cosine) / m) * x;
}

namespace {

// Folded cap -> projection -> radial-rescale map on one raw row. Shared by
// the single-point and batch entry points so both round identically.
void embed_row(const double* p, int d, double cap, double cap_radial,
               double* out) {
  double last = p[d];
  double head2 = 0.0;
  for (int j = 0; j < d; ++j) head2 += p[j] * p[j];
  double head = std::sqrt(head2);
  double scale_head = 1.0;  // factor applied to the first d coordinates
  if (last > cap) {
    // Cap first: move onto the circle at height 1-eps along the original
    // direction, then project. Both steps fold into one scale factor.
    scale_head = head > 0.0 ? cap_radial / head : 0.0;
    last = cap;
    head = head > 0.0 ? cap_radial : 0.0;
    if (scale_head == 0.0) {
      // Exact pole: capped to cap_radial * e1.
      for (int j = 0; j < d; ++j) out[j] = 0.0;
      double ym = cap_radial / (1.0 - cap);
      double c = std::clamp(-(ym * ym - 1.0) / (ym * ym + 1.0), -1.0, 1.0);
      out[0] = std::acos(c);
      return;
    }
  }
  double denom = 1.0 - last;
  double ym = head / denom;  // norm of the stereographic image
  if (ym == 0.0) {
    for (int j = 0; j < d; ++j) out[j] = 0.0;
    return;
  }
  double c = std::clamp(-(ym * ym - 1.0) / (ym * ym + 1.0), -1.0, 1.0);
  double radius = std::acos(c);
  double factor = scale_head * radius / (ym * denom);
  for (int j = 0; j < d; ++j) out[j] = p[j] * factor;
}

}  // namespace

Vec embed(const SpherePoint& s, double eps) {
  check_eps(eps);
  const int d = s.sphere_dim();
  const double cap = 1.0 - eps;
  const double cap_radial = std::sqrt(std::max(0.0, 1.0 - cap * cap));
  Vec out(d);
  embed_row(s.coords.data(), d, cap, cap_radial, out.data());
  return out;
}

Mat embed_rows(const Mat& points, double eps) {
  check_eps(eps);
  const int d = static_cast<int>(points.cols()) - 1;
  if (d < 1) throw std::invalid_argument("points need at least 2 columns");
  const double cap = 1.0 - eps;
  const double cap_radial = std::sqrt(std::max(0.0, 1.0 - cap * cap));
  Mat out(points.rows(), d);
  Vec row(d + 1);
  Vec image(d);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    row = points.row(i).transpose();
    embed_row(row.data(), d, cap, cap_radial, image.data());
    out.row(i) = image.transpose();
  }
  return out;
}

std::vector<SpherePoint> sample_uniform(int d, std::size_t n, Rng& rng) {
  Mat rows = sample_uniform_rows(d, n, rng);
  std::vector<SpherePoint> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    pts.push_back(SpherePoint{rows.row(static_cast<Eigen::Index>(i)).transpose()});
  return pts;
}

Mat sample_uniform_rows(int d, std::size_t n, Rng& rng) {
  if (d < 1) throw std::invalid_argument("sphere dimension must be >= 1");
  if (n == 0) throw std::invalid_argument("sample count must be >= 1");
  Mat rows(n, d + 1);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    double n2;
    do {
      for (int j = 0; j <= d; ++j) rows(i, j) = rng.normal();
      n2 = rows.row(i).squaredNorm();
    } while (!(n2 > 0.0));
    rows.row(i) /= std::sqrt(n2);
  }
  return rows;
}

Rotation sample_rotation(int d, Rng& rng) {
  if (d < 1) throw std::invalid_argument("sphere dimension must be >= 1");
  const int n = d + 1;
  Mat g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  if (q.determinant() < 0.0) q.col(n - 1) = -q.col(n - 1);
  return Rotation{std::move(q)};
}

RotationPool build_pool(int d, std::size_t n_total, Rng& rng) {
  if (n_total == 0) throw std::invalid_argument("pool size must be >= 1");
  std::vector<Rotation> rots;
  rots.reserve(n_total);
  for (std::size_t i = 0; i < n_total; ++i) rots.push_back(sample_rotation(d, rng));
  return RotationPool(std::move(rots));
}

SpherePoint exp_map(const TangentVector& t) {
  double n = t.direction.norm();
  if (n == 0.0) return t.base;
  Vec out = t.base.coords * std::cos(n) + (t.direction / n) * std::sin(n);
  out /= out.norm();
  return SpherePoint{std::move(out)};
}

TangentVector project_tangent(const SpherePoint& s, const Vec& g) {
  if (g.size() != s.coords.size())
    throw std::invalid_argument("gradient dimension mismatch");
  Vec dir = g - s.coords.dot(g) * s.coords;
  return TangentVector{s, std::move(dir)};
}

SpherePoint retract_normalize(const SpherePoint& s, const Vec& step) {
  if (step.size() != s.coords.size())
    throw std::invalid_argument("step dimension mismatch");
  Vec out = s.coords + step;
  double n = out.norm();
  if (!(n > 0.0))
    throw DegenerateStepError("retraction step collapsed to the origin");
  out /= n;
  return SpherePoint{std::move(out)};
}

}  // namespace s3w
