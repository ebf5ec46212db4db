#include "s3w/s3w.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "s3w/errors.hpp"
#include "s3w/parallel.hpp"

namespace s3w {

namespace {

void check_pair(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.ambient_dim() != nu.ambient_dim())
    throw std::invalid_argument("measures live on different spheres");
}

bool weights_equal(const Vec& w) {
  for (Eigen::Index i = 1; i < w.size(); ++i)
    if (w[i] != w[0]) return false;
  return true;
}

// Uniform-path dispatch: both measures unweighted and of equal size.
bool sort_path(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  return mu.uniform && nu.uniform && mu.size() == nu.size();
}

}  // namespace

EmpiricalMeasure EmpiricalMeasure::from_points(Mat points) {
  if (points.rows() < 1 || points.cols() < 2)
    throw std::invalid_argument("measure needs >= 1 points in ambient dim >= 2");
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double n = points.row(i).norm();
    if (!(n > 0.0) || !std::isfinite(n))
      throw std::invalid_argument("measure support contains a degenerate point");
    points.row(i) /= n;
  }
  std::size_t n = static_cast<std::size_t>(points.rows());
  Vec w = Vec::Constant(n, 1.0 / double(n));
  return EmpiricalMeasure{std::move(points), std::move(w), true};
}

EmpiricalMeasure EmpiricalMeasure::from_weighted(Mat points, Vec weights) {
  EmpiricalMeasure base = from_points(std::move(points));
  if (weights.size() != base.points.rows())
    throw std::invalid_argument("weight count does not match point count");
  double total = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0))
      throw std::invalid_argument("weights must be non-negative");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("weights must sum to 1 within 1e-12");
  base.uniform = weights_equal(weights);
  base.weights = std::move(weights);
  return base;
}

EmpiricalMeasure EmpiricalMeasure::from_cloud(
    const std::vector<SpherePoint>& points) {
  if (points.empty())
    throw std::invalid_argument("measure needs at least one point");
  Mat rows(points.size(), points.front().coords.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].coords.size() != rows.cols())
      throw std::invalid_argument("mixed point dimensions in cloud");
    rows.row(static_cast<Eigen::Index>(i)) = points[i].coords.transpose();
  }
  return from_points(std::move(rows));
}

ProjectionSet ProjectionSet::sample(int d_prime, std::size_t L, Rng& rng) {
  if (d_prime < 1) throw std::invalid_argument("direction dimension must be >= 1");
  if (L < 1) throw std::invalid_argument("need at least one direction");
  Mat dirs(L, d_prime);
  for (Eigen::Index i = 0; i < dirs.rows(); ++i) {
    double n2;
    do {
      for (int j = 0; j < d_prime; ++j) dirs(i, j) = rng.normal();
      n2 = dirs.row(i).squaredNorm();
    } while (!(n2 > 0.0));
    dirs.row(i) /= std::sqrt(n2);
    // A direction and its negation induce the same 1-D transport, so planar
    // draws are canonicalized to the upper half-circle.  That pins a unique
    // representative per axis and halves the angular span the incremental
    // slice sweep has to cover.
    if (d_prime == 2 &&
        (dirs(i, 1) < 0.0 || (dirs(i, 1) == 0.0 && dirs(i, 0) < 0.0)))
      dirs.row(i) = -dirs.row(i);
  }
  if (d_prime == 2) {
    // Store planar draws in polar-angle order; the set is exchangeable, and
    // angle order lets the incremental sweep apply gradient terms in storage
    // order instead of staging them.
    std::vector<int> ord(L);
    std::iota(ord.begin(), ord.end(), 0);
    std::stable_sort(ord.begin(), ord.end(), [&](int a, int b) {
      return std::atan2(dirs(a, 1), dirs(a, 0)) <
             std::atan2(dirs(b, 1), dirs(b, 0));
    });
    Mat sorted(dirs.rows(), dirs.cols());
    for (Eigen::Index i = 0; i < sorted.rows(); ++i)
      sorted.row(i) = dirs.row(ord[static_cast<std::size_t>(i)]);
    dirs = std::move(sorted);
  }
  return ProjectionSet{std::move(dirs), rng.seed()};
}

void S3WConfig::validate() const {
  if (!(p >= 1.0)) throw std::invalid_argument("order p must be >= 1");
  if (L < 1) throw std::invalid_argument("projection count must be >= 1");
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("eps must lie in (0,1)");
}

int S3WConfig::resolve_d_prime(int sphere_dim) const {
  if (d_prime == 0 || d_prime == sphere_dim) return sphere_dim;
  throw UnsupportedError(
      "embedding output dimension != sphere dimension is reserved for "
      "pluggable embeddings and not implemented");
}

WeightedSamples1D slice(const EmpiricalMeasure& m, const Vec& theta,
                        double eps) {
  if (theta.size() != m.sphere_dim())
    throw std::invalid_argument("slice direction dimension mismatch");
  Mat emb = embed_rows(m.points, eps);
  std::vector<double> values(m.size());
  std::vector<double> weights(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    values[i] = emb.row(static_cast<Eigen::Index>(i)).dot(theta);
    weights[i] = m.weights[static_cast<Eigen::Index>(i)];
  }
  return WeightedSamples1D{std::move(values), std::move(weights)};
}

namespace detail {

namespace {

struct SliceScratch {
  std::vector<double> a, b, wa, wb;
  std::vector<std::size_t> order;
};

SliceScratch& scratch() {
  static thread_local SliceScratch s;
  return s;
}

double one_slice_pow(const Mat& pa, const Mat& pb, const Vec* wa, const Vec* wb,
                     Eigen::Index l, double p) {
  SliceScratch& s = scratch();
  const std::size_t na = static_cast<std::size_t>(pa.rows());
  const std::size_t nb = static_cast<std::size_t>(pb.rows());
  s.a.assign(pa.col(l).data(), pa.col(l).data() + na);
  s.b.assign(pb.col(l).data(), pb.col(l).data() + nb);
  if (wa == nullptr && wb == nullptr && na == nb) {
    std::sort(s.a.begin(), s.a.end());
    std::sort(s.b.begin(), s.b.end());
    return w1d_pow_presorted(s.a.data(), s.b.data(), na, p);
  }
  auto arrange = [](std::vector<double>& vals, const Vec* w, std::size_t n,
                    std::vector<double>& wout, std::vector<std::size_t>& order) {
    order.resize(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      if (vals[x] != vals[y]) return vals[x] < vals[y];
      return x < y;
    });
    std::vector<double> sorted(n);
    wout.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      sorted[k] = vals[order[k]];
      wout[k] = w ? (*w)[static_cast<Eigen::Index>(order[k])] : 1.0 / double(n);
    }
    vals.swap(sorted);
  };
  arrange(s.a, wa, na, s.wa, s.order);
  arrange(s.b, wb, nb, s.wb, s.order);
  return w1d_weighted_pow_presorted(s.a.data(), s.wa.data(), na, s.b.data(),
                                    s.wb.data(), nb, p);
}

}  // namespace

void project_col_2d(const double* x0, const double* x1, double d0, double d1,
                    Eigen::Index n, double* out) {
  for (Eigen::Index m = 0; m < n; ++m) out[m] = x0[m] * d0 + x1[m] * d1;
}

Mat project_points(const Mat& x, const Mat& dirs) {
  Mat out(x.rows(), dirs.rows());
  if (dirs.cols() == 2) {
    for (Eigen::Index l = 0; l < dirs.rows(); ++l)
      project_col_2d(x.col(0).data(), x.col(1).data(), dirs(l, 0), dirs(l, 1),
                     x.rows(), out.col(l).data());
  } else {
    out.noalias() = x * dirs.transpose();
  }
  return out;
}

std::vector<double> slice_pows(const Mat& xa, const Vec* wa, const Mat& xb,
                               const Vec* wb, const Mat& dirs, double p) {
  // Column l of the products holds slice l contiguously.
  Mat pa = project_points(xa, dirs);
  Mat pb = project_points(xb, dirs);
  const std::size_t L = static_cast<std::size_t>(dirs.rows());
  std::vector<double> terms(L);
  parallel_for(L, [&](std::size_t l) {
    terms[l] = one_slice_pow(pa, pb, wa, wb, static_cast<Eigen::Index>(l), p);
  });
  return terms;
}

double mean_slice_pow(const Mat& xa, const Vec* wa, const Mat& xb,
                      const Vec* wb, const Mat& dirs, double p) {
  std::vector<double> terms = slice_pows(xa, wa, xb, wb, dirs, p);
  return pairwise_sum(terms) / double(terms.size());
}

Mat equator_dirs(int ambient, std::size_t L, Rng& rng) {
  Mat dirs = Mat::Zero(L, ambient);
  for (Eigen::Index i = 0; i < dirs.rows(); ++i) {
    double n2;
    do {
      for (int j = 0; j + 1 < ambient; ++j) dirs(i, j) = rng.normal();
      n2 = dirs.row(i).squaredNorm();
    } while (!(n2 > 0.0));
    dirs.row(i) /= std::sqrt(n2);
  }
  return dirs;
}

}  // namespace detail

namespace {

double embedded_mean_pow(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                         const S3WConfig& cfg, const ProjectionSet& proj) {
  check_pair(mu, nu);
  cfg.validate();
  int dp = cfg.resolve_d_prime(mu.sphere_dim());
  if (proj.dirs.cols() != dp)
    throw std::invalid_argument("projection directions have wrong dimension");
  Mat ea = embed_rows(mu.points, cfg.eps);
  Mat eb = embed_rows(nu.points, cfg.eps);
  bool fast = sort_path(mu, nu);
  return detail::mean_slice_pow(ea, fast ? nullptr : &mu.weights, eb,
                                fast ? nullptr : &nu.weights, proj.dirs, cfg.p);
}

}  // namespace

double s3w_pow(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
               const S3WConfig& cfg, const ProjectionSet& proj) {
  return embedded_mean_pow(mu, nu, cfg, proj);
}

double s3w(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
           const S3WConfig& cfg, const ProjectionSet& proj) {
  return std::pow(s3w_pow(mu, nu, cfg, proj), 1.0 / cfg.p);
}

double rotated_mean_pow(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                        const S3WConfig& cfg,
                        const std::vector<Rotation>& rotations, Rng& rng) {
  check_pair(mu, nu);
  cfg.validate();
  if (rotations.empty())
    throw std::invalid_argument("need at least one rotation");
  int dp = cfg.resolve_d_prime(mu.sphere_dim());
  // Draw all projection seeds up front so the parallel section below is
  // schedule-independent.
  std::vector<ProjectionSet> projs;
  projs.reserve(cfg.share_projections ? 1 : rotations.size());
  std::size_t sets = cfg.share_projections ? 1 : rotations.size();
  for (std::size_t i = 0; i < sets; ++i)
    projs.push_back(ProjectionSet::sample(dp, cfg.L, rng));
  bool fast = sort_path(mu, nu);
  std::vector<double> terms(rotations.size());
  parallel_for(rotations.size(), [&](std::size_t r) {
    const Mat& m = rotations[r].matrix;
    Mat ea = embed_rows(mu.points * m.transpose(), cfg.eps);
    Mat eb = embed_rows(nu.points * m.transpose(), cfg.eps);
    const ProjectionSet& pr = projs[cfg.share_projections ? 0 : r];
    terms[r] = detail::mean_slice_pow(ea, fast ? nullptr : &mu.weights, eb,
                                      fast ? nullptr : &nu.weights, pr.dirs,
                                      cfg.p);
  });
  return pairwise_sum(terms) / double(terms.size());
}

double ri_s3w_pow(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                  const S3WConfig& cfg, std::size_t n_r, Rng& rng) {
  if (n_r < 1) throw std::invalid_argument("rotation count must be >= 1");
  std::vector<Rotation> rots;
  rots.reserve(n_r);
  for (std::size_t r = 0; r < n_r; ++r)
    rots.push_back(sample_rotation(mu.sphere_dim(), rng));
  return rotated_mean_pow(mu, nu, cfg, rots, rng);
}

double ri_s3w(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
              const S3WConfig& cfg, std::size_t n_r, Rng& rng) {
  return std::pow(ri_s3w_pow(mu, nu, cfg, n_r, rng), 1.0 / cfg.p);
}

double ari_s3w_pow(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                   const S3WConfig& cfg, std::size_t n_r,
                   const RotationPool& pool, Rng& rng) {
  if (n_r < 1) throw std::invalid_argument("rotation count must be >= 1");
  std::vector<std::size_t> idx = pool.subsample(n_r, rng);
  std::vector<Rotation> rots;
  rots.reserve(idx.size());
  for (std::size_t i : idx) rots.push_back(pool.at(i));
  return rotated_mean_pow(mu, nu, cfg, rots, rng);
}

double ari_s3w(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
               const S3WConfig& cfg, std::size_t n_r, const RotationPool& pool,
               Rng& rng) {
  return std::pow(ari_s3w_pow(mu, nu, cfg, n_r, pool, rng), 1.0 / cfg.p);
}

double max_s3w_over(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                    const S3WConfig& cfg, const ProjectionSet& proj) {
  check_pair(mu, nu);
  cfg.validate();
  int dp = cfg.resolve_d_prime(mu.sphere_dim());
  if (proj.dirs.cols() != dp)
    throw std::invalid_argument("projection directions have wrong dimension");
  Mat ea = embed_rows(mu.points, cfg.eps);
  Mat eb = embed_rows(nu.points, cfg.eps);
  bool fast = sort_path(mu, nu);
  std::vector<double> terms =
      detail::slice_pows(ea, fast ? nullptr : &mu.weights, eb,
                         fast ? nullptr : &nu.weights, proj.dirs, cfg.p);
  double best = terms[0];
  for (double t : terms) best = std::max(best, t);
  return std::pow(best, 1.0 / cfg.p);
}

double max_s3w(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
               const S3WConfig& cfg, std::size_t candidates, Rng& rng) {
  if (candidates < 1)
    throw std::invalid_argument("candidate count must be >= 1");
  int dp = cfg.resolve_d_prime(mu.sphere_dim());
  ProjectionSet proj = ProjectionSet::sample(dp, candidates, rng);
  return max_s3w_over(mu, nu, cfg, proj);
}

namespace {

double ambient_mean_pow(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                        double p, const Mat& dirs) {
  check_pair(mu, nu);
  if (!(p >= 1.0)) throw std::invalid_argument("order p must be >= 1");
  bool fast = sort_path(mu, nu);
  return detail::mean_slice_pow(mu.points, fast ? nullptr : &mu.weights,
                                nu.points, fast ? nullptr : &nu.weights, dirs,
                                p);
}

}  // namespace

double sw_ambient_pow(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                      double p, std::size_t L, Rng& rng) {
  ProjectionSet proj = ProjectionSet::sample(mu.ambient_dim(), L, rng);
  return ambient_mean_pow(mu, nu, p, proj.dirs);
}

double sw_ambient(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                  double p, std::size_t L, Rng& rng) {
  return std::pow(sw_ambient_pow(mu, nu, p, L, rng), 1.0 / p);
}

double vsw_pow(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
               std::size_t L, Rng& rng) {
  if (mu.sphere_dim() < 2)
    throw UnsupportedError("vertical slicing needs sphere dimension >= 2");
  if (L < 1) throw std::invalid_argument("need at least one direction");
  Mat dirs = detail::equator_dirs(mu.ambient_dim(), L, rng);
  return ambient_mean_pow(mu, nu, p, dirs);
}

double vsw(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
           std::size_t L, Rng& rng) {
  return std::pow(vsw_pow(mu, nu, p, L, rng), 1.0 / p);
}

}  // namespace s3w
