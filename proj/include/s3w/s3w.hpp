#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "s3w/ot1d.hpp"
#include "s3w/rng.hpp"
#include "s3w/sphere.hpp"

namespace s3w {

// Weighted point cloud on S^d; rows of `points` are unit vectors.
struct EmpiricalMeasure {
  Mat points;
  Vec weights;
  bool uniform = true;  // all weights exactly equal (enables the sort path)

  static EmpiricalMeasure from_points(Mat points);
  static EmpiricalMeasure from_weighted(Mat points, Vec weights);
  static EmpiricalMeasure from_cloud(const std::vector<SpherePoint>& points);

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  int ambient_dim() const { return static_cast<int>(points.cols()); }
  int sphere_dim() const { return ambient_dim() - 1; }
};

// L unit slicing directions in R^{d'}.
struct ProjectionSet {
  Mat dirs;  // L x d'
  std::uint64_t seed = 0;

  static ProjectionSet sample(int d_prime, std::size_t L, Rng& rng);
  std::size_t count() const { return static_cast<std::size_t>(dirs.rows()); }
};

struct S3WConfig {
  double p = 2.0;
  std::size_t L = 100;
  double eps = 1e-6;
  int d_prime = 0;  // 0 resolves to the sphere dimension
  std::uint64_t seed = 0;
  // Rotation-averaged variants: reuse one ProjectionSet across rotations
  // instead of drawing fresh directions per rotation.
  bool share_projections = false;

  void validate() const;
  int resolve_d_prime(int sphere_dim) const;
};

// One-dimensional pushforward <embed(x_i, eps), theta> with carried weights.
WeightedSamples1D slice(const EmpiricalMeasure& m, const Vec& theta,
                        double eps);

// Monte-Carlo sliced distance over the given directions; deterministic given
// proj. s3w_pow returns the p-th power (the quantity gradient flows
// optimize), s3w its p-th root.
double s3w_pow(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
               const S3WConfig& cfg, const ProjectionSet& proj);
double s3w(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
           const S3WConfig& cfg, const ProjectionSet& proj);

// Mean of s3w_pow over the given rotations applied to both measures;
// projection seeds are consumed from rng (one set per rotation, or a single
// shared set when cfg.share_projections).
double rotated_mean_pow(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                        const S3WConfig& cfg,
                        const std::vector<Rotation>& rotations, Rng& rng);

// Expectation over Haar rotations, estimated with n_r fresh draws.
double ri_s3w_pow(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                  const S3WConfig& cfg, std::size_t n_r, Rng& rng);
double ri_s3w(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
              const S3WConfig& cfg, std::size_t n_r, Rng& rng);

// Same estimator with rotations subsampled (without replacement) from an
// immutable pregenerated pool.
double ari_s3w_pow(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                   const S3WConfig& cfg, std::size_t n_r,
                   const RotationPool& pool, Rng& rng);
double ari_s3w(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
               const S3WConfig& cfg, std::size_t n_r, const RotationPool& pool,
               Rng& rng);

// Best-of-candidates Monte-Carlo lower bound on the supremal slice cost.
double max_s3w(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
               const S3WConfig& cfg, std::size_t candidates, Rng& rng);
double max_s3w_over(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                    const S3WConfig& cfg, const ProjectionSet& proj);

// Classic sliced Wasserstein in the ambient space R^{d+1} (no projection,
// no embedding), directions uniform on S^d.
double sw_ambient(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                  double p, std::size_t L, Rng& rng);
double sw_ambient_pow(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                      double p, std::size_t L, Rng& rng);

// Vertical baseline: directions uniform on the equator {theta_{d+1} = 0};
// a pseudo-metric that ignores the last axis. Requires d >= 2.
double vsw(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
           std::size_t L, Rng& rng);
double vsw_pow(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
               std::size_t L, Rng& rng);

namespace detail {

// Mean over dirs rows of the 1-D p-cost between the projections of xa and
// xb (n x k matrices); wa/wb null means uniform equal weights. Slices are
// evaluated independently and reduced with a fixed pairwise tree.
double mean_slice_pow(const Mat& xa, const Vec* wa, const Mat& xb,
                      const Vec* wb, const Mat& dirs, double p);

// Per-slice costs (no averaging), used by the sup variant.
std::vector<double> slice_pows(const Mat& xa, const Vec* wa, const Mat& xb,
                               const Vec* wb, const Mat& dirs, double p);

// Projections of points onto direction rows (out column l = x . dirs row l).
// Planar directions go through one shared column kernel so every caller
// sees bit-identical columns; higher dimensions use the matrix product.
Mat project_points(const Mat& x, const Mat& dirs);
void project_col_2d(const double* x0, const double* x1, double d0, double d1,
                    Eigen::Index n, double* out);

Mat equator_dirs(int ambient, std::size_t L, Rng& rng);

}  // namespace detail

}  // namespace s3w
