#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "s3w/rng.hpp"
#include "s3w/s3w.hpp"
#include "s3w/vmf.hpp"

namespace s3w {

// Hard cap for the cubic assignment solver; larger inputs must subsample.
inline constexpr std::size_t kAssignmentCap = 4096;

// Exact 2-Wasserstein distance under the geodesic ground metric between two
// equal-size uniform clouds: sqrt(min over matchings of the mean squared
// geodesic distance), solved by shortest augmenting paths in O(n^3).
// Throws std::invalid_argument on size mismatch or non-uniform weights and
// CapacityError above kAssignmentCap points.
double exact_w2_geodesic(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

// Negative log-likelihood -sum_i log density(x_i) of unit rows under the
// mixture (sum, not mean). Mixture densities require d = 2.
double nll(const Mat& points, const VmfMixture& mix);

// KL divergence of vMF(mu, kappa) on S^d from the uniform law, in closed
// form through modified-Bessel ratios; continuous at kappa -> 0 with limit
// 0. Throws std::invalid_argument for kappa < 0 or d < 1.
double kl_vmf_uniform(double kappa, int d);

// One grid cell of a study: ordered parameter columns and one value per
// repetition. stddev is the sample standard deviation (0 when reps < 2).
struct StudyCell {
  std::vector<std::pair<std::string, std::string>> params;
  std::vector<double> values;
  double mean = 0.0;
  double stddev = 0.0;
};

struct StudyReport {
  std::string id;
  std::vector<std::string> param_names;  // CSV column order
  std::vector<StudyCell> cells;
  std::vector<std::pair<std::string, std::string>> metadata;
};

// Correlation of the geodesic distance against three flattened distances
// over uniform pairs on S^2: the raw stereographic gap, the embedded gap,
// and the wrapped embedded gap min(gap, 2*pi - gap). One cell per variant;
// the value is the Pearson correlation coefficient.
StudyReport distortion_study(std::size_t n_pairs, Rng& rng);

// Mean/std of the sliced distances between two antipodal vMF clouds
// (concentration 50, fresh samples per repetition) as the cap parameter
// sweeps the grid.
StudyReport eps_stability_study(const std::vector<double>& eps_grid,
                                std::size_t L, std::size_t n, std::size_t reps,
                                Rng& rng);

enum class EvolutionKind { kappa, angle, projections, rotations, pool, samples };

// Optional overrides for evolution_study; zero fields fall back to the
// kind's default setup.
struct EvoOptions {
  int d = 0;
  std::size_t samples = 0;
  std::size_t L = 0;
  std::size_t rotations = 0;
  std::size_t pool = 0;
  std::size_t reps = 0;
};

// Parameter sweeps of the sliced-distance family:
//   kappa       grid of concentrations, vMF(mu, k) against uniform
//   angle       grid of angles, vMF(mu0, 10) against vMF(rot(theta) mu0, 10)
//   projections grid of L, fixed antipodal-vMF setup
//   rotations   grid of rotation counts (rotation-averaged estimator)
//   pool        grid of pool sizes (amortized estimator)
//   samples     grid of sample counts N (antipodal vMFs, higher dimension)
StudyReport evolution_study(EvolutionKind kind, const std::vector<double>& grid,
                            const EvoOptions& opt, Rng& rng);

enum class BenchAxis { n, L, rotations };

struct BenchOptions {
  std::size_t n = 500;
  int d = 2;
  std::size_t L = 100;
  std::size_t rotations = 10;
  std::size_t pool = 100;
  std::size_t reps = 5;
};

// Median wall-clock seconds per method over the grid of the chosen axis
// (one warm-up call discarded per cell); the cell mean field carries the
// median, values the raw per-rep timings. Amortized-variant timings exclude
// pool generation, which is reported as separate pool_gen cells.
StudyReport bench_runtime(const std::vector<std::string>& methods,
                          BenchAxis axis, const std::vector<double>& grid,
                          const BenchOptions& opt, Rng& rng);

namespace detail {

// Minimal total cost over row-to-column assignments of a square matrix.
double assignment_min_cost(const Mat& cost);

// exact_w2_geodesic on raw unit-row matrices (no measure wrappers).
double exact_w2_geodesic_rows(const Mat& a, const Mat& b);

double pearson_cc(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace detail

}  // namespace s3w
