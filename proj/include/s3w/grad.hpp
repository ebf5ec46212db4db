#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "s3w/rng.hpp"
#include "s3w/s3w.hpp"
#include "s3w/sphere.hpp"
#include "s3w/vmf.hpp"

namespace s3w {

// Equal-weight particle cloud driven by a gradient flow.
struct ParticleCloud {
  Mat x;  // N x (d+1), unit rows

  static ParticleCloud init_uniform(int d, std::size_t n, Rng& rng);
  std::size_t size() const { return static_cast<std::size_t>(x.rows()); }
  int ambient_dim() const { return static_cast<int>(x.cols()); }
};

// Jacobian of the embedding at a point, d x (d+1), evaluated on the same
// composite map the loss uses (valid off the sphere, so finite differences
// of raw coordinates agree with it). Inside the cap the map is treated as
// constant and the Jacobian is zero; `flagged` (optional) is set there and
// at the south pole, where the returned matrix is the smooth limit.
Mat embed_jacobian_at(const Vec& x, double eps, bool* flagged = nullptr);
Mat embed_jacobian(const SpherePoint& s, double eps, bool* flagged = nullptr);

// Frozen randomness for one loss evaluation: rotations (empty for the plain
// and ambient variants) and one ProjectionSet per rotation (or a single
// shared one). `embedded` selects sphere-embedded slicing versus raw
// ambient-direction slicing.
struct LossDraw {
  std::vector<Rotation> rotations;
  std::vector<ProjectionSet> projections;
  bool embedded = true;

  std::size_t rotation_count() const {
    return rotations.empty() ? 1 : rotations.size();
  }
  const ProjectionSet& projection_for(std::size_t r) const {
    return projections.size() == 1 ? projections[0] : projections[r];
  }
};

struct GradResult {
  Mat grad;        // N x (d+1), d/dx of the p-power loss
  double loss_pow;
  // Tie diagnostics: the envelope gradient is valid away from sort ties, so
  // callers (and finite-difference harnesses) can see how close this draw
  // came to one.
  double min_adjacent_gap;  // smallest gap between sorted source neighbors
  double min_matched_abs;   // smallest |u - v| over matched pairs
};

// Loss and analytic gradient of the Monte-Carlo p-power loss with the draw
// held fixed (the sorted matching is differentiated by the envelope
// theorem). Uniform weights and equal sizes only.
GradResult loss_and_grad(const Mat& particles, const Mat& target, double p,
                         double eps, const LossDraw& draw);
double loss_value(const Mat& particles, const Mat& target, double p,
                  double eps, const LossDraw& draw);

// Gradient of s3w_pow with the given projections (identity rotation).
// Throws UnsupportedError for weighted or size-mismatched targets.
Mat s3w_grad(const ParticleCloud& cloud, const EmpiricalMeasure& nu,
             const S3WConfig& cfg, const ProjectionSet& proj);

enum class FlowLoss { s3w, ri_s3w, ari_s3w, sw, vsw };
enum class FlowOptimizer { adam, sgd };
enum class FlowRetraction { normalize, exp_map };

// Projected gradient step: x - lr * grad retracted back to the sphere.
// With FlowRetraction::exp_map the gradient is first projected to the
// tangent space and the step follows the geodesic. Particles whose update
// collapses to the origin are skipped and counted.
ParticleCloud pgd_step(const ParticleCloud& cloud, const Mat& grads, double lr,
                       FlowRetraction retraction,
                       std::size_t* skipped = nullptr);

struct AdamState {
  Mat m;  // first moments
  Mat v;  // second moments
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;

  static AdamState init(Eigen::Index rows, Eigen::Index cols);
};

// Adam update in ambient coordinates followed by row normalization.
ParticleCloud adam_step_projected(const ParticleCloud& cloud, const Mat& grads,
                                  AdamState& state, double lr,
                                  std::size_t* skipped = nullptr);

struct FlowConfig {
  FlowLoss loss = FlowLoss::s3w;
  double p = 2.0;
  std::size_t L = 1000;
  double eps = 1e-6;
  std::size_t rotations = 1;   // rotation count for the averaged variants
  std::size_t rot_from = 0;    // linear ramp rot_from -> rot_to when set
  std::size_t rot_to = 0;
  std::size_t pool_size = 1000;  // pregenerated pool for the amortized variant
  std::size_t steps = 500;
  double lr = 0.01;
  std::size_t batch = 0;      // 0: full batch
  std::size_t particles = 0;  // 0: match the target size
  FlowOptimizer optimizer = FlowOptimizer::adam;
  FlowRetraction retraction = FlowRetraction::normalize;
  std::size_t eval_every = 50;     // 0: evaluate at the final step only
  std::size_t w2_subsample = 1000;  // particles used for the exact-W2 metric
  bool share_projections = false;
  std::uint64_t seed = 0;  // echoed into metadata; the driver uses its Rng

  void validate() const;
  std::size_t rotations_at(std::size_t step) const;
};

struct FlowTrace {
  std::vector<double> loss;         // per-step Monte-Carlo p-power loss
  std::vector<double> cum_seconds;  // optimization time, evals excluded
  std::vector<double> nll;          // NaN off-cadence or without a density
  std::vector<double> log_w2;       // NaN off-cadence
  Mat final_cloud;
  double pool_gen_seconds = 0.0;
  std::size_t degenerate_steps = 0;
  std::size_t tie_steps = 0;  // steps whose draw produced a near-exact sort tie
  std::size_t w2_subsample_used = 0;
};

// Full flow driver. `density` (optional) enables the NLL column.
FlowTrace run_flow(const FlowConfig& cfg, const EmpiricalMeasure& target,
                   const VmfMixture* density, Rng& rng);

namespace detail {

// Diagnostic switch for the angle-ordered slice sweep used with 2-D
// projections. The fast sweep is bit-identical to the generic one; tests
// flip this off to prove it.
bool& angle_sweep_enabled();

}  // namespace detail

}  // namespace s3w
