#pragma once

#include <cstddef>
#include <vector>

#include "s3w/rng.hpp"
#include "s3w/sphere.hpp"

namespace s3w {

// von Mises-Fisher distribution on S^d; kappa = 0 is the uniform law.
struct VonMisesFisher {
  SpherePoint mu;
  double kappa = 0.0;

  static VonMisesFisher from(SpherePoint mu, double kappa);
  int sphere_dim() const { return mu.sphere_dim(); }
};

// Finite mixture with non-negative weights summing to 1.
struct VmfMixture {
  std::vector<VonMisesFisher> components;
  std::vector<double> weights;

  static VmfMixture from(std::vector<VonMisesFisher> components,
                         std::vector<double> weights);
  static VmfMixture uniform_weights(std::vector<VonMisesFisher> components);
  int sphere_dim() const { return components.front().sphere_dim(); }
};

// Wood's rejection sampler for the cosine component, a uniform tangential
// direction, and a Householder reflection onto mu.
std::vector<SpherePoint> sample_vmf(const VonMisesFisher& dist, std::size_t n,
                                    Rng& rng);
Mat sample_vmf_rows(const VonMisesFisher& dist, std::size_t n, Rng& rng);

Mat sample_mixture_rows(const VmfMixture& mix, std::size_t n, Rng& rng);

// log density on S^2 (closed-form normalizer); kappa = 0 gives -log(4 pi).
// Throws UnsupportedError for d != 2.
double vmf_log_density(const VonMisesFisher& dist, const SpherePoint& s);
double vmf_log_density_dot(double kappa, double mu_dot_s);

double mixture_log_density(const VmfMixture& mix, const SpherePoint& s);

// 12 equally weighted components centered at the vertices of a regular
// icosahedron on S^2, all with the given concentration.
VmfMixture icosahedron_mixture(double kappa);

}  // namespace s3w
