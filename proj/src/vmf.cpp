#include "s3w/vmf.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "s3w/errors.hpp"

namespace s3w {

namespace {

// Marsaglia-Tsang for shape >= 1; boosted by U^{1/shape} below 1.
double gamma_draw(double shape, Rng& rng) {
  if (shape < 1.0) {
    double u = rng.u01_open();
    return gamma_draw(shape + 1.0, rng) * std::pow(u, 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    double u = rng.u01_open();
    double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double beta_symmetric_draw(double shape, Rng& rng) {
  double a = gamma_draw(shape, rng);
  double b = gamma_draw(shape, rng);
  double s = a + b;
  if (s <= 0.0) return 0.5;
  return a / s;
}

// Cosine of the angle to the mean direction, Wood (1994) rejection scheme.
double sample_cosine(double kappa, int ambient, Rng& rng) {
  const double dm1 = ambient - 1;  // dimension of the tangential sphere + 1
  double b = (-2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1)) / dm1;
  double x0 = (1.0 - b) / (1.0 + b);
  double c = kappa * x0 + dm1 * std::log(1.0 - x0 * x0);
  for (;;) {
    double z = beta_symmetric_draw(dm1 / 2.0, rng);
    double w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    double u = rng.u01_open();
    if (kappa * w + dm1 * std::log(1.0 - x0 * w) - c >= std::log(u)) return w;
  }
}

}  // namespace

VonMisesFisher VonMisesFisher::from(SpherePoint mu, double kappa) {
  if (!(kappa >= 0.0))
    throw std::invalid_argument("vMF concentration must be >= 0");
  return VonMisesFisher{std::move(mu), kappa};
}

VmfMixture VmfMixture::from(std::vector<VonMisesFisher> components,
                            std::vector<double> weights) {
  if (components.empty())
    throw std::invalid_argument("mixture needs at least one component");
  if (components.size() != weights.size())
    throw std::invalid_argument("mixture component/weight count mismatch");
  int d = components.front().sphere_dim();
  double total = 0.0;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (components[i].sphere_dim() != d)
      throw std::invalid_argument("mixture components on different spheres");
    if (!(weights[i] >= 0.0))
      throw std::invalid_argument("mixture weights must be non-negative");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("mixture weights must sum to 1 within 1e-12");
  return VmfMixture{std::move(components), std::move(weights)};
}

VmfMixture VmfMixture::uniform_weights(std::vector<VonMisesFisher> components) {
  std::vector<double> w(components.size(), 1.0 / double(components.size()));
  return from(std::move(components), std::move(w));
}

Mat sample_vmf_rows(const VonMisesFisher& dist, std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("sample count must be >= 1");
  const int d = dist.sphere_dim();
  const int ambient = d + 1;
  if (dist.kappa == 0.0) return sample_uniform_rows(d, n, rng);

  // Householder vector mapping e_{d+1} to mu; identity when they coincide.
  Vec u = -dist.mu.coords;
  u[d] += 1.0;
  double u2 = u.squaredNorm();

  Mat rows(n, ambient);
  Vec tangent(d);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    double w = sample_cosine(dist.kappa, ambient, rng);
    double t2;
    do {
      for (int j = 0; j < d; ++j) tangent[j] = rng.normal();
      t2 = tangent.squaredNorm();
    } while (!(t2 > 0.0));
    tangent *= std::sqrt(std::max(0.0, 1.0 - w * w) / t2);
    for (int j = 0; j < d; ++j) rows(i, j) = tangent[j];
    rows(i, d) = w;
    if (u2 > 0.0) {
      double proj = 2.0 * rows.row(i).dot(u) / u2;
      rows.row(i) -= proj * u.transpose();
    }
    rows.row(i) /= rows.row(i).norm();
  }
  return rows;
}

std::vector<SpherePoint> sample_vmf(const VonMisesFisher& dist, std::size_t n,
                                    Rng& rng) {
  Mat rows = sample_vmf_rows(dist, n, rng);
  std::vector<SpherePoint> pts;
  pts.reserve(n);
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    pts.push_back(SpherePoint{rows.row(i).transpose()});
  return pts;
}

Mat sample_mixture_rows(const VmfMixture& mix, std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("sample count must be >= 1");
  const int ambient = mix.sphere_dim() + 1;
  Mat rows(n, ambient);
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.u01();
    double acc = 0.0;
    std::size_t pick = mix.components.size() - 1;
    for (std::size_t j = 0; j < mix.weights.size(); ++j) {
      acc += mix.weights[j];
      if (u < acc) {
        pick = j;
        break;
      }
    }
    rows.row(static_cast<Eigen::Index>(i)) =
        sample_vmf_rows(mix.components[pick], 1, rng).row(0);
  }
  return rows;
}

double vmf_log_density_dot(double kappa, double mu_dot_s) {
  constexpr double log_4pi = 2.5310242469692907;
  if (kappa == 0.0) return -log_4pi;
  // log(kappa / (4 pi sinh kappa)) + kappa <mu,s>, with
  // log sinh k = k - log 2 + log1p(-exp(-2k)) to survive large kappa.
  double log_sinh = kappa - std::log(2.0) + std::log1p(-std::exp(-2.0 * kappa));
  return std::log(kappa) - log_4pi - log_sinh + kappa * mu_dot_s;
}

double vmf_log_density(const VonMisesFisher& dist, const SpherePoint& s) {
  if (dist.sphere_dim() != 2)
    throw UnsupportedError("closed-form vMF density is implemented for S^2 only");
  if (s.sphere_dim() != 2)
    throw std::invalid_argument("point dimension mismatch");
  return vmf_log_density_dot(dist.kappa, dist.mu.coords.dot(s.coords));
}

double mixture_log_density(const VmfMixture& mix, const SpherePoint& s) {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(mix.components.size());
  for (std::size_t j = 0; j < mix.components.size(); ++j) {
    double lw = mix.weights[j] > 0.0
                    ? std::log(mix.weights[j])
                    : -std::numeric_limits<double>::infinity();
    terms[j] = lw + vmf_log_density(mix.components[j], s);
    best = std::max(best, terms[j]);
  }
  if (!std::isfinite(best)) return best;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - best);
  return best + std::log(acc);
}

VmfMixture icosahedron_mixture(double kappa) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<VonMisesFisher> comps;
  comps.reserve(12);
  // Vertices (0, +-1, +-phi) under cyclic coordinate shifts, normalized.
  for (int shift = 0; shift < 3; ++shift) {
    for (int s1 = -1; s1 <= 1; s1 += 2) {
      for (int s2 = -1; s2 <= 1; s2 += 2) {
        Vec v = Vec::Zero(3);
        v[shift] = 0.0;
        v[(shift + 1) % 3] = s1 * 1.0;
        v[(shift + 2) % 3] = s2 * phi;
        comps.push_back(VonMisesFisher::from(SpherePoint::from(v), kappa));
      }
    }
  }
  return VmfMixture::uniform_weights(std::move(comps));
}

}  // namespace s3w
