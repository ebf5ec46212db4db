#include "s3w/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "s3w/errors.hpp"
#include "s3w/parallel.hpp"
#include "s3w/special.hpp"

namespace s3w {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void finalize_stats(StudyCell& cell) {
  const std::size_t n = cell.values.size();
  cell.mean = pairwise_sum(cell.values.data(), n) / static_cast<double>(n);
  if (n < 2) {
    cell.stddev = 0.0;
    return;
  }
  double acc = 0.0;
  for (double v : cell.values) acc += (v - cell.mean) * (v - cell.mean);
  cell.stddev = std::sqrt(acc / static_cast<double>(n - 1));
}

Mat geodesic_sq_cost(const Mat& a, const Mat& b) {
  Mat dots = a * b.transpose();
  Mat cost(dots.rows(), dots.cols());
  for (Eigen::Index i = 0; i < dots.rows(); ++i)
    for (Eigen::Index j = 0; j < dots.cols(); ++j) {
      double ang = std::acos(std::clamp(dots(i, j), -1.0, 1.0));
      cost(i, j) = ang * ang;
    }
  return cost;
}

}  // namespace

namespace detail {

// Exact linear assignment by shortest augmenting paths with dual potentials
// (one augmentation per row; O(n^3) overall). Column n is a virtual start.
double assignment_min_cost(const Mat& cost) {
  if (cost.rows() != cost.cols() || cost.rows() == 0)
    throw std::invalid_argument("cost matrix must be square and non-empty");
  const int n = static_cast<int>(cost.rows());
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(n) + 1, n);  // col -> row
  std::vector<int> way(static_cast<std::size_t>(n) + 1, n);

  for (int i = 0; i < n; ++i) {
    match[static_cast<std::size_t>(n)] = i;
    int j0 = n;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = match[static_cast<std::size_t>(j0)];
      double delta = kInf;
      int j1 = -1;
      for (int j = 0; j < n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        double cur = cost(i0, j) - u[static_cast<std::size_t>(i0)] -
                     v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] +=
              delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != n);
    // Unwind the augmenting path.
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != n);
  }
  double total = 0.0;
  for (int j = 0; j < n; ++j)
    total += cost(match[static_cast<std::size_t>(j)], j);
  return total;
}

double exact_w2_geodesic_rows(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows())
    throw UnsupportedError("exact transport needs equal-size clouds");
  if (a.cols() != b.cols())
    throw std::invalid_argument("ambient dimension mismatch");
  if (a.rows() == 0) throw std::invalid_argument("empty cloud");
  if (static_cast<std::size_t>(a.rows()) > kAssignmentCap)
    throw CapacityError(
        "assignment solver capped at " + std::to_string(kAssignmentCap) +
        " points; subsample the clouds first");
  const double total = assignment_min_cost(geodesic_sq_cost(a, b));
  return std::sqrt(std::max(0.0, total) / static_cast<double>(a.rows()));
}

double pearson_cc(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("need two equal-length series");
  const double n = static_cast<double>(xs.size());
  double mx = pairwise_sum(xs.data(), xs.size()) / n;
  double my = pairwise_sum(ys.data(), ys.size()) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double dx = xs[i] - mx;
    double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::invalid_argument("degenerate series");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace detail

double exact_w2_geodesic(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (!a.uniform || !b.uniform)
    throw UnsupportedError("exact transport supports uniform weights only");
  if (a.size() != b.size())
    throw UnsupportedError("exact transport needs equal-size clouds");
  return detail::exact_w2_geodesic_rows(a.points, b.points);
}

double nll(const Mat& points, const VmfMixture& mix) {
  if (points.rows() == 0) throw std::invalid_argument("empty cloud");
  const std::size_t n = static_cast<std::size_t>(points.rows());
  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i)
    terms[i] = mixture_log_density(
        mix, SpherePoint::from(points.row(static_cast<Eigen::Index>(i))
                                   .transpose()));
  return -pairwise_sum(terms.data(), n);
}

double kl_vmf_uniform(double kappa, int d) {
  if (kappa < 0.0) throw std::invalid_argument("kappa must be >= 0");
  if (d < 1) throw std::invalid_argument("sphere dimension must be >= 1");
  if (kappa == 0.0) return 0.0;
  // alpha = (d+1)/2; KL = kappa I_alpha/I_{alpha-1}
  //                     + (alpha-1) log(kappa/2) - log I_{alpha-1} - lgamma(alpha)
  const double alpha = 0.5 * (d + 1);
  const double li_hi = log_bessel_i(alpha, kappa);
  const double li_lo = log_bessel_i(alpha - 1.0, kappa);
  return kappa * std::exp(li_hi - li_lo) +
         (alpha - 1.0) * std::log(0.5 * kappa) - li_lo - std::lgamma(alpha);
}

StudyReport distortion_study(std::size_t n_pairs, Rng& rng) {
  if (n_pairs < 2) throw std::invalid_argument("need at least 2 pairs");
  constexpr double kEps = 1e-6;
  constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
  Mat a = sample_uniform_rows(2, n_pairs, rng);
  Mat b = sample_uniform_rows(2, n_pairs, rng);
  Mat ea = embed_rows(a, kEps);
  Mat eb = embed_rows(b, kEps);
  std::vector<double> geo(n_pairs), stereo(n_pairs), flat(n_pairs),
      wrapped(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    geo[i] = std::acos(std::clamp(a.row(ii).dot(b.row(ii)), -1.0, 1.0));
    SpherePoint pa = SpherePoint::from(a.row(ii).transpose());
    SpherePoint pb = SpherePoint::from(b.row(ii).transpose());
    stereo[i] = (stereo_project(epsilon_cap(pa, kEps)) -
                 stereo_project(epsilon_cap(pb, kEps)))
                    .norm();
    flat[i] = (ea.row(ii) - eb.row(ii)).norm();
    wrapped[i] = std::min(flat[i], kTwoPi - flat[i]);
  }
  StudyReport rep;
  rep.id = "distortion";
  rep.param_names = {"variant"};
  auto add = [&](const char* name, const std::vector<double>& xs) {
    StudyCell cell;
    cell.params = {{"variant", name}};
    cell.values = {detail::pearson_cc(geo, xs)};
    finalize_stats(cell);
    rep.cells.push_back(std::move(cell));
  };
  add("stereo", stereo);
  add("embedded", flat);
  add("wrapped", wrapped);
  rep.metadata = {{"pairs", std::to_string(n_pairs)},
                  {"eps", fmt_double(kEps)}};
  return rep;
}

StudyReport eps_stability_study(const std::vector<double>& eps_grid,
                                std::size_t L, std::size_t n, std::size_t reps,
                                Rng& rng) {
  if (eps_grid.empty()) throw std::invalid_argument("empty grid");
  if (reps == 0) throw std::invalid_argument("need at least 1 repetition");
  for (double e : eps_grid)
    if (!(e > 0.0 && e < 0.5))
      throw std::invalid_argument("eps grid must lie in (0, 0.5)");
  constexpr double kKappa = 50.0;
  constexpr std::size_t kRot = 10;
  constexpr std::size_t kPool = 100;
  const char* methods[] = {"s3w", "ri_s3w", "ari_s3w"};
  const std::size_t ng = eps_grid.size();

  // values[method][eps][rep]; one repetition holds samples and estimator
  // draws fixed while eps sweeps, so only the cap varies within a rep.
  std::vector<std::vector<std::vector<double>>> values(
      3, std::vector<std::vector<double>>(ng, std::vector<double>(reps)));

  parallel_for(reps, [&](std::size_t rep) {
    Rng rr = rng.split(rep);
    Rng rd = rr.split(0);
    VonMisesFisher north = VonMisesFisher::from(north_pole(2), kKappa);
    VonMisesFisher south = VonMisesFisher::from(south_pole(2), kKappa);
    EmpiricalMeasure mu =
        EmpiricalMeasure::from_points(sample_vmf_rows(south, n, rd));
    EmpiricalMeasure nu =
        EmpiricalMeasure::from_points(sample_vmf_rows(north, n, rd));
    for (std::size_t g = 0; g < ng; ++g) {
      S3WConfig cfg;
      cfg.L = L;
      cfg.eps = eps_grid[g];
      {
        Rng rm = rr.split(1);
        ProjectionSet proj = ProjectionSet::sample(2, L, rm);
        values[0][g][rep] = s3w(mu, nu, cfg, proj);
      }
      {
        Rng rm = rr.split(2);
        values[1][g][rep] = ri_s3w(mu, nu, cfg, kRot, rm);
      }
      {
        Rng rm = rr.split(3);
        RotationPool pool = build_pool(2, kPool, rm);
        values[2][g][rep] = ari_s3w(mu, nu, cfg, kRot, pool, rm);
      }
    }
  });

  StudyReport rep;
  rep.id = "eps_stability";
  rep.param_names = {"eps", "method"};
  for (std::size_t g = 0; g < ng; ++g)
    for (std::size_t mi = 0; mi < 3; ++mi) {
      StudyCell cell;
      cell.params = {{"eps", fmt_double(eps_grid[g])},
                     {"method", methods[mi]}};
      cell.values = values[mi][g];
      finalize_stats(cell);
      rep.cells.push_back(std::move(cell));
    }
  rep.metadata = {{"kappa", fmt_double(kKappa)},
                  {"n", std::to_string(n)},
                  {"L", std::to_string(L)},
                  {"rotations", std::to_string(kRot)},
                  {"pool", std::to_string(kPool)},
                  {"reps", std::to_string(reps)}};
  return rep;
}

StudyReport evolution_study(EvolutionKind kind, const std::vector<double>& grid,
                            const EvoOptions& opt, Rng& rng) {
  if (grid.empty()) throw std::invalid_argument("empty grid");

  // Kind defaults; explicit options override.
  int d = 2;
  std::size_t samples = 500, L = 200, n_r = 100, pool = 1000, reps = 10;
  switch (kind) {
    case EvolutionKind::kappa:
      break;
    case EvolutionKind::angle:
      reps = 100;
      break;
    case EvolutionKind::projections:
      samples = 500;
      reps = 20;
      break;
    case EvolutionKind::rotations:
    case EvolutionKind::pool:
      L = 10;
      n_r = 10;
      reps = 20;
      break;
    case EvolutionKind::samples:
      d = 3;
      L = 1000;
      n_r = 10;
      pool = 100;
      reps = 50;
      break;
  }
  if (opt.d > 0) d = opt.d;
  if (opt.samples > 0) samples = opt.samples;
  if (opt.L > 0) L = opt.L;
  if (opt.rotations > 0) n_r = opt.rotations;
  if (opt.pool > 0) pool = opt.pool;
  if (opt.reps > 0) reps = opt.reps;
  if (pool < n_r) pool = n_r;
  if (kind == EvolutionKind::angle && d < 2)
    throw std::invalid_argument("angle sweep needs d >= 2");

  const std::size_t ng = grid.size();
  const bool single_method = kind == EvolutionKind::projections ||
                             kind == EvolutionKind::rotations ||
                             kind == EvolutionKind::pool;
  std::vector<std::string> methods;
  if (kind == EvolutionKind::projections)
    methods = {"s3w"};
  else if (kind == EvolutionKind::rotations)
    methods = {"ri_s3w"};
  else if (kind == EvolutionKind::pool)
    methods = {"ari_s3w"};
  else
    methods = {"s3w", "ri_s3w", "ari_s3w"};
  const std::size_t nm = methods.size();

  // Fixed antipodal-vMF data for the estimator-parameter sweeps; the other
  // kinds draw data per (grid value, repetition).
  Mat fixed_mu, fixed_nu;
  if (single_method) {
    Rng rd = rng.split(1u << 20);
    VonMisesFisher south = VonMisesFisher::from(south_pole(d), 10.0);
    VonMisesFisher north = VonMisesFisher::from(north_pole(d), 10.0);
    fixed_mu = sample_vmf_rows(south, samples, rd);
    fixed_nu = sample_vmf_rows(north, samples, rd);
  }

  std::vector<std::vector<std::vector<double>>> values(
      nm, std::vector<std::vector<double>>(ng, std::vector<double>(reps)));

  parallel_for(ng * reps, [&](std::size_t slot) {
    const std::size_t g = slot / reps;
    const std::size_t rep = slot % reps;
    const double gv = grid[g];
    Rng rc = rng.split(slot);
    Rng rd = rc.split(0);

    std::size_t cell_samples = samples;
    std::size_t cell_L = L;
    std::size_t cell_nr = n_r;
    std::size_t cell_pool = pool;
    Mat xa, xb;
    switch (kind) {
      case EvolutionKind::kappa: {
        if (!(gv >= 0.0)) throw std::invalid_argument("kappa must be >= 0");
        VonMisesFisher tgt =
            VonMisesFisher::from(north_pole(d), gv);
        xa = sample_uniform_rows(d, samples, rd);
        xb = sample_vmf_rows(tgt, samples, rd);
        break;
      }
      case EvolutionKind::angle: {
        Vec mu0 = Vec::Zero(d + 1);
        mu0[0] = 1.0;
        Vec mut = Vec::Zero(d + 1);
        mut[0] = std::cos(gv);
        mut[1] = std::sin(gv);
        xa = sample_vmf_rows(
            VonMisesFisher::from(SpherePoint::from(mu0), 10.0), samples, rd);
        xb = sample_vmf_rows(
            VonMisesFisher::from(SpherePoint::from(mut), 10.0), samples, rd);
        break;
      }
      case EvolutionKind::projections:
        cell_L = static_cast<std::size_t>(std::llround(gv));
        if (cell_L == 0) throw std::invalid_argument("L must be >= 1");
        xa = fixed_mu;
        xb = fixed_nu;
        break;
      case EvolutionKind::rotations:
        cell_nr = static_cast<std::size_t>(std::llround(gv));
        if (cell_nr == 0)
          throw std::invalid_argument("rotation count must be >= 1");
        if (cell_pool < cell_nr) cell_pool = cell_nr;
        xa = fixed_mu;
        xb = fixed_nu;
        break;
      case EvolutionKind::pool:
        cell_pool = static_cast<std::size_t>(std::llround(gv));
        if (cell_pool < cell_nr)
          throw std::invalid_argument("pool smaller than the rotation count");
        xa = fixed_mu;
        xb = fixed_nu;
        break;
      case EvolutionKind::samples: {
        cell_samples = static_cast<std::size_t>(std::llround(gv));
        if (cell_samples == 0)
          throw std::invalid_argument("sample count must be >= 1");
        VonMisesFisher south = VonMisesFisher::from(south_pole(d), 10.0);
        VonMisesFisher north = VonMisesFisher::from(north_pole(d), 10.0);
        xa = sample_vmf_rows(south, cell_samples, rd);
        xb = sample_vmf_rows(north, cell_samples, rd);
        break;
      }
    }
    EmpiricalMeasure mu = EmpiricalMeasure::from_points(std::move(xa));
    EmpiricalMeasure nu = EmpiricalMeasure::from_points(std::move(xb));
    S3WConfig cfg;
    cfg.L = cell_L;
    for (std::size_t mi = 0; mi < nm; ++mi) {
      Rng rm = rc.split(mi + 1);
      const std::string& method = methods[mi];
      double v;
      if (method == "s3w") {
        ProjectionSet proj =
            ProjectionSet::sample(d, cell_L, rm);
        v = s3w(mu, nu, cfg, proj);
      } else if (method == "ri_s3w") {
        v = ri_s3w(mu, nu, cfg, cell_nr, rm);
      } else {
        RotationPool rp = build_pool(d, cell_pool, rm);
        v = ari_s3w(mu, nu, cfg, cell_nr, rp, rm);
      }
      values[mi][g][rep] = v;
    }
  });

  static const char* kKindNames[] = {"kappa",     "angle", "projections",
                                     "rotations", "pool",  "samples"};
  const char* kind_name = kKindNames[static_cast<int>(kind)];
  StudyReport rep;
  rep.id = std::string("evolution_") + kind_name;
  rep.param_names = {kind_name, "method"};
  for (std::size_t g = 0; g < ng; ++g)
    for (std::size_t mi = 0; mi < nm; ++mi) {
      StudyCell cell;
      cell.params = {{kind_name, fmt_double(grid[g])},
                     {"method", methods[mi]}};
      cell.values = values[mi][g];
      finalize_stats(cell);
      rep.cells.push_back(std::move(cell));
    }
  rep.metadata = {{"kind", kind_name},
                  {"d", std::to_string(d)},
                  {"samples", std::to_string(samples)},
                  {"L", std::to_string(L)},
                  {"rotations", std::to_string(n_r)},
                  {"pool", std::to_string(pool)},
                  {"reps", std::to_string(reps)}};
  return rep;
}

StudyReport bench_runtime(const std::vector<std::string>& methods,
                          BenchAxis axis, const std::vector<double>& grid,
                          const BenchOptions& opt, Rng& rng) {
  if (methods.empty()) throw std::invalid_argument("no methods");
  if (grid.empty()) throw std::invalid_argument("empty grid");
  if (opt.reps < 3) throw std::invalid_argument("need at least 3 repetitions");
  for (const auto& method : methods)
    if (method != "s3w" && method != "ri_s3w" && method != "ari_s3w" &&
        method != "max_s3w" && method != "sw" && method != "vsw")
      throw std::invalid_argument("unknown method: " + method);

  const char* axis_name = axis == BenchAxis::n       ? "n"
                          : axis == BenchAxis::L     ? "L"
                                                     : "rotations";
  using clock = std::chrono::steady_clock;
  StudyReport rep;
  rep.id = "bench_runtime";
  rep.param_names = {axis_name, "method"};

  // Timing cells run strictly sequentially so concurrent cells cannot
  // pollute each other's wall-clock medians.
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    const std::string& method = methods[mi];
    for (std::size_t g = 0; g < grid.size(); ++g) {
      std::size_t n = opt.n, L = opt.L, n_r = opt.rotations;
      switch (axis) {
        case BenchAxis::n:
          n = static_cast<std::size_t>(std::llround(grid[g]));
          break;
        case BenchAxis::L:
          L = static_cast<std::size_t>(std::llround(grid[g]));
          break;
        case BenchAxis::rotations:
          n_r = static_cast<std::size_t>(std::llround(grid[g]));
          break;
      }
      if (n == 0 || L == 0 || n_r == 0)
        throw std::invalid_argument("grid values must be >= 1");
      Rng rc = rng.split(mi * grid.size() + g);
      Rng rd = rc.split(0);
      EmpiricalMeasure mu = EmpiricalMeasure::from_points(
          sample_uniform_rows(opt.d, n, rd));
      EmpiricalMeasure nu = EmpiricalMeasure::from_points(sample_vmf_rows(
          VonMisesFisher::from(north_pole(opt.d), 10.0), n, rd));
      S3WConfig cfg;
      cfg.L = L;

      RotationPool pool({Rotation{Mat::Identity(opt.d + 1, opt.d + 1)}});
      double pool_secs = 0.0;
      if (method == "ari_s3w") {
        std::size_t pn = std::max(opt.pool, n_r);
        Rng rp = rc.split(1);
        auto t0 = clock::now();
        pool = build_pool(opt.d, pn, rp);
        pool_secs = std::chrono::duration<double>(clock::now() - t0).count();
      }

      auto run_once = [&](Rng& r) {
        if (method == "s3w") {
          ProjectionSet proj = ProjectionSet::sample(opt.d, L, r);
          return s3w(mu, nu, cfg, proj);
        }
        if (method == "ri_s3w") return ri_s3w(mu, nu, cfg, n_r, r);
        if (method == "ari_s3w") return ari_s3w(mu, nu, cfg, n_r, pool, r);
        if (method == "max_s3w") return max_s3w(mu, nu, cfg, n_r, r);
        if (method == "sw") return sw_ambient(mu, nu, cfg.p, L, r);
        return vsw(mu, nu, cfg.p, L, r);
      };

      {
        Rng rw = rc.split(2);
        (void)run_once(rw);  // warm-up, discarded
      }
      std::vector<double> times(opt.reps);
      for (std::size_t it = 0; it < opt.reps; ++it) {
        Rng ri = rc.split(3 + it);
        auto t0 = clock::now();
        (void)run_once(ri);
        times[it] = std::chrono::duration<double>(clock::now() - t0).count();
      }

      StudyCell cell;
      cell.params = {{axis_name, fmt_double(grid[g])}, {"method", method}};
      cell.values = std::move(times);
      finalize_stats(cell);
      cell.mean = median(cell.values);  // headline statistic is the median
      rep.cells.push_back(std::move(cell));

      if (method == "ari_s3w") {
        StudyCell pc;
        pc.params = {{axis_name, fmt_double(grid[g])},
                     {"method", "pool_gen"}};
        pc.values = {pool_secs};
        finalize_stats(pc);
        rep.cells.push_back(std::move(pc));
      }
    }
  }
  rep.metadata = {{"axis", axis_name},
                  {"n", std::to_string(opt.n)},
                  {"d", std::to_string(opt.d)},
                  {"L", std::to_string(opt.L)},
                  {"rotations", std::to_string(opt.rotations)},
                  {"pool", std::to_string(opt.pool)},
                  {"reps", std::to_string(opt.reps)}};
  return rep;
}

}  // namespace s3w
