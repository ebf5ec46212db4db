#include "s3w/grad.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "s3w/errors.hpp"
#include "s3w/eval.hpp"
#include "s3w/ot1d.hpp"
#include "s3w/parallel.hpp"
#include "s3w/s3w.hpp"

namespace s3w {
namespace {

constexpr double kTieGap = 1e-9;

// d/du |u - v|^p at diff = u - v (subgradient 0 at diff = 0 for p = 1).
inline double dpow(double diff, double p) {
  if (p == 2.0) return 2.0 * diff;
  if (diff == 0.0) return 0.0;
  double s = diff > 0.0 ? 1.0 : -1.0;
  if (p == 1.0) return s;
  return p * std::pow(std::abs(diff), p - 1.0) * s;
}

// Jacobian of the embedding composite at a raw ambient row (not necessarily
// unit norm), d x (d+1). Inside the cap the map is treated as constant
// (zero Jacobian, a deliberate subgradient choice so particles are not
// pushed along the cap circle); at the image origin the smooth limit 2*I of
// the distortion factor applies. Both cases set *flagged.
Mat jac_at(Eigen::Ref<const Eigen::RowVectorXd> x, double eps, bool* flagged) {
  const int d = static_cast<int>(x.size()) - 1;
  const double cap = 1.0 - eps;
  const double t = x[d];
  if (t > cap) {
    if (flagged) *flagged = true;
    return Mat::Zero(d, d + 1);
  }
  const double denom = 1.0 - t;
  Vec y = x.head(d).transpose() / denom;
  const double m2 = y.squaredNorm();
  Mat jh(d, d);
  if (m2 == 0.0) {
    if (flagged) *flagged = true;
    jh = 2.0 * Mat::Identity(d, d);
  } else {
    const double m = std::sqrt(m2);
    const double c = std::clamp(-(m2 - 1.0) / (m2 + 1.0), -1.0, 1.0);
    const double r = std::acos(c);
    // d/dy [r(|y|) y/|y|]: radial derivative 2/(m^2+1), transverse r/m.
    const double a = r / m;
    const double b = 2.0 / (m2 + 1.0) - a;
    Vec yh = y / m;
    jh = a * Mat::Identity(d, d) + b * (yh * yh.transpose());
  }
  Mat j(d, d + 1);
  j.leftCols(d) = jh / denom;
  j.col(d) = jh * y / denom;  // dy/dt = q/(1-t)^2 = y/(1-t)
  return j;
}

struct SweepScratch {
  std::vector<int> order;
  std::vector<double> su;
  std::vector<double> vb;
  std::vector<double> theta;
};

// One rotation's slice sweep: mean 1-D p-cost over the columns of pa/pb
// (n x L projections, uniform weights) and, when wanted, the raw
// accumulator A[i] += sum over slices of d|u-v|^p/du * theta. Slices run
// sequentially so the accumulation order is fixed, and the per-slice cost
// goes through the same presorted kernel as the distance entry points so
// reported losses match them to the last bit.
double sweep_slices(const Mat& pa, const Mat& pb, const Mat& dirs, double p,
                    Mat* acc, double& min_gap, double& min_matched) {
  const Eigen::Index n = pa.rows();
  const Eigen::Index L = pa.cols();
  const Eigen::Index dp = dirs.cols();
  static thread_local SweepScratch scratch;
  auto& order = scratch.order;
  auto& su = scratch.su;
  auto& vb = scratch.vb;
  auto& theta = scratch.theta;
  order.resize(static_cast<std::size_t>(n));
  su.resize(static_cast<std::size_t>(n));
  vb.resize(static_cast<std::size_t>(n));
  theta.resize(static_cast<std::size_t>(dp));
  std::vector<double> terms(static_cast<std::size_t>(L));

  for (Eigen::Index l = 0; l < L; ++l) {
    const double* ua = &pa(0, l);
    const double* ub = &pb(0, l);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [ua](int i, int j) {
      if (ua[i] != ua[j]) return ua[i] < ua[j];
      return i < j;
    });
    std::copy(ub, ub + n, vb.begin());
    std::sort(vb.begin(), vb.end());
    for (Eigen::Index j = 0; j < dp; ++j)
      theta[static_cast<std::size_t>(j)] = dirs(l, j);

    double prev = -std::numeric_limits<double>::infinity();
    for (Eigen::Index m = 0; m < n; ++m) {
      const int idx = order[static_cast<std::size_t>(m)];
      const double u = ua[idx];
      const double diff = u - vb[static_cast<std::size_t>(m)];
      su[static_cast<std::size_t>(m)] = u;
      const double ad = std::abs(diff);
      if (ad < min_matched) min_matched = ad;
      if (m > 0 && u - prev < min_gap) min_gap = u - prev;
      prev = u;
      if (acc) {
        const double c = dpow(diff, p);
        for (Eigen::Index j = 0; j < dp; ++j)
          (*acc)(idx, j) += c * theta[static_cast<std::size_t>(j)];
      }
    }
    terms[static_cast<std::size_t>(l)] =
        detail::w1d_pow_presorted(su.data(), vb.data(),
                                  static_cast<std::size_t>(n), p);
  }
  return pairwise_sum(terms.data(), terms.size()) /
         static_cast<double>(L);
}

// Sorted (projection value, original index) entry; one 16-byte unit so the
// insertion shifts below move a single object.
struct RankEntry {
  double v;
  int i;
};

inline bool rank_less(const RankEntry& a, const RankEntry& b) {
  if (a.v != b.v) return a.v < b.v;
  return a.i < b.i;
}

struct AngleSweepScratch {
  std::vector<int> slice_order;
  std::vector<RankEntry> src, tgt;
  std::vector<double> sval, tval, cola, colb;
  std::vector<int> sidx, viol;
  std::vector<double> gbuf;  // interleaved (d/dx0, d/dx1) per source point
  std::vector<double> cbuf;  // per-slice gradient coefficients, column l at l*n
};

// Refresh the held values from one projection column (ranks kept) and
// record every position that fell behind its left neighbor. The append is
// branch-free; exact ties are flagged conservatively and re-checked during
// repair.
inline Eigen::Index refresh_mark(RankEntry* e, const double* col,
                                 Eigen::Index n, int* viol) {
  Eigen::Index cnt = 0;
  double prev = col[e[0].i];
  e[0].v = prev;
  for (Eigen::Index m = 1; m < n; ++m) {
    const double v = col[e[m].i];
    e[m].v = v;
    viol[cnt] = static_cast<int>(m);
    cnt += (v <= prev);
    prev = v;
  }
  return cnt;
}

// Insertion repair restricted to the marked positions; cost is the number
// of inversions, which neighboring directions keep small. A repaired
// position can leave the next element behind the shifted-in prefix
// maximum even though its own mark test passed, so each event extends
// rightward until order holds again; marks inside the stretch already
// covered are skipped.
inline void repair_marked(RankEntry* e, const int* viol, Eigen::Index cnt,
                          Eigen::Index n) {
  Eigen::Index done = 0;
  for (Eigen::Index t = 0; t < cnt; ++t) {
    Eigen::Index m = viol[t];
    if (m <= done) continue;
    while (m < n) {
      const RankEntry cur = e[m];
      if (!rank_less(cur, e[m - 1])) break;
      Eigen::Index j = m;
      do {
        e[j] = e[j - 1];
        --j;
      } while (j > 0 && rank_less(cur, e[j - 1]));
      e[j] = cur;
      ++m;
    }
    done = m;
  }
}

// Fast equivalent of sweep_slices for 2-D projections, taking the points
// themselves and projecting one slice at a time. Directions are visited in
// polar-angle order so each slice's sorted permutations can be maintained
// incrementally (a pair of points swaps ranks only when the direction
// crosses the normal of their difference, so total swap work is bounded by
// point pairs, not by slices x n log n). Projections go through the same
// column kernel as the distance path, per-slice costs through the same
// presorted kernel, and gradient contributions are applied per cell in
// slice storage order, so loss, grad, and tie diagnostics all match the
// generic sweep bit for bit. Direction draws are stored in angle order,
// which makes the visit order the storage order; arbitrary direction sets
// fall back to staging the coefficients and folding them in storage order
// afterwards.
double sweep_slices_angle(const Mat& ea, const Mat& eb, const Mat& dirs,
                          double p, Mat* acc, double& min_gap,
                          double& min_matched) {
  const Eigen::Index n = ea.rows();
  const Eigen::Index L = dirs.rows();
  static thread_local AngleSweepScratch s;
  s.slice_order.resize(static_cast<std::size_t>(L));
  s.src.resize(static_cast<std::size_t>(n));
  s.tgt.resize(static_cast<std::size_t>(n));
  s.sval.resize(static_cast<std::size_t>(n));
  s.tval.resize(static_cast<std::size_t>(n));
  s.cola.resize(static_cast<std::size_t>(n));
  s.colb.resize(static_cast<std::size_t>(n));
  s.sidx.resize(static_cast<std::size_t>(n));
  s.viol.resize(static_cast<std::size_t>(n));
  std::vector<double> terms(static_cast<std::size_t>(L));

  std::iota(s.slice_order.begin(), s.slice_order.end(), 0);
  std::sort(s.slice_order.begin(), s.slice_order.end(), [&](int a, int b) {
    double fa = std::atan2(dirs(a, 1), dirs(a, 0));
    double fb = std::atan2(dirs(b, 1), dirs(b, 0));
    if (fa != fb) return fa < fb;
    return a < b;
  });
  bool ordered = true;
  for (Eigen::Index k = 0; k < L; ++k)
    ordered = ordered && s.slice_order[static_cast<std::size_t>(k)] == k;
  if (acc) {
    if (ordered) {
      s.gbuf.assign(static_cast<std::size_t>(2 * n), 0.0);
    } else {
      s.cbuf.resize(static_cast<std::size_t>(n * L));
    }
  }

  const double* ea0 = ea.col(0).data();
  const double* ea1 = ea.col(1).data();
  const double* eb0 = eb.col(0).data();
  const double* eb1 = eb.col(1).data();
  for (Eigen::Index k = 0; k < L; ++k) {
    const int l = s.slice_order[static_cast<std::size_t>(k)];
    const double d0 = dirs(l, 0);
    const double d1 = dirs(l, 1);
    const double* ua = s.cola.data();
    const double* ub = s.colb.data();
    detail::project_col_2d(ea0, ea1, d0, d1, n, s.cola.data());
    detail::project_col_2d(eb0, eb1, d0, d1, n, s.colb.data());
    if (k == 0) {
      for (Eigen::Index m = 0; m < n; ++m) {
        s.src[static_cast<std::size_t>(m)] = {ua[m], static_cast<int>(m)};
        s.tgt[static_cast<std::size_t>(m)] = {ub[m], static_cast<int>(m)};
      }
      std::sort(s.src.begin(), s.src.end(), rank_less);
      std::sort(s.tgt.begin(), s.tgt.end(), rank_less);
    } else {
      Eigen::Index ca = refresh_mark(s.src.data(), ua, n, s.viol.data());
      repair_marked(s.src.data(), s.viol.data(), ca, n);
      Eigen::Index cb = refresh_mark(s.tgt.data(), ub, n, s.viol.data());
      repair_marked(s.tgt.data(), s.viol.data(), cb, n);
    }

    double* sv = s.sval.data();
    double* tv = s.tval.data();
    int* si = s.sidx.data();
    for (Eigen::Index m = 0; m < n; ++m) {
      sv[m] = s.src[static_cast<std::size_t>(m)].v;
      si[m] = s.src[static_cast<std::size_t>(m)].i;
    }
    for (Eigen::Index m = 0; m < n; ++m)
      tv[m] = s.tgt[static_cast<std::size_t>(m)].v;
    {
      Eigen::Map<const Eigen::ArrayXd> av(sv, n), bv(tv, n);
      min_matched = std::min(min_matched, (av - bv).abs().minCoeff());
      if (n > 1)
        min_gap = std::min(
            min_gap, (av.tail(n - 1) - av.head(n - 1)).minCoeff());
    }
    if (acc) {
      if (ordered) {
        double* g = s.gbuf.data();
        for (Eigen::Index m = 0; m < n; ++m) {
          const double c = dpow(sv[m] - tv[m], p);
          double* g2 = g + 2 * si[m];
          g2[0] += c * d0;
          g2[1] += c * d1;
        }
      } else {
        double* cl = s.cbuf.data() +
                     static_cast<std::size_t>(l) * static_cast<std::size_t>(n);
        for (Eigen::Index m = 0; m < n; ++m)
          cl[si[m]] = dpow(sv[m] - tv[m], p);
      }
    }
    terms[static_cast<std::size_t>(l)] =
        detail::w1d_pow_presorted(sv, tv, static_cast<std::size_t>(n), p);
  }

  if (acc) {
    if (ordered) {
      for (Eigen::Index i = 0; i < n; ++i) {
        (*acc)(i, 0) = s.gbuf[static_cast<std::size_t>(2 * i)];
        (*acc)(i, 1) = s.gbuf[static_cast<std::size_t>(2 * i + 1)];
      }
    } else {
      for (Eigen::Index l = 0; l < L; ++l) {
        const double* cl =
            s.cbuf.data() +
            static_cast<std::size_t>(l) * static_cast<std::size_t>(n);
        const double t0 = dirs(l, 0);
        const double t1 = dirs(l, 1);
        for (Eigen::Index i = 0; i < n; ++i) {
          (*acc)(i, 0) += cl[i] * t0;
          (*acc)(i, 1) += cl[i] * t1;
        }
      }
    }
  }
  return pairwise_sum(terms.data(), terms.size()) /
         static_cast<double>(L);
}

void check_engine_inputs(const Mat& xa, const Mat& xb, double p, double eps,
                         const LossDraw& draw) {
  if (xa.rows() == 0 || xb.rows() == 0)
    throw std::invalid_argument("empty point set");
  if (xa.cols() != xb.cols())
    throw std::invalid_argument("ambient dimension mismatch");
  if (xa.cols() < 2) throw std::invalid_argument("need at least 2 columns");
  if (xa.rows() != xb.rows())
    throw UnsupportedError(
        "gradients support equal-size uniform clouds only");
  if (!(p >= 1.0)) throw std::invalid_argument("p must be >= 1");
  if (draw.embedded && !(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("eps must lie in (0, 1)");
  if (draw.projections.empty())
    throw std::invalid_argument("draw needs at least one projection set");
  if (!draw.rotations.empty() && draw.projections.size() != 1 &&
      draw.projections.size() != draw.rotations.size())
    throw std::invalid_argument(
        "projection sets must be shared or one per rotation");
  const int amb = static_cast<int>(xa.cols());
  const int want_cols = draw.embedded ? amb - 1 : amb;
  const Eigen::Index L = draw.projections.front().dirs.rows();
  if (L == 0) throw std::invalid_argument("empty projection set");
  for (const auto& ps : draw.projections) {
    if (ps.dirs.rows() != L)
      throw std::invalid_argument("projection sets must share one L");
    if (ps.dirs.cols() != want_cols)
      throw std::invalid_argument("projection dimension mismatch");
  }
  for (const auto& rot : draw.rotations)
    if (rot.matrix.rows() != amb || rot.matrix.cols() != amb)
      throw std::invalid_argument("rotation dimension mismatch");
}

GradResult engine(const Mat& xa, const Mat& xb, double p, double eps,
                  const LossDraw& draw, bool want_grad) {
  check_engine_inputs(xa, xb, p, eps, draw);
  const Eigen::Index n = xa.rows();
  const int amb = static_cast<int>(xa.cols());
  const int d = amb - 1;
  const int dp = draw.embedded ? d : amb;
  const std::size_t nrot = draw.rotation_count();
  const bool rotated = !draw.rotations.empty();
  const Eigen::Index L = draw.projections.front().dirs.rows();

  std::vector<double> rot_loss(nrot, 0.0);
  std::vector<double> rot_gap(nrot, std::numeric_limits<double>::infinity());
  std::vector<double> rot_matched(nrot,
                                  std::numeric_limits<double>::infinity());
  std::vector<Mat> rot_grad(want_grad ? nrot : 0);

  parallel_for(nrot, [&](std::size_t r) {
    const Mat* rm = rotated ? &draw.rotations[r].matrix : nullptr;
    Mat xar = rotated ? Mat(xa * rm->transpose()) : xa;
    Mat xbr = rotated ? Mat(xb * rm->transpose()) : xb;
    const Mat& dirs = draw.projection_for(r).dirs;
    Mat ea = draw.embedded ? embed_rows(xar, eps) : xar;
    Mat eb = draw.embedded ? embed_rows(xbr, eps) : xbr;
    Mat acc;
    if (want_grad) acc = Mat::Zero(n, dp);
    // An out-of-order direction set makes the fast sweep stage n*L
    // coefficients; fall back to the generic sweep rather than risk an
    // oversized allocation.
    const bool by_angle =
        dp == 2 && detail::angle_sweep_enabled() &&
        (!want_grad || n * L <= (Eigen::Index(1) << 26));
    if (by_angle) {
      rot_loss[r] = sweep_slices_angle(ea, eb, dirs, p,
                                       want_grad ? &acc : nullptr, rot_gap[r],
                                       rot_matched[r]);
    } else {
      Mat pa = detail::project_points(ea, dirs);
      Mat pb = detail::project_points(eb, dirs);
      rot_loss[r] = sweep_slices(pa, pb, dirs, p, want_grad ? &acc : nullptr,
                                 rot_gap[r], rot_matched[r]);
    }
    if (!want_grad) return;
    Mat g(n, amb);
    if (!draw.embedded) {
      g = rotated ? Mat(acc * *rm) : std::move(acc);
    } else {
      for (Eigen::Index i = 0; i < n; ++i) {
        Mat j = jac_at(xar.row(i), eps, nullptr);
        Vec gz = j.transpose() * acc.row(i).transpose();
        if (rotated)
          g.row(i) = gz.transpose() * *rm;
        else
          g.row(i) = gz.transpose();
      }
    }
    rot_grad[r] = std::move(g);
  });

  GradResult out;
  out.loss_pow = pairwise_sum(rot_loss.data(), nrot) /
                 static_cast<double>(nrot);
  out.min_adjacent_gap = *std::min_element(rot_gap.begin(), rot_gap.end());
  out.min_matched_abs =
      *std::min_element(rot_matched.begin(), rot_matched.end());
  if (want_grad) {
    Mat g = std::move(rot_grad[0]);
    for (std::size_t r = 1; r < nrot; ++r) g += rot_grad[r];
    g *= 1.0 / (static_cast<double>(nrot) * static_cast<double>(L) *
                static_cast<double>(n));
    out.grad = std::move(g);
  }
  return out;
}

// k distinct indices out of n via a partial Fisher-Yates pass.
std::vector<Eigen::Index> sample_indices(std::size_t n, std::size_t k,
                                         Rng& rng) {
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.bounded(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

Mat gather_rows(const Mat& src, const std::vector<Eigen::Index>& idx) {
  Mat out(static_cast<Eigen::Index>(idx.size()), src.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = src.row(idx[i]);
  return out;
}

// Without-replacement mini-batch scheduler: a shuffled index pass per
// epoch, reshuffled whenever fewer than a full batch remains.
struct EpochSampler {
  std::vector<Eigen::Index> perm;
  std::size_t cursor;

  explicit EpochSampler(std::size_t n) : perm(n), cursor(n) {
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  }
  std::vector<Eigen::Index> draw(std::size_t b, Rng& rng) {
    if (cursor + b > perm.size()) {
      for (std::size_t i = perm.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.bounded(i));
        std::swap(perm[i - 1], perm[j]);
      }
      cursor = 0;
    }
    std::vector<Eigen::Index> out(perm.begin() + static_cast<std::ptrdiff_t>(cursor),
                                  perm.begin() + static_cast<std::ptrdiff_t>(cursor + b));
    cursor += b;
    return out;
  }
};

}  // namespace

namespace detail {

bool& angle_sweep_enabled() {
  static bool on = true;
  return on;
}

}  // namespace detail

Mat embed_jacobian_at(const Vec& x, double eps, bool* flagged) {
  if (x.size() < 2) throw std::invalid_argument("need at least 2 coordinates");
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("eps must lie in (0, 1)");
  if (flagged) *flagged = false;
  return jac_at(x.transpose(), eps, flagged);
}

Mat embed_jacobian(const SpherePoint& s, double eps, bool* flagged) {
  return embed_jacobian_at(s.coords, eps, flagged);
}

GradResult loss_and_grad(const Mat& particles, const Mat& target, double p,
                         double eps, const LossDraw& draw) {
  return engine(particles, target, p, eps, draw, true);
}

double loss_value(const Mat& particles, const Mat& target, double p,
                  double eps, const LossDraw& draw) {
  return engine(particles, target, p, eps, draw, false).loss_pow;
}

Mat s3w_grad(const ParticleCloud& cloud, const EmpiricalMeasure& nu,
             const S3WConfig& cfg, const ProjectionSet& proj) {
  cfg.validate();
  if (!nu.uniform)
    throw UnsupportedError("gradients support uniform weights only");
  if (nu.size() != cloud.size())
    throw UnsupportedError(
        "gradients support equal-size uniform clouds only");
  LossDraw draw;
  draw.projections.push_back(proj);
  draw.embedded = true;
  return engine(cloud.x, nu.points, cfg.p, cfg.eps, draw, true).grad;
}

ParticleCloud ParticleCloud::init_uniform(int d, std::size_t n, Rng& rng) {
  return ParticleCloud{sample_uniform_rows(d, n, rng)};
}

ParticleCloud pgd_step(const ParticleCloud& cloud, const Mat& grads, double lr,
                       FlowRetraction retraction, std::size_t* skipped) {
  if (grads.rows() != cloud.x.rows() || grads.cols() != cloud.x.cols())
    throw std::invalid_argument("gradient shape mismatch");
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  ParticleCloud out = cloud;
  for (Eigen::Index i = 0; i < cloud.x.rows(); ++i) {
    if ((grads.row(i).array() == 0.0).all()) continue;
    if (retraction == FlowRetraction::normalize) {
      Eigen::RowVectorXd moved = cloud.x.row(i) - lr * grads.row(i);
      double nrm = moved.norm();
      if (nrm == 0.0) {
        if (skipped) ++*skipped;
        continue;
      }
      out.x.row(i) = moved / nrm;
    } else {
      // Project to the tangent space, then follow the geodesic.
      Eigen::RowVectorXd xi = cloud.x.row(i);
      Eigen::RowVectorXd gt = grads.row(i) - grads.row(i).dot(xi) * xi;
      Eigen::RowVectorXd v = -lr * gt;
      double nv = v.norm();
      if (nv == 0.0) continue;
      Eigen::RowVectorXd moved = xi * std::cos(nv) + (v / nv) * std::sin(nv);
      double nrm = moved.norm();
      if (nrm == 0.0) {
        if (skipped) ++*skipped;
        continue;
      }
      out.x.row(i) = moved / nrm;
    }
  }
  return out;
}

AdamState AdamState::init(Eigen::Index rows, Eigen::Index cols) {
  AdamState st;
  st.m = Mat::Zero(rows, cols);
  st.v = Mat::Zero(rows, cols);
  st.t = 0;
  return st;
}

ParticleCloud adam_step_projected(const ParticleCloud& cloud, const Mat& grads,
                                  AdamState& state, double lr,
                                  std::size_t* skipped) {
  if (grads.rows() != cloud.x.rows() || grads.cols() != cloud.x.cols())
    throw std::invalid_argument("gradient shape mismatch");
  if (state.m.rows() != cloud.x.rows() || state.m.cols() != cloud.x.cols())
    throw std::invalid_argument("optimizer state shape mismatch");
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  state.t += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v =
      (state.beta2 * state.v.array() +
       (1.0 - state.beta2) * grads.array().square())
          .matrix();
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  Mat update =
      (lr * (state.m.array() / bc1) /
       ((state.v.array() / bc2).sqrt() + state.eps_adam))
          .matrix();
  ParticleCloud out = cloud;
  for (Eigen::Index i = 0; i < cloud.x.rows(); ++i) {
    if ((update.row(i).array() == 0.0).all()) continue;
    Eigen::RowVectorXd moved = cloud.x.row(i) - update.row(i);
    double nrm = moved.norm();
    if (nrm == 0.0) {
      if (skipped) ++*skipped;
      continue;
    }
    out.x.row(i) = moved / nrm;
  }
  return out;
}

void FlowConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (!(p >= 1.0)) throw std::invalid_argument("p must be >= 1");
  if (L == 0) throw std::invalid_argument("projection count must be >= 1");
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("eps must lie in (0, 1)");
  const bool rotating = loss == FlowLoss::ri_s3w || loss == FlowLoss::ari_s3w;
  if (rotating) {
    if (rot_to > 0) {
      if (rot_from == 0)
        throw std::invalid_argument("rotation ramp start must be >= 1");
    } else if (rotations == 0) {
      throw std::invalid_argument("rotation count must be >= 1");
    }
  }
  if (loss == FlowLoss::ari_s3w) {
    std::size_t peak = rot_to > 0 ? std::max(rot_from, rot_to) : rotations;
    if (pool_size < peak)
      throw std::invalid_argument("pool smaller than the rotation count");
  }
}

std::size_t FlowConfig::rotations_at(std::size_t step) const {
  if (rot_to == 0) return rotations;
  if (steps <= 1) return rot_to;
  double f = static_cast<double>(step) / static_cast<double>(steps - 1);
  double v = static_cast<double>(rot_from) +
             (static_cast<double>(rot_to) - static_cast<double>(rot_from)) * f;
  auto r = static_cast<std::size_t>(std::llround(v));
  return r == 0 ? 1 : r;
}

FlowTrace run_flow(const FlowConfig& cfg, const EmpiricalMeasure& target,
                   const VmfMixture* density, Rng& rng) {
  cfg.validate();
  const std::size_t m = target.size();
  if (m == 0) throw std::invalid_argument("empty target");
  const int d = target.sphere_dim();
  if (cfg.loss == FlowLoss::vsw && d < 2)
    throw UnsupportedError("vertical slicing needs d >= 2");
  const std::size_t n = cfg.particles > 0 ? cfg.particles : m;

  Rng r_init = rng.split(1);
  Rng r_pool = rng.split(2);
  Rng r_steps = rng.split(3);
  Rng r_eval = rng.split(4);

  using clock = std::chrono::steady_clock;
  FlowTrace trace;

  ParticleCloud cloud = ParticleCloud::init_uniform(d, n, r_init);

  RotationPool pool({Rotation{Mat::Identity(d + 1, d + 1)}});
  if (cfg.loss == FlowLoss::ari_s3w) {
    auto t0 = clock::now();
    pool = build_pool(d, cfg.pool_size, r_pool);
    trace.pool_gen_seconds =
        std::chrono::duration<double>(clock::now() - t0).count();
  }

  const std::size_t batch =
      cfg.batch > 0 && cfg.batch < std::min(n, m) ? cfg.batch : 0;
  EpochSampler particle_sampler(n);
  EpochSampler target_sampler(m);

  std::size_t w2_n = std::min({cfg.w2_subsample, n, m});
  trace.w2_subsample_used = w2_n;

  AdamState adam = AdamState::init(static_cast<Eigen::Index>(n), d + 1);

  trace.loss.reserve(cfg.steps);
  trace.cum_seconds.reserve(cfg.steps);
  trace.nll.assign(cfg.steps, std::numeric_limits<double>::quiet_NaN());
  trace.log_w2.assign(cfg.steps, std::numeric_limits<double>::quiet_NaN());

  double cum = 0.0;
  for (std::size_t k = 0; k < cfg.steps; ++k) {
    Rng rs = r_steps.split(k);
    auto t0 = clock::now();

    LossDraw draw;
    std::size_t nr = 1;
    switch (cfg.loss) {
      case FlowLoss::s3w:
        draw.projections.push_back(
            ProjectionSet::sample(d, cfg.L, rs));
        break;
      case FlowLoss::ri_s3w:
        nr = cfg.rotations_at(k);
        for (std::size_t r = 0; r < nr; ++r)
          draw.rotations.push_back(sample_rotation(d, rs));
        break;
      case FlowLoss::ari_s3w: {
        nr = cfg.rotations_at(k);
        for (std::size_t idx : pool.subsample(nr, rs))
          draw.rotations.push_back(pool.at(idx));
        break;
      }
      case FlowLoss::sw:
        draw.embedded = false;
        draw.projections.push_back(
            ProjectionSet::sample(d + 1, cfg.L, rs));
        break;
      case FlowLoss::vsw:
        draw.embedded = false;
        draw.projections.push_back(
            ProjectionSet{detail::equator_dirs(d + 1, cfg.L, rs), 0});
        break;
    }
    if (!draw.rotations.empty()) {
      std::size_t sets = cfg.share_projections ? 1 : nr;
      for (std::size_t s = 0; s < sets; ++s)
        draw.projections.push_back(ProjectionSet::sample(d, cfg.L, rs));
    }

    GradResult res;
    if (batch > 0) {
      auto pi = particle_sampler.draw(batch, rs);
      auto ti = target_sampler.draw(batch, rs);
      res = loss_and_grad(gather_rows(cloud.x, pi),
                          gather_rows(target.points, ti), cfg.p, cfg.eps,
                          draw);
      Mat full = Mat::Zero(static_cast<Eigen::Index>(n), d + 1);
      for (std::size_t i = 0; i < pi.size(); ++i)
        full.row(pi[i]) = res.grad.row(static_cast<Eigen::Index>(i));
      res.grad = std::move(full);
    } else {
      res = loss_and_grad(cloud.x, target.points, cfg.p, cfg.eps, draw);
    }
    if (res.min_adjacent_gap < kTieGap) ++trace.tie_steps;

    if (cfg.optimizer == FlowOptimizer::adam)
      cloud = adam_step_projected(cloud, res.grad, adam, cfg.lr,
                                  &trace.degenerate_steps);
    else
      cloud = pgd_step(cloud, res.grad, cfg.lr, cfg.retraction,
                       &trace.degenerate_steps);

    cum += std::chrono::duration<double>(clock::now() - t0).count();
    trace.loss.push_back(res.loss_pow);
    trace.cum_seconds.push_back(cum);

    const bool last = k + 1 == cfg.steps;
    const bool cadence =
        cfg.eval_every > 0 && (k + 1) % cfg.eval_every == 0;
    if (last || cadence) {
      Rng re = r_eval.split(k);
      if (density) trace.nll[k] = nll(cloud.x, *density);
      if (w2_n > 0) {
        Mat a = w2_n < n ? gather_rows(cloud.x, sample_indices(n, w2_n, re))
                         : cloud.x;
        Mat b = w2_n < m
                    ? gather_rows(target.points, sample_indices(m, w2_n, re))
                    : target.points;
        trace.log_w2[k] = std::log(detail::exact_w2_geodesic_rows(a, b));
      }
    }
  }
  trace.final_cloud = cloud.x;
  return trace;
}

}  // namespace s3w
