#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "blindrestore/grid.hpp"
#include "blindrestore/image.hpp"
#include "blindrestore/parallel.hpp"

namespace br {

struct RetinexConfig {
  double eta0 = 0.01;       // gray-world weight
  double eta1 = 0.02;       // non-local weight
  double bandwidth = 2.0;   // weight bandwidth h
  int window = 41;          // search window side L (odd)
  int patch_radius = 1;     // similarity patch radius
  double tau = 0.08;        // descent step
  int iter_max = 100;
  double log_floor = 1e-4;
  int weight_refresh = 5;   // sweeps between weight recomputations
  double eps_nl = 1e-6;     // sqrt smoothing
  double stop_tol = 1e-5;   // relative-change stopping tolerance

  void validate() const {
    if (eta0 <= 0 || eta1 < 0 || bandwidth <= 0 || tau <= 0 || log_floor <= 0 || eps_nl <= 0)
      throw ConfigError("retinex: parameters must be positive");
    if (window < 3 || window % 2 == 0) throw ConfigError("retinex: window must be odd and >= 3");
    if (patch_radius < 0) throw ConfigError("retinex: patch_radius must be >= 0");
    if (iter_max < 1) throw ConfigError("retinex: iter_max must be >= 1");
    if (weight_refresh < 1) throw ConfigError("retinex: weight_refresh must be >= 1");
  }
};

// Unbiased sample variance over the L x L window centered at (cy, cx); the
// window is shifted inward when it would leave the image.
inline double region_variance(const Image& img, int cy, int cx, int L) {
  if (L * L <= 1) throw ConfigError("region_variance: window must contain > 1 sample");
  if (L > img.width || L > img.height) throw ConfigError("region_variance: window exceeds image");
  const int y0 = std::clamp(cy - L / 2, 0, img.height - L);
  const int x0 = std::clamp(cx - L / 2, 0, img.width - L);
  double mean = 0.0;
  for (int y = 0; y < L; ++y)
    for (int x = 0; x < L; ++x) mean += img.at(y0 + y, x0 + x);
  mean /= static_cast<double>(L) * L;
  double acc = 0.0;
  for (int y = 0; y < L; ++y)
    for (int x = 0; x < L; ++x) {
      const double d = img.at(y0 + y, x0 + x) - mean;
      acc += d * d;
    }
  return acc / (static_cast<double>(L) * L - 1.0);
}

struct SharpWindow {
  int y = 0;
  int x = 0;
  double variance = 0.0;
};

// Stride-1 scan for the window with maximal variance; ties keep the smallest
// row-major origin. Summed-area tables keep it O(N).
inline SharpWindow select_sharp_window(const Image& img, int L) {
  if (L > img.width || L > img.height) throw ConfigError("select_sharp_window: window exceeds image");
  const int W = img.width, H = img.height;
  std::vector<double> s1(static_cast<std::size_t>(W + 1) * (H + 1), 0.0);
  std::vector<double> s2(s1.size(), 0.0);
  auto at1 = [&](int y, int x) -> double& { return s1[static_cast<std::size_t>(y) * (W + 1) + x]; };
  auto at2 = [&](int y, int x) -> double& { return s2[static_cast<std::size_t>(y) * (W + 1) + x]; };
  for (int y = 1; y <= H; ++y)
    for (int x = 1; x <= W; ++x) {
      const double v = img.at(y - 1, x - 1);
      at1(y, x) = v + at1(y - 1, x) + at1(y, x - 1) - at1(y - 1, x - 1);
      at2(y, x) = v * v + at2(y - 1, x) + at2(y, x - 1) - at2(y - 1, x - 1);
    }
  const double n = static_cast<double>(L) * L;
  SharpWindow best{0, 0, -1.0};
  for (int y = 0; y + L <= H; ++y)
    for (int x = 0; x + L <= W; ++x) {
      const double sum = at1(y + L, x + L) - at1(y, x + L) - at1(y + L, x) + at1(y, x);
      const double sq = at2(y + L, x + L) - at2(y, x + L) - at2(y + L, x) + at2(y, x);
      const double var = std::max(0.0, (sq - sum * sum / n) / (n - 1.0));
      if (var > best.variance) best = {y, x, var};
    }
  return best;
}

// Sparse non-local weights stored as one plane per window offset. Only the
// lexicographically positive half of the offsets is kept; w(x,y) = w(y,x) by
// construction so the other half is implied.
struct NonLocalWeights {
  int width = 0;
  int height = 0;
  int radius = 0;       // window = 2*radius+1
  int patch_radius = 1;
  struct Plane {
    int dy = 0;
    int dx = 0;
    std::vector<float> w;  // indexed by the base pixel; 0 where x+t leaves the image
  };
  std::vector<Plane> planes;

  // weight between two pixels (1 on the diagonal); outside the window -> 0
  double weight_between(int ay, int ax, int by, int bx) const {
    int dy = by - ay, dx = bx - ax;
    int oy = ay, ox = ax;
    if (dy == 0 && dx == 0) return 1.0;
    if (dy < 0 || (dy == 0 && dx < 0)) {
      dy = -dy;
      dx = -dx;
      oy = by;
      ox = bx;
    }
    if (dy > radius || std::abs(dx) > radius) return 0.0;
    for (const Plane& p : planes)
      if (p.dy == dy && p.dx == dx) return p.w[static_cast<std::size_t>(oy) * width + ox];
    return 0.0;
  }
};

// w(x,y) = exp(-d^2 / (2 h^2)) with d the Euclidean distance between the
// replicate-padded intensity patches around x and y.
inline NonLocalWeights compute_weights(const Image& logref, const RetinexConfig& cfg) {
  cfg.validate();
  const int W = logref.width, H = logref.height;
  const int R = cfg.window / 2;
  const int P = cfg.patch_radius;
  NonLocalWeights out;
  out.width = W;
  out.height = H;
  out.radius = R;
  out.patch_radius = P;
  for (int dy = 0; dy <= R; ++dy)
    for (int dx = -R; dx <= R; ++dx) {
      if (dy == 0 && dx <= 0) continue;
      out.planes.push_back({dy, dx, {}});
    }
  const double inv2h2 = 1.0 / (2.0 * cfg.bandwidth * cfg.bandwidth);
  auto clampAt = [&](int y, int x) {
    return logref.at(std::clamp(y, 0, H - 1), std::clamp(x, 0, W - 1));
  };
  parallel_for(0, static_cast<int>(out.planes.size()), [&](int pi) {
    auto& plane = out.planes[pi];
    plane.w.assign(static_cast<std::size_t>(W) * H, 0.0f);
    for (int y = 0; y < H; ++y) {
      const int yn = y + plane.dy;
      if (yn < 0 || yn >= H) continue;
      for (int x = 0; x < W; ++x) {
        const int xn = x + plane.dx;
        if (xn < 0 || xn >= W) continue;
        double d2 = 0.0;
        for (int py = -P; py <= P; ++py)
          for (int px = -P; px <= P; ++px) {
            const double d = clampAt(y + py, x + px) - clampAt(yn + py, xn + px);
            d2 += d * d;
          }
        plane.w[static_cast<std::size_t>(y) * W + x] = static_cast<float>(std::exp(-d2 * inv2h2));
      }
    }
  });
  return out;
}

namespace retinex_detail {

constexpr int kChunks = 16;  // fixed partitioning keeps reductions thread-count invariant

// S(x) = sum_{y in G_x} w(x,y) (r(x)-r(y))^2, accumulated over offset planes.
inline std::vector<double> nl_squares(const Image& rlog, const NonLocalWeights& Wt) {
  const int N = static_cast<int>(rlog.size());
  const int W = rlog.width;
  std::vector<std::vector<double>> part(kChunks);
  parallel_for(0, kChunks, [&](int c) {
    auto& S = part[c];
    S.assign(N, 0.0);
    for (std::size_t pi = c; pi < Wt.planes.size(); pi += kChunks) {
      const auto& plane = Wt.planes[pi];
      const int shift = plane.dy * W + plane.dx;
      const auto& w = plane.w;
      for (int i = 0; i < N; ++i) {
        const double wi = w[i];
        if (wi == 0.0) continue;
        const double d = rlog.data[i] - rlog.data[i + shift];
        const double v = wi * d * d;
        S[i] += v;
        S[i + shift] += v;
      }
    }
  });
  std::vector<double> S(N, 0.0);
  for (const auto& p : part)
    for (int i = 0; i < N; ++i) S[i] += p[i];
  return S;
}

}  // namespace retinex_detail

// Smoothed objective of the non-local Retinex model. The non-local term uses
// sqrt(S + eps) - sqrt(eps) per pixel so it vanishes exactly on constants
// while keeping the gradient defined everywhere.
inline double retinex_objective(const Image& rlog, const Image& glog, const NonLocalWeights& Wt,
                                const RetinexConfig& cfg) {
  require_same_size(rlog, glog, "retinex_objective");
  const double ln_half = std::log(0.5);
  Image e = rlog - glog;
  Gradient ge = gradient(e, Boundary::Symmetric);
  double fid = dot(ge.d1, ge.d1) + dot(ge.d2, ge.d2);
  double gray = 0.0;
  for (double v : rlog.data) {
    const double d = v - ln_half;
    gray += d * d;
  }
  const std::vector<double> S = retinex_detail::nl_squares(rlog, Wt);
  const double se = std::sqrt(cfg.eps_nl);
  double nl = 0.0;
  for (double s : S) nl += std::sqrt(s + cfg.eps_nl) - se;
  return fid + cfg.eta0 * gray + cfg.eta1 * nl;
}

// Exact gradient of the smoothed objective.
inline Image retinex_gradient(const Image& rlog, const Image& glog, const NonLocalWeights& Wt,
                              const RetinexConfig& cfg) {
  require_same_size(rlog, glog, "retinex_gradient");
  const double ln_half = std::log(0.5);
  Image e = rlog - glog;
  Gradient ge = gradient(e, Boundary::Symmetric);
  Image grad = -2.0 * divergence(ge.d1, ge.d2, Boundary::Symmetric);
  for (std::size_t i = 0; i < grad.size(); ++i)
    grad.data[i] += 2.0 * cfg.eta0 * (rlog.data[i] - ln_half);

  const int N = static_cast<int>(rlog.size());
  const int W = rlog.width;
  const std::vector<double> S = retinex_detail::nl_squares(rlog, Wt);
  std::vector<double> invV(N);
  for (int i = 0; i < N; ++i) invV[i] = 1.0 / std::sqrt(S[i] + cfg.eps_nl);

  std::vector<std::vector<double>> part(retinex_detail::kChunks);
  parallel_for(0, retinex_detail::kChunks, [&](int c) {
    auto& g = part[c];
    g.assign(N, 0.0);
    for (std::size_t pi = c; pi < Wt.planes.size(); pi += retinex_detail::kChunks) {
      const auto& plane = Wt.planes[pi];
      const int shift = plane.dy * W + plane.dx;
      const auto& w = plane.w;
      for (int i = 0; i < N; ++i) {
        const double wi = w[i];
        if (wi == 0.0) continue;
        const double d = rlog.data[i] - rlog.data[i + shift];
        const double c2 = wi * d * (invV[i] + invV[i + shift]);
        g[i] += c2;
        g[i + shift] -= c2;
      }
    }
  });
  for (const auto& p : part)
    for (int i = 0; i < N; ++i) grad.data[i] += cfg.eta1 * p[i];
  return grad;
}

struct RetinexTraceRow {
  int iteration = 0;
  double objective = 0.0;
  double max_rlog = 0.0;
};

struct RetinexResult {
  Image reflectance;   // r = exp(rlog), <= 1 by the projection
  Image illumination;  // l = exp(glog - rlog)
  std::vector<RetinexTraceRow> trace;
  int iterations = 0;
};

// Projected gradient descent on the smoothed objective, starting from the
// observed image; weights are re-estimated from the current iterate every
// weight_refresh sweeps. A sweep that would increase the objective halves its
// step; if no reduction is possible the iterate is converged.
inline RetinexResult correct_illumination(const Image& g, const RetinexConfig& cfg) {
  cfg.validate();
  const Image glog = to_log(g, cfg.log_floor);
  Image rlog = glog;
  for (double& v : rlog.data) v = std::min(v, 0.0);

  NonLocalWeights Wt = compute_weights(rlog, cfg);
  double obj = retinex_objective(rlog, glog, Wt, cfg);
  RetinexResult res;
  res.trace.push_back({0, obj, max_value(rlog)});

  int iter = 0;
  for (iter = 1; iter <= cfg.iter_max; ++iter) {
    if (iter > 1 && (iter - 1) % cfg.weight_refresh == 0) {
      Wt = compute_weights(rlog, cfg);
      obj = retinex_objective(rlog, glog, Wt, cfg);
    }
    const Image grad = retinex_gradient(rlog, glog, Wt, cfg);
    double tau = cfg.tau;
    Image cand;
    double cobj = 0.0;
    bool accepted = false;
    for (int halving = 0; halving < 30; ++halving) {
      cand = rlog;
      for (std::size_t i = 0; i < cand.size(); ++i)
        cand.data[i] = std::min(cand.data[i] - tau * grad.data[i], 0.0);
      cobj = retinex_objective(cand, glog, Wt, cfg);
      if (cobj <= obj) {
        accepted = true;
        break;
      }
      tau *= 0.5;
    }
    if (!accepted) break;  // no descent direction left at any step
    if (!all_finite(cand)) throw NumericalError("retinex: non-finite iterate");
    const double rel = norm_l2(cand - rlog) / std::max(norm_l2(rlog), 1e-12);
    rlog = std::move(cand);
    obj = cobj;
    res.trace.push_back({iter, obj, max_value(rlog)});
    if (rel <= cfg.stop_tol) break;
  }
  res.iterations = std::min(iter, cfg.iter_max);

  res.reflectance = Image(g.width, g.height);
  res.illumination = Image(g.width, g.height);
  for (std::size_t i = 0; i < rlog.size(); ++i) {
    res.reflectance.data[i] = std::exp(rlog.data[i]);
    res.illumination.data[i] = std::exp(glog.data[i] - rlog.data[i]);
  }
  return res;
}

}  // namespace br
