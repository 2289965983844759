#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "blindrestore/convolve.hpp"
#include "blindrestore/fft.hpp"
#include "blindrestore/grid.hpp"
#include "blindrestore/image.hpp"
#include "blindrestore/parallel.hpp"
#include "blindrestore/patch.hpp"
#include "blindrestore/retinex.hpp"
#include "blindrestore/shearlet.hpp"
#include "blindrestore/tgv.hpp"

namespace br {

struct RestoreConfig {
  // reconstruction functional
  double gamma = 0.25;   // kernel sparsity
  double lambda = 0.1;   // shearlet weight (0.1 noisy, 0.01 noise-free)
  double beta0 = 300.0;  // shearlet penalty
  double beta1 = 1e-3;   // gradient penalty
  double beta2 = 1e-5;   // symmetrized-derivative penalty
  double beta = 1.0;     // dual step, must stay below (sqrt(5)+1)/2

  // stopping rules
  double residual_tol = 1e-4;  // T_r on the element-normalized squared residual
  double change_tol = 1e-5;    // T_t on ||f+ - f||^2 / ||f||^2
  int max_admm_iters = 200;

  // kernel schedule
  int kernel_size_init = 3;
  int kernel_size_max = 21;
  int max_outer_iters = 10;
  int kernel_burn_in = 5;
  int kernel_update_every = 1;
  int max_kernel_iters = 300;
  double kernel_tol = 1e-6;
  double ring_mass_stop = 1e-3;

  // inner (f,p) alternation
  int inner_sweeps = 5;
  double inner_tol = 1e-6;
  double cg_tol = 1e-8;
  int cg_max_iters = 200;

  // structure-adaptive TGV
  WeightBounds tgv;
  double tensor_sigma = 1.0;
  double chi = 0.025;

  // shearlet system
  int levels = 4;
  int shears = 8;
  int fan_size = 17;

  // pipeline
  int patch_size = 64;
  int overlap = 32;
  bool estimate_kernel = true;  // false: non-blind debug mode (kernel stays fixed)
  bool retinex_enabled = true;  // false: skip the correction stage (UCD protocol)
  bool keep_trace = false;

  void validate() const {
    if (beta <= 0 || beta >= 0.5 * (std::sqrt(5.0) + 1.0))
      throw ConfigError("restore: beta must lie in (0, (sqrt(5)+1)/2)");
    if (gamma < 0 || lambda < 0 || beta0 <= 0 || beta1 <= 0 || beta2 <= 0)
      throw ConfigError("restore: penalties must be positive");
    if (residual_tol <= 0 || change_tol <= 0) throw ConfigError("restore: thresholds must be positive");
    if (kernel_size_init % 2 == 0 || kernel_size_max % 2 == 0 || kernel_size_init < 1 ||
        kernel_size_init > kernel_size_max)
      throw ConfigError("restore: kernel sizes must be odd with init <= max");
    if (max_admm_iters < 1 || max_outer_iters < 1) throw ConfigError("restore: iteration caps must be >= 1");
    if (overlap < 0 || overlap >= patch_size) throw ConfigError("restore: 0 <= overlap < patch_size");
    tgv.validate();
  }
};

// All splitting variables, duals and iterates of one patch solve.
struct AdmmState {
  Image f;
  VectorField p;
  BlurKernel kernel;
  SubbandStack W, Wd;   // shearlet splits and scaled duals
  VectorField Y, Yd;    // gradient splits and duals
  SymTensorField V, Vd; // symmetrized-derivative splits and duals
  int iteration = 0;
  std::vector<double> residual_history;
};

struct Residuals {
  double w = 0, y = 0, v = 0;  // per-block squared sums
  double total = 0;            // squared l2, normalized by total element count
};

// --------------------------------------------------------------------------
// elementwise shrinkage
// --------------------------------------------------------------------------

inline double soft_threshold(double v, double t) {
  if (t < 0) throw ConfigError("soft_threshold: negative threshold");
  const double m = std::fabs(v) - t;
  return m > 0 ? (v > 0 ? m : -m) : 0.0;
}

inline Image soft_threshold(const Image& v, double t) {
  Image out(v.width, v.height);
  for (std::size_t i = 0; i < v.size(); ++i) out.data[i] = soft_threshold(v.data[i], t);
  return out;
}

inline Image soft_threshold(const Image& v, const Image& t) {
  require_same_size(v, t, "soft_threshold");
  Image out(v.width, v.height);
  for (std::size_t i = 0; i < v.size(); ++i) out.data[i] = soft_threshold(v.data[i], t.data[i]);
  return out;
}

// Euclidean projection onto { k >= 0, sum k = 1 }.
inline void project_simplex(std::vector<double>& v) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  int rho = 0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0) {
      rho = static_cast<int>(j + 1);
      theta = t;
    }
  }
  if (rho == 0) {  // all mass gone; fall back to the uniform point
    std::fill(v.begin(), v.end(), 1.0 / v.size());
    return;
  }
  for (double& x : v) x = std::max(x - theta, 0.0);
}

inline void project_kernel(BlurKernel& k) {
  project_simplex(k.weights);
}

// Bilinear stretch of a centered kernel onto a larger odd support.
inline BlurKernel upsample_kernel(const BlurKernel& k, int new_size) {
  if (new_size == k.size) return k;
  BlurKernel out(new_size);
  const double c_new = (new_size - 1) / 2.0;
  const double c_old = (k.size - 1) / 2.0;
  const double scale = new_size > 1 ? static_cast<double>(k.size - 1) / (new_size - 1) : 1.0;
  for (int y = 0; y < new_size; ++y)
    for (int x = 0; x < new_size; ++x) {
      const double oy = c_old + (y - c_new) * scale;
      const double ox = c_old + (x - c_new) * scale;
      const int y0 = static_cast<int>(std::floor(oy));
      const int x0 = static_cast<int>(std::floor(ox));
      const double fy = oy - y0, fx = ox - x0;
      double acc = 0.0;
      for (int dy = 0; dy <= 1; ++dy)
        for (int dx = 0; dx <= 1; ++dx) {
          const int yy = y0 + dy, xx = x0 + dx;
          if (yy < 0 || yy >= k.size || xx < 0 || xx >= k.size) continue;
          acc += k.at(yy, xx) * (dy ? fy : 1 - fy) * (dx ? fx : 1 - fx);
        }
      out.at(y, x) = std::max(acc, 0.0);
    }
  normalize(out);
  return out;
}

namespace solver_detail {

inline void init_vector_field(VectorField& v, int w, int h) {
  v.p1 = Image(w, h);
  v.p2 = Image(w, h);
}

inline void init_tensor_field(SymTensorField& t, int w, int h) {
  t.e11 = Image(w, h);
  t.e12 = Image(w, h);
  t.e22 = Image(w, h);
}

inline void init_stack(SubbandStack& s, int w, int h, int bands) {
  s.width = w;
  s.height = h;
  s.bands.assign(bands, Image(w, h));
}

// symmetric-tensor inner product with the off-diagonal counted twice
inline double tensor_dot(const SymTensorField& a, const SymTensorField& b) {
  return dot(a.e11, b.e11) + 2.0 * dot(a.e12, b.e12) + dot(a.e22, b.e22);
}

inline double vec_dot(const VectorField& a, const VectorField& b) {
  return dot(a.p1, b.p1) + dot(a.p2, b.p2);
}

}  // namespace solver_detail

inline AdmmState make_admm_state(const Image& r_patch, const ShearletSystem& sys,
                                 const RestoreConfig& cfg) {
  AdmmState st;
  const int w = r_patch.width, h = r_patch.height;
  st.f = r_patch;
  st.p.p1 = diff_v(st.f, Boundary::Periodic);
  st.p.p2 = diff_h(st.f, Boundary::Periodic);
  st.kernel = BlurKernel::delta(cfg.kernel_size_init);
  solver_detail::init_stack(st.W, w, h, sys.subband_count());
  solver_detail::init_stack(st.Wd, w, h, sys.subband_count());
  solver_detail::init_vector_field(st.Y, w, h);
  solver_detail::init_vector_field(st.Yd, w, h);
  solver_detail::init_tensor_field(st.V, w, h);
  solver_detail::init_tensor_field(st.Vd, w, h);
  return st;
}

// --------------------------------------------------------------------------
// Eq. 26: the three shrinkage blocks
// --------------------------------------------------------------------------

inline void update_splits(AdmmState& st, const ShearletSystem& sys, const AdaptiveWeights& w,
                          const RestoreConfig& cfg) {
  const SubbandStack psif = dnst_forward(st.f, sys);
  const double tw = cfg.lambda / cfg.beta0;
  for (int b = 0; b < sys.subband_count(); ++b)
    st.W.bands[b] = soft_threshold(psif.bands[b] + st.Wd.bands[b], tw);

  Image ty(st.f.width, st.f.height), tv(st.f.width, st.f.height);
  for (std::size_t i = 0; i < ty.size(); ++i) {
    ty.data[i] = w.alpha1.data[i] / cfg.beta1;
    tv.data[i] = w.alpha0.data[i] / cfg.beta2;
  }
  const Image g1 = diff_v(st.f, Boundary::Periodic);
  const Image g2 = diff_h(st.f, Boundary::Periodic);
  st.Y.p1 = soft_threshold(g1 - st.p.p1 + st.Yd.p1, ty);
  st.Y.p2 = soft_threshold(g2 - st.p.p2 + st.Yd.p2, ty);
  const SymTensorField ep = epsilon_op(st.p, Boundary::Periodic);
  st.V.e11 = soft_threshold(ep.e11 + st.Vd.e11, tv);
  st.V.e12 = soft_threshold(ep.e12 + st.Vd.e12, tv);
  st.V.e22 = soft_threshold(ep.e22 + st.Vd.e22, tv);
}

// --------------------------------------------------------------------------
// Eq. 27: alternating exact solves for f (per-frequency) and p (CG)
// --------------------------------------------------------------------------

inline double eq27_value(const AdmmState& st, const Image& r, const ShearletSystem& sys,
                         const RestoreConfig& cfg) {
  const Image kf = convolve_fft(st.f, st.kernel);
  double acc = 0.5 * ssd(kf, r);
  const SubbandStack psif = dnst_forward(st.f, sys);
  for (int b = 0; b < sys.subband_count(); ++b)
    acc += 0.5 * cfg.beta0 * ssd(st.W.bands[b] - psif.bands[b], st.Wd.bands[b]);
  const Image g1 = diff_v(st.f, Boundary::Periodic);
  const Image g2 = diff_h(st.f, Boundary::Periodic);
  Image y1 = st.Y.p1 - (g1 - st.p.p1) - st.Yd.p1;
  Image y2 = st.Y.p2 - (g2 - st.p.p2) - st.Yd.p2;
  acc += 0.5 * cfg.beta1 * (dot(y1, y1) + dot(y2, y2));
  const SymTensorField ep = epsilon_op(st.p, Boundary::Periodic);
  SymTensorField d;
  d.e11 = st.V.e11 - ep.e11 - st.Vd.e11;
  d.e12 = st.V.e12 - ep.e12 - st.Vd.e12;
  d.e22 = st.V.e22 - ep.e22 - st.Vd.e22;
  acc += 0.5 * cfg.beta2 * solver_detail::tensor_dot(d, d);
  return acc;
}

inline void solve_image_and_p(AdmmState& st, const Image& r, const ShearletSystem& sys,
                              const RestoreConfig& cfg) {
  const int W = r.width, H = r.height;
  const std::size_t n = r.size();
  const std::vector<Complex> khat = kernel_otf(st.kernel, W, H);
  const std::vector<Complex> rhat = fft2(r);

  // static part of the normal-equation right-hand side (data + shearlet blocks)
  std::vector<Complex> num_static(n);
  for (std::size_t i = 0; i < n; ++i) num_static[i] = std::conj(khat[i]) * rhat[i];
  for (int b = 0; b < sys.subband_count(); ++b) {
    const std::vector<Complex> wb = fft2(st.W.bands[b] - st.Wd.bands[b]);
    const auto& h = sys.symbol[b];
    for (std::size_t i = 0; i < n; ++i) num_static[i] += cfg.beta0 * h[i] * wb[i];
  }

  // per-frequency symbols of the difference operators and the denominator
  std::vector<Complex> s1(n), s2(n);
  std::vector<double> denom(n);
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      const std::size_t i = static_cast<std::size_t>(v) * W + u;
      s1[i] = diff_symbol(v, H);
      s2[i] = diff_symbol(u, W);
      denom[i] = std::norm(khat[i]) + cfg.beta0 * sys.frame_symbol[i] +
                 cfg.beta1 * (std::norm(s1[i]) + std::norm(s2[i]));
      if (!(denom[i] > 0.0) || !std::isfinite(denom[i]))
        throw NumericalError("solve_image_and_p: non-finite or singular Fourier symbol");
    }

  for (int sweep = 0; sweep < cfg.inner_sweeps; ++sweep) {
    // (a) f-solve, exact per frequency
    Image a1 = st.Y.p1 - st.Yd.p1 + st.p.p1;
    Image a2 = st.Y.p2 - st.Yd.p2 + st.p.p2;
    const std::vector<Complex> a1h = fft2(a1);
    const std::vector<Complex> a2h = fft2(a2);
    std::vector<Complex> num(n);
    for (std::size_t i = 0; i < n; ++i)
      num[i] = (num_static[i] + cfg.beta1 * (std::conj(s1[i]) * a1h[i] + std::conj(s2[i]) * a2h[i])) /
               denom[i];
    Image f_new = ifft2_real(num, W, H);
    const double rel = std::sqrt(ssd(f_new, st.f)) / std::max(norm_l2(st.f), 1e-12);
    st.f = std::move(f_new);

    // (b) p-solve: (beta1 I + beta2 eps* eps) p = rhs, matrix-free CG
    const Image g1 = diff_v(st.f, Boundary::Periodic);
    const Image g2 = diff_h(st.f, Boundary::Periodic);
    SymTensorField vd;
    vd.e11 = st.V.e11 - st.Vd.e11;
    vd.e12 = st.V.e12 - st.Vd.e12;
    vd.e22 = st.V.e22 - st.Vd.e22;
    const VectorField ev = epsilon_adjoint(vd, Boundary::Periodic);
    VectorField rhs;
    rhs.p1 = Image(W, H);
    rhs.p2 = Image(W, H);
    for (std::size_t i = 0; i < n; ++i) {
      rhs.p1.data[i] = cfg.beta1 * (g1.data[i] - st.Y.p1.data[i] + st.Yd.p1.data[i]) +
                       cfg.beta2 * ev.p1.data[i];
      rhs.p2.data[i] = cfg.beta1 * (g2.data[i] - st.Y.p2.data[i] + st.Yd.p2.data[i]) +
                       cfg.beta2 * ev.p2.data[i];
    }
    auto apply = [&](const VectorField& x) {
      const VectorField ee = epsilon_adjoint(epsilon_op(x, Boundary::Periodic), Boundary::Periodic);
      VectorField out;
      out.p1 = Image(W, H);
      out.p2 = Image(W, H);
      for (std::size_t i = 0; i < n; ++i) {
        out.p1.data[i] = cfg.beta1 * x.p1.data[i] + cfg.beta2 * ee.p1.data[i];
        out.p2.data[i] = cfg.beta1 * x.p2.data[i] + cfg.beta2 * ee.p2.data[i];
      }
      return out;
    };
    VectorField res = rhs;
    {
      const VectorField ap = apply(st.p);
      for (std::size_t i = 0; i < n; ++i) {
        res.p1.data[i] -= ap.p1.data[i];
        res.p2.data[i] -= ap.p2.data[i];
      }
    }
    VectorField dir = res;
    double rs = solver_detail::vec_dot(res, res);
    const double stop = cfg.cg_tol * std::max(1.0, std::sqrt(solver_detail::vec_dot(rhs, rhs)));
    for (int it = 0; it < cfg.cg_max_iters && std::sqrt(rs) > stop; ++it) {
      const VectorField ad = apply(dir);
      const double alpha = rs / solver_detail::vec_dot(dir, ad);
      for (std::size_t i = 0; i < n; ++i) {
        st.p.p1.data[i] += alpha * dir.p1.data[i];
        st.p.p2.data[i] += alpha * dir.p2.data[i];
        res.p1.data[i] -= alpha * ad.p1.data[i];
        res.p2.data[i] -= alpha * ad.p2.data[i];
      }
      const double rs_new = solver_detail::vec_dot(res, res);
      const double beta_cg = rs_new / rs;
      rs = rs_new;
      for (std::size_t i = 0; i < n; ++i) {
        dir.p1.data[i] = res.p1.data[i] + beta_cg * dir.p1.data[i];
        dir.p2.data[i] = res.p2.data[i] + beta_cg * dir.p2.data[i];
      }
    }
    if (rel <= cfg.inner_tol) break;
  }
  if (!all_finite(st.f)) throw NumericalError("solve_image_and_p: non-finite image iterate");
}

// --------------------------------------------------------------------------
// Eq. 28: kernel subproblem by FISTA on mean-centered data, step 1/L with
// L = max |fhat|^2, followed by the nonnegative + unit-mass projection.
// --------------------------------------------------------------------------

inline BlurKernel solve_kernel(const Image& f, const Image& r, double gamma, int kernel_size,
                               const BlurKernel* warm_start = nullptr, int max_iters = 300,
                               double tol = 1e-6) {
  require_same_size(f, r, "solve_kernel");
  if (kernel_size < 1 || kernel_size % 2 == 0) throw ConfigError("solve_kernel: size must be odd");
  if (kernel_size > std::min(f.width, f.height))
    throw ConfigError("solve_kernel: kernel larger than patch");

  const int W = f.width, H = f.height;
  const std::size_t n = f.size();
  const double mf = mean_value(f), mr = mean_value(r);
  Image fc(W, H), rc(W, H);
  for (std::size_t i = 0; i < n; ++i) {
    fc.data[i] = f.data[i] - mf;
    rc.data[i] = r.data[i] - mr;
  }
  const std::vector<Complex> fhat = fft2(fc);
  const std::vector<Complex> rhat = fft2(rc);
  double lip = 0.0;
  for (const Complex& c : fhat) lip = std::max(lip, std::norm(c));
  if (lip < 1e-18) throw NumericalError("solve_kernel: image has no texture to fit a kernel");
  const double step = 1.0 / lip;

  const int S = kernel_size, c = S / 2;
  auto image_index = [&](int ky, int kx) {
    const int yy = ((ky - c) % H + H) % H;
    const int xx = ((kx - c) % W + W) % W;
    return static_cast<std::size_t>(yy) * W + xx;
  };

  std::vector<double> k(static_cast<std::size_t>(S) * S, 0.0);
  if (warm_start && warm_start->size == S)
    k = warm_start->weights;
  else if (warm_start)
    k = upsample_kernel(*warm_start, S).weights;
  else
    k[static_cast<std::size_t>(c) * S + c] = 1.0;

  std::vector<double> z = k, k_prev = k;
  double t = 1.0;
  Image emb(W, H);
  const double thresh = gamma * step;
  for (int it = 0; it < max_iters; ++it) {
    std::fill(emb.data.begin(), emb.data.end(), 0.0);
    for (int ky = 0; ky < S; ++ky)
      for (int kx = 0; kx < S; ++kx) emb.data[image_index(ky, kx)] = z[static_cast<std::size_t>(ky) * S + kx];
    std::vector<Complex> khat = fft2(emb);
    for (std::size_t i = 0; i < n; ++i) khat[i] = std::conj(fhat[i]) * (fhat[i] * khat[i] - rhat[i]);
    const Image grad = ifft2_real(khat, W, H);

    k_prev = k;
    for (int ky = 0; ky < S; ++ky)
      for (int kx = 0; kx < S; ++kx) {
        const std::size_t ki = static_cast<std::size_t>(ky) * S + kx;
        k[ki] = soft_threshold(z[ki] - step * grad.data[image_index(ky, kx)], thresh);
      }
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    double dn = 0.0, kn = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
      const double d = k[i] - k_prev[i];
      dn += d * d;
      kn += k_prev[i] * k_prev[i];
      z[i] = k[i] + (t - 1.0) / t_new * (k[i] - k_prev[i]);
    }
    t = t_new;
    if (std::sqrt(dn) <= tol * std::max(std::sqrt(kn), 1e-12)) break;
  }

  BlurKernel out(S);
  out.weights = std::move(k);
  project_kernel(out);
  return out;
}

// --------------------------------------------------------------------------
// Eq. 29: dual ascent; the increments are exactly beta times the primal
// residuals, which double as the stopping signal.
// --------------------------------------------------------------------------

inline Residuals update_duals(AdmmState& st, const ShearletSystem& sys, const RestoreConfig& cfg) {
  Residuals res;
  const SubbandStack psif = dnst_forward(st.f, sys);
  for (int b = 0; b < sys.subband_count(); ++b) {
    Image d = psif.bands[b] - st.W.bands[b];
    res.w += dot(d, d);
    for (std::size_t i = 0; i < d.size(); ++i)
      st.Wd.bands[b].data[i] += cfg.beta * d.data[i];
  }
  const Image g1 = diff_v(st.f, Boundary::Periodic);
  const Image g2 = diff_h(st.f, Boundary::Periodic);
  Image dy1 = g1 - st.p.p1 - st.Y.p1;
  Image dy2 = g2 - st.p.p2 - st.Y.p2;
  res.y = dot(dy1, dy1) + dot(dy2, dy2);
  for (std::size_t i = 0; i < dy1.size(); ++i) {
    st.Yd.p1.data[i] += cfg.beta * dy1.data[i];
    st.Yd.p2.data[i] += cfg.beta * dy2.data[i];
  }
  const SymTensorField ep = epsilon_op(st.p, Boundary::Periodic);
  SymTensorField dv;
  dv.e11 = ep.e11 - st.V.e11;
  dv.e12 = ep.e12 - st.V.e12;
  dv.e22 = ep.e22 - st.V.e22;
  res.v = solver_detail::tensor_dot(dv, dv);
  for (std::size_t i = 0; i < dv.e11.size(); ++i) {
    st.Vd.e11.data[i] += cfg.beta * dv.e11.data[i];
    st.Vd.e12.data[i] += cfg.beta * dv.e12.data[i];
    st.Vd.e22.data[i] += cfg.beta * dv.e22.data[i];
  }
  const double count = static_cast<double>(st.f.size()) * (sys.subband_count() + 2 + 4);
  res.total = (res.w + res.y + res.v) / count;
  return res;
}

// primal residual without touching the duals (diagnostics / tests)
inline Residuals primal_residual(const AdmmState& st, const ShearletSystem& sys) {
  Residuals res;
  const SubbandStack psif = dnst_forward(st.f, sys);
  for (int b = 0; b < sys.subband_count(); ++b) {
    const Image d = psif.bands[b] - st.W.bands[b];
    res.w += dot(d, d);
  }
  const Image g1 = diff_v(st.f, Boundary::Periodic);
  const Image g2 = diff_h(st.f, Boundary::Periodic);
  const Image dy1 = g1 - st.p.p1 - st.Y.p1;
  const Image dy2 = g2 - st.p.p2 - st.Y.p2;
  res.y = dot(dy1, dy1) + dot(dy2, dy2);
  const SymTensorField ep = epsilon_op(st.p, Boundary::Periodic);
  SymTensorField dv;
  dv.e11 = ep.e11 - st.V.e11;
  dv.e12 = ep.e12 - st.V.e12;
  dv.e22 = ep.e22 - st.V.e22;
  res.v = solver_detail::tensor_dot(dv, dv);
  const double count = static_cast<double>(st.f.size()) * (sys.subband_count() + 2 + 4);
  res.total = (res.w + res.y + res.v) / count;
  return res;
}

// Augmented Lagrangian of Eq. 25 in scaled form (diagnostics / tests).
inline double lagrangian_value(const AdmmState& st, const Image& r, const ShearletSystem& sys,
                               const AdaptiveWeights& w, const RestoreConfig& cfg) {
  double acc = eq27_value(st, r, sys, cfg);
  double kl1 = 0.0;
  for (double v : st.kernel.weights) kl1 += std::fabs(v);
  acc += cfg.gamma * kl1;
  for (int b = 0; b < sys.subband_count(); ++b)
    for (double v : st.W.bands[b].data) acc += cfg.lambda * std::fabs(v);
  for (std::size_t i = 0; i < st.f.size(); ++i) {
    acc += w.alpha1.data[i] * (std::fabs(st.Y.p1.data[i]) + std::fabs(st.Y.p2.data[i]));
    acc += w.alpha0.data[i] * (std::fabs(st.V.e11.data[i]) + 2.0 * std::fabs(st.V.e12.data[i]) +
                               std::fabs(st.V.e22.data[i]));
  }
  return acc;
}

// --------------------------------------------------------------------------
// Patch-level driver: coarse-to-fine kernel support with ADMM sweeps
// --------------------------------------------------------------------------

struct AdmmTraceRow {
  int kernel_size = 0;
  int sweep = 0;
  double res_w = 0, res_y = 0, res_v = 0, res_total = 0;
  double rel_change = 0;
};

struct PatchRestoreResult {
  Image f;
  BlurKernel kernel;
  int iterations = 0;
  double final_residual = 0;
  std::vector<AdmmTraceRow> trace;
};

namespace solver_detail {

inline double boundary_ring_mass(const BlurKernel& k) {
  double m = 0.0;
  for (int y = 0; y < k.size; ++y)
    for (int x = 0; x < k.size; ++x)
      if (y == 0 || x == 0 || y == k.size - 1 || x == k.size - 1) m += k.at(y, x);
  return m;
}

}  // namespace solver_detail

inline PatchRestoreResult restore_patch(const Image& r_patch, const AdaptiveWeights& weights,
                                        const ShearletSystem& sys, const RestoreConfig& cfg,
                                        const BlurKernel* fixed_kernel = nullptr) {
  cfg.validate();
  // the adaptive weights for a patch solve are its field means
  const double a0 = mean_value(weights.alpha0);
  const double a1 = mean_value(weights.alpha1);
  AdaptiveWeights wbar;
  wbar.bounds = weights.bounds;
  wbar.alpha0 = Image(r_patch.width, r_patch.height, a0);
  wbar.alpha1 = Image(r_patch.width, r_patch.height, a1);

  AdmmState st = make_admm_state(r_patch, sys, cfg);
  if (fixed_kernel) st.kernel = *fixed_kernel;

  PatchRestoreResult out;
  double res_min = std::numeric_limits<double>::infinity();
  int grow_count = 0;
  int total_sweeps = 0;
  double last_res = 0.0;

  for (;;) {
    int diverging = 0;
    for (int sweep = 1; sweep <= cfg.max_admm_iters; ++sweep) {
      const Image f_prev = st.f;
      update_splits(st, sys, wbar, cfg);
      solve_image_and_p(st, r_patch, sys, cfg);
      const Residuals res = update_duals(st, sys, cfg);
      if (cfg.estimate_kernel && !fixed_kernel && sweep > cfg.kernel_burn_in &&
          (sweep - cfg.kernel_burn_in - 1) % cfg.kernel_update_every == 0)
        st.kernel = solve_kernel(st.f, r_patch, cfg.gamma, st.kernel.size, &st.kernel,
                                 cfg.max_kernel_iters, cfg.kernel_tol);
      ++total_sweeps;
      ++st.iteration;
      const double rel = ssd(st.f, f_prev) / std::max(dot(f_prev, f_prev), 1e-12);
      st.residual_history.push_back(res.total);
      last_res = res.total;
      if (cfg.keep_trace)
        out.trace.push_back({st.kernel.size, total_sweeps, res.w, res.y, res.v, res.total, rel});

      res_min = std::min(res_min, res.total);
      diverging = res.total > 10.0 * res_min ? diverging + 1 : 0;
      if (diverging >= 20) throw NumericalError("restore_patch: ADMM residual diverging");
      if (res.total <= cfg.residual_tol && rel <= cfg.change_tol) break;
    }
    ++grow_count;
    if (fixed_kernel || !cfg.estimate_kernel) break;
    if (st.kernel.size >= cfg.kernel_size_max || grow_count >= cfg.max_outer_iters) break;
    if (solver_detail::boundary_ring_mass(st.kernel) < cfg.ring_mass_stop) break;
    st.kernel = upsample_kernel(st.kernel, st.kernel.size + 2);
  }

  out.f = std::move(st.f);
  out.kernel = std::move(st.kernel);
  out.iterations = total_sweeps;
  out.final_residual = last_res;
  return out;
}

// --------------------------------------------------------------------------
// Full pipeline: partition -> per-patch correction -> per-patch blind
// restoration -> plain-averaging merge.
// --------------------------------------------------------------------------

struct PatchReport {
  int index = 0;
  int origin_y = 0, origin_x = 0;
  BlurKernel kernel;
  int iterations = 0;
  double final_residual = 0;
  int kernel_size = 0;
};

struct RestoreResult {
  Image image;
  PatchGrid grid;
  std::vector<PatchReport> patches;
  std::vector<std::vector<AdmmTraceRow>> traces;  // filled when cfg.keep_trace
};

inline RestoreResult restore_image(const Image& g, const RetinexConfig& retinex_cfg,
                                   const RestoreConfig& cfg) {
  cfg.validate();
  retinex_cfg.validate();
  if (min_value(g) < 0.0 || max_value(g) > 1.0)
    throw ConfigError("restore_image: input must lie in [0,1]");
  const PatchGrid grid = make_patch_grid(g.width, g.height, cfg.patch_size, cfg.overlap);
  const ShearletSystem sys =
      build_system(grid.patch_size, grid.patch_size, cfg.levels, cfg.shears, cfg.fan_size);

  RestoreResult out;
  out.grid = grid;
  out.patches.resize(grid.count());
  out.traces.resize(cfg.keep_trace ? grid.count() : 0);
  std::vector<Image> restored(grid.count());
  std::vector<std::string> failures(grid.count());

  parallel_for(0, grid.count(), [&](int i) {
    try {
      Image patch = extract_patch(g, grid, i);
      Image corrected = patch;
      if (cfg.retinex_enabled) corrected = correct_illumination(patch, retinex_cfg).reflectance;
      const StructureTensorField tensor = structure_tensor(corrected, cfg.tensor_sigma);
      const Image e = indicator(tensor, cfg.chi);
      const AdaptiveWeights w = adaptive_weights(e, cfg.tgv);
      PatchRestoreResult pr = restore_patch(corrected, w, sys, cfg);
      restored[i] = clamp01(std::move(pr.f));
      out.patches[i] = {i, grid.origins[i].first, grid.origins[i].second, pr.kernel,
                        pr.iterations, pr.final_residual, pr.kernel.size};
      if (cfg.keep_trace) out.traces[i] = std::move(pr.trace);
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  });
  for (int i = 0; i < grid.count(); ++i)
    if (!failures[i].empty())
      throw NumericalError("patch " + std::to_string(i) + ": " + failures[i]);

  out.image = merge(restored, grid);
  return out;
}

// Non-blind debug mode: single whole-image patch, fixed kernel, small fixed
// regularization. Shared by the error-ratio metric.
inline Image nonblind_deconvolve(const Image& g, const BlurKernel& kernel, const RestoreConfig& base) {
  RestoreConfig cfg = base;
  cfg.estimate_kernel = false;
  cfg.retinex_enabled = false;
  cfg.kernel_size_init = kernel.size;
  cfg.kernel_size_max = kernel.size;
  int lv = cfg.levels;
  while (lv > 1 && ((1 << lv) * 4 > g.width || (1 << lv) * 4 > g.height)) --lv;
  cfg.levels = lv;
  const ShearletSystem sys = build_system(g.width, g.height, cfg.levels, cfg.shears, cfg.fan_size);
  AdaptiveWeights w;
  w.bounds = cfg.tgv;
  w.alpha0 = Image(g.width, g.height, cfg.tgv.alpha0_min);
  w.alpha1 = Image(g.width, g.height, cfg.tgv.alpha1_min);
  PatchRestoreResult pr = restore_patch(g, w, sys, cfg, &kernel);
  return clamp01(std::move(pr.f));
}

}  // namespace br
