#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <vector>

#include "blindrestore/fft.hpp"
#include "blindrestore/image.hpp"

namespace br {

// ---------------------------------------------------------------------------
// Maximally flat half-band machinery. A_n(cos w) rises from 0 at w = pi to 1
// at w = 0 with A_n(c) + A_n(-c) = 1; it is the single transition profile the
// whole filter bank is built from.
// ---------------------------------------------------------------------------

inline double maxflat_halfband_amplitude(double c, int order) {
  const double y = 0.5 * (1.0 - c);
  double pow1my = 1.0;
  for (int i = 0; i < order; ++i) pow1my *= (1.0 - y);
  double binom = 1.0;  // C(order-1+k, k)
  double sum = 0.0;
  double yk = 1.0;
  for (int k = 0; k < order; ++k) {
    if (k > 0) {
      binom = binom * (order - 1 + k) / k;
      yk *= y;
    }
    sum += binom * yk;
  }
  return pow1my * sum;
}

// 2-D half-band filter with diamond support: the McClellan transform of the
// 1-D maximally flat half-band filter, cos w -> (cos w1 + cos w2)/2.
struct PyramidFilter {
  int order = 0;
  int size = 0;  // odd; taps indexed [-size/2, size/2]^2, row-major
  std::vector<double> taps;

  double tap(int k1, int k2) const {
    const int h = size / 2;
    return taps[static_cast<std::size_t>(k1 + h) * size + (k2 + h)];
  }

  // zero-phase frequency response (real by symmetry)
  double response(double w1, double w2) const {
    const int h = size / 2;
    double acc = 0.0;
    for (int k1 = -h; k1 <= h; ++k1)
      for (int k2 = -h; k2 <= h; ++k2) acc += tap(k1, k2) * std::cos(k1 * w1 + k2 * w2);
    return acc;
  }
};

namespace shearlet_detail {

// Chebyshev coefficients of A_n(cos w) = sum_m a_m cos(m w); the amplitude is
// a trigonometric polynomial of degree 2n-1, recovered exactly by sampling.
inline std::vector<double> chebyshev_coeffs(int order) {
  const int deg = 2 * order - 1;
  const int M = 8 * (deg + 1);
  std::vector<double> a(deg + 1, 0.0);
  for (int m = 0; m <= deg; ++m) {
    double acc = 0.0;
    for (int j = 0; j < M; ++j) {
      const double w = 2.0 * std::numbers::pi * j / M;
      acc += maxflat_halfband_amplitude(std::cos(w), order) * std::cos(m * w);
    }
    a[m] = (m == 0 ? 1.0 : 2.0) * acc / M;
  }
  return a;
}

// small centered 2-D grids used for the Chebyshev recursion
struct Grid2 {
  int half = 0;
  std::vector<double> v;  // (2*half+1)^2

  explicit Grid2(int h = 0) : half(h), v(static_cast<std::size_t>(2 * h + 1) * (2 * h + 1), 0.0) {}
  double& at(int y, int x) { return v[static_cast<std::size_t>(y + half) * (2 * half + 1) + (x + half)]; }
  double at(int y, int x) const {
    return v[static_cast<std::size_t>(y + half) * (2 * half + 1) + (x + half)];
  }
};

inline Grid2 conv_mcclellan(const Grid2& g) {
  // convolution with the diamond kernel: 1/4 at the four axis neighbors
  Grid2 out(g.half + 1);
  for (int y = -g.half; y <= g.half; ++y)
    for (int x = -g.half; x <= g.half; ++x) {
      const double q = 0.25 * g.at(y, x);
      out.at(y - 1, x) += q;
      out.at(y + 1, x) += q;
      out.at(y, x - 1) += q;
      out.at(y, x + 1) += q;
    }
  return out;
}

inline Grid2 pad_to(const Grid2& g, int half) {
  Grid2 out(half);
  for (int y = -g.half; y <= g.half; ++y)
    for (int x = -g.half; x <= g.half; ++x) out.at(y, x) = g.at(y, x);
  return out;
}

}  // namespace shearlet_detail

inline PyramidFilter build_pyramid_filter(int order) {
  if (order < 1) throw ConfigError("pyramid filter order must be >= 1");
  using shearlet_detail::Grid2;
  const auto a = shearlet_detail::chebyshev_coeffs(order);
  const int deg = static_cast<int>(a.size()) - 1;
  Grid2 acc(deg);
  Grid2 t_prev(deg);  // T_0 = delta
  t_prev.at(0, 0) = 1.0;
  Grid2 t_cur(deg);  // T_1 = kernel
  t_cur.at(-1, 0) = t_cur.at(1, 0) = t_cur.at(0, -1) = t_cur.at(0, 1) = 0.25;
  for (std::size_t i = 0; i < acc.v.size(); ++i) acc.v[i] = a[0] * t_prev.v[i];
  for (int m = 1; m <= deg; ++m) {
    for (std::size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += a[m] * t_cur.v[i];
    if (m < deg) {
      Grid2 t_next = shearlet_detail::pad_to(shearlet_detail::conv_mcclellan(t_cur), deg);
      for (std::size_t i = 0; i < t_next.v.size(); ++i) t_next.v[i] = 2.0 * t_next.v[i] - t_prev.v[i];
      t_prev = std::move(t_cur);
      t_cur = std::move(t_next);
    }
  }
  PyramidFilter q;
  q.order = order;
  q.size = 2 * deg + 1;
  q.taps = std::move(acc.v);
  return q;
}

// ---------------------------------------------------------------------------
// Fan filters: the pyramid amplitude evaluated on the pseudopolar warp, plus
// the Cartesian cone responses obtained by half-band modulation.
// ---------------------------------------------------------------------------

struct FanFilterPair {
  int N = 0;
  PyramidFilter q;
  // literal grids on the pseudopolar index domain m_x in [-N,N], m_y in [-N/2,N/2]
  std::vector<double> bv, bh;  // (N+1) rows (m_y) x (2N+1) cols (m_x)

  double bv_at(int mx, int my) const {
    return bv[static_cast<std::size_t>(my + N / 2) * (2 * N + 1) + (mx + N)];
  }
  double bh_at(int mx, int my) const {
    return bh[static_cast<std::size_t>(my + N / 2) * (2 * N + 1) + (mx + N)];
  }

  // analytic continuations of the two modulated sums
  double bv_formula(double mx, double my) const {
    const double pi = std::numbers::pi;
    return q.response(2.0 * pi * mx * my / (static_cast<double>(N) * N), pi * my / N);
  }
  double bh_formula(double mx, double my) const {
    const double pi = std::numbers::pi;
    return q.response(pi * my / N, 2.0 * pi * mx * my / (static_cast<double>(N) * N));
  }

  // Cartesian cone responses: the diamond passband modulated onto the
  // vertical / horizontal frequency cones.
  double cartesian_bv(double w1, double w2) const {
    return q.response(w1, w2 + std::numbers::pi);
  }
  double cartesian_bh(double w1, double w2) const {
    return q.response(w1 + std::numbers::pi, w2);
  }
};

inline FanFilterPair build_fan_filters(const PyramidFilter& q, int N) {
  if (N < 2 || (N & (N - 1)) != 0) throw ConfigError("fan filter N must be a power of two");
  FanFilterPair fan;
  fan.N = N;
  fan.q = q;
  const int rows = N + 1, cols = 2 * N + 1;
  fan.bv.resize(static_cast<std::size_t>(rows) * cols);
  fan.bh.resize(fan.bv.size());
  for (int my = -N / 2; my <= N / 2; ++my)
    for (int mx = -N; mx <= N; ++mx) {
      const std::size_t i = static_cast<std::size_t>(my + N / 2) * cols + (mx + N);
      fan.bv[i] = fan.bv_formula(mx, my);
      fan.bh[i] = fan.bh_formula(mx, my);
    }
  return fan;
}

// Piecewise combination of the two fan banks on the Cartesian index grid,
// 2N-periodic along the horizontal coordinate (one period covers 2 pi). The
// two branches agree at the xi1 = -N seam; a raised-cosine cross-fade over a
// 2-sample band keeps the assembly continuous there regardless.
struct CombinedFan {
  int N = 0;
  FanFilterPair fan;

  // raw piecewise definition: zero outside the two stated rectangles
  double value(double xi1, double xi2) const {
    if (xi2 < -N || xi2 > N) return 0.0;
    if (xi1 < -2 * N || xi1 > 0) return 0.0;
    const double b1 = fan.bv_formula(xi1 + 1.5 * N, xi2);
    const double b2 = fan.bh_formula(-0.5 * N - xi1, xi2);
    if (xi1 < -N - 1.0) return b1;
    if (xi1 > -N + 1.0) return b2;
    const double t = (xi1 + N + 1.0) / 2.0;
    const double c = 0.5 * (1.0 - std::cos(std::numbers::pi * t));
    return (1.0 - c) * b1 + c * b2;
  }

  double periodic(double xi1, double xi2) const {
    double p = std::fmod(xi1, 2.0 * N);
    if (p > 0) p -= 2.0 * N;
    return value(p, xi2);
  }
};

inline CombinedFan combine_fan(const FanFilterPair& fan) { return {fan.N, fan}; }

// ---------------------------------------------------------------------------
// The non-subsampled shearlet system: J dyadic scale bands x `shears`
// orientation wedges plus one residual low-pass, sampled on the image-sized
// DFT grid. Windows are built from the same maximally flat amplitude as the
// pyramid filter in square-partition pairs, so sum_i |H_i|^2 == 1 and the
// dual-frame reconstruction is exact.
// ---------------------------------------------------------------------------

struct ShearletSystem {
  int width = 0;
  int height = 0;
  int levels = 0;      // J
  int shears = 0;      // directional subbands per level
  int fan_size = 0;
  int q_order = 0;
  struct SubbandInfo {
    int scale;  // 1 = finest ... J = coarsest; 0 for the low-pass
    int shear;  // wedge index 0..shears-1; -1 for the low-pass
  };
  std::vector<SubbandInfo> info;
  std::vector<std::vector<double>> symbol;  // real transfer function per subband
  std::vector<double> frame_symbol;         // sum_i |H_i|^2

  int subband_count() const { return static_cast<int>(symbol.size()); }
};

struct SubbandStack {
  int width = 0;
  int height = 0;
  std::vector<Image> bands;
};

namespace shearlet_detail {

// pseudo-angle coordinate with period 4 covering all orientations:
// eta = w2/w1 on the horizontal cone, 2 - w1/w2 on the vertical cone
inline double cone_coordinate(double w1, double w2) {
  if (std::fabs(w1) >= std::fabs(w2)) return w1 == 0.0 ? 0.0 : w2 / w1;
  return 2.0 - w1 / w2;
}

inline double wrap4(double d) {
  d = std::fmod(d + 2.0, 4.0);
  if (d < 0) d += 4.0;
  return d - 2.0;
}

// smooth low-pass energy profile: 1 below c/2, maxflat transition, 0 above c
inline double lowpass_energy(double rho, double cutoff, int order) {
  if (rho <= 0.5 * cutoff) return 1.0;
  if (rho >= cutoff) return 0.0;
  const double u = (rho - 0.5 * cutoff) / (0.5 * cutoff);
  return maxflat_halfband_amplitude(std::cos(std::numbers::pi * u), order);
}

}  // namespace shearlet_detail

inline ShearletSystem build_system(int width, int height, int levels, int shears, int fan_size) {
  if (levels < 1) throw ConfigError("shearlet levels must be >= 1");
  if (shears != 4 && shears != 8 && shears != 16)
    throw ConfigError("shears_per_level must be 4, 8 or 16");
  if (width < (1 << levels) * 4 || height < (1 << levels) * 4)
    throw ConfigError("image too small for the requested number of levels");
  if (fan_size < 7 || fan_size % 2 == 0) throw ConfigError("fan_size must be odd and >= 7");

  ShearletSystem sys;
  sys.width = width;
  sys.height = height;
  sys.levels = levels;
  sys.shears = shears;
  sys.fan_size = fan_size;
  sys.q_order = std::max(1, (fan_size + 1) / 4);

  const int nbands = levels * shears + 1;
  const std::size_t n = static_cast<std::size_t>(width) * height;
  sys.symbol.assign(nbands, std::vector<double>(n, 0.0));
  sys.info.resize(nbands);
  for (int j = 1; j <= levels; ++j)
    for (int k = 0; k < shears; ++k) sys.info[(j - 1) * shears + k] = {j, k};
  sys.info[nbands - 1] = {0, -1};

  const double pi = std::numbers::pi;
  const double s = 4.0 / shears;  // wedge spacing in the cone coordinate
  const int na = sys.q_order;     // angular transition order (ties to the fan filters)
  const int nr = 2;               // radial transition order

  std::vector<double> cutoffs(levels + 1);
  for (int j = 1; j <= levels; ++j) cutoffs[j] = pi * std::pow(2.0, 1 - j);

  sys.frame_symbol.assign(n, 0.0);
  for (int v = 0; v < height; ++v) {
    const int sv = v <= height / 2 ? v : v - height;
    const double w2 = 2.0 * pi * sv / height;
    for (int u = 0; u < width; ++u) {
      const int su = u <= width / 2 ? u : u - width;
      const double w1 = 2.0 * pi * su / width;
      const std::size_t i = static_cast<std::size_t>(v) * width + u;
      const double rho = std::hypot(w1, w2);
      const double eta = shearlet_detail::cone_coordinate(w1, w2);

      double lp_prev = 1.0;  // L_{j-1}^2
      double dir_energy = 0.0;
      for (int j = 1; j <= levels; ++j) {
        const double lp = shearlet_detail::lowpass_energy(rho, cutoffs[j], nr);
        const double band = std::sqrt(std::max(0.0, lp_prev - lp));
        lp_prev = lp;
        if (band == 0.0) continue;
        for (int k = 0; k < shears; ++k) {
          const double center = -1.0 + k * s;
          const double d = shearlet_detail::wrap4(eta - center);
          if (std::fabs(d) >= s) continue;
          const double ang = maxflat_halfband_amplitude(std::cos(pi * d / s), na);
          const double h = band * std::sqrt(ang);
          sys.symbol[(j - 1) * shears + k][i] = h;
          dir_energy += h * h;
        }
      }
      const double low = std::sqrt(std::max(0.0, 1.0 - dir_energy));
      sys.symbol[nbands - 1][i] = low;
      sys.frame_symbol[i] = dir_energy + low * low;
    }
  }
  return sys;
}

// Per subband: coefficients = IFFT(H_i . fhat). Non-subsampled, so every
// subband is image-sized and the transform commutes with circular shifts.
inline SubbandStack dnst_forward(const Image& img, const ShearletSystem& sys) {
  if (img.width != sys.width || img.height != sys.height)
    throw ConfigError("dnst_forward: image dimensions do not match the system");
  const std::vector<Complex> fi = fft2(img);
  SubbandStack stack;
  stack.width = sys.width;
  stack.height = sys.height;
  stack.bands.reserve(sys.subband_count());
  std::vector<Complex> tmp(fi.size());
  for (int b = 0; b < sys.subband_count(); ++b) {
    const auto& h = sys.symbol[b];
    for (std::size_t i = 0; i < fi.size(); ++i) tmp[i] = fi[i] * h[i];
    stack.bands.push_back(ifft2_real(tmp, sys.width, sys.height));
  }
  return stack;
}

// Exact adjoint: sum_i IFFT(conj(H_i) . What_i); symbols are real.
inline Image dnst_adjoint(const SubbandStack& stack, const ShearletSystem& sys) {
  if (stack.width != sys.width || stack.height != sys.height ||
      static_cast<int>(stack.bands.size()) != sys.subband_count())
    throw ConfigError("dnst_adjoint: stack does not match the system");
  std::vector<Complex> acc(static_cast<std::size_t>(sys.width) * sys.height, Complex(0, 0));
  for (int b = 0; b < sys.subband_count(); ++b) {
    const std::vector<Complex> wb = fft2(stack.bands[b]);
    const auto& h = sys.symbol[b];
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += h[i] * wb[i];
  }
  return ifft2_real(acc, sys.width, sys.height);
}

// Dual-frame synthesis: divide the adjoint by the frame symbol.
inline Image dnst_reconstruct(const SubbandStack& stack, const ShearletSystem& sys) {
  if (stack.width != sys.width || stack.height != sys.height ||
      static_cast<int>(stack.bands.size()) != sys.subband_count())
    throw ConfigError("dnst_reconstruct: stack does not match the system");
  std::vector<Complex> acc(static_cast<std::size_t>(sys.width) * sys.height, Complex(0, 0));
  for (int b = 0; b < sys.subband_count(); ++b) {
    const std::vector<Complex> wb = fft2(stack.bands[b]);
    const auto& h = sys.symbol[b];
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += h[i] * wb[i];
  }
  for (std::size_t i = 0; i < acc.size(); ++i) {
    if (sys.frame_symbol[i] < 1e-12)
      throw NumericalError("dnst_reconstruct: frame admissibility violated");
    acc[i] /= sys.frame_symbol[i];
  }
  return ifft2_real(acc, sys.width, sys.height);
}

// Coefficient dump: one file per subband, a one-line text header followed by
// raw little-endian float32 samples, row-major.
inline void save_subband(const Image& band, const ShearletSystem::SubbandInfo& info, int index,
                         const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << "subband " << index << " scale " << info.scale << " shear " << info.shear << " "
      << band.width << " " << band.height << "\n";
  for (double v : band.data) {
    const float f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), sizeof(f));
  }
  if (!out) throw IoError(path + ": write failed");
}

}  // namespace br
