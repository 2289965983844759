#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "blindrestore/convolve.hpp"
#include "blindrestore/image.hpp"

namespace br {

enum class IlluminationKind { None, Horizontal, Vertical, Gaussian };

struct DegradationSpec {
  BlurKernel kernel = BlurKernel::delta(1);
  IlluminationKind illumination = IlluminationKind::None;
  double min_level = 0.3;   // darkest multiplier of the illumination field
  double noise_sigma = 0.0; // additive Gaussian noise std on the [0,1] scale
  std::uint64_t seed = 0;

  void validate() const {
    if (illumination != IlluminationKind::None && (min_level <= 0.0 || min_level >= 1.0))
      throw ConfigError("degrade: min_level must lie in (0,1)");
    if (noise_sigma < 0.0 || noise_sigma >= 0.5)
      throw ConfigError("degrade: noise_sigma must lie in [0, 0.5)");
  }
};

// Anti-aliased motion segment of the given length and direction, rasterized
// into an odd support. Point symmetry about the center is enforced exactly.
inline BlurKernel synth_motion_kernel(double length, double angle_deg, int size) {
  if (length < 1.0) throw ConfigError("synth_motion_kernel: length must be >= 1");
  if (size < 1 || size % 2 == 0) throw ConfigError("synth_motion_kernel: size must be odd");
  if (length > size) throw ConfigError("synth_motion_kernel: length exceeds support");
  BlurKernel k(size);
  const double c = (size - 1) / 2.0;
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double dx = std::cos(theta), dy = -std::sin(theta);
  const int samples = std::max(1, static_cast<int>(std::ceil(length * 16)));
  const double half = (length - 1.0) / 2.0;
  for (int s = 0; s < samples; ++s) {
    const double t = samples == 1 ? 0.0 : -half + (2.0 * half) * s / (samples - 1);
    const double px = c + t * dx, py = c + t * dy;
    const int x0 = static_cast<int>(std::floor(px));
    const int y0 = static_cast<int>(std::floor(py));
    const double fx = px - x0, fy = py - y0;
    for (int oy = 0; oy <= 1; ++oy)
      for (int ox = 0; ox <= 1; ++ox) {
        const int x = x0 + ox, y = y0 + oy;
        if (x < 0 || x >= size || y < 0 || y >= size) continue;
        k.at(y, x) += (oy ? fy : 1 - fy) * (ox ? fx : 1 - fx);
      }
  }
  // exact 180-degree symmetry about the center
  BlurKernel sym(size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      sym.at(y, x) = 0.5 * (k.at(y, x) + k.at(size - 1 - y, size - 1 - x));
  normalize(sym);
  return sym;
}

// Multiplicative illumination field with values in [min_level, 1].
inline Image synth_illumination(IlluminationKind kind, int width, int height, double min_level) {
  if (kind != IlluminationKind::None && (min_level <= 0.0 || min_level >= 1.0))
    throw ConfigError("synth_illumination: min_level must lie in (0,1)");
  Image l(width, height, 1.0);
  switch (kind) {
    case IlluminationKind::None:
      break;
    case IlluminationKind::Horizontal:
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
          l.at(y, x) = width > 1 ? min_level + (1.0 - min_level) * x / (width - 1) : 1.0;
      break;
    case IlluminationKind::Vertical:
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
          l.at(y, x) = height > 1 ? min_level + (1.0 - min_level) * y / (height - 1) : 1.0;
      break;
    case IlluminationKind::Gaussian: {
      const double cy = (height - 1) / 2.0, cx = (width - 1) / 2.0;
      const double dmax2 = cy * cy + cx * cx;
      const double lnmin = std::log(min_level);
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
          const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
          l.at(y, x) = std::exp(lnmin * (dmax2 > 0 ? d2 / dmax2 : 0.0));
        }
      break;
    }
  }
  return l;
}

namespace degrade_detail {

// Box-Muller on top of mt19937_64 keeps the noise stream independent of the
// standard library's distribution internals.
struct GaussianRng {
  std::mt19937_64 rng;
  bool has_spare = false;
  double spare = 0.0;

  explicit GaussianRng(std::uint64_t seed) : rng(seed) {}

  double uniform01() {
    return ((rng() >> 11) + 0.5) * (1.0 / 9007199254740992.0);  // (0,1)
  }

  double normal() {
    if (has_spare) {
      has_spare = false;
      return spare;
    }
    const double u1 = uniform01(), u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare = r * std::sin(a);
    has_spare = true;
    return r * std::cos(a);
  }
};

}  // namespace degrade_detail

// Forward model: clamp(K conv (truth . l) + n, 0, 1); illumination applied
// before the blur, noise drawn from the seeded generator.
inline Image degrade(const Image& truth, const DegradationSpec& spec) {
  spec.validate();
  validate_kernel(spec.kernel, spec.kernel.size);
  Image lit = truth;
  if (spec.illumination != IlluminationKind::None) {
    const Image l = synth_illumination(spec.illumination, truth.width, truth.height, spec.min_level);
    for (std::size_t i = 0; i < lit.size(); ++i) lit.data[i] *= l.data[i];
  }
  Image out = spec.kernel.size > 1 ? convolve_fft(lit, spec.kernel) : lit;
  if (spec.noise_sigma > 0.0) {
    degrade_detail::GaussianRng rng(spec.seed);
    for (double& v : out.data) v += spec.noise_sigma * rng.normal();
  }
  return clamp01(std::move(out));
}

}  // namespace br
