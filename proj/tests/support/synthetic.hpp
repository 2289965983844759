#pragma once

// Deterministic synthetic scenes used as bundled test imagery. Every scene is
// normalized to geometric mean 0.5 (the gray-world term of the correction
// stage pins corrected log-means to ln 0.5, so truth images follow the same
// convention) and kept inside [0.05, 0.97].

#include <cmath>
#include <random>

#include "blindrestore/image.hpp"

namespace testsupport {

inline void normalize_geometric_mean(br::Image& img, double target = 0.5) {
  for (int pass = 0; pass < 3; ++pass) {
    double lm = 0.0;
    for (double v : img.data) lm += std::log(std::max(v, 1e-4));
    lm /= static_cast<double>(img.size());
    const double scale = std::exp(std::log(target) - lm);
    for (double& v : img.data) v = std::clamp(v * scale, 0.05, 0.97);
  }
}

// textured terrain-like scene: smooth blobs, a gentle trend, fine texture
inline br::Image terrain(int w, int h, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  br::Image img(w, h, 0.45);
  const int blobs = 12;
  struct Blob {
    double cy, cx, r, amp;
  };
  std::vector<Blob> bs;
  for (int i = 0; i < blobs; ++i)
    bs.push_back({u(rng) * h, u(rng) * w, (0.08 + 0.22 * u(rng)) * std::min(w, h),
                  (u(rng) - 0.5) * 0.5});
  const double fx = 2.0 + 6.0 * u(rng), fy = 2.0 + 6.0 * u(rng);
  const double tex = 0.035 + 0.03 * u(rng);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = img.at(y, x);
      v += 0.08 * (static_cast<double>(x) / w - 0.5) + 0.05 * (static_cast<double>(y) / h - 0.5);
      for (const Blob& b : bs) {
        const double d2 = (y - b.cy) * (y - b.cy) + (x - b.cx) * (x - b.cx);
        v += b.amp * std::exp(-d2 / (2.0 * b.r * b.r));
      }
      v += tex * std::sin(2.0 * 3.14159265358979 * fx * x / w) *
           std::cos(2.0 * 3.14159265358979 * fy * y / h);
      img.at(y, x) = v;
    }
  normalize_geometric_mean(img);
  return img;
}

// piecewise-constant cartoon: flat discs and rectangles on a flat background
inline br::Image cartoon(int w, int h, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  br::Image img(w, h, 0.35);
  for (int i = 0; i < 6; ++i) {
    const double cy = u(rng) * h, cx = u(rng) * w;
    const double r = (0.06 + 0.18 * u(rng)) * std::min(w, h);
    const double val = 0.1 + 0.8 * u(rng);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if ((y - cy) * (y - cy) + (x - cx) * (x - cx) < r * r) img.at(y, x) = val;
  }
  for (int i = 0; i < 3; ++i) {
    const int y0 = static_cast<int>(u(rng) * h * 0.7);
    const int x0 = static_cast<int>(u(rng) * w * 0.7);
    const int hh = 4 + static_cast<int>(u(rng) * h * 0.25);
    const int ww = 4 + static_cast<int>(u(rng) * w * 0.25);
    const double val = 0.1 + 0.8 * u(rng);
    for (int y = y0; y < std::min(h, y0 + hh); ++y)
      for (int x = x0; x < std::min(w, x0 + ww); ++x) img.at(y, x) = val;
  }
  normalize_geometric_mean(img);
  return img;
}

// low-contrast smooth surface: soft blobs only, no sharp edges
inline br::Image smooth_terrain(int w, int h, unsigned seed, double contrast = 0.12) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  br::Image img(w, h, 0.5);
  for (int i = 0; i < 8; ++i) {
    const double cy = u(rng) * h, cx = u(rng) * w;
    const double r = (0.15 + 0.25 * u(rng)) * std::min(w, h);
    const double amp = (u(rng) - 0.5) * 2.0 * contrast;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        img.at(y, x) += amp * std::exp(-d2 / (2.0 * r * r));
      }
  }
  normalize_geometric_mean(img);
  return img;
}

inline br::Image random_image(int w, int h, unsigned seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  br::Image img(w, h);
  for (double& v : img.data) v = u(rng);
  return img;
}

}  // namespace testsupport
