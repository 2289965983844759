#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "blindrestore/errors.hpp"

namespace br {

// 2-D real-valued intensity grid, row-major, nominal range [0,1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, double fill = 0.0) : width(w), height(h) {
    if (w < 1 || h < 1) throw ConfigError("image dimensions must be >= 1");
    data.assign(static_cast<std::size_t>(w) * h, fill);
  }

  double& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }

  std::size_t size() const { return data.size(); }
  bool same_size(const Image& o) const { return width == o.width && height == o.height; }
};

inline void require_same_size(const Image& a, const Image& b, const char* what) {
  if (!a.same_size(b)) throw ConfigError(std::string(what) + ": image shape mismatch");
}

inline bool all_finite(const Image& img) {
  for (double v : img.data)
    if (!std::isfinite(v)) return false;
  return true;
}

inline double min_value(const Image& img) {
  return *std::min_element(img.data.begin(), img.data.end());
}

inline double max_value(const Image& img) {
  return *std::max_element(img.data.begin(), img.data.end());
}

inline double mean_value(const Image& img) {
  double s = 0.0;
  for (double v : img.data) s += v;
  return s / static_cast<double>(img.size());
}

inline double dot(const Image& a, const Image& b) {
  require_same_size(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

inline double norm_l2(const Image& a) { return std::sqrt(dot(a, a)); }

inline double norm_sup(const Image& a) {
  double m = 0.0;
  for (double v : a.data) m = std::max(m, std::fabs(v));
  return m;
}

inline double ssd(const Image& a, const Image& b) {
  require_same_size(a, b, "ssd");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return s;
}

inline Image operator+(const Image& a, const Image& b) {
  require_same_size(a, b, "operator+");
  Image out(a.width, a.height);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] + b.data[i];
  return out;
}

inline Image operator-(const Image& a, const Image& b) {
  require_same_size(a, b, "operator-");
  Image out(a.width, a.height);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] - b.data[i];
  return out;
}

inline Image operator*(double s, const Image& a) {
  Image out(a.width, a.height);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = s * a.data[i];
  return out;
}

inline Image clamp01(Image img) {
  for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
  return img;
}

// Log-domain conversion; the floor guards zero pixels (ln 0).
inline Image to_log(const Image& img, double floor = 1e-4) {
  if (floor <= 0.0) throw ConfigError("to_log: floor must be positive");
  Image out(img.width, img.height);
  for (std::size_t i = 0; i < img.size(); ++i)
    out.data[i] = std::log(std::max(img.data[i], floor));
  return out;
}

inline Image from_log(const Image& img) {
  Image out(img.width, img.height);
  for (std::size_t i = 0; i < img.size(); ++i)
    out.data[i] = std::clamp(std::exp(img.data[i]), 0.0, 1.0);
  return out;
}

// Small odd-sized nonnegative PSF with unit mass.
struct BlurKernel {
  int size = 1;  // square support, odd
  std::vector<double> weights;

  BlurKernel() : weights(1, 1.0) {}
  explicit BlurKernel(int s, double fill = 0.0) : size(s) {
    if (s < 1 || s % 2 == 0) throw ConfigError("kernel size must be odd and >= 1");
    weights.assign(static_cast<std::size_t>(s) * s, fill);
  }

  double& at(int y, int x) { return weights[static_cast<std::size_t>(y) * size + x]; }
  double at(int y, int x) const { return weights[static_cast<std::size_t>(y) * size + x]; }

  double sum() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }

  static BlurKernel delta(int size = 1) {
    BlurKernel k(size);
    k.at(size / 2, size / 2) = 1.0;
    return k;
  }
};

inline void normalize(BlurKernel& k) {
  const double s = k.sum();
  if (s <= 0.0) throw NumericalError("kernel normalization: nonpositive mass");
  for (double& w : k.weights) w /= s;
}

inline void validate_kernel(const BlurKernel& k, int max_size = 21) {
  if (k.size < 1 || k.size % 2 == 0) throw ConfigError("kernel size must be odd and >= 1");
  if (k.size > max_size) throw ConfigError("kernel size exceeds configured maximum");
  for (double w : k.weights) {
    if (!std::isfinite(w)) throw NumericalError("kernel has non-finite weight");
    if (w < 0.0) throw NumericalError("kernel has negative weight");
  }
  if (std::fabs(k.sum() - 1.0) > 1e-10) throw NumericalError("kernel weights must sum to 1");
}

}  // namespace br
