#pragma once

#include <utility>
#include <vector>

#include "blindrestore/image.hpp"

namespace br {

// Regular grid of square patches covering every pixel; the last row/column of
// origins is shifted inward so patches never leave the image.
struct PatchGrid {
  int image_width = 0;
  int image_height = 0;
  int patch_size = 0;
  int overlap = 0;
  std::vector<std::pair<int, int>> origins;  // (y, x) of each top-left corner

  int count() const { return static_cast<int>(origins.size()); }
};

namespace patch_detail {

inline std::vector<int> axis_origins(int dim, int patch, int stride) {
  std::vector<int> v;
  for (int p = 0;; p += stride) {
    if (p + patch >= dim) {
      const int last = dim - patch;
      if (v.empty() || v.back() != last) v.push_back(last);
      break;
    }
    v.push_back(p);
  }
  return v;
}

}  // namespace patch_detail

inline PatchGrid make_patch_grid(int width, int height, int patch_size, int overlap) {
  if (patch_size < 1) throw ConfigError("patch_size must be >= 1");
  if (overlap < 0 || overlap >= patch_size) throw ConfigError("overlap must satisfy 0 <= overlap < patch_size");
  if (patch_size > width || patch_size > height)
    throw ConfigError("patch_size exceeds image dimension");
  const int stride = patch_size - overlap;
  PatchGrid g;
  g.image_width = width;
  g.image_height = height;
  g.patch_size = patch_size;
  g.overlap = overlap;
  const auto ys = patch_detail::axis_origins(height, patch_size, stride);
  const auto xs = patch_detail::axis_origins(width, patch_size, stride);
  for (int y : ys)
    for (int x : xs) g.origins.emplace_back(y, x);
  return g;
}

inline Image extract_patch(const Image& img, const PatchGrid& g, int index) {
  const auto [oy, ox] = g.origins.at(index);
  Image p(g.patch_size, g.patch_size);
  for (int y = 0; y < g.patch_size; ++y)
    for (int x = 0; x < g.patch_size; ++x) p.at(y, x) = img.at(oy + y, ox + x);
  return p;
}

inline std::vector<Image> partition(const Image& img, const PatchGrid& g) {
  std::vector<Image> out;
  out.reserve(g.origins.size());
  for (int i = 0; i < g.count(); ++i) out.push_back(extract_patch(img, g, i));
  return out;
}

// Plain averaging over every patch covering a pixel.
inline Image merge(const std::vector<Image>& patches, const PatchGrid& g) {
  if (static_cast<int>(patches.size()) != g.count())
    throw ConfigError("merge: patch count does not match grid");
  Image sum(g.image_width, g.image_height, 0.0);
  Image cnt(g.image_width, g.image_height, 0.0);
  for (int i = 0; i < g.count(); ++i) {
    const auto [oy, ox] = g.origins[i];
    const Image& p = patches[i];
    if (p.width != g.patch_size || p.height != g.patch_size)
      throw ConfigError("merge: patch shape does not match grid");
    for (int y = 0; y < g.patch_size; ++y)
      for (int x = 0; x < g.patch_size; ++x) {
        sum.at(oy + y, ox + x) += p.at(y, x);
        cnt.at(oy + y, ox + x) += 1.0;
      }
  }
  for (std::size_t i = 0; i < sum.size(); ++i) sum.data[i] /= cnt.data[i];
  return sum;
}

}  // namespace br
