#pragma once

#include "blindrestore/image.hpp"

namespace br {

enum class Boundary { Periodic, Symmetric };

// Forward difference along the vertical axis (D1): out(y,x) = f(y+1,x) - f(y,x).
inline Image diff_v(const Image& f, Boundary b) {
  Image out(f.width, f.height);
  for (int y = 0; y < f.height; ++y) {
    const int yn = (y + 1 < f.height) ? y + 1 : (b == Boundary::Periodic ? 0 : y);
    for (int x = 0; x < f.width; ++x) out.at(y, x) = f.at(yn, x) - f.at(y, x);
  }
  return out;
}

// Forward difference along the horizontal axis (D2).
inline Image diff_h(const Image& f, Boundary b) {
  Image out(f.width, f.height);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      const int xn = (x + 1 < f.width) ? x + 1 : (b == Boundary::Periodic ? 0 : x);
      out.at(y, x) = f.at(y, xn) - f.at(y, x);
    }
  return out;
}

// Adjoint of diff_v: for periodic, (D1^T v)(y) = v(y-1) - v(y) with wrap; for
// symmetric the edge rows follow from the vanishing last difference.
inline Image diff_v_adj(const Image& v, Boundary b) {
  Image out(v.width, v.height);
  const int H = v.height;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < v.width; ++x) {
      double val;
      if (b == Boundary::Periodic) {
        val = v.at((y + H - 1) % H, x) - v.at(y, x);
      } else {
        if (y == 0)
          val = -v.at(0, x);
        else if (y == H - 1)
          val = v.at(H - 2, x);
        else
          val = v.at(y - 1, x) - v.at(y, x);
      }
      out.at(y, x) = val;
    }
  return out;
}

inline Image diff_h_adj(const Image& v, Boundary b) {
  Image out(v.width, v.height);
  const int W = v.width;
  for (int y = 0; y < v.height; ++y)
    for (int x = 0; x < W; ++x) {
      double val;
      if (b == Boundary::Periodic) {
        val = v.at(y, (x + W - 1) % W) - v.at(y, x);
      } else {
        if (x == 0)
          val = -v.at(y, 0);
        else if (x == W - 1)
          val = v.at(y, W - 2);
        else
          val = v.at(y, x - 1) - v.at(y, x);
      }
      out.at(y, x) = val;
    }
  return out;
}

struct Gradient {
  Image d1;  // vertical component
  Image d2;  // horizontal component
};

inline Gradient gradient(const Image& f, Boundary b) {
  return {diff_v(f, b), diff_h(f, b)};
}

// Negative adjoint of gradient: <grad f, v> = <f, -div v> exactly, both modes.
inline Image divergence(const Image& v1, const Image& v2, Boundary b) {
  require_same_size(v1, v2, "divergence");
  Image a1 = diff_v_adj(v1, b);
  Image a2 = diff_h_adj(v2, b);
  Image out(v1.width, v1.height);
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = -(a1.data[i] + a2.data[i]);
  return out;
}

// 5-point stencil [0 1 0; 1 -4 1; 0 1 0].
inline Image laplacian(const Image& f, Boundary b = Boundary::Symmetric) {
  Image out(f.width, f.height);
  const int H = f.height, W = f.width;
  auto idx = [&](int i, int n) {
    if (i < 0) return b == Boundary::Periodic ? n - 1 : 0;
    if (i >= n) return b == Boundary::Periodic ? 0 : n - 1;
    return i;
  };
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      out.at(y, x) = f.at(idx(y - 1, H), x) + f.at(idx(y + 1, H), x) + f.at(y, idx(x - 1, W)) +
                     f.at(y, idx(x + 1, W)) - 4.0 * f.at(y, x);
  return out;
}

}  // namespace br
