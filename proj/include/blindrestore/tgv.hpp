#pragma once

#include <cmath>
#include <vector>

#include "blindrestore/grid.hpp"
#include "blindrestore/image.hpp"

namespace br {

// Per-pixel eigen-analysis of the Gaussian-smoothed structure tensor.
// Eigenvalues are normalized by the per-image maximum of lambda_plus so the
// indicator below is invariant to global intensity scaling.
struct StructureTensorField {
  int width = 0;
  int height = 0;
  double sigma = 1.0;
  Image lambda_plus, lambda_minus;   // normalized, lambda_plus >= lambda_minus >= 0
  Image vplus_y, vplus_x;            // unit eigenvector of lambda_plus
  Image vminus_y, vminus_x;
};

// Closed-form eigendecomposition of the symmetric 2x2 matrix [a b; b c],
// eigenvalues ordered lp >= lm, (vy, vx) the unit eigenvector of lp.
struct Eigen2x2 {
  double lp, lm;
  double vy, vx;
};

inline Eigen2x2 eigen_sym2x2(double a, double b, double c) {
  const double half_tr = 0.5 * (a + c);
  const double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  Eigen2x2 e{half_tr + disc, half_tr - disc, 0.0, 0.0};
  if (std::fabs(b) > 1e-300) {
    if (std::fabs(e.lp - a) >= std::fabs(e.lp - c)) {
      e.vy = b;
      e.vx = e.lp - a;
    } else {
      e.vy = e.lp - c;
      e.vx = b;
    }
  } else {
    if (a >= c) {
      e.vy = 1.0;
      e.vx = 0.0;
    } else {
      e.vy = 0.0;
      e.vx = 1.0;
    }
  }
  const double nrm = std::hypot(e.vy, e.vx);
  e.vy /= nrm;
  e.vx /= nrm;
  return e;
}

namespace tgv_detail {

inline Image gaussian_smooth(const Image& f, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  Image tmp(f.width, f.height), out(f.width, f.height);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += k[i + radius] * f.at(y, std::clamp(x + i, 0, f.width - 1));
      tmp.at(y, x) = acc;
    }
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += k[i + radius] * tmp.at(std::clamp(y + i, 0, f.height - 1), x);
      out.at(y, x) = acc;
    }
  return out;
}

}  // namespace tgv_detail

inline StructureTensorField structure_tensor(const Image& img, double sigma) {
  if (sigma <= 0) throw ConfigError("structure_tensor: sigma must be positive");
  const Image f1 = diff_v(img, Boundary::Symmetric);
  const Image f2 = diff_h(img, Boundary::Symmetric);
  Image t11(img.width, img.height), t12(img.width, img.height), t22(img.width, img.height);
  for (std::size_t i = 0; i < img.size(); ++i) {
    t11.data[i] = f1.data[i] * f1.data[i];
    t12.data[i] = f1.data[i] * f2.data[i];
    t22.data[i] = f2.data[i] * f2.data[i];
  }
  t11 = tgv_detail::gaussian_smooth(t11, sigma);
  t12 = tgv_detail::gaussian_smooth(t12, sigma);
  t22 = tgv_detail::gaussian_smooth(t22, sigma);

  StructureTensorField out;
  out.width = img.width;
  out.height = img.height;
  out.sigma = sigma;
  out.lambda_plus = Image(img.width, img.height);
  out.lambda_minus = Image(img.width, img.height);
  out.vplus_y = Image(img.width, img.height);
  out.vplus_x = Image(img.width, img.height);
  out.vminus_y = Image(img.width, img.height);
  out.vminus_x = Image(img.width, img.height);

  for (std::size_t i = 0; i < img.size(); ++i) {
    const Eigen2x2 e = eigen_sym2x2(t11.data[i], t12.data[i], t22.data[i]);
    out.lambda_plus.data[i] = e.lp;
    out.lambda_minus.data[i] = e.lm;
    out.vplus_y.data[i] = e.vy;
    out.vplus_x.data[i] = e.vx;
    out.vminus_y.data[i] = -e.vx;
    out.vminus_x.data[i] = e.vy;
  }
  const double scale = 1.0 / (max_value(out.lambda_plus) + 1e-12);
  for (std::size_t i = 0; i < img.size(); ++i) {
    out.lambda_plus.data[i] *= scale;
    out.lambda_minus.data[i] *= scale;
  }
  return out;
}

// Anisotropy indicator E = (l+ - l-) / (chi + l+ + l-), clamped to [0,1].
inline Image indicator(const StructureTensorField& field, double chi) {
  if (chi <= 0) throw ConfigError("indicator: chi must be positive");
  Image e(field.width, field.height);
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double lp = field.lambda_plus.data[i], lm = field.lambda_minus.data[i];
    e.data[i] = std::clamp((lp - lm) / (chi + lp + lm), 0.0, 1.0);
  }
  return e;
}

struct WeightBounds {
  double alpha0_max = 0.01;
  double alpha0_min = 0.001;
  double alpha1_max = 0.01;
  double alpha1_min = 0.001;

  void validate() const {
    if (alpha0_min <= 0 || alpha1_min <= 0) throw ConfigError("tgv weights must be positive");
    if (alpha0_min > alpha0_max || alpha1_min > alpha1_max)
      throw ConfigError("tgv weight bounds out of order");
  }
};

struct AdaptiveWeights {
  Image alpha0, alpha1;
  WeightBounds bounds;
};

// alpha_i(x) = E(x) alpha_min + (1 - E(x)) alpha_max: salient structure gets
// the weak weight, homogeneous regions the strong one.
inline AdaptiveWeights adaptive_weights(const Image& e, const WeightBounds& b) {
  b.validate();
  AdaptiveWeights out;
  out.bounds = b;
  out.alpha0 = Image(e.width, e.height);
  out.alpha1 = Image(e.width, e.height);
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double ev = e.data[i];
    if (ev < 0.0 || ev > 1.0) throw ConfigError("adaptive_weights: E outside [0,1]");
    out.alpha0.data[i] = ev * b.alpha0_min + (1.0 - ev) * b.alpha0_max;
    out.alpha1.data[i] = ev * b.alpha1_min + (1.0 - ev) * b.alpha1_max;
  }
  return out;
}

struct VectorField {
  Image p1, p2;  // vertical / horizontal components
};

struct SymTensorField {
  Image e11, e12, e22;
};

// Symmetrized derivative of p (Eq. 18 layout): e11 = D1 p1, e22 = D2 p2,
// e12 = (D2 p1 + D1 p2) / 2.
inline SymTensorField epsilon_op(const VectorField& p, Boundary b = Boundary::Periodic) {
  require_same_size(p.p1, p.p2, "epsilon_op");
  SymTensorField out;
  out.e11 = diff_v(p.p1, b);
  out.e22 = diff_h(p.p2, b);
  Image a = diff_h(p.p1, b);
  Image c = diff_v(p.p2, b);
  out.e12 = Image(p.p1.width, p.p1.height);
  for (std::size_t i = 0; i < out.e12.size(); ++i) out.e12.data[i] = 0.5 * (a.data[i] + c.data[i]);
  return out;
}

// Adjoint under the symmetric-tensor inner product (e12 counted twice):
// p1 = D1^T e11 + D2^T e12, p2 = D1^T e12 + D2^T e22.
inline VectorField epsilon_adjoint(const SymTensorField& t, Boundary b = Boundary::Periodic) {
  VectorField out;
  Image a = diff_v_adj(t.e11, b);
  Image c = diff_h_adj(t.e12, b);
  out.p1 = Image(t.e11.width, t.e11.height);
  for (std::size_t i = 0; i < out.p1.size(); ++i) out.p1.data[i] = a.data[i] + c.data[i];
  Image d = diff_v_adj(t.e12, b);
  Image e = diff_h_adj(t.e22, b);
  out.p2 = Image(t.e11.width, t.e11.height);
  for (std::size_t i = 0; i < out.p2.size(); ++i) out.p2.data[i] = d.data[i] + e.data[i];
  return out;
}

namespace tgv_detail {

// forward differences that are exact on affine images: the last row/column
// falls back to the backward difference (linear extrapolation of the ghost
// sample), so affine inputs produce exactly constant fields
inline Image diff_v_extrap(const Image& f) {
  Image out(f.width, f.height);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      if (y + 1 < f.height)
        out.at(y, x) = f.at(y + 1, x) - f.at(y, x);
      else
        out.at(y, x) = f.height > 1 ? f.at(y, x) - f.at(y - 1, x) : 0.0;
    }
  return out;
}

inline Image diff_h_extrap(const Image& f) {
  Image out(f.width, f.height);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      if (x + 1 < f.width)
        out.at(y, x) = f.at(y, x + 1) - f.at(y, x);
      else
        out.at(y, x) = f.width > 1 ? f.at(y, x) - f.at(y, x - 1) : 0.0;
    }
  return out;
}

}  // namespace tgv_detail

// TGV^2 functional value with anisotropic l1 norms (off-diagonal of eps
// counted twice). Uses extrapolating differences so affine images with
// p = grad f score exactly zero.
inline double tgv2_value(const Image& f, const VectorField& p, const AdaptiveWeights& w) {
  require_same_size(f, p.p1, "tgv2_value");
  require_same_size(f, w.alpha0, "tgv2_value");
  const Image g1 = tgv_detail::diff_v_extrap(f);
  const Image g2 = tgv_detail::diff_h_extrap(f);
  const Image e11 = tgv_detail::diff_v_extrap(p.p1);
  const Image e22 = tgv_detail::diff_h_extrap(p.p2);
  const Image a = tgv_detail::diff_h_extrap(p.p1);
  const Image c = tgv_detail::diff_v_extrap(p.p2);
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    acc += w.alpha1.data[i] *
           (std::fabs(g1.data[i] - p.p1.data[i]) + std::fabs(g2.data[i] - p.p2.data[i]));
    const double e12 = 0.5 * (a.data[i] + c.data[i]);
    acc += w.alpha0.data[i] *
           (std::fabs(e11.data[i]) + std::fabs(e22.data[i]) + 2.0 * std::fabs(e12));
  }
  return acc;
}

// analytic gradient field, exact on affine images (matches tgv2_value)
inline VectorField exact_gradient_field(const Image& f) {
  return {tgv_detail::diff_v_extrap(f), tgv_detail::diff_h_extrap(f)};
}

}  // namespace br
