#pragma once

#include <cmath>
#include <optional>

#include "blindrestore/convolve.hpp"
#include "blindrestore/image.hpp"
#include "blindrestore/solver.hpp"

namespace br {

// 10 log10(1 / MSE) on the [0,1] scale, capped at 99 dB for identical images.
inline double psnr(const Image& a, const Image& b) {
  require_same_size(a, b, "psnr");
  const double mse = ssd(a, b) / static_cast<double>(a.size());
  if (mse <= 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

// Mean local SSIM, 11x11 Gaussian window sigma = 1.5, K1 = 0.01, K2 = 0.03,
// dynamic range 1; averaged over window positions that fit entirely.
inline double ssim(const Image& a, const Image& b) {
  require_same_size(a, b, "ssim");
  constexpr int kWin = 11;
  if (a.width < kWin || a.height < kWin) throw ConfigError("ssim: image smaller than the window");
  constexpr double kSigma = 1.5;
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double w[kWin][kWin];
  double wsum = 0.0;
  for (int y = 0; y < kWin; ++y)
    for (int x = 0; x < kWin; ++x) {
      const double dy = y - kWin / 2, dx = x - kWin / 2;
      w[y][x] = std::exp(-(dy * dy + dx * dx) / (2.0 * kSigma * kSigma));
      wsum += w[y][x];
    }
  for (auto& row : w)
    for (double& v : row) v /= wsum;

  double acc = 0.0;
  int count = 0;
  for (int oy = 0; oy + kWin <= a.height; ++oy)
    for (int ox = 0; ox + kWin <= a.width; ++ox) {
      double mu_a = 0, mu_b = 0;
      for (int y = 0; y < kWin; ++y)
        for (int x = 0; x < kWin; ++x) {
          mu_a += w[y][x] * a.at(oy + y, ox + x);
          mu_b += w[y][x] * b.at(oy + y, ox + x);
        }
      double va = 0, vb = 0, cov = 0;
      for (int y = 0; y < kWin; ++y)
        for (int x = 0; x < kWin; ++x) {
          const double da = a.at(oy + y, ox + x) - mu_a;
          const double db = b.at(oy + y, ox + x) - mu_b;
          va += w[y][x] * da * da;
          vb += w[y][x] * db * db;
          cov += w[y][x] * da * db;
        }
      acc += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
             ((mu_a * mu_a + mu_b * mu_b + c1) * (va + vb + c2));
      ++count;
    }
  return acc / count;
}

struct MetricsReport {
  double psnr = 0.0;
  double ssim = 0.0;
  std::optional<double> error_ratio;
};

struct ErrorRatioResult {
  double value = 1.0;
  bool exact_recovery = false;  // set when the true-kernel residual degenerates
};

// Kernel-quality metric: SSD of the non-blind reconstruction with the
// estimated kernel over SSD with the true kernel, using this library's own
// non-blind mode with fixed small regularization as the common reconstructor.
inline ErrorRatioResult error_ratio(const Image& truth, const BlurKernel& k_est,
                                    const BlurKernel& k_true, const RestoreConfig& nonblind_cfg) {
  validate_kernel(k_est, std::max(k_est.size, nonblind_cfg.kernel_size_max));
  validate_kernel(k_true, std::max(k_true.size, nonblind_cfg.kernel_size_max));
  const Image blurred = convolve_fft(truth, k_true);
  const Image rec_est = nonblind_deconvolve(blurred, k_est, nonblind_cfg);
  const Image rec_true = nonblind_deconvolve(blurred, k_true, nonblind_cfg);
  const double num = ssd(rec_est, truth);
  const double den = ssd(rec_true, truth);
  if (den < 1e-12) return {1.0, true};
  return {num / den, false};
}

// Default reconstructor settings for the error ratio: non-blind, noise-free
// regularization level, TGV at the weak end of the search range.
inline RestoreConfig nonblind_metric_config() {
  RestoreConfig cfg;
  cfg.estimate_kernel = false;
  cfg.retinex_enabled = false;
  cfg.lambda = 0.01;
  cfg.tgv.alpha0_max = cfg.tgv.alpha0_min = 0.001;
  cfg.tgv.alpha1_max = cfg.tgv.alpha1_min = 0.001;
  cfg.max_admm_iters = 60;
  return cfg;
}

}  // namespace br
