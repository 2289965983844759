#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "blindrestore/degrade.hpp"
#include "blindrestore/retinex.hpp"
#include "support/synthetic.hpp"

using namespace br;

namespace {

RetinexConfig small_cfg() {
  RetinexConfig cfg;
  cfg.window = 5;
  cfg.patch_radius = 1;
  cfg.bandwidth = 2.0;
  cfg.eps_nl = 1e-6;
  return cfg;
}

// literal triple-loop evaluation of the objective
double objective_oracle(const Image& r, const Image& g, const NonLocalWeights& w,
                        const RetinexConfig& cfg) {
  const double ln_half = std::log(0.5);
  double fid = 0.0;
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x) {
      const double e = r.at(y, x) - g.at(y, x);
      const double ev = (y + 1 < r.height ? r.at(y + 1, x) - g.at(y + 1, x) : e) - e;
      const double eh = (x + 1 < r.width ? r.at(y, x + 1) - g.at(y, x + 1) : e) - e;
      fid += ev * ev + eh * eh;
    }
  double gray = 0.0;
  for (double v : r.data) gray += (v - ln_half) * (v - ln_half);
  const int R = cfg.window / 2;
  double nl = 0.0;
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x) {
      double s = 0.0;
      for (int dy = -R; dy <= R; ++dy)
        for (int dx = -R; dx <= R; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= r.height || xx < 0 || xx >= r.width) continue;
          const double wv = w.weight_between(y, x, yy, xx);
          const double d = r.at(y, x) - r.at(yy, xx);
          s += wv * d * d;
        }
      nl += std::sqrt(s + cfg.eps_nl) - std::sqrt(cfg.eps_nl);
    }
  return fid + cfg.eta0 * gray + cfg.eta1 * nl;
}

}  // namespace

TEST_CASE("region_variance") {
  Image c(8, 8, 0.4);
  CHECK(region_variance(c, 3, 3, 5) == Catch::Approx(0.0).margin(1e-15));

  Image two(2, 2);
  two.at(0, 0) = 0;
  two.at(0, 1) = 0;
  two.at(1, 0) = 1;
  two.at(1, 1) = 1;
  CHECK(region_variance(two, 0, 0, 2) == Catch::Approx(1.0 / 3).margin(1e-15));

  // two-pass oracle on random windows
  Image img = testsupport::random_image(20, 20, 4);
  std::mt19937 rng(5);
  for (int t = 0; t < 20; ++t) {
    const int L = 3 + static_cast<int>(rng() % 6);
    const int cy = static_cast<int>(rng() % 20), cx = static_cast<int>(rng() % 20);
    const int y0 = std::clamp(cy - L / 2, 0, 20 - L);
    const int x0 = std::clamp(cx - L / 2, 0, 20 - L);
    double mean = 0.0;
    for (int y = 0; y < L; ++y)
      for (int x = 0; x < L; ++x) mean += img.at(y0 + y, x0 + x);
    mean /= L * L;
    double var = 0.0;
    for (int y = 0; y < L; ++y)
      for (int x = 0; x < L; ++x) {
        const double d = img.at(y0 + y, x0 + x) - mean;
        var += d * d;
      }
    var /= L * L - 1;
    CHECK(region_variance(img, cy, cx, L) == Catch::Approx(var).margin(1e-12));
  }

  CHECK_THROWS_AS(region_variance(img, 0, 0, 1), ConfigError);
}

TEST_CASE("select_sharp_window") {
  Image c(12, 12, 0.2);
  SharpWindow w = select_sharp_window(c, 5);
  CHECK(w.y == 0);
  CHECK(w.x == 0);
  CHECK(w.variance == Catch::Approx(0.0).margin(1e-15));

  // single textured block: the maximizing window covers it
  Image img(24, 24, 0.5);
  for (int y = 10; y < 15; ++y)
    for (int x = 14; x < 19; ++x) img.at(y, x) = ((y + x) % 2) ? 0.9 : 0.1;
  SharpWindow best = select_sharp_window(img, 5);
  CHECK(best.y == 10);
  CHECK(best.x == 14);

  // exhaustive comparison: no candidate beats the returned variance
  Image r = testsupport::terrain(20, 16, 17);
  const int L = 7;
  SharpWindow got = select_sharp_window(r, L);
  for (int y = 0; y + L <= r.height; ++y)
    for (int x = 0; x + L <= r.width; ++x)
      CHECK(got.variance >= region_variance(r, y + L / 2, x + L / 2, L) - 1e-9);
}

TEST_CASE("compute_weights") {
  RetinexConfig cfg = small_cfg();

  // constant image: every weight is 1
  Image c(10, 10, 0.5);
  NonLocalWeights w = compute_weights(c, cfg);
  for (const auto& plane : w.planes)
    for (float v : plane.w)
      if (v != 0.0f) CHECK(v == Catch::Approx(1.0).margin(1e-7));

  // self weight
  CHECK(w.weight_between(3, 3, 3, 3) == 1.0);

  // constant offset delta over P=9 patch pixels: w = exp(-P delta^2 / (2 h^2))
  Image halves(16, 8, 0.3);
  for (int y = 0; y < 8; ++y)
    for (int x = 8; x < 16; ++x) halves.at(y, x) = 0.5;
  RetinexConfig cfg2 = small_cfg();
  cfg2.window = 15;
  NonLocalWeights w2 = compute_weights(halves, cfg2);
  const double expect = std::exp(-9.0 * 0.2 * 0.2 / (2.0 * 2.0 * 2.0));
  CHECK(expect == Catch::Approx(0.9560).margin(5e-4));
  CHECK(w2.weight_between(4, 4, 4, 12) == Catch::Approx(expect).margin(1e-6));

  // symmetry within window truncation
  Image img = testsupport::terrain(14, 14, 23);
  NonLocalWeights w3 = compute_weights(img, cfg);
  std::mt19937 rng(6);
  for (int t = 0; t < 50; ++t) {
    const int ay = static_cast<int>(rng() % 14), ax = static_cast<int>(rng() % 14);
    const int by = static_cast<int>(rng() % 14), bx = static_cast<int>(rng() % 14);
    CHECK(w3.weight_between(ay, ax, by, bx) == w3.weight_between(by, bx, ay, ax));
  }
  // every stored weight lies in (0, 1]
  for (const auto& plane : w3.planes)
    for (float v : plane.w)
      if (v != 0.0f) {
        CHECK(v > 0.0f);
        CHECK(v <= 1.0f);
      }
}

TEST_CASE("retinex_objective") {
  RetinexConfig cfg = small_cfg();
  const double ln_half = std::log(0.5);

  Image g(8, 8, ln_half);
  NonLocalWeights w = compute_weights(g, cfg);
  CHECK(retinex_objective(g, g, w, cfg) == Catch::Approx(0.0).margin(1e-12));

  // constant c: only the gray-world term survives
  const double c = -0.3;
  Image rc(8, 8, c);
  NonLocalWeights wc = compute_weights(rc, cfg);
  const double expect = cfg.eta0 * 64.0 * (c - ln_half) * (c - ln_half);
  CHECK(retinex_objective(rc, rc, wc, cfg) == Catch::Approx(expect).margin(1e-12));

  // brute-force oracle on a random instance
  Image r = to_log(testsupport::random_image(8, 8, 31, 0.1, 1.0));
  Image g2 = to_log(testsupport::random_image(8, 8, 32, 0.1, 1.0));
  NonLocalWeights w2 = compute_weights(g2, cfg);
  CHECK(retinex_objective(r, g2, w2, cfg) ==
        Catch::Approx(objective_oracle(r, g2, w2, cfg)).margin(1e-10));

  CHECK_THROWS_AS(retinex_objective(Image(4, 4, 0.0), Image(5, 5, 0.0), w, cfg), ConfigError);
}

TEST_CASE("retinex_gradient") {
  RetinexConfig cfg = small_cfg();
  const double ln_half = std::log(0.5);

  // stationary point
  Image g(8, 8, ln_half);
  NonLocalWeights w = compute_weights(g, cfg);
  CHECK(norm_sup(retinex_gradient(g, g, w, cfg)) <= 1e-12);

  // finite differences on random instances
  for (int inst = 0; inst < 3; ++inst) {
    Image r = to_log(testsupport::random_image(8, 8, 40 + inst, 0.1, 1.0));
    Image g2 = to_log(testsupport::random_image(8, 8, 50 + inst, 0.1, 1.0));
    NonLocalWeights w2 = compute_weights(g2, cfg);
    Image grad = retinex_gradient(r, g2, w2, cfg);
    Image fd(8, 8);
    const double h = 1e-6;
    for (int i = 0; i < 64; ++i) {
      Image rp = r, rm = r;
      rp.data[i] += h;
      rm.data[i] -= h;
      fd.data[i] =
          (retinex_objective(rp, g2, w2, cfg) - retinex_objective(rm, g2, w2, cfg)) / (2 * h);
    }
    CHECK(norm_l2(grad - fd) / std::max(norm_l2(fd), 1e-12) <= 1e-5);
  }

  // gray-world-only configuration
  RetinexConfig gw = cfg;
  gw.eta1 = 0.0;
  Image r3(8, 8, -0.4);
  NonLocalWeights w3 = compute_weights(r3, gw);
  Image grad3 = retinex_gradient(r3, r3, w3, gw);
  for (double v : grad3.data)
    CHECK(v == Catch::Approx(2.0 * gw.eta0 * (-0.4 - ln_half)).margin(1e-12));
}

TEST_CASE("correct_illumination") {
  RetinexConfig cfg;
  cfg.window = 9;
  cfg.iter_max = 30;

  // constant input is a fixed point
  Image half(16, 16, 0.5);
  RetinexResult res = correct_illumination(half, cfg);
  CHECK(norm_sup(res.reflectance - half) <= 1e-10);
  for (double v : res.illumination.data) CHECK(v == Catch::Approx(1.0).margin(1e-10));

  // decomposition identity in the log domain, constraint r <= 1
  Image truth = testsupport::terrain(32, 32, 61);
  DegradationSpec spec;
  spec.illumination = IlluminationKind::Horizontal;
  spec.min_level = 0.4;
  Image g = degrade(truth, spec);
  RetinexConfig c32 = cfg;
  c32.window = 21;
  RetinexResult r2 = correct_illumination(g, c32);
  CHECK(max_value(r2.reflectance) <= 1.0 + 1e-12);
  Image glog = to_log(g, c32.log_floor);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double lhs = std::log(r2.reflectance.data[i]) + std::log(r2.illumination.data[i]);
    CHECK(lhs == Catch::Approx(glog.data[i]).margin(1e-10));
  }

  // objective non-increasing across accepted iterations (fixed weights)
  RetinexConfig mono = c32;
  mono.weight_refresh = 1000;
  mono.iter_max = 40;
  RetinexResult r3 = correct_illumination(g, mono);
  REQUIRE(r3.trace.size() >= 2);
  for (std::size_t i = 1; i < r3.trace.size(); ++i)
    CHECK(r3.trace[i].objective <= r3.trace[i - 1].objective + 1e-12);

  // constraint after every iteration
  for (const auto& row : r3.trace) CHECK(row.max_rlog <= 1e-15);
}
