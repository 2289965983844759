#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "blindrestore/convolve.hpp"
#include "blindrestore/grid.hpp"
#include "blindrestore/image.hpp"
#include "blindrestore/image_io.hpp"
#include "blindrestore/patch.hpp"
#include "support/synthetic.hpp"

using namespace br;

TEST_CASE("to_log and from_log") {
  Image half(4, 4, 0.5);
  Image lg = to_log(half, 1e-4);
  for (double v : lg.data) CHECK(v == Catch::Approx(std::log(0.5)).margin(1e-14));

  Image ones(4, 4, 1.0);
  for (double v : to_log(ones, 1e-4).data) CHECK(v == Catch::Approx(0.0).margin(1e-14));

  Image zero(2, 2, 0.0);
  for (double v : to_log(zero, 1e-4).data)
    CHECK(v == Catch::Approx(std::log(1e-4)).margin(1e-12));

  for (double v : from_log(lg).data) CHECK(v == Catch::Approx(0.5).margin(1e-14));

  // clamp rule: positive log values map to 1
  Image above(2, 2, 0.1);
  for (double v : from_log(above).data) CHECK(v == 1.0);

  // round trip exact on values >= floor
  Image img = testsupport::random_image(9, 7, 11, 1e-4, 1.0);
  Image rt = from_log(to_log(img, 1e-4));
  for (std::size_t i = 0; i < img.size(); ++i)
    CHECK(rt.data[i] == Catch::Approx(img.data[i]).margin(1e-12));
}

TEST_CASE("gradient basics") {
  Image c(6, 5, 0.7);
  for (Boundary b : {Boundary::Periodic, Boundary::Symmetric}) {
    Gradient g = gradient(c, b);
    CHECK(norm_sup(g.d1) == 0.0);
    CHECK(norm_sup(g.d2) == 0.0);
  }

  const int W = 8, H = 8;
  Image ramp(W, H);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) ramp.at(y, x) = static_cast<double>(x) / W;
  Gradient g = gradient(ramp, Boundary::Periodic);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W - 1; ++x) CHECK(g.d2.at(y, x) == Catch::Approx(1.0 / W).margin(1e-14));
  CHECK(g.d2.at(0, W - 1) == Catch::Approx(-(W - 1.0) / W).margin(1e-14));
  CHECK(norm_sup(g.d1) == 0.0);
}

TEST_CASE("gradient/divergence adjoint identity") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Boundary b : {Boundary::Periodic, Boundary::Symmetric}) {
    for (int trial = 0; trial < 20; ++trial) {
      Image f = testsupport::random_image(11, 7, 100 + trial);
      Image v1 = testsupport::random_image(11, 7, 200 + trial);
      Image v2 = testsupport::random_image(11, 7, 300 + trial);
      Gradient g = gradient(f, b);
      const double lhs = dot(g.d1, v1) + dot(g.d2, v2);
      const double rhs = dot(f, -1.0 * divergence(v1, v2, b));
      const double scale = norm_l2(f) * std::sqrt(dot(v1, v1) + dot(v2, v2)) + 1.0;
      CHECK(std::fabs(lhs - rhs) <= 1e-10 * scale);
    }
  }
}

TEST_CASE("divergence of gradient equals laplacian under periodic boundary") {
  Image f = testsupport::terrain(16, 16, 5);
  Gradient g = gradient(f, Boundary::Periodic);
  Image dg = divergence(g.d1, g.d2, Boundary::Periodic);
  Image lap = laplacian(f, Boundary::Periodic);
  for (std::size_t i = 0; i < f.size(); ++i)
    CHECK(dg.data[i] == Catch::Approx(lap.data[i]).margin(1e-10));

  Image z1(5, 5, 0.0), z2(5, 5, 0.0);
  CHECK(norm_sup(divergence(z1, z2, Boundary::Periodic)) == 0.0);
}

TEST_CASE("laplacian examples") {
  Image c(7, 7, 0.3);
  CHECK(norm_sup(laplacian(c)) == 0.0);

  Image imp(7, 7, 0.0);
  imp.at(3, 3) = 1.0;
  Image lap = laplacian(imp, Boundary::Symmetric);
  CHECK(lap.at(3, 3) == -4.0);
  CHECK(lap.at(2, 3) == 1.0);
  CHECK(lap.at(4, 3) == 1.0);
  CHECK(lap.at(3, 2) == 1.0);
  CHECK(lap.at(3, 4) == 1.0);
  CHECK(lap.at(2, 2) == 0.0);

  Image f = testsupport::random_image(12, 9, 7);
  double sum = 0.0;
  for (double v : laplacian(f, Boundary::Periodic).data) sum += v;
  CHECK(sum == Catch::Approx(0.0).margin(1e-10));
}

namespace {

// brute-force circular convolution with a centered kernel
Image spatial_convolve(const Image& img, const BlurKernel& k) {
  Image out(img.width, img.height, 0.0);
  const int c = k.size / 2;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int ky = 0; ky < k.size; ++ky)
        for (int kx = 0; kx < k.size; ++kx) {
          const int sy = ((y - (ky - c)) % img.height + img.height) % img.height;
          const int sx = ((x - (kx - c)) % img.width + img.width) % img.width;
          acc += k.at(ky, kx) * img.at(sy, sx);
        }
      out.at(y, x) = acc;
    }
  return out;
}

}  // namespace

TEST_CASE("convolve_fft") {
  Image img = testsupport::random_image(8, 8, 21);

  CHECK(norm_sup(convolve_fft(img, BlurKernel::delta(1)) - img) < 1e-12);
  CHECK(norm_sup(convolve_fft(img, BlurKernel::delta(3)) - img) < 1e-12);

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BlurKernel k(3);
  for (double& w : k.weights) w = u(rng);
  normalize(k);
  CHECK(norm_sup(convolve_fft(img, k) - spatial_convolve(img, k)) < 1e-10);

  // frequency and spatial paths agree on all sizes <= 16, square or not
  for (auto [w, h] : {std::pair{5, 7}, {16, 16}, {9, 4}, {13, 11}}) {
    Image a = testsupport::random_image(w, h, 1000 + w * h);
    BlurKernel k3(3);
    for (double& kw : k3.weights) kw = u(rng) - 0.3;
    CHECK(norm_sup(convolve_fft(a, k3) - spatial_convolve(a, k3)) < 1e-10);
  }

  // linear in the image argument
  Image a = testsupport::random_image(8, 8, 77);
  Image b = testsupport::random_image(8, 8, 78);
  Image lhs = convolve_fft(a + b, k);
  Image rhs = convolve_fft(a, k) + convolve_fft(b, k);
  CHECK(norm_sup(lhs - rhs) < 1e-10);

  CHECK_THROWS_AS(convolve_fft(Image(2, 2, 0.0), BlurKernel::delta(3)), ConfigError);
}

TEST_CASE("partition and merge") {
  {
    PatchGrid g = make_patch_grid(64, 64, 64, 0);
    CHECK(g.count() == 1);
  }
  {
    PatchGrid g = make_patch_grid(96, 96, 64, 32);
    REQUIRE(g.count() == 4);
    std::vector<std::pair<int, int>> expect{{0, 0}, {0, 32}, {32, 0}, {32, 32}};
    CHECK(g.origins == expect);
  }
  // coverage >= 1 for random configurations
  std::mt19937 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const int w = 16 + static_cast<int>(rng() % 80);
    const int h = 16 + static_cast<int>(rng() % 80);
    const int ps = 8 + static_cast<int>(rng() % (std::min(w, h) - 8));
    const int ov = static_cast<int>(rng() % ps);
    PatchGrid g = make_patch_grid(w, h, ps, ov);
    std::vector<int> cover(static_cast<std::size_t>(w) * h, 0);
    for (auto [oy, ox] : g.origins)
      for (int y = 0; y < ps; ++y)
        for (int x = 0; x < ps; ++x) ++cover[static_cast<std::size_t>(oy + y) * w + ox + x];
    CHECK(*std::min_element(cover.begin(), cover.end()) >= 1);
  }

  // merge(partition(img)) == img
  Image img = testsupport::terrain(50, 38, 3);
  PatchGrid g = make_patch_grid(img.width, img.height, 16, 5);
  CHECK(norm_sup(merge(partition(img, g), g) - img) < 1e-12);

  // single patch
  PatchGrid g1 = make_patch_grid(img.width, img.height, std::min(img.width, img.height), 0);
  (void)g1;

  // two patches overlapping one column: mean of the two values there
  PatchGrid g2 = make_patch_grid(7, 4, 4, 1);
  REQUIRE(g2.count() == 2);
  std::vector<Image> patches{Image(4, 4, 0.0), Image(4, 4, 1.0)};
  Image m = merge(patches, g2);
  CHECK(m.at(0, 3) == 0.5);
  CHECK(m.at(0, 0) == 0.0);
  CHECK(m.at(0, 6) == 1.0);

  CHECK_THROWS_AS(make_patch_grid(10, 10, 12, 0), ConfigError);
}

TEST_CASE("image file round trips") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "br_io_test";
  fs::create_directories(dir);

  Image img = testsupport::terrain(23, 17, 8);

  for (const char* name : {"a.pgm", "a.png"}) {
    const std::string path = (dir / name).string();
    save_image(img, path, 8);
    Image back = load_image(path);
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    CHECK(norm_sup(back - img) <= 0.5 / 255.0 + 1e-12);
  }
  for (const char* name : {"b.pgm", "b.png"}) {
    const std::string path = (dir / name).string();
    save_image(img, path, 16);
    Image back = load_image(path);
    CHECK(norm_sup(back - img) <= 0.5 / 65535.0 + 1e-12);
  }

  // 2x2 raster [0, 85, 170, 255] -> [0, 1/3, 2/3, 1]
  {
    const std::string path = (dir / "quant.pgm").string();
    std::ofstream out(path, std::ios::binary);
    out << "P5\n2 2\n255\n";
    for (unsigned char v : {0, 85, 170, 255}) out.put(static_cast<char>(v));
    out.close();
    Image q = load_image(path);
    CHECK(q.at(0, 0) == Catch::Approx(0.0).margin(1e-12));
    CHECK(q.at(0, 1) == Catch::Approx(1.0 / 3).margin(1e-2));
    CHECK(q.at(1, 0) == Catch::Approx(2.0 / 3).margin(1e-2));
    CHECK(q.at(1, 1) == Catch::Approx(1.0).margin(1e-12));
  }

  // color input rejected with an explicit error
  {
    const std::string path = (dir / "color.ppm").string();
    std::ofstream out(path, std::ios::binary);
    out << "P6\n2 2\n255\n";
    for (int i = 0; i < 12; ++i) out.put(static_cast<char>(i));
    out.close();
    CHECK_THROWS_WITH(load_image(path), Catch::Matchers::ContainsSubstring("grayscale required"));
  }

  CHECK_THROWS_AS(load_image((dir / "missing.pgm").string()), IoError);

  // kernel text format: round trip and renormalization report
  {
    const std::string path = (dir / "k.txt").string();
    std::ofstream out(path);
    out << "3 3\n0 0.2 0\n0.2 0.4 0.2\n0 0.2 0\n";  // sums to 1.2
    out.close();
    bool renorm = false;
    BlurKernel k = load_kernel(path, &renorm);
    CHECK(renorm);
    CHECK(k.sum() == Catch::Approx(1.0).margin(1e-12));

    save_kernel(k, path);
    bool renorm2 = true;
    BlurKernel k2 = load_kernel(path, &renorm2);
    CHECK_FALSE(renorm2);
    for (std::size_t i = 0; i < k.weights.size(); ++i)
      CHECK(k2.weights[i] == Catch::Approx(k.weights[i]).margin(1e-15));
  }

  fs::remove_all(dir);
}
