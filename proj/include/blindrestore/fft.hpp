#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "blindrestore/image.hpp"

namespace br {

using Complex = std::complex<double>;

namespace fft_detail {

// Plans are created once per (height, width, direction) and shared; creation
// is serialized (the FFTW planner is not thread-safe) while execution through
// fftw_execute_dft on caller-owned buffers is. ESTIMATE|UNALIGNED keeps plans
// deterministic and free of alignment requirements.
inline fftw_plan get_plan(int h, int w, int sign) {
  static std::mutex mutex;
  static std::map<std::tuple<int, int, int>, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto key = std::make_tuple(h, w, sign);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<Complex> in(static_cast<std::size_t>(h) * w), out(in.size());
  fftw_plan p = fftw_plan_dft_2d(h, w, reinterpret_cast<fftw_complex*>(in.data()),
                                 reinterpret_cast<fftw_complex*>(out.data()), sign,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  cache.emplace(key, p);
  return p;
}

inline void execute(int h, int w, int sign, const Complex* in, Complex* out) {
  fftw_plan p = get_plan(h, w, sign);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

}  // namespace fft_detail

// Unnormalized forward DFT of a real image.
inline std::vector<Complex> fft2(const Image& img) {
  std::vector<Complex> in(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) in[i] = Complex(img.data[i], 0.0);
  std::vector<Complex> out(img.size());
  fft_detail::execute(img.height, img.width, FFTW_FORWARD, in.data(), out.data());
  return out;
}

inline std::vector<Complex> fft2(const std::vector<Complex>& in, int w, int h, int sign) {
  std::vector<Complex> out(in.size());
  fft_detail::execute(h, w, sign, in.data(), out.data());
  return out;
}

// Inverse DFT, real part, 1/N normalization.
inline Image ifft2_real(const std::vector<Complex>& spec, int w, int h) {
  std::vector<Complex> out(spec.size());
  fft_detail::execute(h, w, FFTW_BACKWARD, spec.data(), out.data());
  Image img(w, h);
  const double scale = 1.0 / static_cast<double>(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) img.data[i] = out[i].real() * scale;
  return img;
}

// DFT symbol of the periodic forward difference along one axis:
// (e^{i 2 pi k / n} - 1) for frequency index k.
inline Complex diff_symbol(int k, int n) {
  const double w = 2.0 * 3.14159265358979323846 * static_cast<double>(k) / n;
  return Complex(std::cos(w) - 1.0, std::sin(w));
}

}  // namespace br
