#pragma once

#include "blindrestore/fft.hpp"
#include "blindrestore/grid.hpp"
#include "blindrestore/image.hpp"

namespace br {

// Zero-embed an odd kernel into an image-sized grid with its center wrapped
// to the (0,0) sample, so FFT multiplication realizes the centered circular
// convolution.
inline Image embed_kernel(const BlurKernel& k, int w, int h) {
  if (k.size > w || k.size > h) throw ConfigError("kernel larger than image");
  Image out(w, h, 0.0);
  const int c = k.size / 2;
  for (int y = 0; y < k.size; ++y)
    for (int x = 0; x < k.size; ++x) {
      const int yy = ((y - c) % h + h) % h;
      const int xx = ((x - c) % w + w) % w;
      out.at(yy, xx) += k.at(y, x);
    }
  return out;
}

// Optical transfer function of a kernel on a w x h grid.
inline std::vector<Complex> kernel_otf(const BlurKernel& k, int w, int h) {
  return fft2(embed_kernel(k, w, h));
}

// Circular (periodic) convolution with the kernel anchored at its center.
inline Image convolve_fft(const Image& img, const BlurKernel& k) {
  if (k.size > std::min(img.width, img.height))
    throw ConfigError("convolve_fft: kernel larger than image");
  std::vector<Complex> fi = fft2(img);
  std::vector<Complex> fk = kernel_otf(k, img.width, img.height);
  for (std::size_t i = 0; i < fi.size(); ++i) fi[i] *= fk[i];
  return ifft2_real(fi, img.width, img.height);
}

}  // namespace br
