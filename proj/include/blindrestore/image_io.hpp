#pragma once

#include <png.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "blindrestore/image.hpp"

namespace br {

namespace io_detail {

inline int pgm_token(std::istream& in) {
  // whitespace- and comment-aware integer scanner for PGM headers
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
    } else if (!std::isspace(c)) {
      in.unget();
      int v;
      if (!(in >> v)) throw IoError("malformed PGM header");
      return v;
    }
  }
  throw IoError("truncated PGM header");
}

inline Image load_pgm(std::istream& in, const std::string& path) {
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 != 'P') throw IoError(path + ": not a PGM file");
  if (m1 == '6' || m1 == '3') throw IoError(path + ": grayscale required (color PNM)");
  if (m1 != '5') throw IoError(path + ": only binary PGM (P5) is supported");
  const int w = pgm_token(in);
  const int h = pgm_token(in);
  const int maxval = pgm_token(in);
  if (w < 1 || h < 1) throw IoError(path + ": bad PGM dimensions");
  if (maxval < 1 || maxval > 65535) throw IoError(path + ": bad PGM maxval");
  in.get();  // single whitespace after maxval
  Image img(w, h);
  const std::size_t n = img.size();
  if (maxval < 256) {
    std::vector<std::uint8_t> buf(n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
    if (!in) throw IoError(path + ": truncated PGM data");
    for (std::size_t i = 0; i < n; ++i) img.data[i] = buf[i] / static_cast<double>(maxval);
  } else {
    std::vector<std::uint8_t> buf(n * 2);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * 2));
    if (!in) throw IoError(path + ": truncated PGM data");
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned v = (static_cast<unsigned>(buf[2 * i]) << 8) | buf[2 * i + 1];
      img.data[i] = v / static_cast<double>(maxval);
    }
  }
  return img;
}

inline void save_pgm(const Image& img, std::ostream& out, int bits) {
  const int maxval = bits == 16 ? 65535 : 255;
  out << "P5\n" << img.width << " " << img.height << "\n" << maxval << "\n";
  auto quantize = [&](double v) {
    const double q = std::floor(std::clamp(v, 0.0, 1.0) * maxval + 0.5);
    return static_cast<unsigned>(q);
  };
  if (bits == 16) {
    for (double v : img.data) {
      const unsigned q = quantize(v);
      out.put(static_cast<char>((q >> 8) & 0xff));
      out.put(static_cast<char>(q & 0xff));
    }
  } else {
    for (double v : img.data) out.put(static_cast<char>(quantize(v) & 0xff));
  }
}

struct PngReadCtx {
  std::istream* in;
};

inline void png_read_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* ctx = static_cast<PngReadCtx*>(png_get_io_ptr(png));
  ctx->in->read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(len));
  if (!*ctx->in) png_error(png, "read failure");
}

struct PngWriteCtx {
  std::ostream* out;
};

inline void png_write_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* ctx = static_cast<PngWriteCtx*>(png_get_io_ptr(png));
  ctx->out->write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(len));
  if (!*ctx->out) png_error(png, "write failure");
}

inline void png_flush_cb(png_structp png) {
  auto* ctx = static_cast<PngWriteCtx*>(png_get_io_ptr(png));
  ctx->out->flush();
}

inline Image load_png(std::istream& in, const std::string& path) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng init failed");
  }
  std::vector<std::vector<png_byte>> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path + ": PNG decode failed");
  }
  PngReadCtx ctx{&in};
  png_set_read_fn(png, &ctx, png_read_cb);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  if (color != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path + ": grayscale required");
  }
  int depth = png_get_bit_depth(png, info);
  if (depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
    depth = 8;
  }
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  rows.assign(h, std::vector<png_byte>(rowbytes));
  std::vector<png_bytep> rowptrs(h);
  for (int y = 0; y < h; ++y) rowptrs[y] = rows[y].data();
  png_read_image(png, rowptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(w, h);
  const double maxval = depth == 16 ? 65535.0 : 255.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (depth == 16) {
        const unsigned v = (static_cast<unsigned>(rows[y][2 * x]) << 8) | rows[y][2 * x + 1];
        img.at(y, x) = v / maxval;
      } else {
        img.at(y, x) = rows[y][x] / maxval;
      }
    }
  return img;
}

inline void save_png(const Image& img, std::ostream& out, int bits) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng init failed");
  }
  std::vector<std::vector<png_byte>> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encode failed");
  }
  PngWriteCtx ctx{&out};
  png_set_write_fn(png, &ctx, png_write_cb, png_flush_cb);
  png_set_IHDR(png, info, img.width, img.height, bits, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const int maxval = bits == 16 ? 65535 : 255;
  rows.assign(img.height, std::vector<png_byte>(static_cast<std::size_t>(img.width) * (bits / 8)));
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double q = std::floor(std::clamp(img.at(y, x), 0.0, 1.0) * maxval + 0.5);
      const unsigned v = static_cast<unsigned>(q);
      if (bits == 16) {
        rows[y][2 * x] = static_cast<png_byte>((v >> 8) & 0xff);
        rows[y][2 * x + 1] = static_cast<png_byte>(v & 0xff);
      } else {
        rows[y][x] = static_cast<png_byte>(v & 0xff);
      }
    }
  std::vector<png_bytep> rowptrs(img.height);
  for (int y = 0; y < img.height; ++y) rowptrs[y] = rows[y].data();
  png_write_image(png, rowptrs.data());
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace io_detail

// 8/16-bit grayscale raster (PGM or PNG) mapped linearly onto [0,1].
inline Image load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open");
  const int c0 = in.peek();
  if (c0 == 'P') return io_detail::load_pgm(in, path);
  if (c0 == 0x89) return io_detail::load_png(in, path);
  throw IoError(path + ": unsupported image format (PGM or PNG grayscale expected)");
}

// Writes to a temporary file first and renames on success, so a failed run
// never leaves a partial output behind.
inline void save_image(const Image& img, const std::string& path, int bits = 8) {
  if (bits != 8 && bits != 16) throw ConfigError("save_image: bits must be 8 or 16");
  if (!all_finite(img)) throw NumericalError("save_image: non-finite pixel values");
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp + ": cannot open for writing");
    if (io_detail::ends_with(path, ".png"))
      io_detail::save_png(img, out, bits);
    else if (io_detail::ends_with(path, ".pgm"))
      io_detail::save_pgm(img, out, bits);
    else {
      out.close();
      std::remove(tmp.c_str());
      throw IoError(path + ": unsupported output extension (.pgm or .png)");
    }
    if (!out) {
      out.close();
      std::remove(tmp.c_str());
      throw IoError(tmp + ": write failed");
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw IoError(path + ": rename failed");
  }
}

// Kernel text format: first line "rows cols", then row-major reals. The
// loader renormalizes to unit mass; a correction above 1e-6 is reported
// through the optional flag.
inline BlurKernel load_kernel(const std::string& path, bool* renormalized = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open");
  int rows = 0, cols = 0;
  if (!(in >> rows >> cols)) throw IoError(path + ": malformed kernel header");
  if (rows != cols) throw ConfigError(path + ": kernel must be square");
  BlurKernel k(rows);
  for (double& w : k.weights)
    if (!(in >> w)) throw IoError(path + ": truncated kernel data");
  for (double w : k.weights)
    if (!std::isfinite(w) || w < 0.0) throw ConfigError(path + ": kernel weights must be nonnegative");
  const double s = k.sum();
  if (s <= 0.0) throw ConfigError(path + ": kernel mass must be positive");
  if (renormalized) *renormalized = std::fabs(s - 1.0) > 1e-6;
  for (double& w : k.weights) w /= s;
  return k;
}

inline void save_kernel(const BlurKernel& k, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError(tmp + ": cannot open for writing");
    out << k.size << " " << k.size << "\n";
    out.precision(17);
    for (int y = 0; y < k.size; ++y) {
      for (int x = 0; x < k.size; ++x) out << k.at(y, x) << (x + 1 == k.size ? "" : " ");
      out << "\n";
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw IoError(path + ": rename failed");
  }
}

}  // namespace br
