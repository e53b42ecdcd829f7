#pragma once

#include <png.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "m2ae/motion.hpp"
#include "m2ae/tensor.hpp"
#include "m2ae/weights.hpp"

namespace m2ae {

namespace detail {

inline uint8_t quantize(float v) {
  const float scaled = std::clamp(v, 0.0f, 1.0f) * 255.0f;
  return static_cast<uint8_t>(std::min(255.0f, std::floor(scaled + 0.5f)));
}

struct PngReadCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FILE* fp = nullptr;
  ~PngReadCloser() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

struct PngWriteCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FILE* fp = nullptr;
  ~PngWriteCloser() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

inline std::vector<std::vector<uint8_t>> read_png_rows(const std::string& path, int& width,
                                                       int& height, int& channels) {
  PngReadCloser ctx;
  ctx.fp = std::fopen(path.c_str(), "rb");
  if (!ctx.fp) throw IoError("cannot open image: " + path);
  uint8_t sig[8];
  if (std::fread(sig, 1, 8, ctx.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw IoError("not a PNG file: " + path);
  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.png || !ctx.info) throw IoError("png init failed: " + path);
  if (setjmp(png_jmpbuf(ctx.png))) throw IoError("corrupt or truncated PNG: " + path);
  png_init_io(ctx.png, ctx.fp);
  png_set_sig_bytes(ctx.png, 8);
  png_read_info(ctx.png, ctx.info);
  width = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
  height = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
  const int bit_depth = png_get_bit_depth(ctx.png, ctx.info);
  const int color = png_get_color_type(ctx.png, ctx.info);
  if (bit_depth == 16) png_set_strip_16(ctx.png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
  if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
  if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(ctx.png);
  png_set_strip_alpha(ctx.png);
  png_read_update_info(ctx.png, ctx.info);
  channels = png_get_channels(ctx.png, ctx.info);
  std::vector<std::vector<uint8_t>> rows(height);
  std::vector<png_bytep> ptrs(height);
  const size_t rowbytes = png_get_rowbytes(ctx.png, ctx.info);
  for (int y = 0; y < height; ++y) {
    rows[y].resize(rowbytes);
    ptrs[y] = rows[y].data();
  }
  png_read_image(ctx.png, ptrs.data());
  png_read_end(ctx.png, nullptr);
  return rows;
}

inline void write_png(const std::string& path, const std::vector<std::vector<uint8_t>>& rows,
                      int width, int height, int channels) {
  const std::string tmp = path + ".tmp";
  {
    PngWriteCloser ctx;
    ctx.fp = std::fopen(tmp.c_str(), "wb");
    if (!ctx.fp) throw IoError("cannot open for writing: " + tmp);
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.png || !ctx.info) throw IoError("png init failed: " + tmp);
    if (setjmp(png_jmpbuf(ctx.png))) throw IoError("png write failed: " + tmp);
    png_init_io(ctx.png, ctx.fp);
    png_set_IHDR(ctx.png, ctx.info, width, height, 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    for (int y = 0; y < height; ++y)
      png_write_row(ctx.png, const_cast<png_bytep>(rows[y].data()));
    png_write_end(ctx.png, nullptr);
  }
  std::filesystem::rename(tmp, path);
}

inline Tensor load_ppm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open image: " + path);
  std::string magic;
  is >> magic;
  if (magic != "P6") throw IoError("unsupported PPM variant in " + path);
  auto next_int = [&]() {
    // skip whitespace and # comments
    for (;;) {
      const int c = is.peek();
      if (c == '#') {
        std::string line;
        std::getline(is, line);
      } else if (std::isspace(c)) {
        is.get();
      } else {
        break;
      }
    }
    int v;
    is >> v;
    if (!is) throw IoError("truncated PPM header in " + path);
    return v;
  };
  const int W = next_int(), H = next_int(), maxval = next_int();
  if (maxval != 255) throw IoError("unsupported PPM max value in " + path);
  is.get();  // single whitespace before pixel data
  std::vector<uint8_t> raw(static_cast<size_t>(W) * H * 3);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!is) throw IoError("truncated PPM pixel data in " + path);
  Tensor t({3, H, W});
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c)
        t.at(c, y, x) = static_cast<float>(raw[(static_cast<size_t>(y) * W + x) * 3 + c]) / 255.0f;
  return t;
}

}  // namespace detail

/// Load an 8-bit RGB PNG or binary PPM as a 3xHxW tensor in [0,1].
inline Tensor load_image(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".ppm") return detail::load_ppm(path);
  int W = 0, H = 0, channels = 0;
  const auto rows = detail::read_png_rows(path, W, H, channels);
  Tensor t({3, H, W});
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c) {
        const uint8_t v = channels == 1 ? rows[y][x] : rows[y][static_cast<size_t>(x) * channels + c];
        t.at(c, y, x) = static_cast<float>(v) / 255.0f;
      }
  return t;
}

/// Save a 3xHxW tensor in [0,1] as an 8-bit RGB PNG, round-half-up.
inline void save_image(const Tensor& t, const std::string& path) {
  require(t.rank() == 3 && t.dims[0] == 3, "save_image: tensor must be 3xHxW");
  const int H = t.dims[1], W = t.dims[2];
  std::vector<std::vector<uint8_t>> rows(H, std::vector<uint8_t>(static_cast<size_t>(W) * 3));
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c)
        rows[y][static_cast<size_t>(x) * 3 + c] = detail::quantize(t.at(c, y, x));
  detail::write_png(path, rows, W, H, 3);
}

/// Save a binary HxW mask as single-channel PNG with values 0 or 255.
inline void save_mask(const Tensor& hard, const std::string& path) {
  require(hard.rank() == 2, "save_mask: mask must be HxW");
  const int H = hard.dims[0], W = hard.dims[1];
  std::vector<std::vector<uint8_t>> rows(H, std::vector<uint8_t>(W));
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      rows[y][x] = hard.data[static_cast<size_t>(y) * W + x] != 0.0f ? 255 : 0;
  detail::write_png(path, rows, W, H, 1);
}

/// Export a trajectory as raw little-endian f32 plus a JSON sidecar with dims.
inline void export_trajectory(const TrajectoryField& traj, const std::string& path) {
  {
    detail::AtomicFileWriter writer(path);
    for (float v : traj.offsets.data) {
      uint32_t bits;
      std::memcpy(&bits, &v, 4);
      detail::write_le<uint32_t>(writer.stream(), bits);
    }
    writer.commit();
  }
  const nlohmann::json sidecar = {{"dtype", "f32"},
                                  {"byte_order", "little"},
                                  {"dims", traj.offsets.dims},
                                  {"layout", "steps x height x width x (dx,dy)"}};
  detail::AtomicFileWriter writer(path + ".json");
  const std::string text = sidecar.dump(2);
  writer.stream().write(text.data(), static_cast<std::streamsize>(text.size()));
  writer.commit();
}

}  // namespace m2ae
