#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace m2ae {

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

struct ArgumentError : std::runtime_error {
  explicit ArgumentError(const std::string& what) : std::runtime_error(what) {}
};

/// Dense rank-N array of f32, row-major, channel outermost for image data.
struct Tensor {
  std::vector<int> dims;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> d) : dims(std::move(d)) {
    data.assign(static_cast<size_t>(numel(dims)), 0.0f);
  }
  Tensor(std::vector<int> d, std::vector<float> v) : dims(std::move(d)), data(std::move(v)) {
    if (numel(dims) != static_cast<int64_t>(data.size()))
      throw ShapeError("tensor: dims/data size mismatch");
  }

  static int64_t numel(const std::vector<int>& d) {
    int64_t n = 1;
    for (int e : d) {
      if (e <= 0) throw ShapeError("tensor: non-positive extent");
      n *= e;
    }
    return n;
  }

  int64_t size() const { return static_cast<int64_t>(data.size()); }
  int rank() const { return static_cast<int>(dims.size()); }

  // CHW accessors for the common image case.
  float& at(int c, int y, int x) {
    return data[(static_cast<size_t>(c) * dims[1] + y) * dims[2] + x];
  }
  float at(int c, int y, int x) const {
    return data[(static_cast<size_t>(c) * dims[1] + y) * dims[2] + x];
  }

  bool same_dims(const Tensor& o) const { return dims == o.dims; }

  bool all_finite() const {
    for (float v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

/// 2-D convolution parameters plus weights, layout out x (in/groups) x k x k.
struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel_size = 1;
  int padding = 0;
  int stride = 1;
  int groups = 1;
  Tensor weights;
  std::optional<Tensor> bias;

  void validate() const {
    require(in_channels > 0 && out_channels > 0 && kernel_size > 0 && stride > 0 && groups > 0,
            "conv: non-positive parameter");
    require(padding >= 0, "conv: negative padding");
    require(in_channels % groups == 0 && out_channels % groups == 0,
            "conv: channels not divisible by groups");
    require(kernel_size % 2 == 1, "conv: kernel size must be odd");
    const int in_g = in_channels / groups;
    require(weights.dims ==
                std::vector<int>{out_channels, in_g, kernel_size, kernel_size},
            "conv: weight dims mismatch");
    if (bias) require(bias->dims == std::vector<int>{out_channels}, "conv: bias dims mismatch");
  }
};

/// Standard cross-correlation with zero padding. Accumulation per output pixel
/// runs in fixed (ic, ky, kx) order, so results are reproducible.
inline Tensor conv2d(const Tensor& x, const ConvSpec& spec) {
  spec.validate();
  require(x.rank() == 3, "conv2d: input must be CxHxW");
  require(x.dims[0] == spec.in_channels, "conv2d: input channel mismatch");
  const int H = x.dims[1], W = x.dims[2];
  const int k = spec.kernel_size, pad = spec.padding, stride = spec.stride;
  const int Ho = (H + 2 * pad - k) / stride + 1;
  const int Wo = (W + 2 * pad - k) / stride + 1;
  require(Ho > 0 && Wo > 0, "conv2d: non-positive output extent");

  const int in_g = spec.in_channels / spec.groups;
  const int out_g = spec.out_channels / spec.groups;
  Tensor out({spec.out_channels, Ho, Wo});

  for (int oc = 0; oc < spec.out_channels; ++oc) {
    const int g = oc / out_g;
    float* optr = &out.data[static_cast<size_t>(oc) * Ho * Wo];
    const float b = spec.bias ? spec.bias->data[oc] : 0.0f;
    std::fill(optr, optr + static_cast<size_t>(Ho) * Wo, b);
    for (int icl = 0; icl < in_g; ++icl) {
      const int ic = g * in_g + icl;
      const float* xc = &x.data[static_cast<size_t>(ic) * H * W];
      const float* wrow =
          &spec.weights.data[((static_cast<size_t>(oc) * in_g + icl) * k) * k];
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const float w = wrow[ky * k + kx];
          if (w == 0.0f) continue;
          for (int oy = 0; oy < Ho; ++oy) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= H) continue;
            float* orow = optr + static_cast<size_t>(oy) * Wo;
            const float* xrow = xc + static_cast<size_t>(iy) * W;
            // valid ox range: 0 <= ox*stride + kx - pad < W
            int ox0 = 0;
            while (ox0 < Wo && ox0 * stride + kx - pad < 0) ++ox0;
            int ox1 = Wo;
            while (ox1 > ox0 && (ox1 - 1) * stride + kx - pad >= W) --ox1;
            if (stride == 1) {
              const float* xs = xrow + (ox0 + kx - pad);
              for (int ox = ox0; ox < ox1; ++ox) orow[ox] += w * xs[ox - ox0];
            } else {
              for (int ox = ox0; ox < ox1; ++ox)
                orow[ox] += w * xrow[ox * stride + kx - pad];
            }
          }
        }
      }
    }
  }
  return out;
}

/// 3x3 im2col: channel block c*9+j at (y,x) holds x[c, y+dy_j, x+dx_j]
/// with zero fill outside bounds. Tap order is (ky,kx) row-major.
inline Tensor unfold3(const Tensor& x) {
  require(x.rank() == 3, "unfold3: input must be CxHxW");
  const int C = x.dims[0], H = x.dims[1], W = x.dims[2];
  Tensor out({C * 9, H, W});
  for (int c = 0; c < C; ++c) {
    for (int j = 0; j < 9; ++j) {
      const int dy = j / 3 - 1, dx = j % 3 - 1;
      float* optr = &out.data[static_cast<size_t>(c * 9 + j) * H * W];
      for (int y = 0; y < H; ++y) {
        const int sy = y + dy;
        if (sy < 0 || sy >= H) continue;
        const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
        const float* srow = &x.data[(static_cast<size_t>(c) * H + sy) * W];
        for (int xx = x0; xx < x1; ++xx) optr[static_cast<size_t>(y) * W + xx] = srow[xx + dx];
      }
    }
  }
  return out;
}

constexpr float kLayerNormEps = 1e-6f;

/// Channel-axis normalization per spatial position, then affine gamma/beta.
inline Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
  require(x.rank() == 3, "layer_norm: input must be CxHxW");
  const int C = x.dims[0], H = x.dims[1], W = x.dims[2];
  require(gamma.dims == std::vector<int>{C} && beta.dims == std::vector<int>{C},
          "layer_norm: affine dims mismatch");
  Tensor out({C, H, W});
  const size_t plane = static_cast<size_t>(H) * W;
  for (size_t p = 0; p < plane; ++p) {
    float mean = 0.0f;
    for (int c = 0; c < C; ++c) mean += x.data[c * plane + p];
    mean /= static_cast<float>(C);
    float var = 0.0f;
    for (int c = 0; c < C; ++c) {
      const float d = x.data[c * plane + p] - mean;
      var += d * d;
    }
    var /= static_cast<float>(C);
    const float inv = 1.0f / std::sqrt(var + kLayerNormEps);
    for (int c = 0; c < C; ++c)
      out.data[c * plane + p] = (x.data[c * plane + p] - mean) * inv * gamma.data[c] + beta.data[c];
  }
  return out;
}

/// Split channels in half, elementwise product.
inline Tensor simple_gate(const Tensor& x) {
  require(x.rank() == 3, "simple_gate: input must be CxHxW");
  require(x.dims[0] % 2 == 0, "simple_gate: odd channel count");
  const int C = x.dims[0] / 2, H = x.dims[1], W = x.dims[2];
  Tensor out({C, H, W});
  const size_t half = static_cast<size_t>(C) * H * W;
  for (size_t i = 0; i < half; ++i) out.data[i] = x.data[i] * x.data[half + i];
  return out;
}

/// Global average pool -> 1x1 conv over the pooled C-vector -> per-channel
/// scale multiplied back onto x.
inline Tensor simplified_channel_attention(const Tensor& x, const ConvSpec& w) {
  require(x.rank() == 3, "sca: input must be CxHxW");
  w.validate();
  require(w.kernel_size == 1 && w.in_channels == x.dims[0], "sca: 1x1 over C required");
  require(w.out_channels == x.dims[0], "sca: must preserve channel count");
  const int C = x.dims[0];
  const size_t plane = static_cast<size_t>(x.dims[1]) * x.dims[2];
  std::vector<float> pooled(C, 0.0f);
  for (int c = 0; c < C; ++c) {
    float s = 0.0f;
    const float* p = &x.data[c * plane];
    for (size_t i = 0; i < plane; ++i) s += p[i];
    pooled[c] = s / static_cast<float>(plane);
  }
  Tensor out({C, x.dims[1], x.dims[2]});
  const int in_g = w.in_channels / w.groups;
  const int out_g = w.out_channels / w.groups;
  for (int oc = 0; oc < C; ++oc) {
    const int g = oc / out_g;
    float scale = w.bias ? w.bias->data[oc] : 0.0f;
    for (int icl = 0; icl < in_g; ++icl)
      scale += w.weights.data[static_cast<size_t>(oc) * in_g + icl] * pooled[g * in_g + icl];
    const float* xp = &x.data[oc * plane];
    float* op = &out.data[oc * plane];
    for (size_t i = 0; i < plane; ++i) op[i] = xp[i] * scale;
  }
  return out;
}

/// Four-neighbor bilinear interpolation; coordinates clamp to the border.
inline float bilinear_sample(const Tensor& x, float y_coord, float x_coord, int c) {
  const int H = x.dims[1], W = x.dims[2];
  y_coord = std::clamp(y_coord, 0.0f, static_cast<float>(H - 1));
  x_coord = std::clamp(x_coord, 0.0f, static_cast<float>(W - 1));
  const int y0 = static_cast<int>(std::floor(y_coord));
  const int x0 = static_cast<int>(std::floor(x_coord));
  const int y1 = std::min(y0 + 1, H - 1);
  const int x1 = std::min(x0 + 1, W - 1);
  const float fy = y_coord - static_cast<float>(y0);
  const float fx = x_coord - static_cast<float>(x0);
  const float v00 = x.at(c, y0, x0), v01 = x.at(c, y0, x1);
  const float v10 = x.at(c, y1, x0), v11 = x.at(c, y1, x1);
  const float top = v00 + fx * (v01 - v00);
  const float bot = v10 + fx * (v11 - v10);
  return top + fy * (bot - top);
}

/// Depth-to-space with factor 2: channel c*4 + dy*2 + dx lands at (2y+dy, 2x+dx).
inline Tensor pixel_shuffle2(const Tensor& x) {
  require(x.rank() == 3, "pixel_shuffle: input must be CxHxW");
  require(x.dims[0] % 4 == 0, "pixel_shuffle: channels not divisible by 4");
  const int C = x.dims[0] / 4, H = x.dims[1], W = x.dims[2];
  Tensor out({C, 2 * H, 2 * W});
  for (int c = 0; c < C; ++c)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx)
        for (int y = 0; y < H; ++y)
          for (int xx = 0; xx < W; ++xx)
            out.at(c, 2 * y + dy, 2 * xx + dx) = x.at(c * 4 + dy * 2 + dx, y, xx);
  return out;
}

/// Learned 2x2 stride-2 conv, C -> 2C, halved spatial extents.
inline Tensor resample_down(const Tensor& x, const Tensor& weights,
                            const std::optional<Tensor>& bias = std::nullopt) {
  require(x.rank() == 3, "resample_down: input must be CxHxW");
  const int C = x.dims[0], H = x.dims[1], W = x.dims[2];
  require(H % 2 == 0 && W % 2 == 0, "resample_down: odd spatial extent");
  require(weights.dims == std::vector<int>{2 * C, C, 2, 2}, "resample_down: weight dims mismatch");
  if (bias) require(bias->dims == std::vector<int>{2 * C}, "resample_down: bias dims mismatch");
  const int Ho = H / 2, Wo = W / 2;
  Tensor out({2 * C, Ho, Wo});
  for (int oc = 0; oc < 2 * C; ++oc) {
    const float b = bias ? bias->data[oc] : 0.0f;
    for (int oy = 0; oy < Ho; ++oy)
      for (int ox = 0; ox < Wo; ++ox) {
        float acc = b;
        for (int ic = 0; ic < C; ++ic)
          for (int ky = 0; ky < 2; ++ky)
            for (int kx = 0; kx < 2; ++kx)
              acc += weights.data[((static_cast<size_t>(oc) * C + ic) * 2 + ky) * 2 + kx] *
                     x.at(ic, 2 * oy + ky, 2 * ox + kx);
        out.at(oc, oy, ox) = acc;
      }
  }
  return out;
}

/// 1x1 conv C -> 2C then pixel-shuffle: halved channels, doubled extents.
inline Tensor resample_up(const Tensor& x, const ConvSpec& expand) {
  require(x.rank() == 3, "resample_up: input must be CxHxW");
  require(expand.kernel_size == 1 && expand.in_channels == x.dims[0] &&
              expand.out_channels == 2 * x.dims[0],
          "resample_up: expects 1x1 conv C -> 2C");
  return pixel_shuffle2(conv2d(x, expand));
}

}  // namespace m2ae
