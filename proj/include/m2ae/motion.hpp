#pragma once

#include <cmath>

#include "m2ae/tensor.hpp"

namespace m2ae {

/// Endpoint displacements of the exposure-time trajectory, measured from the
/// exposure midpoint. Storage component order is (dx, dy), pixels at the
/// producing scale.
struct DisplacementPair {
  Tensor o_start;  // H x W x 2
  Tensor o_end;    // H x W x 2

  void validate() const {
    require(o_start.rank() == 3 && o_start.dims[2] == 2, "displacement pair: o_start HxWx2");
    require(o_start.same_dims(o_end), "displacement pair: endpoint dims differ");
  }
  int height() const { return o_start.dims[0]; }
  int width() const { return o_start.dims[1]; }
};

/// Discretized trajectory: offsets at N time instants per pixel.
struct TrajectoryField {
  int steps = 0;
  Tensor offsets;  // N x H x W x 2

  float at(int n, int y, int x, int comp) const {
    const int H = offsets.dims[1], W = offsets.dims[2];
    return offsets.data[((static_cast<size_t>(n) * H + y) * W + x) * 2 + comp];
  }
};

/// Per-pixel, per-tap sampling displacements for deformable convolution.
/// Layout H x W x 18, tap-major pairs (dy, dx), tap order matching unfold3.
struct OffsetField {
  Tensor d;

  int height() const { return d.dims[0]; }
  int width() const { return d.dims[1]; }
  float dy(int y, int x, int tap) const {
    return d.data[(static_cast<size_t>(y) * d.dims[1] + x) * 18 + tap * 2];
  }
  float dx(int y, int x, int tap) const {
    return d.data[(static_cast<size_t>(y) * d.dims[1] + x) * 18 + tap * 2 + 1];
  }
};

/// Single conv layer C -> 4: channels 0-1 are o_start (dx, dy), 2-3 o_end.
inline DisplacementPair predict_endpoints(const Tensor& f_in, const ConvSpec& conv) {
  require(conv.out_channels == 4, "predict_endpoints: conv must emit 4 channels");
  Tensor raw = conv2d(f_in, conv);
  const int H = raw.dims[1], W = raw.dims[2];
  DisplacementPair pair;
  pair.o_start = Tensor({H, W, 2});
  pair.o_end = Tensor({H, W, 2});
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const size_t p = (static_cast<size_t>(y) * W + x) * 2;
      pair.o_start.data[p] = raw.at(0, y, x);
      pair.o_start.data[p + 1] = raw.at(1, y, x);
      pair.o_end.data[p] = raw.at(2, y, x);
      pair.o_end.data[p + 1] = raw.at(3, y, x);
    }
  return pair;
}

/// Quadratic interpolation between the endpoint displacements:
/// o(t_n) = (o_s + o_e)/2 * u^2 + (o_e - o_s)/2 * u with u = 2n/(N-1) - 1.
/// Exactly o_start at n=0, o_end at n=N-1, zero at the midpoint for odd N.
inline TrajectoryField interpolate_quadratic(const DisplacementPair& pair, int N) {
  pair.validate();
  if (N < 2) throw ArgumentError("interpolate_quadratic: N must be >= 2");
  const int H = pair.height(), W = pair.width();
  TrajectoryField traj;
  traj.steps = N;
  traj.offsets = Tensor({N, H, W, 2});
  const size_t plane = static_cast<size_t>(H) * W * 2;
  for (int n = 0; n < N; ++n) {
    float* dst = &traj.offsets.data[static_cast<size_t>(n) * plane];
    // the formula is exact at u = -1, 0, 1 algebraically; copy the endpoints
    // so float rounding cannot break that
    if (n == 0) {
      std::copy(pair.o_start.data.begin(), pair.o_start.data.end(), dst);
      continue;
    }
    if (n == N - 1) {
      std::copy(pair.o_end.data.begin(), pair.o_end.data.end(), dst);
      continue;
    }
    const float u = 2.0f * static_cast<float>(n) / static_cast<float>(N - 1) - 1.0f;
    for (size_t i = 0; i < plane; ++i) {
      const float s = pair.o_start.data[i], e = pair.o_end.data[i];
      dst[i] = 0.5f * (s + e) * u * u + 0.5f * (e - s) * u;
    }
  }
  return traj;
}

/// Piecewise-linear variant: scales o_start before the midpoint, o_end after,
/// exactly zero at the midpoint.
inline TrajectoryField interpolate_linear(const DisplacementPair& pair, int N) {
  pair.validate();
  if (N < 3 || N % 2 == 0) throw ArgumentError("interpolate_linear: N must be odd and >= 3");
  const int H = pair.height(), W = pair.width();
  const int mid = (N - 1) / 2;
  TrajectoryField traj;
  traj.steps = N;
  traj.offsets = Tensor({N, H, W, 2});
  const size_t plane = static_cast<size_t>(H) * W * 2;
  for (int n = 0; n < N; ++n) {
    float* dst = &traj.offsets.data[static_cast<size_t>(n) * plane];
    if (n == mid) continue;  // already zero
    const float t = 2.0f * static_cast<float>(n) / static_cast<float>(N - 1) - 1.0f;
    const Tensor& src = (n < mid) ? pair.o_start : pair.o_end;
    const float scale = (n < mid) ? -t : t;
    for (size_t i = 0; i < plane; ++i) dst[i] = scale * src.data[i];
  }
  return traj;
}

/// Combine a 9-step trajectory with the base 3x3 grid: tap j gets the grid
/// offset of tap j plus the trajectory offset at step n = j.
inline OffsetField build_deform_offsets(const TrajectoryField& traj) {
  if (traj.steps != 9) throw ArgumentError("build_deform_offsets: trajectory must have 9 steps");
  const int H = traj.offsets.dims[1], W = traj.offsets.dims[2];
  OffsetField field;
  field.d = Tensor({H, W, 18});
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int j = 0; j < 9; ++j) {
        const float gy = static_cast<float>(j / 3 - 1);
        const float gx = static_cast<float>(j % 3 - 1);
        // trajectory stores (dx, dy); the offset field stores (dy, dx)
        const size_t p = (static_cast<size_t>(y) * W + x) * 18 + static_cast<size_t>(j) * 2;
        field.d.data[p] = gy + traj.at(j, y, x, 1);
        field.d.data[p + 1] = gx + traj.at(j, y, x, 0);
      }
  return field;
}

/// Bilinearly resample a displacement field to round(extent * factor) and
/// scale magnitudes by factor (pixels at half resolution are half as long).
inline DisplacementPair rescale_displacements(const DisplacementPair& pair, float factor) {
  pair.validate();
  if (!(factor > 0.0f)) throw ArgumentError("rescale_displacements: factor must be positive");
  const int H = pair.height(), W = pair.width();
  const int Ho = std::max(1, static_cast<int>(std::lround(H * factor)));
  const int Wo = std::max(1, static_cast<int>(std::lround(W * factor)));

  auto resample = [&](const Tensor& src) {
    // view as 2 x H x W for bilinear_sample
    Tensor chw({2, H, W});
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        for (int c = 0; c < 2; ++c)
          chw.at(c, y, x) = src.data[(static_cast<size_t>(y) * W + x) * 2 + c];
    Tensor out({Ho, Wo, 2});
    const float sy = static_cast<float>(H) / Ho;
    const float sx = static_cast<float>(W) / Wo;
    for (int y = 0; y < Ho; ++y)
      for (int x = 0; x < Wo; ++x) {
        const float yy = (static_cast<float>(y) + 0.5f) * sy - 0.5f;
        const float xx = (static_cast<float>(x) + 0.5f) * sx - 0.5f;
        for (int c = 0; c < 2; ++c)
          out.data[(static_cast<size_t>(y) * Wo + x) * 2 + c] =
              factor * bilinear_sample(chw, yy, xx, c);
      }
    return out;
  };

  DisplacementPair out;
  out.o_start = resample(pair.o_start);
  out.o_end = resample(pair.o_end);
  return out;
}

}  // namespace m2ae
