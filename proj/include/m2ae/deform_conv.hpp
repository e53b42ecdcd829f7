#pragma once

#include "m2ae/flops.hpp"
#include "m2ae/motion.hpp"
#include "m2ae/tensor.hpp"

namespace m2ae {

/// Depthwise deformable conv weights: one 3x3 filter per channel.
struct DeformDWSpec {
  Tensor weights;  // C x 3 x 3
  std::optional<Tensor> bias;

  void validate(int C) const {
    require(weights.dims == std::vector<int>{C, 3, 3}, "deform dw: weight dims mismatch");
    if (bias) require(bias->dims == std::vector<int>{C}, "deform dw: bias dims mismatch");
  }
};

/// Motion-aware depthwise deformable convolution: each output pixel
/// accumulates bilinear samples along the per-pixel tap displacements,
/// shared across channels. Out-of-bounds samples clamp to the border.
inline Tensor deform_dwconv(const Tensor& f4, const OffsetField& d, const DeformDWSpec& spec,
                            FlopLedger* ledger = nullptr) {
  require(f4.rank() == 3, "deform_dwconv: input must be CxHxW");
  const int C = f4.dims[0], H = f4.dims[1], W = f4.dims[2];
  spec.validate(C);
  require(d.d.dims == std::vector<int>{H, W, 18}, "deform_dwconv: offset dims mismatch");

  Tensor out({C, H, W});
  for (int c = 0; c < C; ++c) {
    const float* wt = &spec.weights.data[static_cast<size_t>(c) * 9];
    const float b = spec.bias ? spec.bias->data[c] : 0.0f;
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        float acc = b;
        for (int j = 0; j < 9; ++j)
          acc += wt[j] * bilinear_sample(f4, static_cast<float>(y) + d.dy(y, x, j),
                                         static_cast<float>(x) + d.dx(y, x, j), c);
        out.at(c, y, x) = acc;
      }
  }
  if (ledger) {
    const int64_t hw = static_cast<int64_t>(H) * W;
    ledger->record_dense("deform_dw_taps", hw * C * 9);
    ledger->record_dense("deform_bilinear", hw * C * 9 * 4);
  }
  return out;
}

/// Identity offsets: the plain 3x3 grid at every pixel.
inline OffsetField base_grid_offsets(int H, int W) {
  OffsetField field;
  field.d = Tensor({H, W, 18});
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int j = 0; j < 9; ++j) {
        const size_t p = (static_cast<size_t>(y) * W + x) * 18 + static_cast<size_t>(j) * 2;
        field.d.data[p] = static_cast<float>(j / 3 - 1);
        field.d.data[p + 1] = static_cast<float>(j % 3 - 1);
      }
  return field;
}

}  // namespace m2ae
