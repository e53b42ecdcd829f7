#pragma once

#include <cstdint>
#include <vector>

#include "m2ae/flops.hpp"
#include "m2ae/mask_predictor.hpp"
#include "m2ae/tensor.hpp"

namespace m2ae {

/// A 3x3 convolution rewritten as a 1x1 convolution over unfold3-expanded
/// features. Pure weight-layout permutation; the arithmetic is unchanged.
struct ReparamConv {
  ConvSpec original;
  ConvSpec reshaped;  // out x ((in/g)*9) x 1 x 1, groups preserved
};

inline ReparamConv reparameterize(const ConvSpec& spec) {
  spec.validate();
  if (spec.kernel_size != 3) throw ArgumentError("reparameterize: kernel size must be 3");
  const int in_g = spec.in_channels / spec.groups;
  ReparamConv rc;
  rc.original = spec;
  rc.reshaped.in_channels = spec.in_channels * 9;
  rc.reshaped.out_channels = spec.out_channels;
  rc.reshaped.kernel_size = 1;
  rc.reshaped.padding = 0;
  rc.reshaped.stride = 1;
  rc.reshaped.groups = spec.groups;
  rc.reshaped.bias = spec.bias;
  rc.reshaped.weights = Tensor({spec.out_channels, in_g * 9, 1, 1});
  // unfold3 channel for input channel ci, tap j is ci*9 + j; tap order is the
  // kernel's own (ky, kx) row-major order, so this is a flat copy per row.
  for (int oc = 0; oc < spec.out_channels; ++oc)
    for (int icl = 0; icl < in_g; ++icl)
      for (int j = 0; j < 9; ++j)
        rc.reshaped.weights.data[(static_cast<size_t>(oc) * in_g + icl) * 9 + j] =
            spec.weights.data[(static_cast<size_t>(oc) * in_g + icl) * 9 + j];
  return rc;
}

/// Flat positions where the hard mask is 1, strictly increasing.
struct PixelGather {
  std::vector<int64_t> indices;
  int64_t Q = 0;
  int H = 0, W = 0;
};

inline PixelGather gather_indices(const Tensor& hard_mask) {
  require(hard_mask.rank() == 2, "gather_indices: mask must be HxW");
  PixelGather g;
  g.H = hard_mask.dims[0];
  g.W = hard_mask.dims[1];
  for (int64_t i = 0; i < hard_mask.size(); ++i)
    if (hard_mask.data[i] != 0.0f) g.indices.push_back(i);
  g.Q = static_cast<int64_t>(g.indices.size());
  return g;
}

/// Positions within one step of a masked pixel (3x3 dilation), for computing
/// the expand conv wherever the depthwise taps will read it.
inline PixelGather dilated_gather_indices(const Tensor& hard_mask) {
  require(hard_mask.rank() == 2, "dilated_gather_indices: mask must be HxW");
  const int H = hard_mask.dims[0], W = hard_mask.dims[1];
  std::vector<uint8_t> hit(static_cast<size_t>(H) * W, 0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      if (hard_mask.data[static_cast<size_t>(y) * W + x] == 0.0f) continue;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy >= 0 && yy < H && xx >= 0 && xx < W) hit[static_cast<size_t>(yy) * W + xx] = 1;
        }
    }
  PixelGather g;
  g.H = H;
  g.W = W;
  for (int64_t i = 0; i < static_cast<int64_t>(hit.size()); ++i)
    if (hit[i]) g.indices.push_back(i);
  g.Q = static_cast<int64_t>(g.indices.size());
  return g;
}

/// Channel repetition: C -> 2C by concatenating the input with itself.
inline Tensor rep_channels(const Tensor& f1) {
  require(f1.rank() == 3, "rep_channels: input must be CxHxW");
  Tensor out({2 * f1.dims[0], f1.dims[1], f1.dims[2]});
  std::copy(f1.data.begin(), f1.data.end(), out.data.begin());
  std::copy(f1.data.begin(), f1.data.end(), out.data.begin() + f1.size());
  return out;
}

/// The mask-aware Conv of the block's first half: 1x1 expand C -> 2C followed
/// by a 3x3 depthwise conv over 2C.
struct CompositeConv {
  ConvSpec expand;  // 1x1, C -> 2C
  ConvSpec dw;      // 3x3 depthwise over 2C

  void validate(int C) const {
    expand.validate();
    dw.validate();
    require(expand.kernel_size == 1 && expand.in_channels == C && expand.out_channels == 2 * C,
            "composite conv: expand must be 1x1 C -> 2C");
    require(dw.kernel_size == 3 && dw.in_channels == 2 * C && dw.out_channels == 2 * C &&
                dw.groups == 2 * C && dw.padding == 1 && dw.stride == 1,
            "composite conv: dw must be 3x3 depthwise over 2C");
  }
};

/// Training-path form: convolved features on masked pixels, channel-repeated
/// input elsewhere. Computes both branches densely.
inline Tensor masked_dense_forward(const Tensor& f1, const CompositeConv& conv,
                                   const BlurMask& mask, FlopLedger* ledger = nullptr) {
  require(f1.rank() == 3, "masked_dense_forward: input must be CxHxW");
  const int C = f1.dims[0], H = f1.dims[1], W = f1.dims[2];
  conv.validate(C);
  require(mask.hard.dims == std::vector<int>{H, W}, "masked_dense_forward: mask dims mismatch");

  Tensor convd = conv2d(conv2d(f1, conv.expand), conv.dw);
  Tensor out = rep_channels(f1);
  const size_t plane = static_cast<size_t>(H) * W;
  for (int c = 0; c < 2 * C; ++c)
    for (size_t p = 0; p < plane; ++p)
      if (mask.hard.data[p] != 0.0f) out.data[c * plane + p] = convd.data[c * plane + p];
  if (ledger) {
    const int64_t hw = static_cast<int64_t>(plane);
    ledger->record_dense("expand1x1", hw * 2 * C * C);
    ledger->record_dense("dw3x3", hw * 2 * C * 9);
  }
  return out;
}

/// Inference path: gather masked pixels, run the 1x1 expand and the
/// reparameterized depthwise product on the gathered rows only, scatter back
/// into a channel-repeated base. Equals masked_dense_forward on every pixel.
///
/// MAC accounting follows the pruning model: both entries scale with Q, so the
/// recorded ratio is exactly Q/(H*W). The expand conv is executed on the 3x3
/// dilation of the mask so the depthwise taps read true values; that boundary
/// overhead is data-dependent and excluded from the ledger.
inline Tensor pruned_forward(const Tensor& f1, const CompositeConv& conv, const BlurMask& mask,
                             FlopLedger& ledger) {
  require(f1.rank() == 3, "pruned_forward: input must be CxHxW");
  const int C = f1.dims[0], H = f1.dims[1], W = f1.dims[2];
  conv.validate(C);
  require(mask.hard.dims == std::vector<int>{H, W}, "pruned_forward: mask dims mismatch");
  for (float v : mask.hard.data)
    if (v != 0.0f && v != 1.0f) throw ArgumentError("pruned_forward: mask must be hard binary");

  const size_t plane = static_cast<size_t>(H) * W;
  const int C2 = 2 * C;
  const PixelGather sel = gather_indices(mask.hard);
  const int64_t hw = static_cast<int64_t>(plane);
  ledger.record("expand1x1", hw * C2 * C, sel.Q * C2 * C);
  ledger.record("dw3x3", hw * C2 * 9, sel.Q * C2 * 9);

  Tensor out = rep_channels(f1);
  if (sel.Q == 0) return out;

  // Expand conv at the dilated support, scattered into a zero base.
  const PixelGather support = dilated_gather_indices(mask.hard);
  Tensor expand_buf({C2, H, W});
  for (int oc = 0; oc < C2; ++oc) {
    const float b = conv.expand.bias ? conv.expand.bias->data[oc] : 0.0f;
    const float* wrow = &conv.expand.weights.data[static_cast<size_t>(oc) * C];
    float* dst = &expand_buf.data[oc * plane];
    for (int64_t idx : support.indices) {
      float acc = b;
      for (int c = 0; c < C; ++c) acc += wrow[c] * f1.data[c * plane + idx];
      dst[idx] = acc;
    }
  }

  // Reparameterized depthwise product on the gathered rows.
  const ReparamConv rep = reparameterize(conv.dw);
  for (int oc = 0; oc < C2; ++oc) {
    const float b = rep.reshaped.bias ? rep.reshaped.bias->data[oc] : 0.0f;
    const float* wrow = &rep.reshaped.weights.data[static_cast<size_t>(oc) * 9];
    const float* src = &expand_buf.data[oc * plane];
    float* dst = &out.data[oc * plane];
    for (int64_t idx : sel.indices) {
      const int y = static_cast<int>(idx / W), x = static_cast<int>(idx % W);
      float acc = b;
      for (int j = 0; j < 9; ++j) {
        const int yy = y + j / 3 - 1, xx = x + j % 3 - 1;
        if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;  // zero padding
        acc += wrow[j] * src[static_cast<size_t>(yy) * W + xx];
      }
      dst[idx] = acc;
    }
  }
  return out;
}

/// Mask-aware 1x1 convolution (block positions 2 and 3): convolved output at
/// masked pixels, passthrough elsewhere. Passthrough is identity for C -> C
/// and channel repetition for C -> 2C.
inline Tensor mask_aware_pointwise(const Tensor& x, const ConvSpec& spec, const BlurMask& mask,
                                   bool pruned, FlopLedger* ledger = nullptr) {
  spec.validate();
  require(spec.kernel_size == 1 && spec.groups == 1, "mask_aware_pointwise: plain 1x1 only");
  require(x.rank() == 3 && x.dims[0] == spec.in_channels, "mask_aware_pointwise: channel mismatch");
  const int Cin = spec.in_channels, Cout = spec.out_channels;
  require(Cout == Cin || Cout == 2 * Cin, "mask_aware_pointwise: passthrough undefined");
  const int H = x.dims[1], W = x.dims[2];
  require(mask.hard.dims == std::vector<int>{H, W}, "mask_aware_pointwise: mask dims mismatch");
  const size_t plane = static_cast<size_t>(H) * W;

  Tensor out = (Cout == Cin) ? x : rep_channels(x);
  const PixelGather sel = gather_indices(mask.hard);
  const int64_t hw = static_cast<int64_t>(plane);

  if (!pruned) {
    Tensor convd = conv2d(x, spec);
    for (int c = 0; c < Cout; ++c)
      for (size_t p = 0; p < plane; ++p)
        if (mask.hard.data[p] != 0.0f) out.data[c * plane + p] = convd.data[c * plane + p];
    if (ledger) ledger->record_dense("pointwise1x1", hw * Cout * Cin);
    return out;
  }

  if (ledger) ledger->record("pointwise1x1", hw * Cout * Cin, sel.Q * Cout * Cin);
  for (int oc = 0; oc < Cout; ++oc) {
    const float b = spec.bias ? spec.bias->data[oc] : 0.0f;
    const float* wrow = &spec.weights.data[static_cast<size_t>(oc) * Cin];
    float* dst = &out.data[oc * plane];
    for (int64_t idx : sel.indices) {
      float acc = b;
      for (int c = 0; c < Cin; ++c) acc += wrow[c] * x.data[c * plane + idx];
      dst[idx] = acc;
    }
  }
  return out;
}

}  // namespace m2ae
