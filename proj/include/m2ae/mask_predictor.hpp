#pragma once

#include <cmath>
#include <cstdint>

#include "m2ae/rng.hpp"
#include "m2ae/tensor.hpp"

namespace m2ae {

/// Per-pixel blur probabilities (channel 0 = blur) plus the hard binary mask.
struct BlurMask {
  Tensor probs;  // H x W, blur probability
  Tensor hard;   // H x W, values in {0, 1}
  int scale_id = 0;

  int64_t popcount() const {
    int64_t q = 0;
    for (float v : hard.data) q += (v != 0.0f);
    return q;
  }
};

/// Blur-predictor weights: LayerNorm + linear C->C embedding, then a
/// two-layer head 2C -> C/2 -> 2 with a smooth nonlinearity in between.
struct MaskPredictorParams {
  Tensor ln_gamma, ln_beta;  // C
  Tensor mlp1_w;             // C x C
  Tensor mlp1_b;             // C
  Tensor fc1_w;              // (C/2) x 2C
  Tensor fc1_b;              // C/2
  Tensor fc2_w;              // 2 x (C/2)
  Tensor fc2_b;              // 2

  void validate(int C) const {
    require(ln_gamma.dims == std::vector<int>{C} && ln_beta.dims == std::vector<int>{C},
            "mask predictor: layer-norm affine dims");
    require(mlp1_w.dims == std::vector<int>{C, C} && mlp1_b.dims == std::vector<int>{C},
            "mask predictor: mlp1 dims");
    const int hidden = C / 2;
    require(fc1_w.dims == std::vector<int>{hidden, 2 * C} &&
                fc1_b.dims == std::vector<int>{hidden},
            "mask predictor: fc1 dims");
    require(fc2_w.dims == std::vector<int>{2, hidden} && fc2_b.dims == std::vector<int>{2},
            "mask predictor: fc2 dims");
  }
};

namespace detail {

inline float gelu(float v) {
  // tanh approximation
  const float c = 0.7978845608028654f;  // sqrt(2/pi)
  return 0.5f * v * (1.0f + std::tanh(c * (v + 0.044715f * v * v * v)));
}

/// Hard Gumbel-softmax decision for one pixel given explicit noise draws.
/// Returns 1 when component 0 (blur) wins.
inline float gumbel_hard(float p0, float p1, double noise0, double noise1, double tau) {
  const double kTiny = 1e-10;
  const double l0 = std::log(std::max(static_cast<double>(p0), kTiny)) + noise0;
  const double l1 = std::log(std::max(static_cast<double>(p1), kTiny)) + noise1;
  // argmax of softmax((l)/tau) is argmax of l; tau kept for the soft value.
  return (l0 / tau > l1 / tau) ? 1.0f : 0.0f;
}

}  // namespace detail

/// Per-pixel blur probabilities: embed each pixel, concat with the spatial
/// mean embedding, run the two-layer head, softmax. Output dims H x W x 2.
inline Tensor predict_probs(const Tensor& f_in, const MaskPredictorParams& params) {
  require(f_in.rank() == 3, "predict_probs: input must be CxHxW");
  const int C = f_in.dims[0], H = f_in.dims[1], W = f_in.dims[2];
  params.validate(C);
  const size_t plane = static_cast<size_t>(H) * W;
  const int hidden = C / 2;

  Tensor normed = layer_norm(f_in, params.ln_gamma, params.ln_beta);

  // e = mlp1(normed) per pixel; stored C x (H*W)
  std::vector<float> e(static_cast<size_t>(C) * plane, 0.0f);
  for (int o = 0; o < C; ++o) {
    for (int c = 0; c < C; ++c) {
      const float w = params.mlp1_w.data[static_cast<size_t>(o) * C + c];
      const float* src = &normed.data[c * plane];
      float* dst = &e[o * plane];
      for (size_t p = 0; p < plane; ++p) dst[p] += w * src[p];
    }
    float* dst = &e[o * plane];
    const float b = params.mlp1_b.data[o];
    for (size_t p = 0; p < plane; ++p) dst[p] += b;
  }

  // global feature: spatial mean of e
  std::vector<float> g(C, 0.0f);
  for (int c = 0; c < C; ++c) {
    float s = 0.0f;
    const float* src = &e[c * plane];
    for (size_t p = 0; p < plane; ++p) s += src[p];
    g[c] = s / static_cast<float>(plane);
  }

  Tensor out({H, W, 2});
  std::vector<float> h(hidden);
  for (size_t p = 0; p < plane; ++p) {
    for (int o = 0; o < hidden; ++o) {
      float acc = params.fc1_b.data[o];
      const float* wr = &params.fc1_w.data[static_cast<size_t>(o) * 2 * C];
      for (int c = 0; c < C; ++c) acc += wr[c] * e[c * plane + p];
      for (int c = 0; c < C; ++c) acc += wr[C + c] * g[c];
      h[o] = detail::gelu(acc);
    }
    float logits[2];
    for (int o = 0; o < 2; ++o) {
      float acc = params.fc2_b.data[o];
      const float* wr = &params.fc2_w.data[static_cast<size_t>(o) * hidden];
      for (int c = 0; c < hidden; ++c) acc += wr[c] * h[c];
      logits[o] = acc;
    }
    const float m = std::max(logits[0], logits[1]);
    const float e0 = std::exp(logits[0] - m), e1 = std::exp(logits[1] - m);
    out.data[p * 2 + 0] = e0 / (e0 + e1);
    out.data[p * 2 + 1] = e1 / (e0 + e1);
  }
  return out;
}

/// Stochastic hard mask via the Gumbel trick, reproducible under a fixed seed.
inline BlurMask gumbel_mask(const Tensor& probs, double temperature, uint64_t rng_seed,
                            int scale_id = 0) {
  require(probs.rank() == 3 && probs.dims[2] == 2, "gumbel_mask: probs must be HxWx2");
  if (!(temperature > 0.0)) throw ArgumentError("gumbel_mask: temperature must be positive");
  const int H = probs.dims[0], W = probs.dims[1];
  BlurMask m;
  m.scale_id = scale_id;
  m.probs = Tensor({H, W});
  m.hard = Tensor({H, W});
  const size_t plane = static_cast<size_t>(H) * W;
  for (size_t p = 0; p < plane; ++p) {
    const float p0 = probs.data[p * 2 + 0], p1 = probs.data[p * 2 + 1];
    const double n0 = gumbel_noise(counter_rng(rng_seed, p, 0));
    const double n1 = gumbel_noise(counter_rng(rng_seed, p, 1));
    m.probs.data[p] = p0;
    m.hard.data[p] = detail::gumbel_hard(p0, p1, n0, n1, temperature);
  }
  return m;
}

/// Deterministic mask: 1 where blur probability strictly exceeds epsilon.
inline BlurMask threshold_mask(const Tensor& probs, float epsilon, int scale_id = 0) {
  require(probs.rank() == 3 && probs.dims[2] == 2, "threshold_mask: probs must be HxWx2");
  if (!(epsilon > 0.0f && epsilon < 1.0f))
    throw ArgumentError("threshold_mask: epsilon must be in (0,1)");
  const int H = probs.dims[0], W = probs.dims[1];
  BlurMask m;
  m.scale_id = scale_id;
  m.probs = Tensor({H, W});
  m.hard = Tensor({H, W});
  const size_t plane = static_cast<size_t>(H) * W;
  for (size_t p = 0; p < plane; ++p) {
    const float p0 = probs.data[p * 2 + 0];
    m.probs.data[p] = p0;
    m.hard.data[p] = (p0 > epsilon) ? 1.0f : 0.0f;
  }
  return m;
}

/// Max-pool downscale of a binary mask: coarse pixel is 1 if any covered
/// fine pixel is 1.
inline Tensor downsample_gt_mask(const Tensor& mask, int factor) {
  require(mask.rank() == 2, "downsample_gt_mask: mask must be HxW");
  const int H = mask.dims[0], W = mask.dims[1];
  require(factor > 0 && H % factor == 0 && W % factor == 0,
          "downsample_gt_mask: extents not divisible by factor");
  const int Ho = H / factor, Wo = W / factor;
  Tensor out({Ho, Wo});
  for (int y = 0; y < Ho; ++y)
    for (int x = 0; x < Wo; ++x) {
      float v = 0.0f;
      for (int dy = 0; dy < factor && v == 0.0f; ++dy)
        for (int dx = 0; dx < factor; ++dx)
          if (mask.data[static_cast<size_t>(y * factor + dy) * W + x * factor + dx] != 0.0f) {
            v = 1.0f;
            break;
          }
      out.data[static_cast<size_t>(y) * Wo + x] = v;
    }
  return out;
}

}  // namespace m2ae
