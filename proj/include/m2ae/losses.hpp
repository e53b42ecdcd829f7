#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <nlohmann/json.hpp>

#include "m2ae/mask_predictor.hpp"
#include "m2ae/motion.hpp"
#include "m2ae/tensor.hpp"

namespace m2ae {

/// Loss-term weights. lambda scales the mask loss, gamma the frequency term,
/// alpha the total-variation term on displacement maps.
struct LossWeights {
  double lambda_mask = 0.01;
  double gamma_fft = 0.1;
  double alpha_tv = 0.01;
};

namespace detail {

inline std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(size);
  const int half = size / 2;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - half;
    w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

/// Mean SSIM over channels, 11x11 Gaussian window sigma 1.5, K1=0.01,
/// K2=0.03, dynamic range 1. Valid-region evaluation; images smaller than the
/// window fall back to one uniform whole-image window.
inline double ssim(const Tensor& a, const Tensor& b) {
  const int C = a.dims[0], H = a.dims[1], W = a.dims[2];
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const int win = (H >= 11 && W >= 11) ? 11 : 0;

  auto window_ssim = [&](int c, int y0, int x0, int wh, int ww,
                         const std::vector<double>& wy, const std::vector<double>& wx) {
    double mu_a = 0, mu_b = 0, saa = 0, sbb = 0, sab = 0;
    for (int y = 0; y < wh; ++y)
      for (int x = 0; x < ww; ++x) {
        const double w = wy[y] * wx[x];
        const double va = a.at(c, y0 + y, x0 + x), vb = b.at(c, y0 + y, x0 + x);
        mu_a += w * va;
        mu_b += w * vb;
        saa += w * va * va;
        sbb += w * vb * vb;
        sab += w * va * vb;
      }
    const double var_a = saa - mu_a * mu_a;
    const double var_b = sbb - mu_b * mu_b;
    const double cov = sab - mu_a * mu_b;
    return ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
           ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
  };

  double total = 0.0;
  int64_t count = 0;
  if (win == 0) {
    std::vector<double> wy(H, 1.0 / H), wx(W, 1.0 / W);
    for (int c = 0; c < C; ++c) {
      total += window_ssim(c, 0, 0, H, W, wy, wx);
      ++count;
    }
  } else {
    const std::vector<double> g = gaussian_window(11, 1.5);
    for (int c = 0; c < C; ++c)
      for (int y0 = 0; y0 + 11 <= H; ++y0)
        for (int x0 = 0; x0 + 11 <= W; ++x0) {
          total += window_ssim(c, y0, x0, 11, 11, g, g);
          ++count;
        }
  }
  return total / static_cast<double>(count);
}

/// 2-D DFT per channel, row-column decomposition.
inline std::vector<std::complex<double>> dft2(const Tensor& x) {
  const int C = x.dims[0], H = x.dims[1], W = x.dims[2];
  std::vector<std::complex<double>> rows(static_cast<size_t>(C) * H * W);
  // DFT along W
  std::vector<std::complex<double>> tw(W * W);
  for (int k = 0; k < W; ++k)
    for (int n = 0; n < W; ++n)
      tw[static_cast<size_t>(k) * W + n] =
          std::polar(1.0, -2.0 * M_PI * static_cast<double>(k) * n / W);
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < H; ++y)
      for (int k = 0; k < W; ++k) {
        std::complex<double> acc = 0.0;
        for (int n = 0; n < W; ++n) acc += static_cast<double>(x.at(c, y, n)) * tw[k * W + n];
        rows[(static_cast<size_t>(c) * H + y) * W + k] = acc;
      }
  // DFT along H
  std::vector<std::complex<double>> th(H * H);
  for (int k = 0; k < H; ++k)
    for (int n = 0; n < H; ++n)
      th[static_cast<size_t>(k) * H + n] =
          std::polar(1.0, -2.0 * M_PI * static_cast<double>(k) * n / H);
  std::vector<std::complex<double>> out(rows.size());
  for (int c = 0; c < C; ++c)
    for (int k = 0; k < H; ++k)
      for (int xcol = 0; xcol < W; ++xcol) {
        std::complex<double> acc = 0.0;
        for (int n = 0; n < H; ++n)
          acc += rows[(static_cast<size_t>(c) * H + n) * W + xcol] * th[k * H + n];
        out[(static_cast<size_t>(c) * H + k) * W + xcol] = acc;
      }
  return out;
}

}  // namespace detail

struct ReconComponents {
  double l1 = 0;
  double ssim = 0;  // the similarity itself, in [-1, 1]
  double fft = 0;
  double total = 0;
};

/// L1 + (1 - SSIM) + gamma * mean-absolute DFT-coefficient distance.
inline ReconComponents recon_components(const Tensor& y, const Tensor& y_gt, double gamma) {
  require(y.rank() == 3 && y.same_dims(y_gt), "recon_loss: dims mismatch");
  ReconComponents rc;
  double l1 = 0.0;
  for (int64_t i = 0; i < y.size(); ++i) l1 += std::abs(static_cast<double>(y.data[i]) - y_gt.data[i]);
  rc.l1 = l1 / static_cast<double>(y.size());
  rc.ssim = detail::ssim(y, y_gt);
  const auto fy = detail::dft2(y);
  const auto fg = detail::dft2(y_gt);
  double fft = 0.0;
  for (size_t i = 0; i < fy.size(); ++i)
    fft += std::abs(fy[i].real() - fg[i].real()) + std::abs(fy[i].imag() - fg[i].imag());
  rc.fft = fft / static_cast<double>(2 * fy.size());
  rc.total = rc.l1 + (1.0 - rc.ssim) + gamma * rc.fft;
  return rc;
}

inline double recon_loss(const Tensor& y, const Tensor& y_gt, double gamma) {
  return recon_components(y, y_gt, gamma).total;
}

/// Per-scale binary cross-entropy between predicted blur probability and the
/// ground-truth mask (max-pool downscaled per scale), summed over scales.
inline double mask_loss(const std::vector<Tensor>& probs_per_scale, const Tensor& gt) {
  require(gt.rank() == 2, "mask_loss: gt must be HxW");
  double total = 0.0;
  for (const Tensor& probs : probs_per_scale) {
    require(probs.rank() == 2, "mask_loss: per-scale probs must be HxW");
    const int H = probs.dims[0], W = probs.dims[1];
    require(gt.dims[0] % H == 0 && gt.dims[1] % W == 0 && gt.dims[0] / H == gt.dims[1] / W,
            "mask_loss: scale mismatch");
    const int factor = gt.dims[0] / H;
    const Tensor g = (factor == 1) ? gt : downsample_gt_mask(gt, factor);
    double bce = 0.0;
    for (int64_t i = 0; i < probs.size(); ++i) {
      const double p = std::clamp(static_cast<double>(probs.data[i]), 1e-7, 1.0 - 1e-7);
      const double t = g.data[i];
      bce -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    }
    total += bce / static_cast<double>(probs.size());
  }
  return total;
}

/// Average bilinear splatting: each source pixel distributes its value to the
/// four cells around z + offset(z); output is value / weight where weight is
/// non-negligible, source value at uncovered holes. Offsets are (dx, dy).
inline Tensor forward_warp(const Tensor& sharp, const Tensor& offset) {
  require(sharp.rank() == 3, "forward_warp: input must be CxHxW");
  const int C = sharp.dims[0], H = sharp.dims[1], W = sharp.dims[2];
  require(offset.dims == std::vector<int>{H, W, 2}, "forward_warp: offset must be HxWx2");
  const size_t plane = static_cast<size_t>(H) * W;
  std::vector<double> acc(static_cast<size_t>(C) * plane, 0.0);
  std::vector<double> wgt(plane, 0.0);

  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const size_t p = static_cast<size_t>(y) * W + x;
      const float dx = offset.data[p * 2], dy = offset.data[p * 2 + 1];
      const double ty = y + static_cast<double>(dy);
      const double tx = x + static_cast<double>(dx);
      const int y0 = static_cast<int>(std::floor(ty));
      const int x0 = static_cast<int>(std::floor(tx));
      const double fy = ty - y0, fx = tx - x0;
      const double w[4] = {(1 - fy) * (1 - fx), (1 - fy) * fx, fy * (1 - fx), fy * fx};
      const int yy[4] = {y0, y0, y0 + 1, y0 + 1};
      const int xx[4] = {x0, x0 + 1, x0, x0 + 1};
      for (int k = 0; k < 4; ++k) {
        if (yy[k] < 0 || yy[k] >= H || xx[k] < 0 || xx[k] >= W || w[k] == 0.0) continue;
        const size_t q = static_cast<size_t>(yy[k]) * W + xx[k];
        wgt[q] += w[k];
        for (int c = 0; c < C; ++c) acc[c * plane + q] += w[k] * sharp.data[c * plane + p];
      }
    }

  Tensor out({C, H, W});
  for (size_t p = 0; p < plane; ++p) {
    if (wgt[p] > 1e-6) {
      for (int c = 0; c < C; ++c)
        out.data[c * plane + p] = static_cast<float>(acc[c * plane + p] / wgt[p]);
    } else {
      for (int c = 0; c < C; ++c) out.data[c * plane + p] = sharp.data[c * plane + p];
    }
  }
  return out;
}

/// Synthesize the blur as the mean of forward-warped sharp frames along the
/// trajectory and score it against the observed blurred frame with MSE.
inline double reblur_loss(const TrajectoryField& traj, const Tensor& sharp_gt,
                          const Tensor& blurred) {
  require(sharp_gt.rank() == 3 && sharp_gt.same_dims(blurred), "reblur_loss: dims mismatch");
  const int H = sharp_gt.dims[1], W = sharp_gt.dims[2];
  require(traj.offsets.dims[1] == H && traj.offsets.dims[2] == W,
          "reblur_loss: trajectory dims mismatch");
  // double accumulation so a static trajectory on a matching pair scores an
  // exact zero: sum of N identical frames divided by N reproduces the frame
  std::vector<double> synth(static_cast<size_t>(sharp_gt.size()), 0.0);
  const size_t step = static_cast<size_t>(H) * W * 2;
  for (int n = 0; n < traj.steps; ++n) {
    Tensor off({H, W, 2});
    std::copy(traj.offsets.data.begin() + n * step, traj.offsets.data.begin() + (n + 1) * step,
              off.data.begin());
    const Tensor warped = forward_warp(sharp_gt, off);
    for (int64_t i = 0; i < warped.size(); ++i) synth[static_cast<size_t>(i)] += warped.data[i];
  }
  const double steps = static_cast<double>(traj.steps);
  double mse = 0.0;
  for (size_t i = 0; i < synth.size(); ++i) {
    const double d = synth[i] / steps - static_cast<double>(blurred.data[static_cast<int64_t>(i)]);
    mse += d * d;
  }
  return mse / static_cast<double>(synth.size());
}

/// Anisotropic total variation of a displacement field: per axis, mean over
/// valid forward differences of the summed per-component magnitudes, averaged
/// over the two axes.
inline double tv_loss(const Tensor& field) {
  require(field.rank() == 3 && field.dims[2] == 2, "tv_loss: field must be HxWx2");
  const int H = field.dims[0], W = field.dims[1];
  auto at = [&](int y, int x, int c) {
    return static_cast<double>(field.data[(static_cast<size_t>(y) * W + x) * 2 + c]);
  };
  double tx = 0.0;
  if (W > 1) {
    for (int y = 0; y < H; ++y)
      for (int x = 0; x + 1 < W; ++x)
        for (int c = 0; c < 2; ++c) tx += std::abs(at(y, x + 1, c) - at(y, x, c));
    tx /= static_cast<double>(H) * (W - 1);
  }
  double ty = 0.0;
  if (H > 1) {
    for (int y = 0; y + 1 < H; ++y)
      for (int x = 0; x < W; ++x)
        for (int c = 0; c < 2; ++c) ty += std::abs(at(y + 1, x, c) - at(y, x, c));
    ty /= static_cast<double>(H - 1) * W;
  }
  return 0.5 * (tx + ty);
}

struct LossParts {
  double recon = 0;
  double mask = 0;
  double reblur = 0;  // already summed over scales
  double tv = 0;      // already summed over scales and steps
};

inline double total_loss(const LossParts& parts, const LossWeights& w = {}) {
  return parts.recon + w.lambda_mask * parts.mask + parts.reblur + w.alpha_tv * parts.tv;
}

inline nlohmann::json loss_report(const ReconComponents& rc, const LossParts& parts,
                                  const LossWeights& w = {}) {
  return {{"l1", rc.l1},       {"ssim", rc.ssim},     {"fft", rc.fft},
          {"recon", rc.total}, {"mask", parts.mask},  {"reblur", parts.reblur},
          {"tv", parts.tv},    {"total", total_loss(parts, w)}};
}

}  // namespace m2ae
