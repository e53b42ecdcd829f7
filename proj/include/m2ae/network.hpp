#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "m2ae/deform_conv.hpp"
#include "m2ae/flops.hpp"
#include "m2ae/mask_predictor.hpp"
#include "m2ae/motion.hpp"
#include "m2ae/pruned_conv.hpp"
#include "m2ae/rng.hpp"
#include "m2ae/tensor.hpp"
#include "m2ae/weights.hpp"

namespace m2ae {

enum class RunMode { kDense, kMasked, kPruned };
enum class TrajectoryMode { kQuadratic, kLinear };

inline RunMode parse_run_mode(const std::string& s) {
  if (s == "dense") return RunMode::kDense;
  if (s == "masked") return RunMode::kMasked;
  if (s == "pruned") return RunMode::kPruned;
  throw ArgumentError("unknown mode: " + s);
}

struct NetworkConfig {
  int base_width = 32;
  std::array<int, 4> encoder_blocks{1, 1, 1, 28};
  int bottleneck_blocks = 1;
  std::array<int, 4> decoder_blocks{1, 1, 1, 1};
  std::set<std::string> predictor_stages{"encoder-4"};
  float epsilon = 0.5f;
  double gumbel_tau = 1.0;
  int n1 = 9;
  int n2 = 9;
  TrajectoryMode trajectory_mode = TrajectoryMode::kQuadratic;
  std::set<int> mask_conv_positions{1};
  RunMode mode = RunMode::kDense;

  void validate() const {
    require(base_width > 0, "config: base_width must be positive");
    require(n1 == 9, "config: N1 must be 9 (deformable conv needs 9 taps)");
    require(n2 >= 2, "config: N2 must be >= 2");
    for (int p : mask_conv_positions)
      require(p >= 1 && p <= 3, "config: mask conv positions are 1..3");
  }
};

inline NetworkConfig config_from_json(const nlohmann::json& j) {
  NetworkConfig cfg;
  if (j.contains("base_width")) cfg.base_width = j["base_width"];
  if (j.contains("encoder_blocks")) {
    auto v = j["encoder_blocks"].get<std::vector<int>>();
    require(v.size() == 4, "config: encoder_blocks must have 4 stages");
    std::copy(v.begin(), v.end(), cfg.encoder_blocks.begin());
  }
  if (j.contains("bottleneck_blocks")) cfg.bottleneck_blocks = j["bottleneck_blocks"];
  if (j.contains("decoder_blocks")) {
    auto v = j["decoder_blocks"].get<std::vector<int>>();
    require(v.size() == 4, "config: decoder_blocks must have 4 stages");
    std::copy(v.begin(), v.end(), cfg.decoder_blocks.begin());
  }
  if (j.contains("predictor_stages"))
    cfg.predictor_stages = std::set<std::string>(j["predictor_stages"].begin(),
                                                 j["predictor_stages"].end());
  if (j.contains("epsilon")) cfg.epsilon = j["epsilon"];
  if (j.contains("gumbel_tau")) cfg.gumbel_tau = j["gumbel_tau"];
  if (j.contains("n1")) cfg.n1 = j["n1"];
  if (j.contains("n2")) cfg.n2 = j["n2"];
  if (j.contains("trajectory_mode"))
    cfg.trajectory_mode = j["trajectory_mode"] == "linear" ? TrajectoryMode::kLinear
                                                           : TrajectoryMode::kQuadratic;
  if (j.contains("mask_conv_positions"))
    cfg.mask_conv_positions =
        std::set<int>(j["mask_conv_positions"].begin(), j["mask_conv_positions"].end());
  if (j.contains("mode")) cfg.mode = parse_run_mode(j["mode"].get<std::string>());
  cfg.validate();
  return cfg;
}

/// All parameters of one M2AS block at width C.
struct M2ASBlockParams {
  Tensor ln1_gamma, ln1_beta;
  CompositeConv conv;  // expand 1x1 C->2C + dw 3x3 depthwise 2C
  ConvSpec sca;        // 1x1 C->C
  ConvSpec proj;       // 1x1 C->C
  Tensor ln2_gamma, ln2_beta;
  ConvSpec mid;  // 1x1 C->2C
  DeformDWSpec deform;  // depthwise over 2C
  ConvSpec out;  // 1x1 C->C
};

namespace detail {

inline ConvSpec make_conv(int in, int out, int k, int pad, int groups, Tensor w, Tensor b) {
  ConvSpec s;
  s.in_channels = in;
  s.out_channels = out;
  s.kernel_size = k;
  s.padding = pad;
  s.stride = 1;
  s.groups = groups;
  s.weights = std::move(w);
  s.bias = std::move(b);
  s.validate();
  return s;
}

inline ConvSpec load_conv(const WeightStore& ws, const std::string& prefix, int in, int out,
                          int k, int pad, int groups = 1) {
  return make_conv(in, out, k, pad, groups, ws.get(prefix + ".weight"), ws.get(prefix + ".bias"));
}

inline M2ASBlockParams load_block(const WeightStore& ws, const std::string& prefix, int C) {
  M2ASBlockParams p;
  p.ln1_gamma = ws.get(prefix + ".ln1.gamma");
  p.ln1_beta = ws.get(prefix + ".ln1.beta");
  p.conv.expand = load_conv(ws, prefix + ".expand", C, 2 * C, 1, 0);
  p.conv.dw = load_conv(ws, prefix + ".dw", 2 * C, 2 * C, 3, 1, 2 * C);
  p.sca = load_conv(ws, prefix + ".sca", C, C, 1, 0);
  p.proj = load_conv(ws, prefix + ".proj", C, C, 1, 0);
  p.ln2_gamma = ws.get(prefix + ".ln2.gamma");
  p.ln2_beta = ws.get(prefix + ".ln2.beta");
  p.mid = load_conv(ws, prefix + ".mid", C, 2 * C, 1, 0);
  p.deform.weights = ws.get(prefix + ".deform.weight");
  p.deform.bias = ws.get(prefix + ".deform.bias");
  p.deform.validate(2 * C);
  p.out = load_conv(ws, prefix + ".out", C, C, 1, 0);
  return p;
}

inline MaskPredictorParams load_predictor(const WeightStore& ws, const std::string& prefix,
                                          int C) {
  MaskPredictorParams p;
  p.ln_gamma = ws.get(prefix + ".ln.gamma");
  p.ln_beta = ws.get(prefix + ".ln.beta");
  p.mlp1_w = ws.get(prefix + ".mlp1.weight");
  p.mlp1_b = ws.get(prefix + ".mlp1.bias");
  p.fc1_w = ws.get(prefix + ".fc1.weight");
  p.fc1_b = ws.get(prefix + ".fc1.bias");
  p.fc2_w = ws.get(prefix + ".fc2.weight");
  p.fc2_b = ws.get(prefix + ".fc2.bias");
  p.validate(C);
  return p;
}

}  // namespace detail

/// One mask- and motion-aware simple block. First half: LN, mask-aware Conv,
/// simple gate, SCA, 1x1 projection, residual. Second half: LN, 1x1 expand,
/// motion-aware deformable depthwise conv, simple gate, 1x1, residual.
inline Tensor m2as_block(const Tensor& f_in, const M2ASBlockParams& params, const BlurMask& mask,
                         const OffsetField& d, RunMode mode,
                         const std::set<int>& mask_positions = {1},
                         FlopLedger* ledger = nullptr) {
  require(f_in.rank() == 3, "m2as_block: input must be CxHxW");
  const int C = f_in.dims[0], H = f_in.dims[1], W = f_in.dims[2];
  require(mask.hard.dims == std::vector<int>{H, W}, "m2as_block: mask dims mismatch");
  require(d.d.dims == std::vector<int>{H, W, 18}, "m2as_block: offset dims mismatch");
  if (mode == RunMode::kPruned)
    for (float v : mask.hard.data)
      if (v != 0.0f && v != 1.0f) throw ArgumentError("m2as_block: pruned mode needs a hard mask");
  const int64_t hw = static_cast<int64_t>(H) * W;

  const Tensor f1 = layer_norm(f_in, params.ln1_gamma, params.ln1_beta);
  Tensor f2;
  if (mode == RunMode::kDense || mask_positions.count(1) == 0) {
    f2 = conv2d(conv2d(f1, params.conv.expand), params.conv.dw);
    if (ledger) {
      ledger->record_dense("expand1x1", hw * 2 * C * C);
      ledger->record_dense("dw3x3", hw * 2 * C * 9);
    }
  } else if (mode == RunMode::kMasked) {
    f2 = masked_dense_forward(f1, params.conv, mask, ledger);
  } else {
    require(ledger != nullptr, "m2as_block: pruned mode needs a ledger");
    f2 = pruned_forward(f1, params.conv, mask, *ledger);
  }

  const Tensor f3 = simplified_channel_attention(simple_gate(f2), params.sca);
  if (ledger) ledger->record_dense("sca1x1", static_cast<int64_t>(C) * C);

  Tensor f_mid;
  if (mode != RunMode::kDense && mask_positions.count(2) != 0) {
    f_mid = mask_aware_pointwise(f3, params.proj, mask, mode == RunMode::kPruned, ledger);
  } else {
    f_mid = conv2d(f3, params.proj);
    if (ledger) ledger->record_dense("pointwise1x1", hw * C * C);
  }
  for (int64_t i = 0; i < f_mid.size(); ++i) f_mid.data[i] += f_in.data[i];

  const Tensor f_mid_ln = layer_norm(f_mid, params.ln2_gamma, params.ln2_beta);
  Tensor f4;
  if (mode != RunMode::kDense && mask_positions.count(3) != 0) {
    f4 = mask_aware_pointwise(f_mid_ln, params.mid, mask, mode == RunMode::kPruned, ledger);
  } else {
    f4 = conv2d(f_mid_ln, params.mid);
    if (ledger) ledger->record_dense("pointwise1x1", hw * 2 * C * C);
  }
  const Tensor f5 = simple_gate(deform_dwconv(f4, d, params.deform, ledger));
  Tensor f_out = conv2d(f5, params.out);
  if (ledger) ledger->record_dense("pointwise1x1", hw * C * C);
  for (int64_t i = 0; i < f_out.size(); ++i) f_out.data[i] += f_mid.data[i];
  return f_out;
}

/// Per-stage routing payload handed to the blocks of one stage.
struct StageInfo {
  std::string name;
  bool produced = false;  // this stage ran its own predictor/analyzer
  BlurMask mask;
  DisplacementPair displacements;
};

struct ForwardResult {
  Tensor output;
  std::vector<StageInfo> stages;
  FlopLedger ledger;
};

namespace detail {

/// Resample a binary mask between power-of-two scales: max-pool down,
/// nearest-replicate up.
inline BlurMask resample_mask(const BlurMask& src, int Ht, int Wt) {
  const int H = src.hard.dims[0], W = src.hard.dims[1];
  BlurMask out;
  out.scale_id = src.scale_id;
  if (Ht == H && Wt == W) return src;
  if (Ht < H) {
    require(H % Ht == 0 && W % Wt == 0, "resample_mask: non-integer downscale factor");
    out.hard = downsample_gt_mask(src.hard, H / Ht);
    out.probs = Tensor({Ht, Wt});
    const int f = H / Ht;
    for (int y = 0; y < Ht; ++y)
      for (int x = 0; x < Wt; ++x)
        out.probs.data[static_cast<size_t>(y) * Wt + x] =
            src.probs.data[(static_cast<size_t>(y) * f) * W + x * f];
  } else {
    require(Ht % H == 0 && Wt % W == 0, "resample_mask: non-integer upscale factor");
    const int f = Ht / H;
    out.hard = Tensor({Ht, Wt});
    out.probs = Tensor({Ht, Wt});
    for (int y = 0; y < Ht; ++y)
      for (int x = 0; x < Wt; ++x) {
        const size_t s = static_cast<size_t>(y / f) * W + x / f;
        out.hard.data[static_cast<size_t>(y) * Wt + x] = src.hard.data[s];
        out.probs.data[static_cast<size_t>(y) * Wt + x] = src.probs.data[s];
      }
  }
  return out;
}

inline BlurMask all_ones_mask(int H, int W) {
  BlurMask m;
  m.hard = Tensor({H, W});
  m.probs = Tensor({H, W});
  std::fill(m.hard.data.begin(), m.hard.data.end(), 1.0f);
  std::fill(m.probs.data.begin(), m.probs.data.end(), 1.0f);
  return m;
}

inline DisplacementPair zero_displacements(int H, int W) {
  DisplacementPair p;
  p.o_start = Tensor({H, W, 2});
  p.o_end = Tensor({H, W, 2});
  return p;
}

}  // namespace detail

/// Full M2AENet forward pass. Stages named in cfg.predictor_stages run their
/// own predictor and analyzer; other stages reuse the most recent producer on
/// the computational path (resampled), or an all-ones mask and zero
/// displacement when none exists yet.
inline ForwardResult forward(const Tensor& image, const WeightStore& weights,
                             const NetworkConfig& cfg, const BlurMask* mask_override = nullptr) {
  cfg.validate();
  require(image.rank() == 3 && image.dims[0] == 3, "forward: input must be 3xHxW");
  const int H = image.dims[1], W = image.dims[2];
  require(H % 16 == 0 && W % 16 == 0, "forward: extents must be divisible by 16");

  ForwardResult result;
  FlopLedger& ledger = result.ledger;
  const int w0 = cfg.base_width;

  // Most recent producer output, in pixels at its own scale.
  bool have_producer = false;
  BlurMask producer_mask;
  DisplacementPair producer_pair;
  int producer_res_h = 0;
  if (mask_override) {
    require(mask_override->hard.dims == std::vector<int>{H, W},
            "forward: mask override must be full resolution");
    have_producer = true;
    producer_mask = *mask_override;
    producer_pair = detail::zero_displacements(H, W);
    producer_res_h = H;
  }

  auto enter_stage = [&](const std::string& name, const Tensor& f_in) -> StageInfo {
    StageInfo info;
    info.name = name;
    const int Hs = f_in.dims[1], Ws = f_in.dims[2];
    const int C = f_in.dims[0];
    if (cfg.predictor_stages.count(name) != 0) {
      const MaskPredictorParams pp = detail::load_predictor(weights, name + ".predictor", C);
      const Tensor probs = predict_probs(f_in, pp);
      info.mask = threshold_mask(probs, cfg.epsilon);
      const ConvSpec analyzer =
          detail::load_conv(weights, name + ".analyzer", C, 4, 3, 1);
      info.displacements = predict_endpoints(f_in, analyzer);
      info.produced = true;
      const int64_t hw = static_cast<int64_t>(Hs) * Ws;
      ledger.record_dense("predictor_mlp1", hw * C * C);
      ledger.record_dense("predictor_fc1", hw * (C / 2) * 2 * C);
      ledger.record_dense("predictor_fc2", hw * 2 * (C / 2));
      ledger.record_dense("analyzer3x3", hw * 4 * C * 9);
      have_producer = true;
      producer_mask = info.mask;
      producer_pair = info.displacements;
      producer_res_h = Hs;
    } else if (have_producer) {
      info.mask = detail::resample_mask(producer_mask, Hs, Ws);
      const float factor = static_cast<float>(Hs) / static_cast<float>(producer_res_h);
      info.displacements =
          factor == 1.0f ? producer_pair : rescale_displacements(producer_pair, factor);
    } else {
      info.mask = detail::all_ones_mask(Hs, Ws);
      info.displacements = detail::zero_displacements(Hs, Ws);
    }
    return info;
  };

  auto run_stage = [&](const std::string& name, Tensor f, int blocks) -> Tensor {
    StageInfo info = enter_stage(name, f);
    const int C = f.dims[0];
    const TrajectoryField traj =
        cfg.trajectory_mode == TrajectoryMode::kLinear
            ? interpolate_linear(info.displacements, cfg.n1)
            : interpolate_quadratic(info.displacements, cfg.n1);
    const OffsetField offsets = build_deform_offsets(traj);
    for (int b = 0; b < blocks; ++b) {
      const M2ASBlockParams params =
          detail::load_block(weights, name + ".block" + std::to_string(b), C);
      f = m2as_block(f, params, info.mask, offsets, cfg.mode, cfg.mask_conv_positions, &ledger);
    }
    result.stages.push_back(std::move(info));
    return f;
  };

  // in-projection
  Tensor f = conv2d(image, detail::load_conv(weights, "intro", 3, w0, 3, 1));
  ledger.record_dense("intro3x3", static_cast<int64_t>(H) * W * w0 * 3 * 9);

  std::vector<Tensor> skips;
  for (int s = 1; s <= 4; ++s) {
    const std::string name = "encoder-" + std::to_string(s);
    f = run_stage(name, std::move(f), cfg.encoder_blocks[s - 1]);
    skips.push_back(f);
    const int C = f.dims[0];
    f = resample_down(f, weights.get("down" + std::to_string(s) + ".weight"),
                      weights.get("down" + std::to_string(s) + ".bias"));
    ledger.record_dense("down2x2",
                        static_cast<int64_t>(f.dims[1]) * f.dims[2] * 2 * C * C * 4);
  }

  f = run_stage("bottleneck", std::move(f), cfg.bottleneck_blocks);

  for (int s = 1; s <= 4; ++s) {
    const int C = f.dims[0];
    const ConvSpec up = detail::load_conv(weights, "up" + std::to_string(s), C, 2 * C, 1, 0);
    ledger.record_dense("up1x1", static_cast<int64_t>(f.dims[1]) * f.dims[2] * 2 * C * C);
    f = resample_up(f, up);
    const Tensor& skip = skips[static_cast<size_t>(4 - s)];
    require(f.same_dims(skip), "forward: skip connection dims mismatch");
    for (int64_t i = 0; i < f.size(); ++i) f.data[i] += skip.data[i];
    f = run_stage("decoder-" + std::to_string(s), std::move(f), cfg.decoder_blocks[s - 1]);
  }

  // out-projection plus global input residual
  Tensor out = conv2d(f, detail::load_conv(weights, "outro", w0, 3, 3, 1));
  ledger.record_dense("outro3x3", static_cast<int64_t>(H) * W * 3 * w0 * 9);
  for (int64_t i = 0; i < out.size(); ++i) out.data[i] += image.data[i];
  result.output = std::move(out);
  return result;
}

/// Every tensor the configuration requires, with its dims.
inline std::vector<std::pair<std::string, std::vector<int>>> required_weights(
    const NetworkConfig& cfg) {
  std::vector<std::pair<std::string, std::vector<int>>> out;
  const int w0 = cfg.base_width;
  auto add = [&](const std::string& name, std::vector<int> dims) {
    out.emplace_back(name, std::move(dims));
  };
  auto add_block = [&](const std::string& prefix, int C) {
    add(prefix + ".ln1.gamma", {C});
    add(prefix + ".ln1.beta", {C});
    add(prefix + ".expand.weight", {2 * C, C, 1, 1});
    add(prefix + ".expand.bias", {2 * C});
    add(prefix + ".dw.weight", {2 * C, 1, 3, 3});
    add(prefix + ".dw.bias", {2 * C});
    add(prefix + ".sca.weight", {C, C, 1, 1});
    add(prefix + ".sca.bias", {C});
    add(prefix + ".proj.weight", {C, C, 1, 1});
    add(prefix + ".proj.bias", {C});
    add(prefix + ".ln2.gamma", {C});
    add(prefix + ".ln2.beta", {C});
    add(prefix + ".mid.weight", {2 * C, C, 1, 1});
    add(prefix + ".mid.bias", {2 * C});
    add(prefix + ".deform.weight", {2 * C, 3, 3});
    add(prefix + ".deform.bias", {2 * C});
    add(prefix + ".out.weight", {C, C, 1, 1});
    add(prefix + ".out.bias", {C});
  };
  auto add_stage = [&](const std::string& name, int C, int blocks) {
    if (cfg.predictor_stages.count(name) != 0) {
      add(name + ".predictor.ln.gamma", {C});
      add(name + ".predictor.ln.beta", {C});
      add(name + ".predictor.mlp1.weight", {C, C});
      add(name + ".predictor.mlp1.bias", {C});
      add(name + ".predictor.fc1.weight", {C / 2, 2 * C});
      add(name + ".predictor.fc1.bias", {C / 2});
      add(name + ".predictor.fc2.weight", {2, C / 2});
      add(name + ".predictor.fc2.bias", {2});
      add(name + ".analyzer.weight", {4, C, 3, 3});
      add(name + ".analyzer.bias", {4});
    }
    for (int b = 0; b < blocks; ++b) add_block(name + ".block" + std::to_string(b), C);
  };

  add("intro.weight", {w0, 3, 3, 3});
  add("intro.bias", {w0});
  for (int s = 1; s <= 4; ++s) {
    const int C = w0 << (s - 1);
    add_stage("encoder-" + std::to_string(s), C, cfg.encoder_blocks[s - 1]);
    add("down" + std::to_string(s) + ".weight", {2 * C, C, 2, 2});
    add("down" + std::to_string(s) + ".bias", {2 * C});
  }
  add_stage("bottleneck", w0 << 4, cfg.bottleneck_blocks);
  for (int s = 1; s <= 4; ++s) {
    const int C = w0 << (5 - s);
    add("up" + std::to_string(s) + ".weight", {2 * C, C, 1, 1});
    add("up" + std::to_string(s) + ".bias", {2 * C});
    add_stage("decoder-" + std::to_string(s), C / 2, cfg.decoder_blocks[s - 1]);
  }
  add("outro.weight", {3, w0, 3, 3});
  add("outro.bias", {3});
  return out;
}

/// Fan-in-scaled uniform initialization: every tensor the config requires,
/// reproducible from the seed alone.
inline WeightStore init_weights(const NetworkConfig& cfg, uint64_t seed) {
  WeightStore ws;
  uint64_t tensor_index = 0;
  for (const auto& [name, dims] : required_weights(cfg)) {
    Tensor t(dims);
    int64_t fan_in = 1;
    if (dims.size() >= 2) {
      fan_in = 1;
      for (size_t i = 1; i < dims.size(); ++i) fan_in *= dims[i];
    }
    const bool is_bias_like = dims.size() == 1;
    const float bound = is_bias_like ? 0.05f : 1.0f / std::sqrt(static_cast<float>(fan_in));
    for (int64_t i = 0; i < t.size(); ++i)
      t.data[i] = uniform_range(counter_rng(seed, tensor_index, static_cast<uint64_t>(i)), -bound,
                                bound);
    // affine norm scales start at 1
    if (name.size() > 6 && name.substr(name.size() - 6) == ".gamma")
      std::fill(t.data.begin(), t.data.end(), 1.0f);
    ws.put(name, std::move(t));
    ++tensor_index;
  }
  return ws;
}

/// Analytic MAC totals for the configured network without executing tensors.
/// Emits the same entry labels and dense formulas as an executed forward;
/// prunable entries get actual = round(dense * mask_ratio). Spatial extents
/// need not be divisible by 16; each downsampling floors.
inline FlopLedger analytic_flops(const NetworkConfig& cfg, int H, int W, double mask_ratio = 1.0) {
  cfg.validate();
  require(H > 0 && W > 0, "analytic_flops: non-positive extents");
  FlopLedger ledger;
  const int w0 = cfg.base_width;
  auto prunable = [&](const std::string& op, int64_t dense) {
    if (cfg.mode == RunMode::kPruned)
      ledger.record(op, dense,
                    static_cast<int64_t>(std::llround(static_cast<double>(dense) * mask_ratio)));
    else
      ledger.record_dense(op, dense);
  };

  auto block_flops = [&](int C, int64_t hw, bool masked_scope) {
    if (masked_scope && cfg.mask_conv_positions.count(1) != 0) {
      prunable("expand1x1", hw * 2 * C * C);
      prunable("dw3x3", hw * 2 * C * 9);
    } else {
      ledger.record_dense("expand1x1", hw * 2 * C * C);
      ledger.record_dense("dw3x3", hw * 2 * C * 9);
    }
    ledger.record_dense("sca1x1", static_cast<int64_t>(C) * C);
    if (masked_scope && cfg.mask_conv_positions.count(2) != 0)
      prunable("pointwise1x1", hw * C * C);
    else
      ledger.record_dense("pointwise1x1", hw * C * C);
    if (masked_scope && cfg.mask_conv_positions.count(3) != 0)
      prunable("pointwise1x1", hw * 2 * C * C);
    else
      ledger.record_dense("pointwise1x1", hw * 2 * C * C);
    ledger.record_dense("deform_dw_taps", hw * 2 * C * 9);
    ledger.record_dense("deform_bilinear", hw * 2 * C * 9 * 4);
    ledger.record_dense("pointwise1x1", hw * C * C);
  };

  ledger.record_dense("intro3x3", static_cast<int64_t>(H) * W * w0 * 3 * 9);
  int Hs = H, Ws = W;
  const bool masking_active = cfg.mode != RunMode::kDense;
  for (int s = 1; s <= 4; ++s) {
    const int C = w0 << (s - 1);
    const int64_t hw = static_cast<int64_t>(Hs) * Ws;
    const std::string name = "encoder-" + std::to_string(s);
    if (cfg.predictor_stages.count(name) != 0) {
      ledger.record_dense("predictor_mlp1", hw * C * C);
      ledger.record_dense("predictor_fc1", hw * (C / 2) * 2 * C);
      ledger.record_dense("predictor_fc2", hw * 2 * (C / 2));
      ledger.record_dense("analyzer3x3", hw * 4 * C * 9);
    }
    for (int b = 0; b < cfg.encoder_blocks[s - 1]; ++b) block_flops(C, hw, masking_active);
    Hs /= 2;
    Ws /= 2;
    ledger.record_dense("down2x2", static_cast<int64_t>(Hs) * Ws * 2 * C * C * 4);
  }
  {
    const int C = w0 << 4;
    const int64_t hw = static_cast<int64_t>(Hs) * Ws;
    if (cfg.predictor_stages.count("bottleneck") != 0) {
      ledger.record_dense("predictor_mlp1", hw * C * C);
      ledger.record_dense("predictor_fc1", hw * (C / 2) * 2 * C);
      ledger.record_dense("predictor_fc2", hw * 2 * (C / 2));
      ledger.record_dense("analyzer3x3", hw * 4 * C * 9);
    }
    for (int b = 0; b < cfg.bottleneck_blocks; ++b) block_flops(C, hw, masking_active);
  }
  for (int s = 1; s <= 4; ++s) {
    const int C = w0 << (5 - s);
    ledger.record_dense("up1x1", static_cast<int64_t>(Hs) * Ws * 2 * C * C);
    Hs *= 2;
    Ws *= 2;
    const int Cd = C / 2;
    const int64_t hw = static_cast<int64_t>(Hs) * Ws;
    const std::string name = "decoder-" + std::to_string(s);
    if (cfg.predictor_stages.count(name) != 0) {
      ledger.record_dense("predictor_mlp1", hw * Cd * Cd);
      ledger.record_dense("predictor_fc1", hw * (Cd / 2) * 2 * Cd);
      ledger.record_dense("predictor_fc2", hw * 2 * (Cd / 2));
      ledger.record_dense("analyzer3x3", hw * 4 * Cd * 9);
    }
    for (int b = 0; b < cfg.decoder_blocks[s - 1]; ++b) block_flops(Cd, hw, masking_active);
  }
  ledger.record_dense("outro3x3", static_cast<int64_t>(Hs) * Ws * 3 * w0 * 9);
  return ledger;
}

}  // namespace m2ae
