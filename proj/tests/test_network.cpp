#include <catch2/catch_amalgamated.hpp>

#include "test_helpers.hpp"

using namespace m2ae;
using testutil::random_tensor;

namespace {

NetworkConfig compact_config() {
  NetworkConfig cfg;
  cfg.base_width = 4;
  cfg.encoder_blocks = {1, 1, 1, 2};
  cfg.bottleneck_blocks = 1;
  cfg.decoder_blocks = {1, 1, 1, 1};
  return cfg;
}

M2ASBlockParams zero_block(int C) {
  M2ASBlockParams p;
  p.ln1_gamma = Tensor({C});
  std::fill(p.ln1_gamma.data.begin(), p.ln1_gamma.data.end(), 1.0f);
  p.ln1_beta = Tensor({C});
  p.ln2_gamma = p.ln1_gamma;
  p.ln2_beta = p.ln1_beta;
  auto zero_conv = [](int in, int out, int k, int pad, int groups) {
    ConvSpec s;
    s.in_channels = in;
    s.out_channels = out;
    s.kernel_size = k;
    s.padding = pad;
    s.groups = groups;
    s.weights = Tensor({out, in / groups, k, k});
    s.bias = Tensor({out});
    return s;
  };
  p.conv.expand = zero_conv(C, 2 * C, 1, 0, 1);
  p.conv.dw = zero_conv(2 * C, 2 * C, 3, 1, 2 * C);
  p.sca = zero_conv(C, C, 1, 0, 1);
  p.proj = zero_conv(C, C, 1, 0, 1);
  p.mid = zero_conv(C, 2 * C, 1, 0, 1);
  p.deform.weights = Tensor({2 * C, 3, 3});
  p.deform.bias = Tensor({2 * C});
  p.out = zero_conv(C, C, 1, 0, 1);
  return p;
}

}  // namespace

TEST_CASE("config parsing") {
  SECTION("empty json keeps the defaults") {
    const NetworkConfig cfg = config_from_json(nlohmann::json::object());
    CHECK(cfg.base_width == 32);
    CHECK(cfg.encoder_blocks == std::array<int, 4>{1, 1, 1, 28});
    CHECK(cfg.predictor_stages == std::set<std::string>{"encoder-4"});
    CHECK(cfg.epsilon == 0.5f);
    CHECK(cfg.n1 == 9);
    CHECK(cfg.mask_conv_positions == std::set<int>{1});
    CHECK(cfg.mode == RunMode::kDense);
  }
  SECTION("overrides are honored") {
    const NetworkConfig cfg = config_from_json(nlohmann::json{{"base_width", 8},
                                                              {"encoder_blocks", {1, 2, 3, 4}},
                                                              {"mode", "pruned"},
                                                              {"trajectory_mode", "linear"},
                                                              {"mask_conv_positions", {1, 2, 3}}});
    CHECK(cfg.base_width == 8);
    CHECK(cfg.encoder_blocks == std::array<int, 4>{1, 2, 3, 4});
    CHECK(cfg.mode == RunMode::kPruned);
    CHECK(cfg.trajectory_mode == TrajectoryMode::kLinear);
    CHECK(cfg.mask_conv_positions == std::set<int>{1, 2, 3});
  }
  SECTION("nine trajectory taps enforced") {
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"n1", 7}}), ShapeError);
  }
  SECTION("unknown mode rejected") {
    CHECK_THROWS_AS(parse_run_mode("sparse"), ArgumentError);
  }
}

TEST_CASE("m2as_block") {
  const int C = 4, H = 8, W = 8;
  const Tensor f = random_tensor({C, H, W}, 1);
  const BlurMask ones = [&] {
    BlurMask m;
    m.hard = Tensor({H, W});
    m.probs = m.hard;
    std::fill(m.hard.data.begin(), m.hard.data.end(), 1.0f);
    return m;
  }();
  const OffsetField grid = base_grid_offsets(H, W);

  SECTION("zero weights reduce to the identity") {
    const M2ASBlockParams p = zero_block(C);
    const Tensor out = m2as_block(f, p, ones, grid, RunMode::kDense);
    CHECK(testutil::max_abs_diff(out, f) == 0.0);
  }
  SECTION("all-ones mask makes masked mode equal dense mode") {
    WeightStore ws = init_weights(compact_config(), 3);
    const M2ASBlockParams p = detail::load_block(ws, "encoder-1.block0", 4);
    const Tensor dense = m2as_block(f, p, ones, grid, RunMode::kDense);
    const Tensor masked = m2as_block(f, p, ones, grid, RunMode::kMasked);
    CHECK(testutil::max_abs_diff(masked, dense) == 0.0);
  }
  SECTION("pruned mode matches masked mode on a partial mask") {
    WeightStore ws = init_weights(compact_config(), 4);
    const M2ASBlockParams p = detail::load_block(ws, "encoder-1.block0", 4);
    const BlurMask m = testutil::random_mask(H, W, 0.4, 5);
    FlopLedger lm, lp;
    const Tensor masked = m2as_block(f, p, m, grid, RunMode::kMasked, {1}, &lm);
    const Tensor pruned = m2as_block(f, p, m, grid, RunMode::kPruned, {1}, &lp);
    CHECK(testutil::max_abs_diff(pruned, masked) <= 1e-5);
    CHECK(lp.totals().actual < lp.totals().dense);
  }
  SECTION("pruned mode without a ledger rejected") {
    const M2ASBlockParams p = zero_block(C);
    CHECK_THROWS_AS(m2as_block(f, p, ones, grid, RunMode::kPruned), ShapeError);
  }
}

TEST_CASE("weight initialization") {
  const NetworkConfig cfg = compact_config();
  SECTION("produces every required tensor at its declared dims") {
    const WeightStore ws = init_weights(cfg, 9);
    for (const auto& [name, dims] : required_weights(cfg)) {
      const Tensor& t = ws.get(name);
      CHECK(t.dims == dims);
    }
  }
  SECTION("norm scales start at one") {
    const WeightStore ws = init_weights(cfg, 9);
    for (float v : ws.get("encoder-1.block0.ln1.gamma").data) CHECK(v == 1.0f);
  }
  SECTION("same seed reproduces identical values") {
    const WeightStore a = init_weights(cfg, 11);
    const WeightStore b = init_weights(cfg, 11);
    for (const auto& [name, dims] : required_weights(cfg))
      CHECK(a.get(name).data == b.get(name).data);
  }
}

TEST_CASE("forward") {
  NetworkConfig cfg = compact_config();
  const WeightStore ws = init_weights(cfg, 21);
  const Tensor image = random_tensor({3, 32, 32}, 22, 0.0f, 1.0f);

  SECTION("output shape and stage roster") {
    const ForwardResult r = forward(image, ws, cfg);
    REQUIRE(r.output.dims == std::vector<int>{3, 32, 32});
    REQUIRE(r.stages.size() == 9);
    CHECK(r.stages[0].name == "encoder-1");
    CHECK(r.stages[3].name == "encoder-4");
    CHECK(r.stages[3].produced);
    CHECK(r.stages[4].name == "bottleneck");
    CHECK(r.stages[8].name == "decoder-4");
    CHECK_FALSE(r.stages[0].produced);
  }
  SECTION("repeated runs are bit-identical") {
    const ForwardResult a = forward(image, ws, cfg);
    const ForwardResult b = forward(image, ws, cfg);
    CHECK(a.output.data == b.output.data);
  }
  SECTION("all-ones mask makes masked mode equal dense, no predictors") {
    NetworkConfig plain = cfg;
    plain.predictor_stages.clear();
    const WeightStore ws2 = init_weights(plain, 23);
    BlurMask ones;
    ones.hard = Tensor({32, 32});
    ones.probs = ones.hard;
    std::fill(ones.hard.data.begin(), ones.hard.data.end(), 1.0f);

    plain.mode = RunMode::kDense;
    const ForwardResult dense = forward(image, ws2, plain, &ones);
    plain.mode = RunMode::kMasked;
    const ForwardResult masked = forward(image, ws2, plain, &ones);
    CHECK(testutil::max_abs_diff(masked.output, dense.output) == 0.0);
  }
  SECTION("pruned equals masked under an injected random mask") {
    BlurMask m = testutil::random_mask(32, 32, 0.3, 24);
    NetworkConfig masked_cfg = cfg;
    masked_cfg.mode = RunMode::kMasked;
    NetworkConfig pruned_cfg = cfg;
    pruned_cfg.mode = RunMode::kPruned;
    const ForwardResult a = forward(image, ws, masked_cfg, &m);
    const ForwardResult b = forward(image, ws, pruned_cfg, &m);
    CHECK(testutil::max_abs_diff(b.output, a.output) <= 1e-4);
  }
  SECTION("executed dense MACs match the analytic ledger") {
    const ForwardResult r = forward(image, ws, cfg);
    const FlopLedger a = analytic_flops(cfg, 32, 32);
    CHECK(r.ledger.totals().dense == a.totals().dense);
  }
  SECTION("extent not divisible by 16 rejected") {
    CHECK_THROWS_AS(forward(random_tensor({3, 24, 24}, 25), ws, cfg), ShapeError);
  }
}

TEST_CASE("analytic_flops") {
  NetworkConfig cfg = compact_config();
  SECTION("dense mode has ratio one") {
    const FlopLedger l = analytic_flops(cfg, 64, 64);
    const auto t = l.totals();
    CHECK(t.actual == t.dense);
  }
  SECTION("pruned mode scales prunable entries by the mask ratio") {
    cfg.mode = RunMode::kPruned;
    const FlopLedger l = analytic_flops(cfg, 64, 64, 0.25);
    int64_t prunable_dense = 0, prunable_actual = 0;
    for (const auto& e : l.entries) {
      if (e.op == "expand1x1" || e.op == "dw3x3") {
        prunable_dense += e.dense_macs;
        prunable_actual += e.actual_macs;
      } else {
        CHECK(e.actual_macs == e.dense_macs);
      }
    }
    CHECK(prunable_dense > 0);
    CHECK(prunable_actual == Catch::Approx(0.25 * static_cast<double>(prunable_dense)).margin(4.0));
  }
  SECTION("indivisible extents are allowed and floor per downsample") {
    CHECK_NOTHROW(analytic_flops(cfg, 2152, 1436));
  }
}
