#include <catch2/catch_amalgamated.hpp>

#include "test_helpers.hpp"

using namespace m2ae;
using testutil::random_tensor;

namespace {

MaskPredictorParams random_predictor(int C, uint64_t seed) {
  MaskPredictorParams p;
  p.ln_gamma = Tensor({C});
  std::fill(p.ln_gamma.data.begin(), p.ln_gamma.data.end(), 1.0f);
  p.ln_beta = Tensor({C});
  p.mlp1_w = random_tensor({C, C}, seed + 1);
  p.mlp1_b = random_tensor({C}, seed + 2);
  p.fc1_w = random_tensor({C / 2, 2 * C}, seed + 3);
  p.fc1_b = random_tensor({C / 2}, seed + 4);
  p.fc2_w = random_tensor({2, C / 2}, seed + 5);
  p.fc2_b = random_tensor({2}, seed + 6);
  return p;
}

Tensor uniform_probs(int H, int W, float p0) {
  Tensor t({H, W, 2});
  for (int64_t i = 0; i < t.size(); i += 2) {
    t.data[i] = p0;
    t.data[i + 1] = 1.0f - p0;
  }
  return t;
}

}  // namespace

TEST_CASE("predict_probs") {
  SECTION("zero features with zero head give 0.5 everywhere") {
    MaskPredictorParams p = random_predictor(8, 10);
    std::fill(p.fc2_w.data.begin(), p.fc2_w.data.end(), 0.0f);
    std::fill(p.fc2_b.data.begin(), p.fc2_b.data.end(), 0.0f);
    Tensor f({8, 3, 3});
    const Tensor probs = predict_probs(f, p);
    for (int64_t i = 0; i < probs.size(); ++i) CHECK(probs.data[i] == Catch::Approx(0.5));
  }
  SECTION("softmax pair sums to 1") {
    const MaskPredictorParams p = random_predictor(8, 20);
    const Tensor f = random_tensor({8, 4, 5}, 21);
    const Tensor probs = predict_probs(f, p);
    for (int64_t i = 0; i < probs.size(); i += 2)
      CHECK(probs.data[i] + probs.data[i + 1] == Catch::Approx(1.0).margin(1e-6));
  }
  SECTION("single pixel matches a scalar evaluation") {
    const int C = 4;
    const MaskPredictorParams p = random_predictor(C, 30);
    const Tensor f = random_tensor({C, 1, 1}, 31);
    const Tensor probs = predict_probs(f, p);

    // scalar path: LN, mlp1, concat(e, e) since g == e for one pixel, head
    std::vector<double> v(C);
    double mean = 0;
    for (int c = 0; c < C; ++c) mean += f.data[c];
    mean /= C;
    double var = 0;
    for (int c = 0; c < C; ++c) var += (f.data[c] - mean) * (f.data[c] - mean);
    var /= C;
    for (int c = 0; c < C; ++c) v[c] = (f.data[c] - mean) / std::sqrt(var + 1e-6);
    std::vector<double> e(C);
    for (int o = 0; o < C; ++o) {
      e[o] = p.mlp1_b.data[o];
      for (int c = 0; c < C; ++c) e[o] += p.mlp1_w.data[o * C + c] * v[c];
    }
    std::vector<double> h(C / 2);
    for (int o = 0; o < C / 2; ++o) {
      double acc = p.fc1_b.data[o];
      for (int c = 0; c < C; ++c) acc += p.fc1_w.data[o * 2 * C + c] * e[c];
      for (int c = 0; c < C; ++c) acc += p.fc1_w.data[o * 2 * C + C + c] * e[c];
      h[o] = 0.5 * acc * (1.0 + std::tanh(0.7978845608028654 * (acc + 0.044715 * acc * acc * acc)));
    }
    double logits[2];
    for (int o = 0; o < 2; ++o) {
      logits[o] = p.fc2_b.data[o];
      for (int c = 0; c < C / 2; ++c) logits[o] += p.fc2_w.data[o * (C / 2) + c] * h[c];
    }
    const double p0 = 1.0 / (1.0 + std::exp(logits[1] - logits[0]));
    CHECK(probs.data[0] == Catch::Approx(p0).margin(1e-5));
  }
  SECTION("channel mismatch rejected") {
    const MaskPredictorParams p = random_predictor(8, 40);
    CHECK_THROWS_AS(predict_probs(random_tensor({4, 2, 2}, 41), p), ShapeError);
  }
}

TEST_CASE("gumbel_mask") {
  SECTION("certain probability saturates") {
    const Tensor probs = uniform_probs(100, 100, 1.0f);
    const BlurMask m = gumbel_mask(probs, 1.0, 99);
    const double rate = static_cast<double>(m.popcount()) / (100.0 * 100.0);
    CHECK(rate > 0.999);
  }
  SECTION("matches the blur probability over 10000 draws") {
    for (float p0 : {0.1f, 0.5f, 0.9f}) {
      const Tensor probs = uniform_probs(100, 100, p0);
      const BlurMask m = gumbel_mask(probs, 1.0, 1234);
      const double rate = static_cast<double>(m.popcount()) / (100.0 * 100.0);
      CHECK(std::abs(rate - p0) < 0.03);
    }
  }
  SECTION("outputs are exactly binary") {
    const BlurMask m = gumbel_mask(uniform_probs(13, 17, 0.37f), 0.7, 5);
    for (float v : m.hard.data) CHECK((v == 0.0f || v == 1.0f));
  }
  SECTION("fixed seed is bit-identical") {
    const Tensor probs = uniform_probs(16, 16, 0.42f);
    const BlurMask a = gumbel_mask(probs, 1.0, 7);
    const BlurMask b = gumbel_mask(probs, 1.0, 7);
    CHECK(a.hard.data == b.hard.data);
  }
  SECTION("zero-noise limit equals the argmax of the probabilities") {
    for (float p0 : {0.2f, 0.6f, 0.9f}) {
      const float hard = detail::gumbel_hard(p0, 1.0f - p0, 0.0, 0.0, 1e-9);
      CHECK(hard == (p0 > 0.5f ? 1.0f : 0.0f));
    }
  }
  SECTION("non-positive temperature rejected") {
    CHECK_THROWS_AS(gumbel_mask(uniform_probs(2, 2, 0.5f), 0.0, 1), ArgumentError);
  }
}

TEST_CASE("threshold_mask") {
  SECTION("strict inequality at the boundary") {
    Tensor probs({1, 2, 2});
    probs.data = {0.6f, 0.4f, 0.5f, 0.5f};
    const BlurMask m = threshold_mask(probs, 0.5f);
    CHECK(m.hard.data[0] == 1.0f);
    CHECK(m.hard.data[1] == 0.0f);
  }
  SECTION("all-zero probability gives Q = 0") {
    const BlurMask m = threshold_mask(uniform_probs(4, 4, 0.0f), 0.5f);
    CHECK(m.popcount() == 0);
  }
  SECTION("monotone in epsilon") {
    const Tensor probs = [&] {
      Tensor t({8, 8, 2});
      for (int64_t i = 0; i < t.size(); i += 2) {
        t.data[i] = m2ae::uniform_range(m2ae::counter_rng(3, static_cast<uint64_t>(i), 0), 0, 1);
        t.data[i + 1] = 1.0f - t.data[i];
      }
      return t;
    }();
    const BlurMask lo = threshold_mask(probs, 0.3f);
    const BlurMask hi = threshold_mask(probs, 0.7f);
    for (int64_t i = 0; i < lo.hard.size(); ++i)
      if (hi.hard.data[i] == 1.0f) CHECK(lo.hard.data[i] == 1.0f);
  }
  SECTION("epsilon bounds enforced") {
    CHECK_THROWS_AS(threshold_mask(uniform_probs(2, 2, 0.5f), 1.5f), ArgumentError);
  }
}

TEST_CASE("downsample_gt_mask") {
  SECTION("all ones stay ones") {
    Tensor m({4, 4});
    std::fill(m.data.begin(), m.data.end(), 1.0f);
    for (float v : downsample_gt_mask(m, 2).data) CHECK(v == 1.0f);
  }
  SECTION("single one survives max-pooling") {
    Tensor m({4, 4});
    m.data[5] = 1.0f;  // (1,1) -> coarse (0,0)
    const Tensor d = downsample_gt_mask(m, 2);
    int ones = 0;
    for (float v : d.data) ones += (v == 1.0f);
    CHECK(ones == 1);
    CHECK(d.data[0] == 1.0f);
  }
  SECTION("all zeros stay zeros") {
    Tensor m({6, 6});
    for (float v : downsample_gt_mask(m, 3).data) CHECK(v == 0.0f);
  }
  SECTION("indivisible extents rejected") {
    Tensor m({5, 4});
    CHECK_THROWS_AS(downsample_gt_mask(m, 2), ShapeError);
  }
}
