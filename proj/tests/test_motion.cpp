#include <catch2/catch_amalgamated.hpp>

#include "test_helpers.hpp"

using namespace m2ae;
using testutil::random_tensor;

namespace {

DisplacementPair constant_pair(int H, int W, float sx, float sy, float ex, float ey) {
  DisplacementPair p;
  p.o_start = Tensor({H, W, 2});
  p.o_end = Tensor({H, W, 2});
  for (int64_t i = 0; i < p.o_start.size(); i += 2) {
    p.o_start.data[i] = sx;
    p.o_start.data[i + 1] = sy;
    p.o_end.data[i] = ex;
    p.o_end.data[i + 1] = ey;
  }
  return p;
}

DisplacementPair random_pair(int H, int W, uint64_t seed) {
  DisplacementPair p;
  p.o_start = random_tensor({H, W, 2}, seed, -4.0f, 4.0f);
  p.o_end = random_tensor({H, W, 2}, seed + 1, -4.0f, 4.0f);
  return p;
}

}  // namespace

TEST_CASE("predict_endpoints") {
  SECTION("zero conv gives a static scene") {
    Tensor f = random_tensor({6, 4, 4}, 1);
    ConvSpec conv;
    conv.in_channels = 6;
    conv.out_channels = 4;
    conv.kernel_size = 3;
    conv.padding = 1;
    conv.weights = Tensor({4, 6, 3, 3});
    const DisplacementPair p = predict_endpoints(f, conv);
    REQUIRE(p.o_start.dims == std::vector<int>{4, 4, 2});
    REQUIRE(p.o_end.dims == std::vector<int>{4, 4, 2});
    for (float v : p.o_start.data) CHECK(v == 0.0f);
    for (float v : p.o_end.data) CHECK(v == 0.0f);
  }
  SECTION("single pixel matches a scalar dot product") {
    const Tensor f = random_tensor({3, 1, 1}, 2);
    ConvSpec conv = testutil::random_conv(3, 4, 3, 1, 1, 3);
    const DisplacementPair p = predict_endpoints(f, conv);
    for (int ch = 0; ch < 4; ++ch) {
      double acc = conv.bias->data[ch];
      for (int c = 0; c < 3; ++c)
        acc += conv.weights.data[(static_cast<size_t>(ch) * 3 + c) * 9 + 4] * f.data[c];
      const float got = ch < 2 ? p.o_start.data[ch] : p.o_end.data[ch - 2];
      CHECK(got == Catch::Approx(acc).margin(1e-6));
    }
  }
  SECTION("wrong channel count rejected") {
    ConvSpec conv = testutil::random_conv(3, 5, 3, 1, 1, 4);
    CHECK_THROWS_AS(predict_endpoints(random_tensor({3, 2, 2}, 5), conv), ShapeError);
  }
}

TEST_CASE("interpolate_quadratic") {
  const DisplacementPair pair = constant_pair(2, 2, -4, 0, 4, 0);
  SECTION("midpoint is exactly zero for N=9") {
    const TrajectoryField t = interpolate_quadratic(pair, 9);
    CHECK(t.at(4, 0, 0, 0) == 0.0f);
    CHECK(t.at(4, 0, 0, 1) == 0.0f);
  }
  SECTION("endpoints are exact") {
    const DisplacementPair rp = random_pair(3, 3, 9);
    const TrajectoryField t = interpolate_quadratic(rp, 9);
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 3; ++x)
        for (int c = 0; c < 2; ++c) {
          const size_t i = (static_cast<size_t>(y) * 3 + x) * 2 + c;
          CHECK(t.at(0, y, x, c) == rp.o_start.data[i]);
          CHECK(t.at(8, y, x, c) == rp.o_end.data[i]);
        }
  }
  SECTION("closed form at n=2") {
    const TrajectoryField t = interpolate_quadratic(pair, 9);
    CHECK(t.at(2, 0, 0, 0) == Catch::Approx(-2.0));
    CHECK(t.at(2, 0, 0, 1) == Catch::Approx(0.0));
  }
  SECTION("linear in the endpoints") {
    const DisplacementPair rp = random_pair(2, 2, 10);
    DisplacementPair scaled = rp;
    for (auto* t : {&scaled.o_start, &scaled.o_end})
      for (float& v : t->data) v *= 3.0f;
    const TrajectoryField a = interpolate_quadratic(rp, 9);
    const TrajectoryField b = interpolate_quadratic(scaled, 9);
    for (int64_t i = 0; i < a.offsets.size(); ++i)
      CHECK(b.offsets.data[i] == Catch::Approx(3.0f * a.offsets.data[i]).margin(1e-5));
  }
  SECTION("N < 2 rejected") {
    CHECK_THROWS_AS(interpolate_quadratic(pair, 1), ArgumentError);
  }
}

TEST_CASE("interpolate_linear") {
  const DisplacementPair pair = constant_pair(1, 1, -4, 0, 4, 0);
  SECTION("boundary and midpoint") {
    const TrajectoryField t = interpolate_linear(pair, 9);
    CHECK(t.at(0, 0, 0, 0) == -4.0f);
    CHECK(t.at(8, 0, 0, 0) == 4.0f);
    CHECK(t.at(4, 0, 0, 0) == 0.0f);
  }
  SECTION("closed form at n=2") {
    const TrajectoryField t = interpolate_linear(pair, 9);
    CHECK(t.at(2, 0, 0, 0) == Catch::Approx(-2.0));
  }
  SECTION("agrees with quadratic at endpoints and midpoint") {
    const DisplacementPair rp = random_pair(2, 3, 11);
    const TrajectoryField lin = interpolate_linear(rp, 9);
    const TrajectoryField quad = interpolate_quadratic(rp, 9);
    for (int n : {0, 4, 8})
      for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 3; ++x)
          for (int c = 0; c < 2; ++c)
            CHECK(lin.at(n, y, x, c) == Catch::Approx(quad.at(n, y, x, c)).margin(1e-6));
  }
  SECTION("even or tiny N rejected") {
    CHECK_THROWS_AS(interpolate_linear(pair, 8), ArgumentError);
    CHECK_THROWS_AS(interpolate_linear(pair, 1), ArgumentError);
  }
}

TEST_CASE("build_deform_offsets") {
  SECTION("zero trajectory reproduces the base grid") {
    const DisplacementPair zero = constant_pair(3, 3, 0, 0, 0, 0);
    const OffsetField d = build_deform_offsets(interpolate_quadratic(zero, 9));
    const OffsetField grid = base_grid_offsets(3, 3);
    CHECK(testutil::max_abs_diff(d.d, grid.d) == 0.0);
  }
  SECTION("center tap stays at the origin for quadratic trajectories") {
    const DisplacementPair rp = random_pair(4, 4, 12);
    const OffsetField d = build_deform_offsets(interpolate_quadratic(rp, 9));
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) {
        CHECK(d.dy(y, x, 4) == 0.0f);
        CHECK(d.dx(y, x, 4) == 0.0f);
      }
  }
  SECTION("tap 0 composes grid and trajectory step 0") {
    const DisplacementPair pair = constant_pair(1, 1, -4, 0, 4, 0);
    const TrajectoryField t = interpolate_quadratic(pair, 9);
    const OffsetField d = build_deform_offsets(t);
    // scalar composition: grid (-1,-1) plus (dx,dy) = (-4,0) at step 0
    CHECK(d.dy(0, 0, 0) == Catch::Approx(-1.0 + 0.0));
    CHECK(d.dx(0, 0, 0) == Catch::Approx(-1.0 + -4.0));
  }
  SECTION("wrong step count rejected") {
    const DisplacementPair pair = constant_pair(1, 1, 0, 0, 0, 0);
    CHECK_THROWS_AS(build_deform_offsets(interpolate_quadratic(pair, 5)), ArgumentError);
  }
}

TEST_CASE("rescale_displacements") {
  SECTION("factor 1 is the identity") {
    const DisplacementPair rp = random_pair(4, 6, 13);
    const DisplacementPair out = rescale_displacements(rp, 1.0f);
    CHECK(testutil::max_abs_diff(out.o_start, rp.o_start) == 0.0);
    CHECK(testutil::max_abs_diff(out.o_end, rp.o_end) == 0.0);
  }
  SECTION("doubling a constant field") {
    const DisplacementPair cp = constant_pair(2, 2, 1, 0, 1, 0);
    const DisplacementPair out = rescale_displacements(cp, 2.0f);
    REQUIRE(out.o_start.dims == std::vector<int>{4, 4, 2});
    for (int64_t i = 0; i < out.o_start.size(); i += 2) {
      CHECK(out.o_start.data[i] == Catch::Approx(2.0));
      CHECK(out.o_start.data[i + 1] == Catch::Approx(0.0));
    }
  }
  SECTION("halving a constant field") {
    const DisplacementPair cp = constant_pair(4, 4, 4, 2, 4, 2);
    const DisplacementPair out = rescale_displacements(cp, 0.5f);
    REQUIRE(out.o_start.dims == std::vector<int>{2, 2, 2});
    for (int64_t i = 0; i < out.o_start.size(); i += 2) {
      CHECK(out.o_start.data[i] == Catch::Approx(2.0));
      CHECK(out.o_start.data[i + 1] == Catch::Approx(1.0));
    }
  }
}
