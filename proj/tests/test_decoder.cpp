// Copyright 2026 The relaychain Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "relaychain/decoder.hpp"
#include "relaychain/evaluation.hpp"
#include "relaychain/synthgen.hpp"
#include "support.hpp"

namespace rc = relaychain;
using rc::DecodedLane;
using rc::GridDims;
using rc::LanePolyline;
using rc::Point2;
using rc::RasterMap;

namespace {

// O(n^2) greedy reference: visit pixels by descending score (row-major on
// ties), keep one iff it is >= tau from every kept pixel.
std::vector<Point2> greedy_nms_oracle(const RasterMap& seg, double tau, double thr) {
  std::vector<std::pair<float, int>> order;
  for (int i = 0; i < seg.height() * seg.width(); ++i) {
    const float s = seg.values()[static_cast<std::size_t>(i)];
    if (s >= thr) order.push_back({s, i});
  }
  std::sort(order.begin(), order.end(), [](auto a, auto b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<Point2> kept;
  for (auto [s, i] : order) {
    const Point2 p{double(i % seg.width()), double(i / seg.width())};
    bool ok = true;
    for (Point2 q : kept) ok = ok && rc::point_distance(p, q) >= tau;
    if (ok) kept.push_back(p);
  }
  return kept;
}

rc::DecoderConfig cfg() { return rc::DecoderConfig{}; }

rc::LabelBundle encode(const std::vector<LanePolyline>& lanes, GridDims dims) {
  rc::EncoderConfig e;
  e.dims = dims;
  return rc::encode_labels(lanes, e);
}

DecodedLane chain(std::vector<Point2> pts, double score) {
  DecodedLane l;
  l.points = std::move(pts);
  l.score = score;
  l.source_keypoint = l.points.front();
  return l;
}

}  // namespace

TEST(PointNms, Examples) {
  RasterMap seg(GridDims{5, 5}, 1);
  seg.at(2, 2) = 0.9f;
  seg.at(2, 3) = 0.8f;
  const auto kept = rc::point_nms(seg, 2.0, 0.5);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].position, (Point2{2, 2}));
  EXPECT_FLOAT_EQ(kept[0].score, 0.9f);
  EXPECT_TRUE(rc::point_nms(RasterMap(GridDims{5, 5}, 1), 2.0, 0.5).empty());
}

TEST(PointNms, MatchesGreedyOracleAndSpacing) {
  rctest::Gen g(41);
  for (int i = 0; i < 300; ++i) {
    const GridDims dims{g.integer(1, 12), g.integer(1, 12)};
    RasterMap seg = g.map(dims, 1, 0.0, 1.0);
    // Quantize some grids so score ties exercise the row-major rule.
    if (g.coin(0.4)) {
      for (int r = 0; r < dims.height; ++r) {
        for (int c = 0; c < dims.width; ++c) seg.at(r, c) = std::round(seg.at(r, c) * 4) / 4;
      }
    }
    const double tau = g.uniform(0.5, 4.0);
    const auto got = rc::point_nms(seg, tau, 0.5);
    const auto want = greedy_nms_oracle(seg, tau, 0.5);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t k = 0; k < got.size(); ++k) EXPECT_EQ(got[k].position, want[k]);
    for (std::size_t a = 0; a < got.size(); ++a) {
      for (std::size_t b = a + 1; b < got.size(); ++b) {
        EXPECT_GE(rc::point_distance(got[a].position, got[b].position), tau);
      }
    }
  }
}

TEST(SampleField, ExactAtPixelsAndMidway) {
  RasterMap m(GridDims{2, 2}, 1, std::vector<float>{0, 1, 2, 3});
  EXPECT_DOUBLE_EQ(rc::sample_field(m, {1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(rc::sample_field(m, {0, 1}), 2.0);
  EXPECT_DOUBLE_EQ(rc::sample_field(m, {0.5, 0}), 0.5);
  // Clamp to edge.
  EXPECT_DOUBLE_EQ(rc::sample_field(m, {-3, -3}), 0.0);
  EXPECT_DOUBLE_EQ(rc::sample_field(m, {9, 9}), 3.0);
  EXPECT_DOUBLE_EQ(rc::sample_field(m, {0.6, 0.4}, 0, rc::FieldSampling::kNearest), 1.0);
}

TEST(SampleField, LinearRampIsReproduced) {
  const GridDims dims{30, 40};
  RasterMap m(dims, 2);
  for (int r = 0; r < dims.height; ++r) {
    for (int c = 0; c < dims.width; ++c) {
      m.at(r, c, 0) = static_cast<float>(0.5 * c - 0.25 * r + 3);
      m.at(r, c, 1) = static_cast<float>(0.125 * r);
    }
  }
  rctest::Gen g(42);
  for (int i = 0; i < 2000; ++i) {
    const Point2 p = g.point(39, 29);
    EXPECT_NEAR(rc::sample_field(m, p, 0), 0.5 * p.x - 0.25 * p.y + 3, 1e-5);
    EXPECT_NEAR(rc::sample_vector(m, p).y, 0.125 * p.y, 1e-6);
  }
}

TEST(WalkBranch, VerticalFieldTakesRoundedSteps) {
  const GridDims dims{120, 20};
  RasterMap transfer(dims, 2);
  RasterMap dist(dims, 1);
  for (int r = 0; r < dims.height; ++r) {
    for (int c = 0; c < dims.width; ++c) {
      transfer.at(r, c, 1) = -10.0f;
      dist.at(r, c) = static_cast<float>(r - 5);
    }
  }
  const auto pts = rc::walk_branch({10, 85}, transfer, dist, cfg());
  ASSERT_EQ(pts.size(), 9u);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(pts[i], (Point2{10, 85 - 10.0 * i}));
  }
  RasterMap zero(dims, 1);
  EXPECT_EQ(rc::walk_branch({10, 85}, transfer, zero, cfg()).size(), 1u);
  // max_steps caps the walk.
  auto capped = cfg();
  capped.max_steps = 3;
  EXPECT_EQ(rc::walk_branch({10, 85}, transfer, dist, capped).size(), 4u);
}

TEST(WalkBranch, GuardsStopDegenerateFields) {
  const GridDims dims{40, 40};
  RasterMap dist(dims, 1, 200.0f);
  RasterMap tiny(dims, 2, 1.0f);
  EXPECT_EQ(rc::walk_branch({20, 20}, tiny, dist, cfg()).size(), 1u);
  // A field bouncing between two points triggers the cycle guard.
  RasterMap bounce(dims, 2);
  for (int r = 0; r < dims.height; ++r) {
    for (int c = 0; c < dims.width; ++c) bounce.at(r, c, 0) = c < 20 ? 10.0f : -10.0f;
  }
  const auto pts = rc::walk_branch({15, 20}, bounce, dist, cfg());
  EXPECT_EQ(pts.size(), 2u);
}

TEST(WalkBranch, QuarterCircleWalkStaysOnLane) {
  const GridDims dims{120, 160};
  LanePolyline lane{{}, "arc"};
  const double radius = 100;
  for (int i = 0; i <= 60; ++i) {
    const double a = std::numbers::pi / 2.0 * i / 60.0;
    lane.points.push_back({20 + radius - radius * std::cos(a), 110 - radius * std::sin(a)});
  }
  const auto b = encode({lane}, dims);
  const Point2 start{std::round(lane.points[30].x), std::round(lane.points[30].y)};
  for (const auto& [t, d] : {std::pair{&b.transfer_f, &b.dist_f}, std::pair{&b.transfer_b, &b.dist_b}}) {
    const auto pts = rc::walk_branch(start, *t, *d, cfg());
    EXPECT_GT(pts.size(), 3u);
    for (Point2 p : pts) EXPECT_LT(rc::project_to_polyline(p, lane).distance, 1.5);
  }
}

TEST(MergeBranches, Ordering) {
  RasterMap seg(GridDims{10, 10}, 1, 1.0f);
  const Point2 p{5, 5}, a{5, 4}, b{5, 3}, c{5, 6};
  const std::vector<Point2> fwd{p, a, b}, bwd{p, c};
  const auto lane = rc::merge_branches(fwd, bwd, seg);
  EXPECT_EQ(lane.points, (std::vector<Point2>{c, p, a, b}));
  EXPECT_DOUBLE_EQ(lane.score, 1.0);
  EXPECT_EQ(rc::merge_branches(fwd, std::vector<Point2>{p}, seg).points, fwd);
}

TEST(MergeBranches, ScoreIsMeanSampledSeg) {
  RasterMap seg(GridDims{4, 4}, 1);
  seg.at(0, 0) = 1.0f;
  seg.at(0, 1) = 0.5f;
  const std::vector<Point2> fwd{{0, 0}, {1, 0}}, bwd{{0, 0}, {3, 3}};
  EXPECT_DOUBLE_EQ(rc::merge_branches(fwd, bwd, seg).score, 0.5);
}

TEST(CurveIou, Examples) {
  const GridDims dims{80, 200};
  const std::vector<Point2> a{{50, 5}, {50, 75}};
  EXPECT_DOUBLE_EQ(rc::curve_iou(a, a, 15, dims), 1.0);
  EXPECT_DOUBLE_EQ(rc::curve_iou(a, std::vector<Point2>{{150, 5}, {150, 75}}, 15, dims), 0.0);
  const std::vector<Point2> b{{57, 5}, {57, 75}};
  EXPECT_DOUBLE_EQ(rc::curve_iou(a, b, 15, dims), rctest::brute_iou(a, b, 15, dims));
  EXPECT_DOUBLE_EQ(rc::curve_iou(std::span<const Point2>(), std::span<const Point2>(), 15, dims), 0.0);
}

TEST(CurveIou, MatchesPerPixelOracle) {
  rctest::Gen g(43);
  const GridDims dims{40, 80};
  for (int i = 0; i < 150; ++i) {
    std::vector<Point2> a, b;
    for (int k = g.integer(1, 5); k > 0; --k) a.push_back(g.point(80, 40));
    for (int k = g.integer(1, 5); k > 0; --k) b.push_back(g.point(80, 40));
    const double eta = g.uniform(2, 20);
    EXPECT_DOUBLE_EQ(rc::curve_iou(a, b, eta, dims), rctest::brute_iou(a, b, eta, dims));
  }
}

TEST(LineNms, DuplicatesAndDisjoint) {
  const GridDims dims{80, 200};
  const auto c = cfg();
  const std::vector<DecodedLane> dup{chain({{50, 5}, {50, 75}}, 0.8), chain({{50, 5}, {50, 75}}, 0.9)};
  const auto kept = rc::line_nms(dup, c, dims);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_DOUBLE_EQ(kept[0].score, 0.9);
  const std::vector<DecodedLane> apart{chain({{50, 5}, {50, 75}}, 0.8),
                                       chain({{150, 5}, {150, 75}}, 0.9)};
  EXPECT_EQ(rc::line_nms(apart, c, dims).size(), 2u);
}

TEST(LineNms, PerturbedCopiesMatchGreedySubsetOracle) {
  const GridDims dims{80, 200};
  rctest::Gen g(44);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<DecodedLane> lanes;
    const double xs[] = {g.uniform(20, 90), g.uniform(100, 180)};
    for (int k = 0; k < 5; ++k) {
      const double x = xs[k % 2] + g.uniform(-9, 9);
      lanes.push_back(chain({{x, g.uniform(2, 20)}, {x + g.uniform(-8, 8), g.uniform(60, 78)}},
                            std::round(g.uniform(0.5, 1.0) * 8) / 8));
    }
    // Greedy over the same visiting order, brute-force IoU.
    const auto order = rc::nms_order(lanes);
    std::vector<std::size_t> want;
    for (std::size_t i : order) {
      bool ok = true;
      for (std::size_t k : want) {
        ok = ok && rctest::brute_iou(lanes[i].points, lanes[k].points, 15, dims) < 0.5;
      }
      if (ok) want.push_back(i);
    }
    const auto got = rc::line_nms(lanes, cfg(), dims);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t k = 0; k < got.size(); ++k) EXPECT_EQ(got[k].points, lanes[want[k]].points);
    for (std::size_t a = 0; a < got.size(); ++a) {
      for (std::size_t b = a + 1; b < got.size(); ++b) {
        EXPECT_LT(rc::curve_iou(got[a], got[b], 15, dims), 0.5);
      }
    }
  }
}

TEST(LineNms, OrderBreaksScoreTiesByLength) {
  const std::vector<DecodedLane> lanes{chain({{0, 0}, {0, 5}}, 0.9), chain({{0, 0}, {0, 9}}, 0.9),
                                       chain({{0, 0}, {0, 1}}, 1.0), chain({{0, 0}, {0, 9}}, 0.9)};
  EXPECT_EQ(rc::nms_order(lanes), (std::vector<std::size_t>{2, 1, 3, 0}));
}

TEST(Decode, ThreeLaneSceneRoundTrip) {
  rc::SceneSpec spec;
  spec.lane_count = 3;
  spec.seed = 3;
  const auto gt = rc::gen_scene(spec);
  const auto b = encode(gt, spec.dims);
  const auto lanes = rc::decode(b, cfg());
  ASSERT_EQ(lanes.size(), 3u);
  const auto m = rc::match_lanes(std::span<const DecodedLane>(lanes), std::span<const LanePolyline>(gt),
                                 15, 0.5, spec.dims);
  EXPECT_EQ(m.pairs.size(), 3u);
  for (std::size_t i = 1; i < lanes.size(); ++i) EXPECT_GE(lanes[i - 1].score, lanes[i].score);
}

TEST(Decode, AllZeroBundleIsEmpty) {
  const GridDims dims{80, 200};
  const rc::LabelBundle zero{RasterMap(dims, 1), RasterMap(dims, 2), RasterMap(dims, 2),
                             RasterMap(dims, 1), RasterMap(dims, 1)};
  EXPECT_TRUE(rc::decode(zero, cfg()).empty());
}

TEST(Decode, RejectsInconsistentBundle) {
  const GridDims dims{80, 200};
  const rc::LabelBundle bad{RasterMap(dims, 1), RasterMap(dims, 2), RasterMap(dims, 1),
                            RasterMap(dims, 1), RasterMap(dims, 1)};
  EXPECT_THROW(rc::decode(bad, cfg()), rc::ValidationError);
  auto c = cfg();
  c.curve_iou_threshold = 1.0;
  EXPECT_THROW(c.validate(), rc::ValidationError);
}

TEST(Decode, YShapeModes) {
  rc::SceneSpec spec;
  spec.kind = rc::SceneKind::kYShape;
  spec.lane_count = 2;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    spec.seed = seed;
    const auto gt = rc::gen_scene(spec);
    const auto b = encode(gt, spec.dims);
    auto c = cfg();
    const auto bi = rc::decode(b, c);
    c.mode = rc::DecodeMode::kForwardOnly;
    const auto fw = rc::decode(b, c);
    const auto tp = [&](const std::vector<DecodedLane>& pred) {
      return rc::match_lanes(std::span<const DecodedLane>(pred), std::span<const LanePolyline>(gt),
                             15, 0.5, spec.dims)
          .pairs.size();
    };
    EXPECT_EQ(tp(bi), 2u) << "seed " << seed;
    EXPECT_LE(tp(fw), 1u) << "seed " << seed;
  }
}

TEST(Decode, ChainInvariantsAndDeterminism) {
  rctest::Gen g(45);
  const rc::SceneKind kinds[] = {rc::SceneKind::kArc, rc::SceneKind::kQuadratic,
                                 rc::SceneKind::kNearHorizontal, rc::SceneKind::kFork};
  for (int i = 0; i < 8; ++i) {
    rc::SceneSpec spec;
    spec.kind = kinds[i % 4];
    spec.lane_count = spec.kind == rc::SceneKind::kFork || spec.kind == rc::SceneKind::kNearHorizontal ? 2 : 4;
    spec.seed = g.next();
    const auto gt = rc::gen_scene(spec);
    rc::NoiseSpec noise;
    noise.transfer_sigma = i % 2 ? 1.0 : 0.0;
    noise.seed = g.next();
    const auto b = rc::perturb_bundle(encode(gt, spec.dims), noise);
    auto c = cfg();
    const auto keypoints = rc::point_nms(b.seg, c.nms_radius, c.score_threshold);
    const auto cands = rc::decode_candidates(b, keypoints, c);
    for (const auto& lane : cands) {
      ASSERT_GE(lane.points.size(), 1u);
      EXPECT_LE(lane.points.size(), 2u * c.max_steps + 1);
      // Clean transfer vectors have norm <= d and bilinear blending keeps it.
      for (std::size_t k = 1; k < lane.points.size() && noise.is_zero(); ++k) {
        EXPECT_LE(rc::point_distance(lane.points[k - 1], lane.points[k]), c.step_d + 1e-3);
      }
    }
    const auto once = rc::decode(b, c);
    c.threads = 3;
    const auto threaded = rc::decode(b, c);
    ASSERT_EQ(once.size(), threaded.size());
    for (std::size_t k = 0; k < once.size(); ++k) {
      EXPECT_EQ(once[k].points, threaded[k].points);
      EXPECT_EQ(once[k].score, threaded[k].score);
    }
  }
}
