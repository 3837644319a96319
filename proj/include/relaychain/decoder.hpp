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

// Relay-chain decoder.
//
//   seg ──Point-NMS──> keypoints ──walk(T_f, D_f)──> forward branch ─┐
//                               └─walk(T_b, D_b)──> backward branch ─┴─merge──> curve
//   curves ──stripe-IoU NMS──> lanes
//
// Every keypoint is decoded independently against read-only maps, so the
// per-keypoint stage can be spread over threads without changing the output.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "relaychain/encoder.hpp"
#include "relaychain/error.hpp"
#include "relaychain/geometry.hpp"
#include "relaychain/raster.hpp"

namespace relaychain {

enum class DecodeMode { kBilateral, kForwardOnly, kBackwardOnly };
enum class FieldSampling { kBilinear, kNearest };

struct DecoderConfig {
  double step_d = 10.0;
  double nms_radius = 2.0;        // tau
  double line_halfwidth = 7.5;    // eta / 2
  double curve_iou_threshold = 0.5;
  double score_threshold = 0.5;
  int max_steps = 200;
  DecodeMode mode = DecodeMode::kBilateral;
  FieldSampling sampling = FieldSampling::kBilinear;
  int threads = 1;

  void validate() const {
    if (!(step_d > 0.0)) throw ValidationError("step_d must be positive");
    if (!(nms_radius > 0.0)) throw ValidationError("nms radius must be positive");
    if (!(line_halfwidth > 0.0)) throw ValidationError("line half width must be positive");
    if (!(curve_iou_threshold > 0.0 && curve_iou_threshold < 1.0)) {
      throw ValidationError("curve IoU threshold must lie in (0, 1)");
    }
    if (!(score_threshold > 0.0 && score_threshold <= 1.0)) {
      throw ValidationError("score threshold must lie in (0, 1]");
    }
    if (max_steps <= 0) throw ValidationError("max_steps must be positive");
    if (threads <= 0) throw ValidationError("threads must be positive");
  }
};

struct Keypoint {
  Point2 position;
  float score = 0.0f;
};

struct DecodedLane {
  std::vector<Point2> points;  // backward end first
  double score = 0.0;
  Point2 source_keypoint;
};

/// Greedy sparsification: pixels at or above `score_threshold`, visited by
/// descending score (row-major on ties), survive when no survivor lies closer
/// than `tau`.
inline std::vector<Keypoint> point_nms(const RasterMap& seg, double tau, double score_threshold) {
  struct Candidate {
    int row;
    int col;
    float score;
  };
  std::vector<Candidate> cand;
  for (int row = 0; row < seg.height(); ++row) {
    for (int col = 0; col < seg.width(); ++col) {
      const float s = seg.at(row, col);
      if (s >= score_threshold) cand.push_back({row, col, s});
    }
  }
  std::stable_sort(cand.begin(), cand.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });

  // Survivors are integer pixels, so only a (2r+1)^2 window can hold a
  // conflicting one.
  const int r = static_cast<int>(std::ceil(tau));
  std::vector<char> taken(static_cast<std::size_t>(seg.height()) * seg.width(), 0);
  std::vector<Keypoint> kept;
  const double tau2 = tau * tau;
  for (const auto& c : cand) {
    bool free = true;
    for (int dr = -r; dr <= r && free; ++dr) {
      for (int dc = -r; dc <= r; ++dc) {
        const int rr = c.row + dr;
        const int cc = c.col + dc;
        if (!seg.contains(rr, cc) || !taken[static_cast<std::size_t>(rr) * seg.width() + cc]) {
          continue;
        }
        if (static_cast<double>(dr * dr + dc * dc) < tau2) {
          free = false;
          break;
        }
      }
    }
    if (!free) continue;
    taken[static_cast<std::size_t>(c.row) * seg.width() + c.col] = 1;
    kept.push_back({{static_cast<double>(c.col), static_cast<double>(c.row)}, c.score});
  }
  return kept;
}

/// Reads channel `ch` at a continuous position; bilinear with clamp-to-edge.
inline double sample_field(const RasterMap& map, Point2 p, int ch = 0,
                           FieldSampling sampling = FieldSampling::kBilinear) {
  const double x = std::clamp(p.x, 0.0, static_cast<double>(map.width() - 1));
  const double y = std::clamp(p.y, 0.0, static_cast<double>(map.height() - 1));
  if (sampling == FieldSampling::kNearest) {
    return map.at(static_cast<int>(std::lround(y)), static_cast<int>(std::lround(x)), ch);
  }
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, map.width() - 1);
  const int y1 = std::min(y0 + 1, map.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = map.at(y0, x0, ch) * (1.0 - fx) + map.at(y0, x1, ch) * fx;
  const double bottom = map.at(y1, x0, ch) * (1.0 - fx) + map.at(y1, x1, ch) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

inline Point2 sample_vector(const RasterMap& map, Point2 p,
                            FieldSampling sampling = FieldSampling::kBilinear) {
  return {sample_field(map, p, 0, sampling), sample_field(map, p, 1, sampling)};
}

/// Number of relay steps a branch takes from p0: round(D(p0) / d), capped.
inline int branch_steps(const RasterMap& dist, Point2 p0, const DecoderConfig& config) {
  const double budget = sample_field(dist, p0, 0, config.sampling) / config.step_d;
  if (!(budget > 0.0)) return 0;
  return static_cast<int>(std::min<double>(config.max_steps, std::round(budget)));
}

/// Follows the transfer field from p0 for branch_steps() steps. Stops early on
/// a step shorter than d/4 or on returning within 0.5 px of a visited point.
inline std::vector<Point2> walk_branch(Point2 p0, const RasterMap& transfer, const RasterMap& dist,
                                       const DecoderConfig& config) {
  const int steps = branch_steps(dist, p0, config);
  const double min_step = 0.25 * config.step_d;
  const double max_x = transfer.width() - 1;
  const double max_y = transfer.height() - 1;
  std::vector<Point2> chain{p0};
  chain.reserve(static_cast<std::size_t>(steps) + 1);
  Point2 p = p0;
  for (int i = 0; i < steps; ++i) {
    const Point2 step = sample_vector(transfer, p, config.sampling);
    if (norm(step) < min_step) break;
    const Point2 next{std::clamp(p.x + step.x, 0.0, max_x), std::clamp(p.y + step.y, 0.0, max_y)};
    const bool revisit = std::any_of(chain.begin(), chain.end(),
                                     [&](Point2 q) { return point_distance(q, next) < 0.5; });
    if (revisit) break;
    chain.push_back(next);
    p = next;
  }
  return chain;
}

/// Joins branches that both start at the keypoint: reversed backward branch
/// (without the shared start) followed by the forward branch. The score is the
/// mean segmentation confidence sampled at every chain point.
inline DecodedLane merge_branches(std::span<const Point2> forward, std::span<const Point2> backward,
                                  const RasterMap& seg,
                                  FieldSampling sampling = FieldSampling::kBilinear) {
  DecodedLane lane;
  lane.source_keypoint = forward.empty() ? (backward.empty() ? Point2{} : backward.front())
                                         : forward.front();
  lane.points.reserve(forward.size() + backward.size());
  for (std::size_t i = backward.size(); i-- > 1;) lane.points.push_back(backward[i]);
  lane.points.insert(lane.points.end(), forward.begin(), forward.end());
  if (forward.empty() && !backward.empty()) lane.points.push_back(backward.front());
  double total = 0.0;
  for (Point2 p : lane.points) total += sample_field(seg, p, 0, sampling);
  lane.score = lane.points.empty() ? 0.0 : total / static_cast<double>(lane.points.size());
  return lane;
}

/// Stripe IoU: each curve covers the pixel centers within eta/2 of it.
inline double curve_iou(std::span<const Point2> a, std::span<const Point2> b, double eta,
                        GridDims dims) {
  validate_dims(dims);
  const StripeMask ma = stripe_mask(a, eta / 2.0, dims);
  const StripeMask mb = stripe_mask(b, eta / 2.0, dims);
  const std::size_t inter = ma.intersection_count(mb);
  const std::size_t uni = ma.count() + mb.count() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline double curve_iou(const DecodedLane& a, const DecodedLane& b, double eta, GridDims dims) {
  return curve_iou(std::span<const Point2>(a.points), std::span<const Point2>(b.points), eta, dims);
}

/// Order in which line_nms visits candidates: descending score, then longer
/// chain (arc length), then input order.
inline std::vector<std::size_t> nms_order(std::span<const DecodedLane> lanes) {
  std::vector<double> arc(lanes.size());
  for (std::size_t i = 0; i < lanes.size(); ++i) arc[i] = arc_length(lanes[i].points);
  std::vector<std::size_t> order(lanes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (lanes[a].score != lanes[b].score) return lanes[a].score > lanes[b].score;
    return arc[a] > arc[b];
  });
  return order;
}

/// Greedy curve NMS: a lane is dropped when its stripe IoU with any already
/// kept lane reaches the threshold. Output is in visiting order.
inline std::vector<DecodedLane> line_nms(std::span<const DecodedLane> lanes,
                                         const DecoderConfig& config, GridDims dims) {
  validate_dims(dims);
  const double radius = config.line_halfwidth;
  std::vector<DecodedLane> kept;
  std::vector<StripeMask> kept_masks;
  std::vector<std::size_t> kept_counts;
  for (std::size_t idx : nms_order(lanes)) {
    const DecodedLane& cand = lanes[idx];
    StripeMask mask = stripe_mask(cand.points, radius, dims);
    const std::size_t n = mask.count();
    bool suppressed = false;
    for (std::size_t k = 0; k < kept.size() && !suppressed; ++k) {
      const std::size_t inter = mask.intersection_count(kept_masks[k]);
      if (inter == 0) continue;
      const std::size_t uni = n + kept_counts[k] - inter;
      suppressed = static_cast<double>(inter) >= config.curve_iou_threshold * static_cast<double>(uni);
    }
    if (suppressed) continue;
    kept.push_back(cand);
    kept_masks.push_back(std::move(mask));
    kept_counts.push_back(n);
  }
  return kept;
}

/// Decodes one keypoint into a merged chain according to the mode.
inline DecodedLane decode_keypoint(const LabelBundle& bundle, Point2 kp,
                                   const DecoderConfig& config) {
  const std::vector<Point2> single{kp};
  const std::vector<Point2> fwd = config.mode == DecodeMode::kBackwardOnly
                                      ? single
                                      : walk_branch(kp, bundle.transfer_f, bundle.dist_f, config);
  const std::vector<Point2> bwd = config.mode == DecodeMode::kForwardOnly
                                      ? single
                                      : walk_branch(kp, bundle.transfer_b, bundle.dist_b, config);
  return merge_branches(fwd, bwd, bundle.seg, config.sampling);
}

/// All candidate chains, one per keypoint, in keypoint order.
inline std::vector<DecodedLane> decode_candidates(const LabelBundle& bundle,
                                                  std::span<const Keypoint> keypoints,
                                                  const DecoderConfig& config) {
  std::vector<DecodedLane> out(keypoints.size());
  const auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = decode_keypoint(bundle, keypoints[i].position, config);
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(config.threads), keypoints.size());
  if (workers <= 1) {
    run(0, keypoints.size());
    return out;
  }
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (keypoints.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(keypoints.size(), begin + chunk);
      if (begin < end) pool.emplace_back(run, begin, end);
    }
  }
  return out;
}

/// Full pipeline: Point-NMS, per-keypoint walks, merge, curve NMS. Output is
/// sorted by descending score.
inline std::vector<DecodedLane> decode(const LabelBundle& bundle, const DecoderConfig& config) {
  config.validate();
  bundle.validate();
  const std::vector<Keypoint> keypoints =
      point_nms(bundle.seg, config.nms_radius, config.score_threshold);
  const std::vector<DecodedLane> candidates = decode_candidates(bundle, keypoints, config);
  return line_nms(candidates, config, bundle.dims());
}

}  // namespace relaychain
