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

// Polyline primitives shared by the encoder, the decoder and the metric.
//
// Coordinates are continuous pixels with y growing downward. A lane runs from
// its backward end (largest y) to its forward end (smallest y); neighbors
// along a lane are defined by chord (Euclidean) distance, not arc length.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "relaychain/error.hpp"

namespace relaychain {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(Point2 a, double s) { return {a.x * s, a.y * s}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline bool is_finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

inline double point_distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

enum class Direction { kForward, kBackward };

/// One lane instance: points[0] is the backward end, points.back() the forward end.
struct LanePolyline {
  std::vector<Point2> points;
  std::string id;

  friend bool operator==(const LanePolyline&, const LanePolyline&) = default;
};

/// Throws ValidationError unless the lane has >= 2 finite, consecutively
/// distinct points.
inline void validate_lane(const LanePolyline& lane) {
  if (lane.points.size() < 2) {
    throw ValidationError("lane '" + lane.id + "' needs at least 2 points, has " +
                          std::to_string(lane.points.size()));
  }
  for (std::size_t i = 0; i < lane.points.size(); ++i) {
    if (!is_finite(lane.points[i])) {
      throw ValidationError("lane '" + lane.id + "' point " + std::to_string(i) + " is not finite");
    }
    if (i > 0 && lane.points[i] == lane.points[i - 1]) {
      throw ValidationError("lane '" + lane.id + "' repeats point " + std::to_string(i));
    }
  }
}

/// Closest point of the closed segment [a, b] to p. A degenerate segment
/// (a == b) behaves as the single point a.
struct SegmentFoot {
  double t = 0.0;
  Point2 foot;
  double distance = 0.0;
};

inline SegmentFoot closest_on_segment(Point2 p, Point2 a, Point2 b) {
  const Point2 u = b - a;
  const double len2 = dot(u, u);
  const double t = len2 > 0.0 ? std::clamp(dot(p - a, u) / len2, 0.0, 1.0) : 0.0;
  const Point2 foot = a + u * t;
  return {t, foot, point_distance(p, foot)};
}

/// Distance from p to the union of segments of a point chain. A single point
/// is its own degenerate segment.
inline double distance_to_chain(Point2 p, std::span<const Point2> pts) {
  if (pts.size() == 1) return point_distance(p, pts[0]);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    best = std::min(best, closest_on_segment(p, pts[i], pts[i + 1]).distance);
  }
  return best;
}

/// Cumulative arc length at each vertex; front() == 0.
inline std::vector<double> cumulative_arc(std::span<const Point2> pts) {
  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    cum[i] = cum[i - 1] + point_distance(pts[i - 1], pts[i]);
  }
  return cum;
}

inline double arc_length(std::span<const Point2> pts) {
  double total = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) total += point_distance(pts[i - 1], pts[i]);
  return total;
}

struct Projection {
  double distance = 0.0;
  Point2 foot;
  std::size_t segment_index = 0;
  double arc_offset = 0.0;  // from points[0]
  double segment_t = 0.0;   // foot = p[i] + t * (p[i+1] - p[i])
};

/// Nearest point on the lane; ties resolve to the smallest segment index.
inline Projection project_to_polyline(Point2 p, const LanePolyline& lane) {
  const auto& pts = lane.points;
  Projection best;
  best.distance = std::numeric_limits<double>::infinity();
  double arc = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const SegmentFoot s = closest_on_segment(p, pts[i], pts[i + 1]);
    const double len = point_distance(pts[i], pts[i + 1]);
    if (s.distance < best.distance) {
      best = {s.distance, s.foot, i, arc + s.t * len, s.t};
    }
    arc += len;
  }
  return best;
}

struct Endpoints {
  Point2 forward_end;
  Point2 backward_end;
  std::size_t forward_index = 0;
  std::size_t backward_index = 0;
};

/// Forward end = vertex with minimum y, backward end = vertex with maximum y.
/// y ties go to the smaller x (then lower index) for the forward end and to the
/// larger x (then higher index) for the backward end, so a perfectly
/// horizontal lane still has two distinct ends.
inline Endpoints endpoints(const LanePolyline& lane) {
  const auto& pts = lane.points;
  std::size_t fwd = 0;
  std::size_t bwd = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const Point2 p = pts[i];
    if (p.y < pts[fwd].y || (p.y == pts[fwd].y && p.x < pts[fwd].x)) fwd = i;
    if (p.y > pts[bwd].y || (p.y == pts[bwd].y && p.x >= pts[bwd].x)) bwd = i;
  }
  return {pts[fwd], pts[bwd], fwd, bwd};
}

/// True when walking toward the forward end means increasing vertex index.
inline bool forward_is_increasing(const LanePolyline& lane) {
  const Endpoints e = endpoints(lane);
  return e.forward_index > e.backward_index;
}

/// Reorders points so that points[0] is the backward end.
inline LanePolyline oriented(LanePolyline lane) {
  if (!forward_is_increasing(lane)) std::reverse(lane.points.begin(), lane.points.end());
  return lane;
}

struct ChordHit {
  Point2 point;
  std::size_t segment_index = 0;
  double arc_offset = 0.0;
};

/// Walks the lane from `start` (a position on it) toward increasing or
/// decreasing index and returns the first point whose distance to `center`
/// equals `radius`. `center` must be strictly inside the circle at `start`,
/// so the first crossing is always the exit root of the segment quadratic.
inline std::optional<ChordHit> chord_crossing(std::span<const Point2> pts,
                                              std::span<const double> cum, Point2 center,
                                              const Projection& start, bool increasing,
                                              double radius) {
  constexpr double kEps = 1e-9;
  const double r2 = radius * radius;
  const auto exit_root = [&](Point2 a, Point2 b, double s0) -> std::optional<double> {
    const Point2 u = b - a;
    const Point2 w = a - center;
    const double qa = dot(u, u);
    if (qa == 0.0) return std::nullopt;
    const double qb = 2.0 * dot(u, w);
    const double qc = dot(w, w) - r2;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0) return std::nullopt;
    const double s = (-qb + std::sqrt(disc)) / (2.0 * qa);
    if (s < s0 - kEps || s > 1.0 + kEps) return std::nullopt;
    return std::clamp(s, s0, 1.0);
  };

  if (increasing) {
    for (std::size_t i = start.segment_index; i + 1 < pts.size(); ++i) {
      const double s0 = i == start.segment_index ? start.segment_t : 0.0;
      if (auto s = exit_root(pts[i], pts[i + 1], s0)) {
        const double len = cum[i + 1] - cum[i];
        return ChordHit{pts[i] + (pts[i + 1] - pts[i]) * *s, i, cum[i] + *s * len};
      }
    }
  } else {
    for (std::size_t k = start.segment_index + 1; k-- > 0;) {
      const double s0 = k == start.segment_index ? 1.0 - start.segment_t : 0.0;
      if (auto s = exit_root(pts[k + 1], pts[k], s0)) {
        const double len = cum[k + 1] - cum[k];
        return ChordHit{pts[k + 1] + (pts[k] - pts[k + 1]) * *s, k, cum[k + 1] - *s * len};
      }
    }
  }
  return std::nullopt;
}

/// Point on the lane at chord distance d from the projection foot of p, on the
/// requested side, nearest in arc length to the foot. Empty when the lane ends
/// within d of the foot on that side.
inline std::optional<Point2> neighbor_at_chord(Point2 p, const LanePolyline& lane, double d,
                                               Direction direction) {
  const Projection proj = project_to_polyline(p, lane);
  const std::vector<double> cum = cumulative_arc(lane.points);
  const bool increasing = (direction == Direction::kForward) == forward_is_increasing(lane);
  const auto hit = chord_crossing(lane.points, cum, proj.foot, proj, increasing, d);
  if (!hit) return std::nullopt;
  return hit->point;
}

/// Point at arc offset s from points[0] (clamped to the lane).
inline Point2 point_at_arc(std::span<const Point2> pts, std::span<const double> cum, double s) {
  if (s <= 0.0) return pts.front();
  if (s >= cum.back()) return pts.back();
  const auto it = std::upper_bound(cum.begin(), cum.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - cum.begin()) - 1;
  const double len = cum[i + 1] - cum[i];
  const double t = len > 0.0 ? (s - cum[i]) / len : 0.0;
  return pts[i] + (pts[i + 1] - pts[i]) * t;
}

/// Arc-length uniform resampling. Both end points are kept; every interior
/// gap equals `spacing` and the final gap is whatever remains.
inline LanePolyline resample(const LanePolyline& lane, double spacing) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw ValidationError("resample spacing must be positive, got " + std::to_string(spacing));
  }
  const std::vector<double> cum = cumulative_arc(lane.points);
  const double total = cum.back();
  LanePolyline out{{}, lane.id};
  const auto n_full = static_cast<std::size_t>(std::floor(total / spacing));
  out.points.reserve(n_full + 2);
  for (std::size_t k = 0; k <= n_full; ++k) {
    const double s = static_cast<double>(k) * spacing;
    if (k > 0 && total - s < 1e-6) break;
    out.points.push_back(point_at_arc(lane.points, cum, s));
  }
  out.points.front() = lane.points.front();
  out.points.push_back(lane.points.back());
  return out;
}

}  // namespace relaychain
