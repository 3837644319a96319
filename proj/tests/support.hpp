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

// Test-only generators and reference implementations. Nothing here calls
// into the library code it is used to check.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "relaychain/geometry.hpp"
#include "relaychain/raster.hpp"

namespace rctest {

using relaychain::GridDims;
using relaychain::LanePolyline;
using relaychain::Point2;
using relaychain::RasterMap;

// splitmix64 stream; small and reproducible across standard libraries.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  bool coin(double p = 0.5) { return unit() < p; }

  Point2 point(double w, double h) { return {uniform(0.0, w), uniform(0.0, h)}; }

  RasterMap map(GridDims dims, int channels, double lo, double hi) {
    RasterMap m(dims, channels);
    for (int r = 0; r < dims.height; ++r) {
      for (int c = 0; c < dims.width; ++c) {
        for (int ch = 0; ch < channels; ++ch) m.at(r, c, ch) = static_cast<float>(uniform(lo, hi));
      }
    }
    return m;
  }

  // Random polyline with n distinct vertices inside [0,w]x[0,h].
  LanePolyline polyline(int n, double w, double h, std::string id = "0") {
    LanePolyline lane{{}, std::move(id)};
    while (static_cast<int>(lane.points.size()) < n) {
      const Point2 p = point(w, h);
      if (lane.points.empty() || !(lane.points.back() == p)) lane.points.push_back(p);
    }
    return lane;
  }

 private:
  std::uint64_t state_;
};

inline LanePolyline vertical_lane(double x, double y_top, double y_bottom, double spacing = 1.0,
                                  std::string id = "0") {
  LanePolyline lane{{}, std::move(id)};
  for (double y = y_bottom; y > y_top - 1e-9; y -= spacing) lane.points.push_back({x, y});
  if (lane.points.back().y != y_top) lane.points.push_back({x, y_top});
  return lane;
}

// Euclidean distance from p to segment [a, b], written out independently.
inline double seg_distance(Point2 p, Point2 a, Point2 b) {
  const double ux = b.x - a.x;
  const double uy = b.y - a.y;
  const double l2 = ux * ux + uy * uy;
  double t = 0.0;
  if (l2 > 0.0) t = std::max(0.0, std::min(1.0, ((p.x - a.x) * ux + (p.y - a.y) * uy) / l2));
  const double dx = p.x - (a.x + t * ux);
  const double dy = p.y - (a.y + t * uy);
  return std::sqrt(dx * dx + dy * dy);
}

inline double chain_distance(Point2 p, const std::vector<Point2>& pts) {
  if (pts.size() == 1) return std::hypot(p.x - pts[0].x, p.y - pts[0].y);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) best = std::min(best, seg_distance(p, pts[i], pts[i + 1]));
  return best;
}

// Per-pixel stripe mask: pixel centers within `radius` of the chain.
inline std::vector<char> brute_stripe(const std::vector<Point2>& pts, double radius, GridDims dims) {
  std::vector<char> mask(static_cast<std::size_t>(dims.height) * dims.width, 0);
  for (int r = 0; r < dims.height; ++r) {
    for (int c = 0; c < dims.width; ++c) {
      const Point2 p{static_cast<double>(c), static_cast<double>(r)};
      mask[static_cast<std::size_t>(r) * dims.width + c] = chain_distance(p, pts) <= radius;
    }
  }
  return mask;
}

inline double brute_iou(const std::vector<Point2>& a, const std::vector<Point2>& b, double eta,
                        GridDims dims) {
  const auto ma = brute_stripe(a, eta / 2.0, dims);
  const auto mb = brute_stripe(b, eta / 2.0, dims);
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < ma.size(); ++i) {
    inter += ma[i] && mb[i];
    uni += ma[i] || mb[i];
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Maximum matching cardinality (then total IoU) by trying every injective
// assignment of the smaller side.
struct ExhaustiveMatch {
  std::size_t count = 0;
  double total = 0.0;
};

inline ExhaustiveMatch exhaustive_match(const std::vector<std::vector<double>>& iou, double thr) {
  const std::size_t n = iou.size();
  const std::size_t m = n == 0 ? 0 : iou[0].size();
  ExhaustiveMatch best;
  std::vector<char> used(m, 0);
  const auto rec = [&](auto&& self, std::size_t i, std::size_t count, double total) -> void {
    if (i == n) {
      if (count > best.count || (count == best.count && total > best.total + 1e-12)) {
        best = {count, total};
      }
      return;
    }
    self(self, i + 1, count, total);  // row i unmatched
    for (std::size_t j = 0; j < m; ++j) {
      if (used[j] || iou[i][j] < thr) continue;
      used[j] = 1;
      self(self, i + 1, count + 1, total + iou[i][j]);
      used[j] = 0;
    }
  };
  rec(rec, 0, 0, 0.0);
  return best;
}

}  // namespace rctest
