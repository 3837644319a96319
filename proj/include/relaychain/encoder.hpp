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

// Label encoder: turns ground-truth lanes into the segmentation mask plus
// forward/backward transfer maps (offsets to the chain neighbor at chord
// distance d) and distance maps (chord distance to the lane's end points).

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "relaychain/error.hpp"
#include "relaychain/geometry.hpp"
#include "relaychain/raster.hpp"

namespace relaychain {

struct LabelBundle {
  RasterMap seg;         // 1 channel
  RasterMap transfer_f;  // 2 channels (dx, dy)
  RasterMap transfer_b;  // 2 channels (dx, dy)
  RasterMap dist_f;      // 1 channel
  RasterMap dist_b;      // 1 channel

  GridDims dims() const { return seg.dims(); }

  void validate() const {
    const GridDims d = seg.dims();
    const auto check = [&](const RasterMap& m, int channels, const char* name) {
      if (m.empty() || m.dims() != d || m.channels() != channels) {
        throw ValidationError(std::string("bundle map '") + name +
                              "' is missing or inconsistent with the segmentation grid");
      }
    };
    check(seg, 1, "seg");
    check(transfer_f, 2, "transfer_f");
    check(transfer_b, 2, "transfer_b");
    check(dist_f, 1, "dist_f");
    check(dist_b, 1, "dist_b");
  }

  friend bool operator==(const LabelBundle&, const LabelBundle&) = default;
};

struct EncoderConfig {
  double step_d = 10.0;
  double seg_halfwidth = 7.5;
  GridDims dims{80, 200};
  std::uint64_t stem_choice_seed = 0;

  void validate() const {
    validate_dims(dims);
    if (!(step_d > 0.0)) throw ValidationError("step_d must be positive");
    if (!(seg_halfwidth > 0.0)) throw ValidationError("seg_halfwidth must be positive");
    if (step_d < seg_halfwidth) {
      throw ValidationError("step_d must be at least the segmentation half width");
    }
  }
};

/// Pixel centers within `halfwidth` of any lane.
inline RasterMap rasterize_lanes(std::span<const LanePolyline> lanes, GridDims dims,
                                 double halfwidth) {
  validate_dims(dims);
  StripeMask mask(dims);
  for (const auto& lane : lanes) mask.add_chain(lane.points, halfwidth);
  return mask.to_raster();
}

struct LaneMatch {
  std::size_t lane_index = 0;
  Projection projection;
};

/// Nearest lane to p (lowest index on ties), accepted only when strictly
/// closer than d.
inline std::optional<LaneMatch> nearest_lane(Point2 p, std::span<const LanePolyline> lanes,
                                             double d) {
  std::optional<LaneMatch> best;
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    const Projection proj = project_to_polyline(p, lanes[i]);
    if (!best || proj.distance < best->projection.distance) best = LaneMatch{i, proj};
  }
  if (best && best->projection.distance < d) return best;
  return std::nullopt;
}

inline std::optional<std::size_t> match_point_to_lane(Point2 p, std::span<const LanePolyline> lanes,
                                                      double d) {
  if (!(d > 0.0)) throw ValidationError("match distance must be positive");
  if (auto m = nearest_lane(p, lanes, d)) return m->lane_index;
  return std::nullopt;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Per-lane data the pixel loop needs repeatedly.
struct LaneInfo {
  std::vector<double> cum;
  Endpoints ends;
  bool forward_increasing = true;
  // Lanes sharing a stem prefix with this one resolve stem pixels to
  // `stem_owner`. The stem is the first stem_points vertices (arc stem_arc).
  std::size_t stem_owner = 0;
  std::size_t stem_points = 0;
  double stem_arc = -1.0;
};

inline std::size_t common_prefix(const LanePolyline& a, const LanePolyline& b) {
  std::size_t n = 0;
  while (n < a.points.size() && n < b.points.size() && a.points[n] == b.points[n]) ++n;
  return n;
}

inline std::vector<LaneInfo> lane_infos(std::span<const LanePolyline> lanes, std::uint64_t seed) {
  std::vector<LaneInfo> info(lanes.size());
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    info[i].cum = cumulative_arc(lanes[i].points);
    info[i].ends = endpoints(lanes[i]);
    info[i].forward_increasing = info[i].ends.forward_index > info[i].ends.backward_index;
    info[i].stem_owner = i;
  }
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    std::vector<std::size_t> group;
    std::size_t stem_points = 0;
    for (std::size_t j = 0; j < lanes.size(); ++j) {
      const std::size_t n = common_prefix(lanes[i], lanes[j]);
      if (n < 2) continue;
      group.push_back(j);
      if (j != i) stem_points = stem_points == 0 ? n : std::min(stem_points, n);
    }
    if (group.size() < 2) continue;
    // One draw per stem: every pixel of the stem hands its forward walk to
    // the same limb, keyed by the seed and the group's first lane.
    const std::uint64_t h = splitmix64(seed ^ splitmix64(group.front()));
    info[i].stem_owner = group[h % group.size()];
    info[i].stem_points = stem_points;
    info[i].stem_arc = info[i].cum[stem_points - 1];
  }
  return info;
}

}  // namespace detail

/// Builds the label bundle. Foreground pixels are those within seg_halfwidth
/// of a lane and strictly within step_d of their nearest lane; each carries
/// offsets to its chord neighbors at distance step_d (or a shorter offset to
/// the lane end when the lane stops first) and chord distances to both ends.
/// Background pixels are zero in every map.
inline LabelBundle encode_labels(std::span<const LanePolyline> lanes, const EncoderConfig& config) {
  config.validate();
  std::set<std::string> ids;
  for (const auto& lane : lanes) {
    validate_lane(lane);
    if (!ids.insert(lane.id).second) throw ValidationError("duplicate lane id '" + lane.id + "'");
  }

  const GridDims dims = config.dims;
  LabelBundle out{rasterize_lanes(lanes, dims, config.seg_halfwidth), RasterMap(dims, 2),
                  RasterMap(dims, 2), RasterMap(dims, 1), RasterMap(dims, 1)};
  const std::vector<detail::LaneInfo> info = detail::lane_infos(lanes, config.stem_choice_seed);
  const double d = config.step_d;

  for (int row = 0; row < dims.height; ++row) {
    for (int col = 0; col < dims.width; ++col) {
      if (out.seg.at(row, col) == 0.0f) continue;
      const Point2 p{static_cast<double>(col), static_cast<double>(row)};
      auto match = nearest_lane(p, lanes, d);
      if (!match) {
        out.seg.at(row, col) = 0.0f;
        continue;
      }
      std::size_t li = match->lane_index;
      const detail::LaneInfo& matched = info[li];
      // Stem pixels are the painted stripe of the shared prefix, end cap
      // included, so a walk reaching the junction reads one limb only.
      if (matched.stem_points >= 2 && matched.stem_owner != li &&
          distance_to_chain(p, std::span<const Point2>(lanes[li].points.data(),
                                                       matched.stem_points)) <=
              config.seg_halfwidth) {
        li = matched.stem_owner;
        match->projection = project_to_polyline(p, lanes[li]);
      }
      const LanePolyline& lane = lanes[li];
      const detail::LaneInfo& li_info = info[li];

      out.dist_f.at(row, col) = static_cast<float>(point_distance(p, li_info.ends.forward_end));
      out.dist_b.at(row, col) = static_cast<float>(point_distance(p, li_info.ends.backward_end));

      const auto write_transfer = [&](RasterMap& map, bool increasing) {
        const auto hit = chord_crossing(lane.points, li_info.cum, p, match->projection,
                                        increasing, d);
        const Point2 target =
            hit ? hit->point : (increasing ? lane.points.back() : lane.points.front());
        map.at(row, col, 0) = static_cast<float>(target.x - p.x);
        map.at(row, col, 1) = static_cast<float>(target.y - p.y);
      };
      write_transfer(out.transfer_f, li_info.forward_increasing);
      write_transfer(out.transfer_b, !li_info.forward_increasing);
    }
  }
  return out;
}

}  // namespace relaychain
