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

// Deterministic synthetic scenes and a noise model that turns clean label
// bundles into imperfect "network predictions".

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "relaychain/encoder.hpp"
#include "relaychain/error.hpp"
#include "relaychain/geometry.hpp"
#include "relaychain/raster.hpp"

namespace relaychain {

enum class SceneKind { kStraight, kQuadratic, kArc, kYShape, kFork, kNearHorizontal, kMixed };

inline std::string_view to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::kStraight: return "straight";
    case SceneKind::kQuadratic: return "quadratic";
    case SceneKind::kArc: return "arc";
    case SceneKind::kYShape: return "y_shape";
    case SceneKind::kFork: return "fork";
    case SceneKind::kNearHorizontal: return "near_horizontal";
    case SceneKind::kMixed: return "mixed";
  }
  return "?";
}

inline SceneKind parse_scene_kind(std::string_view s) {
  for (SceneKind k : {SceneKind::kStraight, SceneKind::kQuadratic, SceneKind::kArc,
                      SceneKind::kYShape, SceneKind::kFork, SceneKind::kNearHorizontal,
                      SceneKind::kMixed}) {
    if (to_string(k) == s) return k;
  }
  throw ValidationError("unknown scene kind '" + std::string(s) + "'");
}

struct SceneSpec {
  SceneKind kind = SceneKind::kStraight;
  int lane_count = 3;
  GridDims dims{80, 200};
  double curvature_min = 0.002;  // 1/px
  double curvature_max = 0.008;
  double stem_fraction = 0.55;  // y_shape / fork only
  double limb_angle_min_deg = 60.0;  // angle between the two limbs
  double limb_angle_max_deg = 90.0;
  std::uint64_t seed = 0;

  void validate() const {
    validate_dims(dims);
    if (lane_count < 1) throw ValidationError("scene needs at least one lane");
    if ((kind == SceneKind::kYShape || kind == SceneKind::kFork) && lane_count != 2) {
      throw ValidationError("y_shape and fork scenes have exactly two lanes");
    }
    if (!(stem_fraction > 0.0 && stem_fraction < 1.0)) {
      throw ValidationError("stem fraction must lie in (0, 1)");
    }
    if (!(limb_angle_min_deg > 0.0 && limb_angle_max_deg >= limb_angle_min_deg &&
          limb_angle_max_deg <= 120.0)) {
      throw ValidationError("limb angle range must satisfy 0 < min <= max <= 120 degrees");
    }
    if (!(curvature_min >= 0.0 && curvature_max >= curvature_min)) {
      throw ValidationError("curvature range must satisfy 0 <= min <= max");
    }
  }
};

struct NoiseSpec {
  double transfer_sigma = 0.0;
  double dist_sigma = 0.0;
  double seg_dropout = 0.0;
  int seg_blur_radius = 0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(transfer_sigma >= 0.0) || !(dist_sigma >= 0.0) || seg_blur_radius < 0) {
      throw ValidationError("noise magnitudes must be non-negative");
    }
    if (!(seg_dropout >= 0.0 && seg_dropout < 1.0)) {
      throw ValidationError("seg_dropout must lie in [0, 1)");
    }
  }

  bool is_zero() const {
    return transfer_sigma == 0.0 && dist_sigma == 0.0 && seg_dropout == 0.0 && seg_blur_radius == 0;
  }
};

inline constexpr double kMinLaneSeparation = 20.0;
inline constexpr double kSceneMargin = 2.0;
inline constexpr double kScenePointSpacing = 2.0;

namespace detail {

inline double min_distance_between(const LanePolyline& a, const LanePolyline& b) {
  double best = std::numeric_limits<double>::infinity();
  for (Point2 p : a.points) best = std::min(best, distance_to_chain(p, b.points));
  for (Point2 p : b.points) best = std::min(best, distance_to_chain(p, a.points));
  return best;
}

inline bool inside_margin(const LanePolyline& lane, GridDims dims) {
  const double max_x = dims.width - 1 - kSceneMargin;
  const double max_y = dims.height - 1 - kSceneMargin;
  return std::all_of(lane.points.begin(), lane.points.end(), [&](Point2 p) {
    return p.x >= kSceneMargin && p.x <= max_x && p.y >= kSceneMargin && p.y <= max_y;
  });
}

// Horizontal profile of a roughly vertical lane, as an offset from its
// straight line at height t above the bottom.
struct Bend {
  SceneKind family = SceneKind::kStraight;
  double curvature = 0.0;  // signed
  double operator()(double t) const {
    switch (family) {
      case SceneKind::kQuadratic: return 0.5 * curvature * t * t;
      case SceneKind::kArc: {
        if (curvature == 0.0) return 0.0;
        const double r = 1.0 / std::abs(curvature);
        return std::copysign(r - std::sqrt(std::max(0.0, r * r - t * t)), curvature);
      }
      default: return 0.0;
    }
  }
};

class SceneBuilder {
 public:
  explicit SceneBuilder(const SceneSpec& spec) : spec_(spec), rng_(spec.seed) {}

  std::vector<LanePolyline> build() {
    switch (spec_.kind) {
      case SceneKind::kYShape:
      case SceneKind::kFork: return build_branching();
      case SceneKind::kNearHorizontal: return retry([&] { return near_horizontal(); });
      default: return retry([&] { return vertical_family(); });
    }
  }

 private:
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool coin() { return std::bernoulli_distribution(0.5)(rng_); }

  template <typename Fn>
  std::vector<LanePolyline> retry(Fn&& attempt) {
    for (int i = 0; i < 500; ++i) {
      if (auto lanes = attempt(); accepted(lanes)) return lanes;
    }
    throw ValidationError("could not place " + std::to_string(spec_.lane_count) + " " +
                          std::string(to_string(spec_.kind)) + " lanes " +
                          std::to_string(static_cast<int>(kMinLaneSeparation)) +
                          " px apart in the grid");
  }

  bool accepted(const std::vector<LanePolyline>& lanes) const {
    if (static_cast<int>(lanes.size()) != spec_.lane_count) return false;
    for (std::size_t i = 0; i < lanes.size(); ++i) {
      if (!inside_margin(lanes[i], spec_.dims)) return false;
      for (std::size_t j = 0; j < i; ++j) {
        if (min_distance_between(lanes[i], lanes[j]) < kMinLaneSeparation) return false;
      }
    }
    return true;
  }

  void check_capacity(double span) const {
    const double usable = span - 1 - 2 * kSceneMargin;
    if ((spec_.lane_count - 1) * kMinLaneSeparation > usable) {
      throw ValidationError("infeasible scene: " + std::to_string(spec_.lane_count) +
                            " lanes cannot be " + std::to_string(static_cast<int>(kMinLaneSeparation)) +
                            " px apart within " + std::to_string(static_cast<int>(span)) + " px");
    }
  }

  Bend draw_bend(SceneKind family) {
    if (family == SceneKind::kMixed) {
      const SceneKind options[] = {SceneKind::kStraight, SceneKind::kQuadratic, SceneKind::kArc};
      family = options[std::uniform_int_distribution<int>(0, 2)(rng_)];
    }
    if (family == SceneKind::kStraight) return {};
    const double k = uniform(spec_.curvature_min, spec_.curvature_max);
    return {family, coin() ? k : -k};
  }

  std::vector<LanePolyline> vertical_family() {
    const GridDims dims = spec_.dims;
    check_capacity(dims.width);
    const double y_bottom = dims.height - 1 - kSceneMargin - 0.5;
    const double y_top = kSceneMargin + uniform(0.5, 0.15 * dims.height);
    const double height = y_bottom - y_top;
    const int n = std::max(2, static_cast<int>(std::floor(height / kScenePointSpacing)) + 1);
    const double spacing = std::max(kMinLaneSeparation + 4.0,
                                    uniform(26.0, 42.0));
    const double band = spacing * (spec_.lane_count - 1);
    const double x_first = uniform(kSceneMargin + 4.0, std::max(kSceneMargin + 4.0,
                                                                 dims.width - 1 - kSceneMargin - 4.0 - band));
    const Bend shared = spec_.kind == SceneKind::kMixed ? Bend{} : draw_bend(spec_.kind);
    const double base_slope = uniform(-0.25, 0.25);

    std::vector<LanePolyline> lanes;
    for (int i = 0; i < spec_.lane_count; ++i) {
      const Bend bend = spec_.kind == SceneKind::kMixed ? draw_bend(SceneKind::kMixed) : shared;
      const double x0 = x_first + spacing * i + uniform(-2.0, 2.0);
      const double slope = base_slope + uniform(-0.05, 0.05);
      LanePolyline lane{{}, std::to_string(i)};
      for (int k = 0; k < n; ++k) {
        const double t = height * k / (n - 1);
        lane.points.push_back({x0 + slope * t + bend(t), y_bottom - t});
      }
      lanes.push_back(std::move(lane));
    }
    return lanes;
  }

  std::vector<LanePolyline> near_horizontal() {
    const GridDims dims = spec_.dims;
    check_capacity(dims.height);
    const double x_left = kSceneMargin + uniform(0.0, 0.12 * dims.width);
    const double x_right = dims.width - 1 - kSceneMargin - uniform(0.0, 0.12 * dims.width);
    const double run = x_right - x_left;
    const double tilt = (coin() ? 1.0 : -1.0) * uniform(0.02, 0.12);
    const double drop = std::abs(tilt) * run;
    const double usable = dims.height - 1 - 2 * kSceneMargin - drop;
    const double spacing = kMinLaneSeparation + uniform(2.0, 6.0);
    const double band = spacing * (spec_.lane_count - 1);
    if (band > usable) return {};
    const double y_first = kSceneMargin + (tilt < 0 ? drop : 0.0) + uniform(0.0, usable - band);
    const int n = std::max(2, static_cast<int>(std::floor(run / kScenePointSpacing)) + 1);
    std::vector<LanePolyline> lanes;
    for (int i = 0; i < spec_.lane_count; ++i) {
      const double y0 = y_first + spacing * i;
      const double lane_tilt = tilt + uniform(-0.005, 0.005);
      LanePolyline lane{{}, std::to_string(i)};
      for (int k = 0; k < n; ++k) {
        const double dx = run * k / (n - 1);
        lane.points.push_back({x_left + dx, y0 + lane_tilt * dx});
      }
      lanes.push_back(oriented(std::move(lane)));
    }
    return lanes;
  }

  // Two lanes with a bit-identical stem prefix. y_shape splits the stem into
  // two limbs symmetric about it; fork keeps one limb on the stem heading.
  std::vector<LanePolyline> build_branching() {
    const GridDims dims = spec_.dims;
    for (int attempt = 0; attempt < 500; ++attempt) {
      const double y_bottom = dims.height - 1 - kSceneMargin - 0.5;
      const double y_top = kSceneMargin + uniform(0.5, 0.08 * dims.height);
      const int n = static_cast<int>(std::floor((y_bottom - y_top) / kScenePointSpacing)) + 1;
      const int stem_points = static_cast<int>(std::ceil(spec_.stem_fraction * n));
      if (stem_points < 2 || stem_points >= n) {
        throw ValidationError("stem fraction leaves no stem or no limbs at this grid height");
      }
      const double heading = uniform(-0.2, 0.2);  // radians from straight up
      const double deg = std::numbers::pi / 180.0;
      double limb_a = 0.0;
      double limb_b = 0.0;
      if (spec_.kind == SceneKind::kYShape) {
        const double half = 0.5 * uniform(spec_.limb_angle_min_deg, spec_.limb_angle_max_deg) * deg;
        limb_a = heading - half;
        limb_b = heading + half;
      } else {
        // The turned limb must keep climbing, so steep turns go against the
        // heading and are capped at 80 degrees off vertical.
        const double turn = (coin() ? 1.0 : -1.0) *
                            uniform(spec_.limb_angle_min_deg, spec_.limb_angle_max_deg) * deg;
        limb_a = heading;
        limb_b = std::abs(heading + turn) < 80.0 * deg ? heading + turn : heading - turn;
        limb_b = std::clamp(limb_b, -80.0 * deg, 80.0 * deg);
      }
      const double x0 = uniform(0.3 * dims.width, 0.7 * dims.width);
      const auto step = [&](double angle) {
        return Point2{std::sin(angle), -std::cos(angle)} * kScenePointSpacing;
      };
      std::vector<Point2> stem;
      for (int k = 0; k < stem_points; ++k) {
        stem.push_back(Point2{x0, y_bottom} + step(heading) * static_cast<double>(k));
      }
      std::vector<LanePolyline> lanes;
      for (double angle : {limb_a, limb_b}) {
        LanePolyline lane{stem, std::to_string(lanes.size())};
        for (int k = stem_points; k < n; ++k) {
          lane.points.push_back(stem.back() + step(angle) * static_cast<double>(k - stem_points + 1));
        }
        lanes.push_back(std::move(lane));
      }
      if (inside_margin(lanes[0], dims) && inside_margin(lanes[1], dims)) return lanes;
    }
    throw ValidationError("could not place a branching lane pair in the grid");
  }

  SceneSpec spec_;
  std::mt19937_64 rng_;
};

}  // namespace detail

/// Lanes for a scene, ordered with points[0] at the backward end.
inline std::vector<LanePolyline> gen_scene(const SceneSpec& spec) {
  spec.validate();
  return detail::SceneBuilder(spec).build();
}

/// Seeded corruption of a clean bundle: Gaussian noise on transfer and
/// distance maps at foreground pixels, random foreground dropout and a box
/// blur on the segmentation. A zero spec returns the bundle unchanged.
inline LabelBundle perturb_bundle(const LabelBundle& bundle, const NoiseSpec& noise) {
  noise.validate();
  bundle.validate();
  LabelBundle out = bundle;
  if (noise.is_zero()) return out;
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution drop(noise.seg_dropout);
  const GridDims dims = bundle.dims();
  for (int row = 0; row < dims.height; ++row) {
    for (int col = 0; col < dims.width; ++col) {
      if (bundle.seg.at(row, col) <= 0.5f) continue;
      for (RasterMap* t : {&out.transfer_f, &out.transfer_b}) {
        for (int ch = 0; ch < 2; ++ch) {
          t->at(row, col, ch) += static_cast<float>(noise.transfer_sigma * gauss(rng));
        }
      }
      for (RasterMap* d : {&out.dist_f, &out.dist_b}) {
        d->at(row, col) += static_cast<float>(noise.dist_sigma * gauss(rng));
      }
      if (noise.seg_dropout > 0.0 && drop(rng)) out.seg.at(row, col) = 0.0f;
    }
  }
  if (noise.seg_blur_radius > 0) {
    const int r = noise.seg_blur_radius;
    const RasterMap src = out.seg;
    for (int row = 0; row < dims.height; ++row) {
      for (int col = 0; col < dims.width; ++col) {
        double sum = 0.0;
        int count = 0;
        for (int rr = std::max(0, row - r); rr <= std::min(dims.height - 1, row + r); ++rr) {
          for (int cc = std::max(0, col - r); cc <= std::min(dims.width - 1, col + r); ++cc) {
            sum += src.at(rr, cc);
            ++count;
          }
        }
        out.seg.at(row, col) = static_cast<float>(sum / count);
      }
    }
  }
  return out;
}

}  // namespace relaychain
