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

// CULane-style lane F1: prediction/ground-truth pairs are feasible when their
// stripe IoU reaches the threshold; the matching is an optimal assignment
// (maximum cardinality, then maximum total IoU), not a greedy one.

#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "relaychain/decoder.hpp"
#include "relaychain/error.hpp"
#include "relaychain/geometry.hpp"
#include "relaychain/raster.hpp"

namespace relaychain {

namespace detail {

// Hungarian method (shortest augmenting path with potentials) for a
// rows <= cols cost matrix. Returns, for each row, its assigned column.
inline std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  if (n == 0) return {};
  const int m = static_cast<int>(cost[0].size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assign(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) assign[p[j] - 1] = j - 1;
  }
  return assign;
}

}  // namespace detail

struct LaneMatching {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (pred, gt)
  double total_iou = 0.0;
};

/// Optimal one-to-one matching over an IoU matrix (iou[pred][gt]). Only pairs
/// with IoU >= threshold may match; cardinality is maximized first and total
/// IoU second.
inline LaneMatching match_iou_matrix(const std::vector<std::vector<double>>& iou,
                                     double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw ValidationError("IoU threshold must lie in (0, 1)");
  }
  LaneMatching out;
  const std::size_t n_pred = iou.size();
  const std::size_t n_gt = n_pred == 0 ? 0 : iou[0].size();
  if (n_pred == 0 || n_gt == 0) return out;

  // Each feasible pair is worth (bonus + IoU) with bonus > the largest
  // possible total IoU, so one more match always beats any IoU gain.
  const bool transpose = n_pred > n_gt;
  const std::size_t rows = transpose ? n_gt : n_pred;
  const std::size_t cols = transpose ? n_pred : n_gt;
  const double bonus = static_cast<double>(rows) + 1.0;
  std::vector<std::vector<double>> cost(rows, std::vector<double>(cols, 0.0));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = transpose ? iou[c][r] : iou[r][c];
      if (v >= iou_threshold) cost[r][c] = -(bonus + v);
    }
  }
  const std::vector<int> assign = detail::min_cost_assignment(cost);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto c = static_cast<std::size_t>(assign[r]);
    const double v = transpose ? iou[c][r] : iou[r][c];
    if (v < iou_threshold) continue;
    out.pairs.emplace_back(transpose ? c : r, transpose ? r : c);
    out.total_iou += v;
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

template <typename Curve>
inline std::span<const Point2> curve_points(const Curve& c) {
  return c.points;
}

/// Stripe-IoU matrix between any two curve collections (anything with a
/// `points` member).
template <typename PredCurve, typename GtCurve>
std::vector<std::vector<double>> iou_matrix(std::span<const PredCurve> pred,
                                            std::span<const GtCurve> gt, double eta,
                                            GridDims dims) {
  validate_dims(dims);
  std::vector<StripeMask> gt_masks;
  std::vector<std::size_t> gt_counts;
  gt_masks.reserve(gt.size());
  for (const auto& g : gt) {
    gt_masks.push_back(stripe_mask(curve_points(g), eta / 2.0, dims));
    gt_counts.push_back(gt_masks.back().count());
  }
  std::vector<std::vector<double>> out(pred.size(), std::vector<double>(gt.size(), 0.0));
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const StripeMask pm = stripe_mask(curve_points(pred[i]), eta / 2.0, dims);
    const std::size_t pc = pm.count();
    for (std::size_t j = 0; j < gt.size(); ++j) {
      const std::size_t inter = pm.intersection_count(gt_masks[j]);
      const std::size_t uni = pc + gt_counts[j] - inter;
      out[i][j] = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
  }
  return out;
}

template <typename PredCurve, typename GtCurve>
LaneMatching match_lanes(std::span<const PredCurve> pred, std::span<const GtCurve> gt, double eta,
                         double iou_threshold, GridDims dims) {
  return match_iou_matrix(iou_matrix(pred, gt, eta, dims), iou_threshold);
}

struct SceneCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  friend bool operator==(const SceneCounts&, const SceneCounts&) = default;
};

struct EvalReport {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<SceneCounts> per_scene;

  /// Recomputes precision/recall/F1 from the counts; degenerate ratios are 0.
  void finalize() {
    precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    f1 = precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
  }

  void add(const SceneCounts& s) {
    tp += s.tp;
    fp += s.fp;
    fn += s.fn;
    per_scene.push_back(s);
  }
};

template <typename PredCurve, typename GtCurve>
SceneCounts score_scene(std::span<const PredCurve> pred, std::span<const GtCurve> gt, double eta,
                        double iou_threshold, GridDims dims) {
  const std::size_t tp = match_lanes(pred, gt, eta, iou_threshold, dims).pairs.size();
  return {tp, pred.size() - tp, gt.size() - tp};
}

template <typename PredCurve, typename GtCurve>
struct Scene {
  std::vector<PredCurve> pred;
  std::vector<GtCurve> gt;
};

/// Accumulates counts over scenes in order and derives P/R/F1.
template <typename PredCurve, typename GtCurve>
EvalReport evaluate(std::span<const Scene<PredCurve, GtCurve>> scenes, double eta,
                    double iou_threshold, GridDims dims) {
  if (scenes.empty()) throw ValidationError("evaluate needs at least one scene");
  EvalReport report;
  for (const auto& s : scenes) {
    report.add(score_scene(std::span<const PredCurve>(s.pred), std::span<const GtCurve>(s.gt), eta,
                           iou_threshold, dims));
  }
  report.finalize();
  return report;
}

}  // namespace relaychain
