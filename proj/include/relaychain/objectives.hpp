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

// Training objectives as plain numerics over maps. Sums run in a fixed
// pixel order so results are bit-stable.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "relaychain/encoder.hpp"
#include "relaychain/error.hpp"
#include "relaychain/raster.hpp"

namespace relaychain {

inline constexpr double kProbabilityClamp = 1e-7;

struct SegLoss {
  double value = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

/// OHEM binary cross-entropy: every ground-truth positive plus the
/// min(mu * N_pos, available) hardest negatives (largest -log(1 - p)),
/// averaged. With no positives the mu hardest negatives are used.
inline SegLoss ohem_seg_loss(const RasterMap& pred, const RasterMap& gt, double mu) {
  if (pred.dims() != gt.dims() || pred.channels() != 1 || gt.channels() != 1) {
    throw ValidationError("ohem_seg_loss: prediction and label maps must be matching 1-channel grids");
  }
  if (!(mu >= 0.0)) throw ValidationError("ohem_seg_loss: mu must be non-negative");
  const auto p_values = pred.values();
  const auto y_values = gt.values();

  double pos_sum = 0.0;
  std::size_t n_pos = 0;
  std::vector<double> neg_losses;
  for (std::size_t i = 0; i < p_values.size(); ++i) {
    const double p = std::clamp<double>(p_values[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    if (y_values[i] > 0.5f) {
      pos_sum += -std::log(p);
      ++n_pos;
    } else {
      neg_losses.push_back(-std::log(1.0 - p));
    }
  }
  const double quota = mu * static_cast<double>(std::max<std::size_t>(n_pos, 1));
  const std::size_t n_neg =
      std::min(neg_losses.size(), static_cast<std::size_t>(std::floor(quota)));
  // Hardest first; ties do not matter for the value since equal losses are
  // interchangeable.
  std::partial_sort(neg_losses.begin(), neg_losses.begin() + static_cast<std::ptrdiff_t>(n_neg),
                    neg_losses.end(), std::greater<>());
  double neg_sum = 0.0;
  for (std::size_t i = 0; i < n_neg; ++i) neg_sum += neg_losses[i];
  const std::size_t n = n_pos + n_neg;
  return {n == 0 ? 0.0 : (pos_sum + neg_sum) / static_cast<double>(n), n_pos, n_neg};
}

inline double smooth_l1(double x) {
  const double a = std::abs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

struct RegressionLoss {
  double value = 0.0;
  std::size_t n_pos = 0;
  bool empty_positive_set = false;
};

/// One (prediction, target) map pair contributing to a pooled regression loss.
struct MapPair {
  const RasterMap* pred;
  const RasterMap* gt;
};

/// Smooth-L1 (knee at 1) summed over channels and over every map pair,
/// averaged over the positive pixels of `pos_mask`.
inline RegressionLoss pooled_regression_loss(std::span<const MapPair> pairs,
                                             const RasterMap& pos_mask) {
  for (const auto& [pred, gt] : pairs) {
    if (pred->dims() != gt->dims() || pred->channels() != gt->channels() ||
        pred->dims() != pos_mask.dims()) {
      throw ValidationError("map_regression_loss: prediction, target and mask grids differ");
    }
  }
  RegressionLoss out;
  double total = 0.0;
  for (int row = 0; row < pos_mask.height(); ++row) {
    for (int col = 0; col < pos_mask.width(); ++col) {
      if (pos_mask.at(row, col) <= 0.5f) continue;
      ++out.n_pos;
      for (const auto& [pred, gt] : pairs) {
        for (int ch = 0; ch < pred->channels(); ++ch) {
          total += smooth_l1(static_cast<double>(pred->at(row, col, ch)) - gt->at(row, col, ch));
        }
      }
    }
  }
  out.empty_positive_set = out.n_pos == 0;
  out.value = out.empty_positive_set ? 0.0 : total / static_cast<double>(out.n_pos);
  return out;
}

inline RegressionLoss map_regression_loss(const RasterMap& pred, const RasterMap& gt,
                                          const RasterMap& pos_mask) {
  const MapPair pair{&pred, &gt};
  return pooled_regression_loss(std::span<const MapPair>(&pair, 1), pos_mask);
}

struct LossBreakdown {
  double l_seg = 0.0;
  double l_t = 0.0;
  double l_d = 0.0;
  double l_total = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

/// L_total = L_seg + L_T + L_D. The positive set is the label segmentation.
inline LossBreakdown total_loss(const LabelBundle& pred, const LabelBundle& gt, double mu) {
  pred.validate();
  gt.validate();
  if (pred.dims() != gt.dims()) throw ValidationError("total_loss: bundle grids differ");
  const SegLoss seg = ohem_seg_loss(pred.seg, gt.seg, mu);
  const MapPair transfer[] = {{&pred.transfer_f, &gt.transfer_f}, {&pred.transfer_b, &gt.transfer_b}};
  const MapPair dist[] = {{&pred.dist_f, &gt.dist_f}, {&pred.dist_b, &gt.dist_b}};
  LossBreakdown out;
  out.l_seg = seg.value;
  out.l_t = pooled_regression_loss(transfer, gt.seg).value;
  out.l_d = pooled_regression_loss(dist, gt.seg).value;
  out.l_total = out.l_seg + out.l_t + out.l_d;
  out.n_pos = seg.n_pos;
  out.n_neg = seg.n_neg;
  return out;
}

}  // namespace relaychain
