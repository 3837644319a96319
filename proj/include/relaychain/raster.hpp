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

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "relaychain/error.hpp"
#include "relaychain/geometry.hpp"

namespace relaychain {

struct GridDims {
  int height = 80;
  int width = 200;

  friend bool operator==(const GridDims&, const GridDims&) = default;
};

inline void validate_dims(GridDims dims) {
  if (dims.height <= 0 || dims.width <= 0) {
    throw ValidationError("grid dims must be positive, got " + std::to_string(dims.height) + "x" +
                          std::to_string(dims.width));
  }
}

/// Row-major, channel-interleaved float32 grid. Pixel (row, col) has its
/// center at continuous coordinates (x = col, y = row).
class RasterMap {
 public:
  RasterMap() = default;

  RasterMap(GridDims dims, int channels, float fill = 0.0f)
      : dims_(dims), channels_(channels) {
    validate_dims(dims);
    if (channels != 1 && channels != 2) {
      throw ValidationError("raster channels must be 1 or 2, got " + std::to_string(channels));
    }
    data_.assign(static_cast<std::size_t>(dims.height) * dims.width * channels, fill);
  }

  RasterMap(GridDims dims, int channels, std::vector<float> data)
      : RasterMap(dims, channels) {
    if (data.size() != data_.size()) {
      throw ValidationError("raster payload has " + std::to_string(data.size()) +
                            " values, expected " + std::to_string(data_.size()));
    }
    data_ = std::move(data);
  }

  GridDims dims() const { return dims_; }
  int height() const { return dims_.height; }
  int width() const { return dims_.width; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  float& at(int row, int col, int ch = 0) { return data_[index(row, col, ch)]; }
  float at(int row, int col, int ch = 0) const { return data_[index(row, col, ch)]; }

  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }

  bool contains(int row, int col) const {
    return row >= 0 && row < dims_.height && col >= 0 && col < dims_.width;
  }

  friend bool operator==(const RasterMap&, const RasterMap&) = default;

 private:
  std::size_t index(int row, int col, int ch) const {
    return (static_cast<std::size_t>(row) * dims_.width + col) * channels_ + ch;
  }

  GridDims dims_{0, 0};
  int channels_ = 0;
  std::vector<float> data_;
};

/// Binary mask of the pixel centers lying within `radius` of a point chain.
/// Rows are bitsets, so union/intersection counts are word-wise popcounts.
class StripeMask {
 public:
  explicit StripeMask(GridDims dims)
      : dims_(dims),
        words_((dims.width + 63) / 64),
        bits_(static_cast<std::size_t>(dims.height) * words_, 0) {}

  GridDims dims() const { return dims_; }

  /// Marks every pixel center within `radius` of the closed segment [a, b].
  void add_capsule(Point2 a, Point2 b, double radius) {
    const Capsule cap(a, b, radius);
    const int r0 = std::max(0, static_cast<int>(std::ceil(std::min(a.y, b.y) - radius)));
    const int r1 =
        std::min(dims_.height - 1, static_cast<int>(std::floor(std::max(a.y, b.y) + radius)));
    for (int row = r0; row <= r1; ++row) {
      int lo = 0;
      int hi = 0;
      if (cap.span(row, dims_.width, lo, hi)) set_span(row, lo, hi);
    }
  }

  /// A single point is rasterized as a disk.
  void add_chain(std::span<const Point2> pts, double radius) {
    if (pts.empty()) return;
    if (pts.size() == 1) {
      add_capsule(pts[0], pts[0], radius);
      return;
    }
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) add_capsule(pts[i], pts[i + 1], radius);
  }

  bool test(int row, int col) const {
    return (bits_[static_cast<std::size_t>(row) * words_ + col / 64] >> (col % 64)) & 1U;
  }

  std::size_t count() const {
    if (row_lo_ > row_hi_) return 0;
    std::size_t n = 0;
    for (std::size_t i = word_begin(row_lo_); i < word_begin(row_hi_ + 1); ++i) {
      n += static_cast<std::size_t>(std::popcount(bits_[i]));
    }
    return n;
  }

  std::size_t intersection_count(const StripeMask& other) const {
    const int lo = std::max(row_lo_, other.row_lo_);
    const int hi = std::min(row_hi_, other.row_hi_);
    if (lo > hi) return 0;
    std::size_t n = 0;
    for (std::size_t i = word_begin(lo); i < word_begin(hi + 1); ++i) {
      n += static_cast<std::size_t>(std::popcount(bits_[i] & other.bits_[i]));
    }
    return n;
  }

  void merge(const StripeMask& other) {
    for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
    row_lo_ = std::min(row_lo_, other.row_lo_);
    row_hi_ = std::max(row_hi_, other.row_hi_);
  }

  RasterMap to_raster() const {
    RasterMap out(dims_, 1);
    for (int row = 0; row < dims_.height; ++row) {
      for (int col = 0; col < dims_.width; ++col) {
        if (test(row, col)) out.at(row, col) = 1.0f;
      }
    }
    return out;
  }

 private:
  std::size_t word_begin(int row) const { return static_cast<std::size_t>(row) * words_; }

  // Pixel centers within `radius` of segment [a, b]. Row spans come from the
  // closed-form interval and are then settled with the exact membership
  // test, so the mask matches a per-pixel scan.
  class Capsule {
   public:
    Capsule(Point2 a, Point2 b, double radius)
        : a_(a), b_(b), u_(b - a), len2_(dot(u_, u_)), r_(radius), r2_(radius * radius) {
      inv_len2_ = len2_ > 0.0 ? 1.0 / len2_ : 0.0;
      const double len = std::sqrt(len2_);
      band_ = len > 0.0;
      r_len_ = radius * len;
    }

    bool inside(int row, int col) const {
      const Point2 w{col - a_.x, row - a_.y};
      const double t = std::clamp(dot(w, u_) * inv_len2_, 0.0, 1.0);
      const Point2 e = w - u_ * t;
      return dot(e, e) <= r2_;
    }

    bool span(int row, int width, int& lo, int& hi) const {
      const double y = row;
      double xl = std::numeric_limits<double>::infinity();
      double xr = -xl;
      for (Point2 c : {a_, b_}) {
        const double dy = y - c.y;
        if (std::abs(dy) <= r_) {
          const double h = std::sqrt(r2_ - dy * dy);
          xl = std::min(xl, c.x - h);
          xr = std::max(xr, c.x + h);
        }
      }
      if (band_) {
        // 0 <= (x - a.x) u.x + (y - a.y) u.y <= |u|^2 and
        // |(x - a.x) u.y - (y - a.y) u.x| <= r |u|.
        double l = -std::numeric_limits<double>::infinity();
        double r = -l;
        bool empty = false;
        const auto clip = [&](double coef, double offset, double lo_v, double hi_v) {
          if (coef == 0.0) {
            empty = empty || offset < lo_v || offset > hi_v;
            return;
          }
          double p = (lo_v - offset) / coef;
          double q = (hi_v - offset) / coef;
          if (p > q) std::swap(p, q);
          l = std::max(l, p);
          r = std::min(r, q);
        };
        const double dy = y - a_.y;
        clip(u_.x, -a_.x * u_.x + dy * u_.y, 0.0, len2_);
        clip(u_.y, -a_.x * u_.y - dy * u_.x, -r_len_, r_len_);
        if (!empty && l <= r) {
          xl = std::min(xl, l);
          xr = std::max(xr, r);
        }
      }
      if (!(xl <= xr)) {
        // Rounding can hide a span that only touches the boundary; probe the
        // columns around the segment point closest to this row.
        const double t = u_.y != 0.0 ? std::clamp((y - a_.y) / u_.y, 0.0, 1.0) : 0.0;
        xl = xr = a_.x + t * u_.x;
      }
      int c0 = std::clamp(static_cast<int>(std::ceil(xl)), 0, width - 1);
      int c1 = std::clamp(static_cast<int>(std::floor(xr)), 0, width - 1);
      if (c0 > c1) std::swap(c0, c1);
      if (inside(row, c0)) {
        while (c0 > 0 && inside(row, c0 - 1)) --c0;
      } else {
        while (c0 < c1 && !inside(row, c0 + 1)) ++c0;
        if (++c0 > c1 || !inside(row, c0)) {
          return probe_outward(row, width, c0, c1, lo, hi);
        }
      }
      if (inside(row, c1)) {
        while (c1 < width - 1 && inside(row, c1 + 1)) ++c1;
      } else {
        while (c1 > c0 && !inside(row, c1)) --c1;
      }
      lo = c0;
      hi = c1;
      return true;
    }

   private:
    // The guessed window held no member; look one column beyond each side.
    bool probe_outward(int row, int width, int c0, int c1, int& lo, int& hi) const {
      for (int c : {c0 - 2, c0 - 1, c1 + 1, c1 + 2}) {
        if (c < 0 || c >= width || !inside(row, c)) continue;
        lo = hi = c;
        while (lo > 0 && inside(row, lo - 1)) --lo;
        while (hi < width - 1 && inside(row, hi + 1)) ++hi;
        return true;
      }
      return false;
    }

    Point2 a_;
    Point2 b_;
    Point2 u_;
    double len2_;
    double r_;
    double r2_;
    double inv_len2_ = 0.0;
    double r_len_ = 0.0;
    bool band_ = false;
  };

  void set_span(int row, int lo, int hi) {
    std::uint64_t* w = &bits_[word_begin(row)];
    for (int wi = lo / 64; wi <= hi / 64; ++wi) {
      const int b0 = std::max(lo, wi * 64) - wi * 64;
      const int b1 = std::min(hi, wi * 64 + 63) - wi * 64;
      const std::uint64_t span_bits =
          (b1 == 63 ? ~std::uint64_t{0} : ((std::uint64_t{1} << (b1 + 1)) - 1)) &
          ~((std::uint64_t{1} << b0) - 1);
      w[wi] |= span_bits;
    }
    row_lo_ = std::min(row_lo_, row);
    row_hi_ = std::max(row_hi_, row);
  }

  GridDims dims_;
  int words_;
  std::vector<std::uint64_t> bits_;
  int row_lo_ = std::numeric_limits<int>::max();
  int row_hi_ = std::numeric_limits<int>::min();
};

inline StripeMask stripe_mask(std::span<const Point2> pts, double radius, GridDims dims) {
  StripeMask m(dims);
  m.add_chain(pts, radius);
  return m;
}

}  // namespace relaychain
