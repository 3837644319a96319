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

// File formats.
//
// RCLM raster (all integers little-endian):
//
//   offset  size  field
//        0     4  magic "RCLM"
//        4     1  version (1)
//        5     1  channels (1 or 2)
//        6     4  height (u32)
//       10     4  width (u32)
//       14   4*N  payload, N = height*width*channels IEEE-754 float32,
//                 row-major, channel-interleaved
//
// Lanes JSON:
//
//   {"schema_version": 1,
//    "image": {"height": 80, "width": 200},
//    "lanes": [{"id": "0", "points": [[x, y], ...], "score": 0.97}, ...]}
//
// "score" is optional per lane.

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "relaychain/encoder.hpp"
#include "relaychain/error.hpp"
#include "relaychain/geometry.hpp"
#include "relaychain/raster.hpp"

namespace relaychain {

inline constexpr std::array<char, 4> kRclmMagic{'R', 'C', 'L', 'M'};
inline constexpr std::uint8_t kRclmVersion = 1;
inline constexpr std::size_t kRclmHeaderSize = 14;

class RclmError : public ValidationError {
 public:
  enum class Kind { kBadMagic, kBadVersion, kBadChannels, kLengthMismatch, kNonFinite };

  RclmError(Kind kind, std::size_t offset, const std::string& what)
      : ValidationError("RCLM " + what + " at byte offset " + std::to_string(offset)),
        kind_(kind),
        offset_(offset) {}

  Kind kind() const { return kind_; }
  std::size_t offset() const { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

namespace detail {

inline void put_u32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return bytes;
}

inline void write_file(const std::filesystem::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_rclm(const RasterMap& map) {
  const auto values = map.values();
  std::vector<std::uint8_t> out(kRclmHeaderSize + values.size() * 4);
  std::copy(kRclmMagic.begin(), kRclmMagic.end(), out.begin());
  out[4] = kRclmVersion;
  out[5] = static_cast<std::uint8_t>(map.channels());
  detail::put_u32(&out[6], static_cast<std::uint32_t>(map.height()));
  detail::put_u32(&out[10], static_cast<std::uint32_t>(map.width()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    detail::put_u32(&out[kRclmHeaderSize + 4 * i], std::bit_cast<std::uint32_t>(values[i]));
  }
  return out;
}

inline RasterMap decode_rclm(std::span<const std::uint8_t> bytes) {
  using Kind = RclmError::Kind;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kRclmMagic.data(), 4) != 0) {
    throw RclmError(Kind::kBadMagic, 0, "bad magic (expected \"RCLM\")");
  }
  if (bytes.size() < kRclmHeaderSize) {
    throw RclmError(Kind::kLengthMismatch, bytes.size(),
                    "truncated header (" + std::to_string(bytes.size()) + " of " +
                        std::to_string(kRclmHeaderSize) + " bytes)");
  }
  if (bytes[4] != kRclmVersion) {
    throw RclmError(Kind::kBadVersion, 4, "unsupported version " + std::to_string(bytes[4]));
  }
  const int channels = bytes[5];
  if (channels != 1 && channels != 2) {
    throw RclmError(Kind::kBadChannels, 5, "channel count " + std::to_string(channels));
  }
  const std::uint32_t height = detail::get_u32(&bytes[6]);
  const std::uint32_t width = detail::get_u32(&bytes[10]);
  if (height == 0 || width == 0 || height > (1U << 20) || width > (1U << 20)) {
    throw RclmError(Kind::kLengthMismatch, 6,
                    "implausible dims " + std::to_string(height) + "x" + std::to_string(width));
  }
  const std::size_t n = static_cast<std::size_t>(height) * width * channels;
  const std::size_t expected = kRclmHeaderSize + 4 * n;
  if (bytes.size() != expected) {
    throw RclmError(Kind::kLengthMismatch, std::min(bytes.size(), expected),
                    "payload length mismatch (file " + std::to_string(bytes.size()) +
                        " bytes, header implies " + std::to_string(expected) + ")");
  }
  std::vector<float> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t off = kRclmHeaderSize + 4 * i;
    data[i] = std::bit_cast<float>(detail::get_u32(&bytes[off]));
    if (!std::isfinite(data[i])) throw RclmError(Kind::kNonFinite, off, "non-finite value");
  }
  return RasterMap(GridDims{static_cast<int>(height), static_cast<int>(width)}, channels,
                   std::move(data));
}

inline void write_rclm(const std::filesystem::path& path, const RasterMap& map) {
  const std::vector<std::uint8_t> bytes = encode_rclm(map);
  detail::write_file(path, bytes.data(), bytes.size());
}

inline RasterMap read_rclm(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = detail::read_file(path);
  return decode_rclm(bytes);
}

// Bundle directory: one RCLM file per map.
inline constexpr const char* kBundleFiles[] = {"seg.rclm", "transfer_f.rclm", "transfer_b.rclm",
                                               "dist_f.rclm", "dist_b.rclm"};

inline void write_bundle(const std::filesystem::path& dir, const LabelBundle& bundle) {
  bundle.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  write_rclm(dir / kBundleFiles[0], bundle.seg);
  write_rclm(dir / kBundleFiles[1], bundle.transfer_f);
  write_rclm(dir / kBundleFiles[2], bundle.transfer_b);
  write_rclm(dir / kBundleFiles[3], bundle.dist_f);
  write_rclm(dir / kBundleFiles[4], bundle.dist_b);
}

inline LabelBundle read_bundle(const std::filesystem::path& dir) {
  LabelBundle b{read_rclm(dir / kBundleFiles[0]), read_rclm(dir / kBundleFiles[1]),
                read_rclm(dir / kBundleFiles[2]), read_rclm(dir / kBundleFiles[3]),
                read_rclm(dir / kBundleFiles[4])};
  b.validate();
  return b;
}

inline constexpr int kLanesSchemaVersion = 1;
inline constexpr double kLanesCoordinateSlack = 2.0;

struct LanesDocument {
  GridDims dims{80, 200};
  std::vector<LanePolyline> lanes;
  std::vector<std::optional<double>> scores;  // parallel to lanes; may be empty

  friend bool operator==(const LanesDocument& a, const LanesDocument& b) {
    if (a.dims != b.dims || a.lanes.size() != b.lanes.size()) return false;
    for (std::size_t i = 0; i < a.lanes.size(); ++i) {
      if (a.lanes[i].id != b.lanes[i].id || a.lanes[i].points != b.lanes[i].points) return false;
      if (a.score(i) != b.score(i)) return false;
    }
    return true;
  }

  std::optional<double> score(std::size_t i) const {
    return i < scores.size() ? scores[i] : std::nullopt;
  }
};

/// Throws ValidationError naming the JSON path of the first violation.
inline void validate_document(const LanesDocument& doc) {
  if (doc.dims.height <= 0 || doc.dims.width <= 0) {
    throw ValidationError("/image: height and width must be positive");
  }
  if (!doc.scores.empty() && doc.scores.size() != doc.lanes.size()) {
    throw ValidationError("/lanes: score list does not match lane count");
  }
  for (std::size_t i = 0; i < doc.lanes.size(); ++i) {
    const std::string at = "/lanes/" + std::to_string(i);
    const auto& lane = doc.lanes[i];
    try {
      validate_lane(lane);
    } catch (const ValidationError& e) {
      throw ValidationError(at + "/points: " + e.what());
    }
    for (std::size_t k = 0; k < lane.points.size(); ++k) {
      const Point2 p = lane.points[k];
      if (p.x < -kLanesCoordinateSlack || p.x > doc.dims.width - 1 + kLanesCoordinateSlack ||
          p.y < -kLanesCoordinateSlack || p.y > doc.dims.height - 1 + kLanesCoordinateSlack) {
        throw ValidationError(at + "/points/" + std::to_string(k) + ": outside the image");
      }
    }
    if (auto s = doc.score(i); s && !std::isfinite(*s)) {
      throw ValidationError(at + "/score: not finite");
    }
  }
}

inline nlohmann::json to_json(const LanesDocument& doc) {
  nlohmann::json lanes = nlohmann::json::array();
  for (std::size_t i = 0; i < doc.lanes.size(); ++i) {
    nlohmann::json pts = nlohmann::json::array();
    for (Point2 p : doc.lanes[i].points) pts.push_back({p.x, p.y});
    nlohmann::json lane = {{"id", doc.lanes[i].id}, {"points", std::move(pts)}};
    if (auto s = doc.score(i)) lane["score"] = *s;
    lanes.push_back(std::move(lane));
  }
  return {{"schema_version", kLanesSchemaVersion},
          {"image", {{"height", doc.dims.height}, {"width", doc.dims.width}}},
          {"lanes", std::move(lanes)}};
}

inline LanesDocument lanes_from_json(const nlohmann::json& j) {
  const auto require = [](bool ok, const std::string& path, const std::string& msg) {
    if (!ok) throw ValidationError(path + ": " + msg);
  };
  require(j.is_object(), "", "document must be an object");
  require(j.contains("schema_version") && j["schema_version"].is_number_integer(),
          "/schema_version", "missing or not an integer");
  require(j["schema_version"].get<int>() == kLanesSchemaVersion, "/schema_version",
          "unsupported version");
  require(j.contains("image") && j["image"].is_object(), "/image", "missing or not an object");
  for (const char* key : {"height", "width"}) {
    require(j["image"].contains(key) && j["image"][key].is_number_integer(),
            std::string("/image/") + key, "missing or not an integer");
  }
  require(j.contains("lanes") && j["lanes"].is_array(), "/lanes", "missing or not an array");

  LanesDocument doc;
  doc.dims = {j["image"]["height"].get<int>(), j["image"]["width"].get<int>()};
  bool any_score = false;
  for (std::size_t i = 0; i < j["lanes"].size(); ++i) {
    const auto& jl = j["lanes"][i];
    const std::string at = "/lanes/" + std::to_string(i);
    require(jl.is_object(), at, "lane must be an object");
    require(jl.contains("id") && jl["id"].is_string(), at + "/id", "missing or not a string");
    require(jl.contains("points") && jl["points"].is_array(), at + "/points",
            "missing or not an array");
    LanePolyline lane{{}, jl["id"].get<std::string>()};
    for (std::size_t k = 0; k < jl["points"].size(); ++k) {
      const auto& jp = jl["points"][k];
      require(jp.is_array() && jp.size() == 2 && jp[0].is_number() && jp[1].is_number(),
              at + "/points/" + std::to_string(k), "point must be [x, y] numbers");
      lane.points.push_back({jp[0].get<double>(), jp[1].get<double>()});
    }
    std::optional<double> score;
    if (jl.contains("score")) {
      require(jl["score"].is_number(), at + "/score", "not a number");
      score = jl["score"].get<double>();
      any_score = true;
    }
    doc.lanes.push_back(std::move(lane));
    doc.scores.push_back(score);
  }
  if (!any_score) doc.scores.clear();
  validate_document(doc);
  return doc;
}

inline void write_lanes(const std::filesystem::path& path, const LanesDocument& doc) {
  validate_document(doc);
  const std::string text = to_json(doc).dump(2) + "\n";
  detail::write_file(path, text.data(), text.size());
}

inline LanesDocument read_lanes(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = detail::read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
  return lanes_from_json(j);
}

}  // namespace relaychain
