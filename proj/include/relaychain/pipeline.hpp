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

// Drivers that chain generator, encoder, noise, decoder and metric.

#pragma once

#include <chrono>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "relaychain/decoder.hpp"
#include "relaychain/encoder.hpp"
#include "relaychain/error.hpp"
#include "relaychain/evaluation.hpp"
#include "relaychain/synthgen.hpp"

namespace relaychain {

/// Shared encode/decode/evaluate hyperparameters.
struct CodecConfig {
  double step_d = 10.0;
  double tau = 2.0;
  double eta = 15.0;
  double iou_threshold = 0.5;
  double score_threshold = 0.5;
  int max_steps = 200;
  double mu = 15.0;
  double seg_halfwidth = 7.5;
  std::uint64_t stem_seed = 0;
  DecodeMode mode = DecodeMode::kBilateral;
  FieldSampling sampling = FieldSampling::kBilinear;
  GridDims dims{80, 200};
  int threads = 1;

  EncoderConfig encoder() const { return {step_d, seg_halfwidth, dims, stem_seed}; }

  DecoderConfig decoder() const {
    DecoderConfig c;
    c.step_d = step_d;
    c.nms_radius = tau;
    c.line_halfwidth = eta / 2.0;
    c.curve_iou_threshold = iou_threshold;
    c.score_threshold = score_threshold;
    c.max_steps = max_steps;
    c.mode = mode;
    c.sampling = sampling;
    c.threads = threads;
    return c;
  }

  void validate() const {
    encoder().validate();
    decoder().validate();
    if (!(mu >= 0.0)) throw ValidationError("mu must be non-negative");
  }
};

/// The noise seed for scene i, so every scene draws independent noise.
inline NoiseSpec noise_for_scene(const NoiseSpec& noise, std::size_t i) {
  NoiseSpec n = noise;
  n.seed = detail::splitmix64(noise.seed ^ detail::splitmix64(static_cast<std::uint64_t>(i)));
  return n;
}

struct RoundtripScene {
  std::vector<LanePolyline> gt;
  std::vector<DecodedLane> pred;
};

/// gen_scene -> encode_labels -> perturb_bundle -> decode for one scene.
inline RoundtripScene roundtrip_scene(const SceneSpec& spec, const NoiseSpec& noise,
                                      const CodecConfig& codec) {
  if (spec.lane_count < 1) throw ValidationError("round trip needs a scene with lanes");
  if (spec.dims != codec.dims) throw ValidationError("scene and codec grids differ");
  RoundtripScene out;
  out.gt = gen_scene(spec);
  const LabelBundle clean = encode_labels(out.gt, codec.encoder());
  out.pred = decode(perturb_bundle(clean, noise), codec.decoder());
  return out;
}

/// Full round trip over a scene list, scored with the lane F1 metric.
inline EvalReport run_roundtrip(std::span<const SceneSpec> specs, const NoiseSpec& noise,
                                const CodecConfig& codec) {
  codec.validate();
  noise.validate();
  if (specs.empty()) throw ValidationError("round trip needs at least one scene");
  EvalReport report;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const RoundtripScene s = roundtrip_scene(specs[i], noise_for_scene(noise, i), codec);
    report.add(score_scene(std::span<const DecodedLane>(s.pred),
                           std::span<const LanePolyline>(s.gt), codec.eta, codec.iou_threshold,
                           codec.dims));
  }
  report.finalize();
  return report;
}

/// Seeded scene list cycling through `kinds`. Lane counts are drawn in
/// [1, max_lanes] and capped at what each kind can place in the grid.
inline std::vector<SceneSpec> make_suite(std::span<const SceneKind> kinds, std::size_t count,
                                         std::uint64_t seed, GridDims dims = {80, 200},
                                         int max_lanes = 6) {
  if (kinds.empty()) throw ValidationError("suite needs at least one scene kind");
  if (max_lanes < 1) throw ValidationError("suite needs max_lanes >= 1");
  std::mt19937_64 rng(seed);
  std::vector<SceneSpec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SceneSpec s;
    s.kind = kinds[i % kinds.size()];
    s.dims = dims;
    s.seed = rng();
    if (s.kind == SceneKind::kYShape || s.kind == SceneKind::kFork) {
      s.lane_count = 2;
    } else {
      // Near-horizontal lanes stack along the short axis and tilt, which
      // leaves room for fewer of them.
      const double span = s.kind == SceneKind::kNearHorizontal ? 0.5 * dims.height : dims.width;
      const int fit = std::max(1, static_cast<int>((span - 1 - 2 * kSceneMargin) / 32.0) + 1);
      s.lane_count = std::uniform_int_distribution<int>(1, std::min(max_lanes, fit))(rng);
    }
    out.push_back(s);
  }
  return out;
}

/// The mixed clean suite used by round-trip checks and the bench.
inline std::vector<SceneSpec> standard_suite(std::size_t count, std::uint64_t seed,
                                             GridDims dims = {80, 200}) {
  static constexpr SceneKind kinds[] = {SceneKind::kStraight, SceneKind::kQuadratic,
                                        SceneKind::kArc, SceneKind::kNearHorizontal};
  return make_suite(kinds, count, seed, dims);
}

struct BenchResult {
  std::size_t scenes = 0;
  std::size_t keypoints = 0;
  double seconds = 0.0;
  double scenes_per_second = 0.0;
  double keypoints_per_second = 0.0;
};

/// Times decode() alone over pre-encoded bundles, `repeats` passes.
inline BenchResult bench_decode(std::span<const LabelBundle> bundles, const DecoderConfig& config,
                                int repeats = 1) {
  config.validate();
  if (bundles.empty() || repeats < 1) throw ValidationError("bench needs bundles and repeats >= 1");
  BenchResult r;
  for (const auto& b : bundles) {
    r.keypoints += point_nms(b.seg, config.nms_radius, config.score_threshold).size();
  }
  r.keypoints *= static_cast<std::size_t>(repeats);
  std::size_t sink = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int rep = 0; rep < repeats; ++rep) {
    for (const auto& b : bundles) sink += decode(b, config).size();
  }
  const auto t1 = std::chrono::steady_clock::now();
  r.scenes = bundles.size() * static_cast<std::size_t>(repeats);
  r.seconds = std::chrono::duration<double>(t1 - t0).count();
  if (sink == static_cast<std::size_t>(-1)) r.seconds += 0.0;  // keep the work observable
  r.scenes_per_second = r.seconds > 0 ? static_cast<double>(r.scenes) / r.seconds : 0.0;
  r.keypoints_per_second = r.seconds > 0 ? static_cast<double>(r.keypoints) / r.seconds : 0.0;
  return r;
}

inline std::vector<LabelBundle> encode_suite(std::span<const SceneSpec> specs,
                                             const CodecConfig& codec) {
  std::vector<LabelBundle> out;
  out.reserve(specs.size());
  for (const auto& s : specs) out.push_back(encode_labels(gen_scene(s), codec.encoder()));
  return out;
}

}  // namespace relaychain
