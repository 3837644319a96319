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

// Encodes a Y-shaped scene, decodes it in each mode and prints what came back.

#include <cstdio>

#include "relaychain/relaychain.hpp"

namespace rc = relaychain;

int main() {
  rc::SceneSpec spec;
  spec.kind = rc::SceneKind::kYShape;
  spec.lane_count = 2;
  spec.seed = 7;
  const std::vector<rc::LanePolyline> gt = rc::gen_scene(spec);

  rc::CodecConfig codec;
  const rc::LabelBundle bundle = rc::encode_labels(gt, codec.encoder());

  for (rc::DecodeMode mode : {rc::DecodeMode::kBilateral, rc::DecodeMode::kForwardOnly,
                              rc::DecodeMode::kBackwardOnly}) {
    codec.mode = mode;
    const auto lanes = rc::decode(bundle, codec.decoder());
    const rc::SceneCounts counts = rc::score_scene(std::span<const rc::DecodedLane>(lanes),
                                                   std::span<const rc::LanePolyline>(gt),
                                                   codec.eta, codec.iou_threshold, codec.dims);
    const char* name = mode == rc::DecodeMode::kBilateral     ? "bilateral"
                       : mode == rc::DecodeMode::kForwardOnly ? "forward"
                                                              : "backward";
    std::printf("%-9s  %zu lanes decoded, %zu of %zu ground-truth limbs matched\n", name,
                lanes.size(), counts.tp, gt.size());
  }
  return 0;
}
