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

// relaychain command-line driver.
//
// Exit codes: 0 success, 2 validation error (bad flags, bad documents,
// corrupt RCLM files), 3 I/O error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "relaychain/relaychain.hpp"

namespace rc = relaychain;
using nlohmann::json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

rc::GridDims parse_dims(const std::string& text) {
  const auto x = text.find_first_of("xX");
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t used_h = 0;
    std::size_t used_w = 0;
    const int h = std::stoi(text.substr(0, x), &used_h);
    const int w = std::stoi(text.substr(x + 1), &used_w);
    if (used_h != x || used_w != text.size() - x - 1) throw std::invalid_argument(text);
    rc::GridDims dims{h, w};
    rc::validate_dims(dims);
    return dims;
  } catch (const std::logic_error&) {
    throw rc::ValidationError("--dims expects HxW with positive integers, got '" + text + "'");
  }
}

rc::DecodeMode parse_mode(const std::string& text) {
  if (text == "bilateral") return rc::DecodeMode::kBilateral;
  if (text == "forward") return rc::DecodeMode::kForwardOnly;
  if (text == "backward") return rc::DecodeMode::kBackwardOnly;
  throw rc::ValidationError("--mode expects bilateral|forward|backward, got '" + text + "'");
}

// Flags shared by every subcommand.
struct Common {
  double step_d = 10.0;
  double tau = 2.0;
  double eta = 15.0;
  double iou_thresh = 0.5;
  std::string mode = "bilateral";
  std::uint64_t seed = 0;
  std::string dims = "80x200";
  double score_thresh = 0.5;
  int threads = 1;
  double mu = 15.0;

  rc::CodecConfig codec() const {
    rc::CodecConfig c;
    c.step_d = step_d;
    c.tau = tau;
    c.eta = eta;
    c.iou_threshold = iou_thresh;
    c.score_threshold = score_thresh;
    c.mode = parse_mode(mode);
    c.dims = parse_dims(dims);
    c.stem_seed = seed;
    c.threads = threads;
    c.mu = mu;
    c.seg_halfwidth = std::min(c.seg_halfwidth, step_d);
    c.validate();
    return c;
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--step-d", c.step_d, "Relay step length d in px")->capture_default_str();
  app->add_option("--tau", c.tau, "Point-NMS radius in px")->capture_default_str();
  app->add_option("--eta", c.eta, "Stripe width for IoU in px")->capture_default_str();
  app->add_option("--iou-thresh", c.iou_thresh, "IoU threshold for NMS and matching")
      ->capture_default_str();
  app->add_option("--mode", c.mode, "bilateral|forward|backward")->capture_default_str();
  app->add_option("--seed", c.seed, "Seed")->capture_default_str();
  app->add_option("--dims", c.dims, "Grid size HxW")->capture_default_str();
  app->add_option("--score-thresh", c.score_thresh, "Keypoint score threshold")
      ->capture_default_str();
  app->add_option("--threads", c.threads, "Decoder threads over keypoints")->capture_default_str();
  app->add_option("--mu", c.mu, "OHEM negative ratio")->capture_default_str();
}

struct NoiseFlags {
  double transfer_sigma = 0.0;
  double dist_sigma = 0.0;
  double dropout = 0.0;
  int blur = 0;
  std::uint64_t noise_seed = 0;

  rc::NoiseSpec spec() const {
    rc::NoiseSpec n{transfer_sigma, dist_sigma, dropout, blur, noise_seed};
    n.validate();
    return n;
  }
};

void add_noise(CLI::App* app, NoiseFlags& n) {
  app->add_option("--transfer-sigma", n.transfer_sigma, "Transfer noise sigma in px");
  app->add_option("--dist-sigma", n.dist_sigma, "Distance noise sigma in px");
  app->add_option("--dropout", n.dropout, "Foreground dropout probability");
  app->add_option("--blur", n.blur, "Box blur radius on seg in px");
  app->add_option("--noise-seed", n.noise_seed, "Noise seed");
}

json report_json(const rc::EvalReport& r) {
  json scenes = json::array();
  for (const auto& s : r.per_scene) scenes.push_back({{"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn}});
  return {{"tp", r.tp},         {"fp", r.fp}, {"fn", r.fn},
          {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1},
          {"scenes", std::move(scenes)}};
}

// Decoded chains as lanes-JSON: consecutive duplicate points are dropped and
// chains left with fewer than two points are skipped.
rc::LanesDocument decoded_document(const std::vector<rc::DecodedLane>& lanes, rc::GridDims dims) {
  rc::LanesDocument doc;
  doc.dims = dims;
  for (const auto& lane : lanes) {
    rc::LanePolyline out{{}, std::to_string(doc.lanes.size())};
    for (rc::Point2 p : lane.points) {
      if (out.points.empty() || !(out.points.back() == p)) out.points.push_back(p);
    }
    if (out.points.size() < 2) continue;
    doc.lanes.push_back(std::move(out));
    doc.scores.push_back(lane.score);
  }
  return doc;
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relaychain: relay-chain lane encoding, decoding and evaluation"};
  app.require_subcommand(1);
  Common common;
  NoiseFlags noise;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene as lanes-JSON");
  add_common(synth, common);
  std::string kind = "straight";
  int lane_count = 3;
  double stem_fraction = 0.55;
  std::string out_path;
  std::string bundle_dir;
  synth->add_option("--kind", kind,
                    "straight|quadratic|arc|y_shape|fork|near_horizontal|mixed")
      ->capture_default_str();
  synth->add_option("--lanes", lane_count, "Lane count")->capture_default_str();
  synth->add_option("--stem-fraction", stem_fraction, "Shared stem fraction (y_shape/fork)")
      ->capture_default_str();
  synth->add_option("--out", out_path, "Output lanes-JSON")->required();
  synth->add_option("--bundle", bundle_dir, "Also write the encoded label bundle here");

  // encode
  auto* encode = app.add_subcommand("encode", "Encode lanes-JSON into an RCLM label bundle");
  add_common(encode, common);
  std::string lanes_path;
  encode->add_option("--lanes", lanes_path, "Input lanes-JSON")->required();
  encode->add_option("--out", bundle_dir, "Output bundle directory")->required();

  // decode
  auto* decode = app.add_subcommand("decode", "Decode an RCLM bundle into lanes-JSON");
  add_common(decode, common);
  decode->add_option("--bundle", bundle_dir, "Input bundle directory")->required();
  decode->add_option("--out", out_path, "Output lanes-JSON")->required();

  // roundtrip
  auto* roundtrip = app.add_subcommand("roundtrip", "synth -> encode -> perturb -> decode -> eval");
  add_common(roundtrip, common);
  add_noise(roundtrip, noise);
  std::size_t scenes = 200;
  std::vector<std::string> kinds;
  roundtrip->add_option("--scenes", scenes, "Scene count")->capture_default_str();
  roundtrip->add_option("--kinds", kinds,
                        "Scene kinds to cycle (default straight quadratic arc near_horizontal)");
  roundtrip->add_option("--stem-fraction", stem_fraction, "Shared stem fraction (y_shape/fork)");

  // eval
  auto* eval = app.add_subcommand("eval", "Lane F1 of predictions against ground truth");
  add_common(eval, common);
  std::vector<std::string> pred_paths;
  std::vector<std::string> gt_paths;
  eval->add_option("--pred", pred_paths, "Prediction lanes-JSON files")->required();
  eval->add_option("--gt", gt_paths, "Ground-truth lanes-JSON files, same order")->required();

  // loss
  auto* loss = app.add_subcommand("loss", "Training loss between two bundles");
  add_common(loss, common);
  std::string pred_dir;
  std::string gt_dir;
  loss->add_option("--pred", pred_dir, "Predicted bundle directory")->required();
  loss->add_option("--gt", gt_dir, "Label bundle directory")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "Decode throughput on a fixed synthetic suite");
  add_common(bench, common);
  std::size_t bench_scenes = 100;
  int repeats = 3;
  bench->add_option("--scenes", bench_scenes, "Suite size")->capture_default_str();
  bench->add_option("--repeats", repeats, "Timed passes over the suite")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    const rc::CodecConfig codec = common.codec();

    if (*synth) {
      rc::SceneSpec spec;
      spec.kind = rc::parse_scene_kind(kind);
      spec.lane_count = lane_count;
      spec.dims = codec.dims;
      spec.stem_fraction = stem_fraction;
      spec.seed = common.seed;
      rc::LanesDocument doc{codec.dims, rc::gen_scene(spec), {}};
      rc::write_lanes(out_path, doc);
      if (!bundle_dir.empty()) rc::write_bundle(bundle_dir, rc::encode_labels(doc.lanes, codec.encoder()));
    } else if (*encode) {
      const rc::LanesDocument doc = rc::read_lanes(lanes_path);
      rc::EncoderConfig ec = codec.encoder();
      ec.dims = doc.dims;
      rc::write_bundle(bundle_dir, rc::encode_labels(doc.lanes, ec));
    } else if (*decode) {
      const rc::LabelBundle bundle = rc::read_bundle(bundle_dir);
      const auto lanes = rc::decode(bundle, codec.decoder());
      rc::write_lanes(out_path, decoded_document(lanes, bundle.dims()));
    } else if (*roundtrip) {
      std::vector<rc::SceneKind> parsed;
      for (const auto& k : kinds) parsed.push_back(rc::parse_scene_kind(k));
      std::vector<rc::SceneSpec> specs =
          parsed.empty() ? rc::standard_suite(scenes, common.seed, codec.dims)
                         : rc::make_suite(parsed, scenes, common.seed, codec.dims);
      if (roundtrip->count("--stem-fraction") > 0) {
        for (auto& s : specs) s.stem_fraction = stem_fraction;
      }
      print(report_json(rc::run_roundtrip(specs, noise.spec(), codec)));
    } else if (*eval) {
      if (pred_paths.size() != gt_paths.size()) {
        throw rc::ValidationError("--pred and --gt need the same number of files");
      }
      std::vector<rc::Scene<rc::LanePolyline, rc::LanePolyline>> list;
      for (std::size_t i = 0; i < pred_paths.size(); ++i) {
        const rc::LanesDocument pred = rc::read_lanes(pred_paths[i]);
        const rc::LanesDocument gt = rc::read_lanes(gt_paths[i]);
        if (pred.dims != gt.dims) {
          throw rc::ValidationError("image dims differ between '" + pred_paths[i] + "' and '" +
                                    gt_paths[i] + "'");
        }
        if (gt.dims != codec.dims) {
          throw rc::ValidationError("'" + gt_paths[i] + "' is not a " + common.dims + " document");
        }
        list.push_back({pred.lanes, gt.lanes});
      }
      print(report_json(rc::evaluate(
          std::span<const rc::Scene<rc::LanePolyline, rc::LanePolyline>>(list), codec.eta,
          codec.iou_threshold, codec.dims)));
    } else if (*loss) {
      const rc::LossBreakdown l =
          rc::total_loss(rc::read_bundle(pred_dir), rc::read_bundle(gt_dir), codec.mu);
      print({{"l_seg", l.l_seg}, {"l_t", l.l_t}, {"l_d", l.l_d}, {"l_total", l.l_total},
             {"n_pos", l.n_pos}, {"n_neg", l.n_neg}});
    } else if (*bench) {
      const auto specs = rc::standard_suite(bench_scenes, common.seed, codec.dims);
      const auto bundles = rc::encode_suite(specs, codec);
      const rc::BenchResult r = rc::bench_decode(bundles, codec.decoder(), repeats);
      print({{"threads", codec.threads},
             {"scenes", r.scenes},
             {"keypoints", r.keypoints},
             {"seconds", r.seconds},
             {"scenes_per_second", r.scenes_per_second},
             {"keypoints_per_second", r.keypoints_per_second}});
    }
  } catch (const rc::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const rc::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
