/*
 * Copyright 2026 The MLSD Toolkit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mlsd/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <random>

#include "CLI11.hpp"
#include "json.hpp"
#include "mlsd/bench.hpp"
#include "mlsd/config.hpp"
#include "mlsd/io.hpp"
#include "mlsd/metrics.hpp"
#include "mlsd/selfcheck.hpp"

namespace mlsd {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct CommonFlags {
  std::string config_path;
  std::optional<int> input_size;
  std::optional<double> mu_ratio, gamma, threshold;
  std::optional<int> top_k;
  std::optional<std::uint64_t> seed;
  std::string out;

  RunConfig resolve(RunConfig cfg = {}) const {
    if (!config_path.empty()) cfg = load_config(config_path, cfg);
    if (input_size) cfg.input_size = *input_size;
    if (mu_ratio) cfg.mu_ratio = *mu_ratio;
    if (gamma) cfg.weights.gamma = *gamma;
    if (threshold) cfg.decode.score_threshold = *threshold;
    if (top_k) cfg.decode.top_k = *top_k;
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
  }
};

void add_common(CLI::App& app, CommonFlags& f) {
  app.add_option("--config", f.config_path, "JSON config file; flags override it");
  app.add_option("--input-size", f.input_size, "network input size (320 or 512)");
  app.add_option("--mu-ratio", f.mu_ratio, "SoL base length as a fraction of the input size");
  app.add_option("--gamma", f.gamma, "matching threshold in input pixels");
  app.add_option("--threshold", f.threshold, "center score threshold");
  app.add_option("--top-k", f.top_k, "maximum number of decoded lines");
  app.add_option("--seed", f.seed, "random seed");
  app.add_option("--out", f.out, "output path");
}

// Writes `text` to --out, or to `out` when no path was given.
void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw Error("cannot write " + path);
  file << text;
}

std::string json_text(const ordered_json& j) { return j.dump(2) + "\n"; }

ordered_json optional_number(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

void require_safe_id(const std::string& id) {
  if (id.empty() || id.find('/') != std::string::npos || id.find('\\') != std::string::npos ||
      id == "." || id == "..")
    throw AnnotationError("image id \"" + id + "\" cannot be used as a file name");
}

// Annotation lines in the network-input frame (input_size x input_size).
std::vector<Lined> to_input_frame(const AnnotatedImage& image, const RunConfig& cfg) {
  return rescale<double>(image.lines, double(cfg.input_size) / image.width,
                         double(cfg.input_size) / image.height);
}

Tensor to_tensor(std::initializer_list<const Planed*> planes) {
  std::vector<Planef> out;
  for (const auto* p : planes) out.push_back(p->cast<float>());
  return planes_to_tensor(out);
}

// ---------------------------------------------------------------------------

int cmd_encode_gt(const std::string& annotations, const CommonFlags& flags, std::ostream& out) {
  const RunConfig cfg = flags.resolve();
  if (flags.out.empty()) throw ConfigError("encode-gt needs --out DIR");
  const auto set = read_annotations(annotations);
  fs::create_directories(flags.out);
  const ImageGeometry geom = cfg.geometry();

  ordered_json summary;
  summary["input_size"] = cfg.input_size;
  summary["mu"] = cfg.mu();
  summary["images"] = ordered_json::array();
  for (const auto& image : set.images) {
    require_safe_id(image.id);
    const auto gt = build_gt(to_input_frame(image, cfg), geom, cfg.mu());
    const fs::path base = fs::path(flags.out) / image.id;
    write_tensor(stack_to_tensor(gt.tp.cast<float>()), base.string() + ".tp.mlsd");
    write_tensor(stack_to_tensor(gt.sol.cast<float>()), base.string() + ".sol.mlsd");
    write_tensor(to_tensor({&gt.seg.junction, &gt.seg.line}), base.string() + ".seg.mlsd");
    write_tensor(to_tensor({&gt.tp_mask, &gt.sol_mask}), base.string() + ".mask.mlsd");
    summary["images"].push_back({{"id", image.id},
                                 {"lines", gt.tp_lines.size()},
                                 {"subparts", gt.sol_lines.size()},
                                 {"skipped_lines", gt.skipped_lines}});
  }
  out << json_text(summary);
  return kExitOk;
}

struct AugmentFlags {
  bool hflip = false, vflip = false, random = false;
  double rotate_deg = 0, scale = 1, shear = 0, min_length = 4;
};

int cmd_augment(const std::string& annotations, const AugmentFlags& a, const CommonFlags& flags,
                std::ostream& out) {
  const RunConfig cfg = flags.resolve();
  auto set = read_annotations(annotations);
  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> angle(-15.0, 15.0), zoom(0.8, 1.2), skew(-0.1, 0.1);

  for (auto& image : set.images) {
    const ImageGeometry geom(image.width + image.width % 2, image.height + image.height % 2);
    Transform<double> t = Transform<double>::Identity();
    bool hflip = a.hflip, vflip = a.vflip;
    double rot = a.rotate_deg, scale = a.scale, shear = a.shear;
    if (a.random) {
      hflip = coin(rng);
      vflip = coin(rng);
      rot = angle(rng);
      scale = zoom(rng);
      shear = skew(rng);
    }
    if (hflip) t = augment::horizontal_flip(geom) * t;
    if (vflip) t = augment::vertical_flip(geom) * t;
    if (shear != 0) t = augment::shear(geom, shear, 0.0) * t;
    if (rot != 0) t = augment::rotation(geom, rot * std::numbers::pi / 180.0) * t;
    if (scale != 1) t = augment::scaling(geom, scale, scale) * t;
    auto lines = affine_augment(image.lines, t, geom, a.min_length);
    for (auto& l : lines) {  // odd-sized images: keep inside the original bounds
      l.start = l.start.cwiseMin(Pointd(image.width, image.height));
      l.end = l.end.cwiseMin(Pointd(image.width, image.height));
    }
    std::erase_if(lines, [](const Lined& l) { return l.degenerate(); });
    image.lines = std::move(lines);
  }
  emit(format_annotations(set), flags.out, out);
  return kExitOk;
}

struct DecodeFlags {
  std::vector<std::string> tensors;
  std::optional<std::string> mode;
  std::optional<int> width, height;
};

int cmd_decode(const DecodeFlags& d, const CommonFlags& flags, std::ostream& out) {
  RunConfig base;
  base.decode.input_mode = d.mode ? parse_input_mode(*d.mode) : flags.resolve().decode.input_mode;
  if (base.decode.input_mode == InputMode::kRawScores) base.decode.score_threshold = 0.5;
  RunConfig cfg = flags.resolve(base);
  cfg.decode.input_mode = base.decode.input_mode;

  AnnotationSet result;
  for (const auto& path : d.tensors) {
    const auto stack = tensor_to_stack(read_tensor(path)).cast<double>();
    const ImageGeometry geom(2 * stack.cols(), 2 * stack.rows());
    auto lines = segments_of(generate_lines(stack, cfg.decode, geom));

    AnnotatedImage image;
    image.id = fs::path(path).filename().string();
    image.id = image.id.substr(0, image.id.find('.'));
    image.width = d.width.value_or(geom.width());
    image.height = d.height.value_or(geom.height());
    image.scored = true;
    lines = rescale<double>(lines, double(image.width) / geom.width(),
                            double(image.height) / geom.height());
    for (auto& l : lines) {
      l.start = l.start.cwiseMax(0.0).cwiseMin(Pointd(image.width, image.height));
      l.end = l.end.cwiseMax(0.0).cwiseMin(Pointd(image.width, image.height));
      if (!l.degenerate()) image.lines.push_back(canonicalize(l));
    }
    result.images.push_back(std::move(image));
  }
  emit(format_annotations(result), flags.out, out);
  return kExitOk;
}

struct LossFlags {
  std::string pred_prefix, annotations, id;
};

int cmd_loss(const LossFlags& l, const CommonFlags& flags, std::ostream& out) {
  const RunConfig cfg = flags.resolve();
  const auto set = read_annotations(l.annotations);
  const AnnotatedImage* image = nullptr;
  for (const auto& im : set.images)
    if (l.id.empty() || im.id == l.id) {
      image = &im;
      break;
    }
  if (!image) throw AnnotationError("no image \"" + l.id + "\" in " + l.annotations);

  const ImageGeometry geom = cfg.geometry();
  const auto gt = build_gt(to_input_frame(*image, cfg), geom, cfg.mu());

  PredBundle<double> pred;
  pred.tp = tensor_to_stack(read_tensor(l.pred_prefix + ".tp.mlsd")).cast<double>();
  pred.sol = tensor_to_stack(read_tensor(l.pred_prefix + ".sol.mlsd")).cast<double>();
  const auto seg = tensor_to_planes(read_tensor(l.pred_prefix + ".seg.mlsd"));
  if (seg.size() != 2)
    throw TensorFormatError(TensorErrorKind::kShape, "segmentation tensor needs 2 channels");
  pred.junction = seg[0].cast<double>();
  pred.line = seg[1].cast<double>();
  if (!pred.tp.same_shape(gt.tp) || !pred.sol.same_shape(gt.sol) ||
      pred.junction.rows() != geom.map_height() || pred.junction.cols() != geom.map_width() ||
      pred.line.rows() != geom.map_height() || pred.line.cols() != geom.map_width())
    throw TensorFormatError(TensorErrorKind::kShape,
                            "prediction maps do not match input size " +
                                std::to_string(cfg.input_size));

  DecodeConfig dcfg = cfg.decode;
  dcfg.input_mode = InputMode::kLogits;
  const auto tp_decoded = generate_lines(pred.tp, dcfg, geom);
  const auto sol_decoded = generate_lines(pred.sol, dcfg, geom);
  const auto loss = total_loss<double>(pred, gt, tp_decoded, sol_decoded, cfg.weights);

  const auto stack_json = [](const StackLoss<double>& s) {
    return ordered_json{{"center", s.center},     {"displacement", s.displacement},
                        {"length", s.length},     {"degree", s.degree},
                        {"matching", s.matching}, {"total", s.value()}};
  };
  ordered_json j;
  j["id"] = image->id;
  j["tp"] = stack_json(loss.tp);
  j["sol"] = stack_json(loss.sol);
  j["junction"] = loss.junction;
  j["line"] = loss.line;
  j["total"] = loss.value();
  j["decoded_lines"] = {{"tp", tp_decoded.size()}, {"sol", sol_decoded.size()}};
  emit(json_text(j), flags.out, out);
  return kExitOk;
}

struct EvalFlags {
  std::string preds, gts;
  std::vector<double> thetas{5.0, 10.0};
  double tolerance = 2.0;
};

int cmd_eval(const EvalFlags& e, const CommonFlags& flags, std::ostream& out) {
  const auto pred_set = read_annotations(e.preds);
  const auto gt_set = read_annotations(e.gts);
  std::map<std::string, const AnnotatedImage*> preds_by_id;
  for (const auto& im : pred_set.images) preds_by_id[im.id] = &im;

  std::vector<const AnnotatedImage*> gts;
  for (const auto& im : gt_set.images) gts.push_back(&im);
  std::sort(gts.begin(), gts.end(), [](auto* a, auto* b) { return a->id < b->id; });

  std::vector<EvalImage> images;
  for (const auto* g : gts) {
    EvalImage im{ImageGeometry(g->width + g->width % 2, g->height + g->height % 2), {}, g->lines};
    if (auto it = preds_by_id.find(g->id); it != preds_by_id.end()) {
      const auto* p = it->second;
      im.preds = rescale<double>(p->lines, double(g->width) / p->width,
                                 double(g->height) / p->height);
    }
    images.push_back(std::move(im));
  }
  const auto report = evaluate(images, e.thetas, e.tolerance);

  ordered_json j;
  j["images"] = report.images;
  j["predictions"] = report.predictions;
  j["ground_truth"] = report.ground_truth;
  j["sap"] = ordered_json::object();
  for (const auto& [theta, ap] : report.sap) {
    char key[32];
    std::snprintf(key, sizeof key, "%g", theta);
    j["sap"][key] = optional_number(ap);
  }
  j["f_heatmap"] = optional_number(report.f_heatmap);
  j["tolerance"] = e.tolerance;
  j["pr_samples"] = ordered_json::array();
  for (const auto& p : report.pr_samples)
    j["pr_samples"].push_back({p.threshold, p.precision, p.recall});
  emit(json_text(j), flags.out, out);
  return kExitOk;
}

int cmd_selfcheck(const std::string& fault, const CommonFlags& flags, std::ostream& out) {
  const RunConfig cfg = flags.resolve();
  SelfCheckOptions options{cfg.seed, fault};
  const auto results = run_selfcheck(options);
  emit(format_selfcheck(options, results), flags.out, out);
  const bool ok = std::all_of(results.begin(), results.end(), [](auto& r) { return r.passed; });
  return ok ? kExitOk : kExitCheckFailed;
}

struct BenchFlags {
  int map_size = 256, centers = 200, repetitions = 100;
};

int cmd_bench(const BenchFlags& b, const CommonFlags& flags, std::ostream& out) {
  const RunConfig cfg = flags.resolve();
  const auto r = run_decode_bench(b.map_size, b.centers, b.repetitions, cfg.seed);
  ordered_json j;
  j["map_size"] = r.map_size;
  j["centers"] = r.centers;
  j["repetitions"] = r.repetitions;
  j["seed"] = cfg.seed;
  j["decoded_lines"] = r.decoded_lines;
  j["min_ms"] = r.min_ms;
  j["median_ms"] = r.median_ms;
  j["p99_ms"] = r.p99_ms;
  emit(json_text(j), flags.out, out);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Line segment detection toolkit: GT encoding, decoding, losses and metrics", "mlsd"};
  app.require_subcommand(1);
  CommonFlags flags;

  std::string annotations;
  auto* encode = app.add_subcommand("encode-gt", "encode annotations into GT map tensors");
  encode->add_option("annotations", annotations, "annotation JSON")->required();

  AugmentFlags aug;
  auto* augment_cmd = app.add_subcommand("augment", "apply geometric augmentation to annotations");
  augment_cmd->add_option("annotations", annotations, "annotation JSON")->required();
  augment_cmd->add_flag("--hflip", aug.hflip, "horizontal flip");
  augment_cmd->add_flag("--vflip", aug.vflip, "vertical flip");
  augment_cmd->add_option("--rotate", aug.rotate_deg, "rotation about the center, degrees");
  augment_cmd->add_option("--scale", aug.scale, "isotropic scaling about the center");
  augment_cmd->add_option("--shear", aug.shear, "horizontal shear factor");
  augment_cmd->add_option("--min-length", aug.min_length, "drop clipped lines shorter than this");
  augment_cmd->add_flag("--random", aug.random, "draw a random augmentation per image from --seed");

  DecodeFlags dec;
  auto* decode = app.add_subcommand("decode", "decode TP map tensors into line segments");
  decode->add_option("tensors", dec.tensors, "TP tensor files (7, H/2, W/2)")->required();
  decode->add_option("--mode", dec.mode, "center channel holds 'logits' or 'raw' scores");
  decode->add_option("--width", dec.width, "rescale output to this image width");
  decode->add_option("--height", dec.height, "rescale output to this image height");

  LossFlags lf;
  auto* loss = app.add_subcommand("loss", "evaluate training losses for stored predictions");
  loss->add_option("--pred", lf.pred_prefix, "prefix of <prefix>.{tp,sol,seg}.mlsd")->required();
  loss->add_option("--annotations", lf.annotations, "GT annotation JSON")->required();
  loss->add_option("--id", lf.id, "image id (default: first image)");

  EvalFlags ef;
  auto* eval = app.add_subcommand("eval", "evaluate predicted lines against GT");
  eval->add_option("predictions", ef.preds, "predicted lines JSON (with scores)")->required();
  eval->add_option("ground_truth", ef.gts, "GT annotation JSON")->required();
  eval->add_option("--theta", ef.thetas, "sAP squared-distance thresholds");
  eval->add_option("--tolerance", ef.tolerance, "heatmap F-score pixel tolerance");

  std::string fault;
  auto* selfcheck = app.add_subcommand("selfcheck", "run gradient and oracle suites");
  selfcheck->add_option("--inject-fault", fault, "perturb a named check (testing only)")
      ->group("");

  BenchFlags bf;
  auto* bench = app.add_subcommand("bench", "time line generation on a synthetic TP stack");
  bench->add_option("--map-size", bf.map_size, "map side length in cells");
  bench->add_option("--centers", bf.centers, "number of center peaks");
  bench->add_option("--repetitions", bf.repetitions, "timed runs");

  for (auto* sub : {encode, augment_cmd, decode, loss, eval, selfcheck, bench}) add_common(*sub, flags);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "mlsd: " << e.what() << "\n";
    return kExitInputError;
  }

  try {
    if (*encode) return cmd_encode_gt(annotations, flags, out);
    if (*augment_cmd) return cmd_augment(annotations, aug, flags, out);
    if (*decode) return cmd_decode(dec, flags, out);
    if (*loss) return cmd_loss(lf, flags, out);
    if (*eval) return cmd_eval(ef, flags, out);
    if (*selfcheck) return cmd_selfcheck(fault, flags, out);
    if (*bench) return cmd_bench(bf, flags, out);
  } catch (const std::exception& e) {
    err << "mlsd: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace mlsd
