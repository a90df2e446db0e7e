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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "mlsd/bench.hpp"
#include "mlsd/config.hpp"
#include "mlsd/io.hpp"
#include "mlsd/loss.hpp"
#include "mlsd/metrics.hpp"
#include "mlsd/synthetic.hpp"

using namespace mlsd;
namespace fs = std::filesystem;

namespace {

using Lines = std::vector<Lined>;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool passed;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// A1 ------------------------------------------------------------------------

Outcome a1_round_trip() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  const ImageGeometry geom(512, 512);
  const Lines lines = random_lines<double>(rng, geom, 100, 8.0, true);
  const auto gt = build_gt(lines, geom, 64.0);
  DecodeConfig cfg;
  cfg.input_mode = InputMode::kRawScores;
  cfg.score_threshold = 0.5;
  cfg.top_k = 1000;
  const auto decoded = segments_of(generate_lines(gt.tp, cfg, geom));
  const double elapsed = ms_since(t0);

  std::vector<bool> used(decoded.size());
  double worst = 0;
  std::size_t recovered = 0;
  for (const auto& l : lines) {
    const Lined c = canonicalize(l);
    double best = INFINITY;
    std::size_t pick = 0;
    for (std::size_t i = 0; i < decoded.size(); ++i) {
      const double e = std::max((decoded[i].start - c.start).norm(), (decoded[i].end - c.end).norm());
      if (!used[i] && e < best) {
        best = e;
        pick = i;
      }
    }
    if (best <= 1e-3) {
      used[pick] = true;
      ++recovered;
    }
    worst = std::max(worst, best);
  }
  const bool ok = recovered == 100 && decoded.size() == 100 && elapsed < 1000.0;
  return {ok, fmt("recovered %zu/100, decoded %zu, max endpoint error %.2e px, %.1f ms", recovered,
                  decoded.size(), worst, elapsed)};
}

// A2 ------------------------------------------------------------------------

Outcome a2_sol_constants() {
  RunConfig cfg;
  cfg.input_size = 320;
  const double mu = cfg.mu();
  const auto k_oracle = [&](double r) { return int(std::floor(r / (mu / 2) + 0.5)) - 1; };

  const Lined l40(10, 10, 50, 10), l80(10, 100, 10, 180);
  const auto s40 = sol_split(l40, mu);
  const auto s80 = sol_split(l80, mu);
  bool ok = mu == 40.0 && k_oracle(40) <= 1 && k_oracle(80) == 3;
  ok = ok && s40.size() == 1 && s40[0].start == l40.start && s40[0].end == l40.end;
  ok = ok && s80.size() == 3;
  for (const auto& p : s80) ok = ok && std::abs(p.length() - 40.0) < 1e-12;
  return {ok, fmt("mu=%g, length 40 -> %zu part(s), length 80 -> %zu parts", mu, s40.size(),
                  s80.size())};
}

// A3 ------------------------------------------------------------------------

double bce_oracle(const Planed& f, const Planed& w, double lp, double ln) {
  double pos = 0, neg = 0, np = 0, nn = 0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double s = 1.0 / (1.0 + std::exp(-f.data()[i]));
    if (w.data()[i] != 0) {
      pos -= w.data()[i] * std::log(s);
      ++np;
    } else {
      neg -= std::log(1.0 - s);
      ++nn;
    }
  }
  return lp * (np ? pos / np : 0) + ln * (nn ? neg / nn : 0);
}

double smooth_l1_oracle(const Planed& p, const Planed& g, const Planed& m) {
  double sum = 0, n = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (m.data()[i] == 0) continue;
    const double d = std::abs(p.data()[i] - g.data()[i]);
    sum += d < 1 ? 0.5 * d * d : d - 0.5;
    ++n;
  }
  return n ? sum / n : 0;
}

double max_rel_error(const Planed& x, const Planed& analytic,
                     const std::function<double(const Planed&)>& f,
                     const std::function<bool(Eigen::Index)>& skip) {
  constexpr double h = 1e-3;
  double worst = 0;
  Planed y = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (skip(i)) continue;
    y.data()[i] = x.data()[i] + h;
    const double up = f(y);
    y.data()[i] = x.data()[i] - h;
    const double down = f(y);
    y.data()[i] = x.data()[i];
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max(std::abs(numeric), std::abs(analytic.data()[i]));
    if (scale > 1e-12) worst = std::max(worst, std::abs(numeric - analytic.data()[i]) / scale);
  }
  return worst;
}

Outcome a3_gradients() {
  std::mt19937_64 rng(103);
  std::normal_distribution<double> n(0.0, 2.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto random_plane = [&] {
    Planed p(8, 8);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = n(rng);
    return p;
  };
  double bce_worst = 0, sl1_worst = 0;
  for (int k = 0; k < 20; ++k) {
    const Planed logits = random_plane();
    Planed w = Planed::Zero(8, 8);
    for (Eigen::Index i = 0; i < w.size(); ++i)
      if (u(rng) < 0.25) w.data()[i] = 0.1 + 0.9 * u(rng);
    const auto bce = separated_bce(logits, w, 1.0, 30.0, true);
    bce_worst = std::max(bce_worst, max_rel_error(logits, *bce.gradient,
                                                  [&](const Planed& f) { return bce_oracle(f, w, 1.0, 30.0); },
                                                  [](Eigen::Index) { return false; }));

    const Planed pred = random_plane(), target = random_plane();
    Planed mask(8, 8);
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = u(rng) < 0.5;
    const auto sl1 = masked_smooth_l1(pred, target, mask, true);
    sl1_worst = std::max(
        sl1_worst,
        max_rel_error(pred, *sl1.gradient,
                      [&](const Planed& p) { return smooth_l1_oracle(p, target, mask); },
                      [&](Eigen::Index i) {
                        return std::abs(std::abs(pred.data()[i] - target.data()[i]) - 1.0) < 2e-3;
                      }));
  }
  const bool ok = bce_worst < 1e-4 && sl1_worst < 1e-4;
  return {ok, fmt("20 instances, max rel error bce %.2e, smooth-L1 %.2e", bce_worst, sl1_worst)};
}

// A4 ------------------------------------------------------------------------

Outcome a4_composition() {
  std::mt19937_64 rng(104);
  std::normal_distribution<double> n(0.0, 1.0);
  const ImageGeometry geom(128, 128);
  const auto jitter = [&](Planed p) {
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] += n(rng);
    return p;
  };
  int exact = 0;
  for (int k = 0; k < 10; ++k) {
    const auto lines = random_lines<double>(rng, geom, 6, 6.0, false);
    const auto gt = build_gt(lines, geom, 16.0);
    PredBundle<double> pred{gt.tp, gt.sol, jitter(gt.seg.junction), jitter(gt.seg.line)};
    for (auto* s : {&pred.tp, &pred.sol})
      for (auto& p : s->planes) p = jitter(p);
    const auto tp_dec = generate_lines(pred.tp, DecodeConfig{}, geom);
    const auto sol_dec = generate_lines(pred.sol, DecodeConfig{}, geom);
    const double total = total_loss<double>(pred, gt, tp_dec, sol_dec).value();

    const auto stack_sum = [&](const MapStack<double>& p, const MapStack<double>& g,
                               const Planed& mask, const std::vector<DecodedLine<double>>& dec,
                               const Lines& gl) {
      double disp = 0;
      for (Channel c : {Channel::kStartX, Channel::kStartY, Channel::kEndX, Channel::kEndY})
        disp += masked_smooth_l1(p[c], g[c], mask).value;
      return separated_bce(p.center(), g.center(), 1.0, 30.0).value + disp +
             masked_smooth_l1(p.length(), g.length(), mask).value +
             masked_smooth_l1(p.degree(), g.degree(), mask).value +
             matching_loss(match_lines<double>(dec, gl, 5.0)).value;
    };
    const double expected =
        stack_sum(pred.tp, gt.tp, gt.tp_mask, tp_dec, gt.tp_lines) +
        stack_sum(pred.sol, gt.sol, gt.sol_mask, sol_dec, gt.sol_lines) +
        separated_bce(pred.junction, gt.seg.junction, 1.0, 30.0).value +
        separated_bce(pred.line, gt.seg.line, 1.0, 1.0).value;
    exact += total == expected;
  }
  return {exact == 10, fmt("%d/10 instances bit-identical", exact)};
}

// A5 ------------------------------------------------------------------------

Outcome a5_matching_boundary() {
  const Lines gt{Lined(100, 100, 200, 150)};
  const auto matched = [&](Pointd offset) {
    const Lined p(gt[0].start + offset, gt[0].end + offset);
    const std::vector<DecodedLine<double>> d{{p, p.center(), {}}};
    return !match_lines<double>(d, gt, 5.0).pairs.empty();
  };
  const bool at_axis = matched({5.0, 0.0}), at_diag = matched({3.0, 4.0});
  const bool in_axis = matched({4.99, 0.0}), in_diag = matched({2.994, 3.992});
  const bool ok = !at_axis && !at_diag && in_axis && in_diag;
  return {ok, fmt("5.0 px matched: %s/%s, 4.99 px matched: %s/%s", at_axis ? "yes" : "no",
                  at_diag ? "yes" : "no", in_axis ? "yes" : "no", in_diag ? "yes" : "no")};
}

// A6 ------------------------------------------------------------------------

double exhaustive_ap(Lines preds, const Lines& gts, double theta, const ImageGeometry& geom) {
  std::stable_sort(preds.begin(), preds.end(),
                   [](const Lined& a, const Lined& b) { return a.score > b.score; });
  const double sx = 128.0 / geom.width(), sy = 128.0 / geom.height();
  const auto sq = [&](const Pointd& a, const Pointd& b) {
    return std::pow((a.x() - b.x()) * sx, 2) + std::pow((a.y() - b.y()) * sy, 2);
  };
  std::vector<double> prec, rec;
  for (std::size_t n = 1; n <= preds.size(); ++n) {
    std::vector<bool> taken(gts.size());
    double tp = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::ptrdiff_t best = -1;
      double bd = INFINITY;
      for (std::size_t j = 0; j < gts.size(); ++j) {
        const auto& p = preds[i];
        const auto& g = gts[j];
        const double d = std::min(sq(p.start, g.start) + sq(p.end, g.end),
                                  sq(p.start, g.end) + sq(p.end, g.start));
        if (!taken[j] && d <= theta && d < bd) {
          bd = d;
          best = std::ptrdiff_t(j);
        }
      }
      if (best >= 0) {
        taken[std::size_t(best)] = true;
        tp += 1;
      }
    }
    prec.push_back(tp / double(n));
    rec.push_back(tp / double(gts.size()));
  }
  double ap = 0, last = 0;
  for (std::size_t n = 0; n < prec.size(); ++n) {
    ap += (rec[n] - last) * *std::max_element(prec.begin() + std::ptrdiff_t(n), prec.end());
    last = rec[n];
  }
  return ap;
}

Outcome a6_sap_oracle() {
  std::mt19937_64 rng(106);
  std::uniform_int_distribution<int> count(1, 10);
  std::normal_distribution<double> jitter(0.0, 2.5);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  const ImageGeometry geom(320, 320);
  int equal = 0, monotone = 0;
  for (int k = 0; k < 200; ++k) {
    const auto gts = random_lines<double>(rng, geom, count(rng), 4.0, false);
    Lines preds;
    const int np = count(rng);
    for (int i = 0; i < np; ++i) {
      Lined l = gts[std::size_t(rng() % gts.size())];
      l.start += Pointd(jitter(rng), jitter(rng));
      l.end += Pointd(jitter(rng), jitter(rng));
      l.score = score(rng);
      preds.push_back(l);
    }
    const double ap5 = *structural_ap(preds, gts, 5.0, geom);
    const double ap10 = *structural_ap(preds, gts, 10.0, geom);
    equal += ap5 == exhaustive_ap(preds, gts, 5.0, geom) &&
             ap10 == exhaustive_ap(preds, gts, 10.0, geom);
    monotone += ap10 >= ap5;
  }
  return {equal == 200 && monotone == 200,
          fmt("exact match %d/200, AP10 >= AP5 on %d/200", equal, monotone)};
}

// A7 ------------------------------------------------------------------------

Outcome a7_normalization() {
  std::mt19937_64 rng(107);
  const ImageGeometry geom(512, 512);
  double deg_lo = INFINITY, deg_hi = -INFINITY, len_lo = INFINITY, len_hi = -INFINITY;
  double worst_len = 0, worst_deg = 0;
  int total = 0;
  for (int batch = 0; batch < 10; ++batch) {
    const auto lines = random_lines<double>(rng, geom, 100, 1.0, true);
    const auto [stack, mask] = encode_stack<double>(lines, geom);
    for (const auto& l : lines) {
      const int r = int(std::floor(l.center().y() / 2 + 0.5));
      const int c = int(std::floor(l.center().x() / 2 + 0.5));
      const double len = stack.length()(r, c), deg = stack.degree()(r, c);
      deg_lo = std::min(deg_lo, deg);
      deg_hi = std::max(deg_hi, deg);
      len_lo = std::min(len_lo, len);
      len_hi = std::max(len_hi, len);
      const Pointd d = l.end - l.start;
      worst_len = std::max(worst_len, std::abs(denormalize_length(len, geom) - d.norm()));
      worst_deg = std::max(worst_deg, std::abs(denormalize_degree(deg) - std::atan2(d.y(), d.x())));
      ++total;
    }
  }
  const bool ok = total == 1000 && deg_lo >= 0.25 && deg_hi <= 0.75 && len_lo > 0 &&
                  len_hi <= 1 && worst_len <= 1e-6 && worst_deg <= 1e-6;
  return {ok, fmt("%d lines, degree in [%.4f, %.4f], length in [%.4f, %.4f], round trip %.1e/%.1e",
                  total, deg_lo, deg_hi, len_lo, len_hi, worst_len, worst_deg)};
}

// A8 ------------------------------------------------------------------------

Outcome a8_throughput() {
  const auto r = run_decode_bench(256, 200, 100, 108);
  const bool ok = r.decoded_lines == 200 && r.median_ms < 5.0;
  return {ok, fmt("256x256x7, %zu lines, median %.3f ms (min %.3f, p99 %.3f)", r.decoded_lines,
                  r.median_ms, r.min_ms, r.p99_ms)};
}

// A9 ------------------------------------------------------------------------

std::vector<std::uint8_t> bytes_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome a9_formats() {
  const fs::path fixtures = MLSD_FIXTURE_DIR;
  const fs::path tmp = fs::temp_directory_path() / ("mlsd_accept_" + std::to_string(std::random_device{}()));
  fs::create_directories(tmp);
  bool ok = true;

  const Tensor t{{1, 2, 2}, {1.f, 2.f, 3.f, 4.f}};
  write_tensor(t, tmp / "t.mlsd");
  const auto written = bytes_of(tmp / "t.mlsd");
  ok = ok && written.size() == 40 && written == bytes_of(fixtures / "tensors" / "good_1x2x2.mlsd");
  ok = ok && read_tensor(tmp / "t.mlsd") == t;

  std::mt19937_64 rng(109);
  MapStack<float> stack(16, 12);
  std::normal_distribution<float> n(0.f, 3.f);
  for (auto& p : stack.planes)
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = n(rng);
  write_tensor(stack_to_tensor(stack), tmp / "s.mlsd");
  write_tensor(read_tensor(tmp / "s.mlsd"), tmp / "s2.mlsd");
  ok = ok && bytes_of(tmp / "s.mlsd") == bytes_of(tmp / "s2.mlsd");

  const ImageGeometry geom(320, 240);
  AnnotationSet set{{{"x", 320, 240, random_lines<double>(rng, geom, 12, 4.0, false), true}}};
  write_annotations(set, tmp / "a.json");
  const auto back = read_annotations(tmp / "a.json");
  write_annotations(back, tmp / "a2.json");
  ok = ok && back == set && bytes_of(tmp / "a.json") == bytes_of(tmp / "a2.json");

  int rejected = 0, corpus = 0;
  for (const auto& e : fs::directory_iterator(fixtures / "tensors" / "bad")) {
    ++corpus;
    try {
      read_tensor(e.path());
    } catch (const TensorFormatError&) {
      ++rejected;
    }
  }
  for (const auto& e : fs::directory_iterator(fixtures / "annotations" / "bad")) {
    ++corpus;
    try {
      read_annotations(e.path());
    } catch (const AnnotationError&) {
      ++rejected;
    }
  }
  fs::remove_all(tmp);
  ok = ok && corpus >= 6 && rejected == corpus;
  return {ok, fmt("round trips %s, malformed corpus rejected %d/%d", ok ? "byte-exact" : "broken",
                  rejected, corpus)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"A1 round trip", a1_round_trip},
      {"A2 SoL constants", a2_sol_constants},
      {"A3 gradient checks", a3_gradients},
      {"A4 loss composition", a4_composition},
      {"A5 matching boundary", a5_matching_boundary},
      {"A6 sAP oracle", a6_sap_oracle},
      {"A7 normalization ranges", a7_normalization},
      {"A8 decode throughput", a8_throughput},
      {"A9 format contracts", a9_formats},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.passed ? "PASS" : "FAIL", name, o.detail.c_str());
    failed += !o.passed;
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
