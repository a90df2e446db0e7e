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

#include "mlsd/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include "mlsd/io.hpp"
#include "mlsd/loss.hpp"
#include "mlsd/metrics.hpp"
#include "mlsd/synthetic.hpp"

namespace mlsd {

namespace {

using Rng = std::mt19937_64;
constexpr int kGridSize = 8;
constexpr double kStep = 1e-3;
constexpr double kGradientTolerance = 1e-4;

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

Planed random_plane(Rng& rng, double stddev) {
  std::normal_distribution<double> n(0.0, stddev);
  Planed p(kGridSize, kGridSize);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = n(rng);
  return p;
}

double relative_error(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  return scale < 1e-12 ? 0.0 : std::abs(analytic - numeric) / scale;
}

// Max relative error between `gradient` and central differences of `loss` w.r.t. `x`,
// skipping cells where `skip` returns true.
double gradient_error(Planed x, const Planed& gradient, const std::function<double(const Planed&)>& loss,
                      const std::function<bool(Eigen::Index)>& skip) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (skip(i)) continue;
    const double saved = x.data()[i];
    x.data()[i] = saved + kStep;
    const double up = loss(x);
    x.data()[i] = saved - kStep;
    const double down = loss(x);
    x.data()[i] = saved;
    worst = std::max(worst, relative_error(gradient.data()[i], (up - down) / (2 * kStep)));
  }
  return worst;
}

CheckResult check_bce_gradient(Rng& rng, bool faulty) {
  double worst = 0.0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 20; ++n) {
    const Planed logits = random_plane(rng, 2.0);
    Planed gt = Planed::Zero(kGridSize, kGridSize);
    for (Eigen::Index i = 0; i < gt.size(); ++i)
      if (u(rng) < 0.2) gt.data()[i] = 0.05 + 0.95 * u(rng);
    gt(0, 0) = 1.0;
    auto analytic = *separated_bce(logits, gt, 1.0, 30.0, true).gradient;
    if (faulty) analytic *= 1.01;
    const auto loss = [&](const Planed& f) { return separated_bce(f, gt, 1.0, 30.0).value; };
    worst = std::max(worst, gradient_error(logits, analytic, loss, [](Eigen::Index) { return false; }));
  }
  return {"bce_gradient", worst < kGradientTolerance, "max rel err " + sci(worst)};
}

CheckResult check_smooth_l1_gradient(Rng& rng, bool faulty) {
  double worst = 0.0;
  std::bernoulli_distribution coin(0.5);
  for (int n = 0; n < 20; ++n) {
    const Planed pred = random_plane(rng, 1.5), gt = random_plane(rng, 1.5);
    Planed mask(kGridSize, kGridSize);
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = coin(rng) ? 1.0 : 0.0;
    auto analytic = *masked_smooth_l1(pred, gt, mask, true).gradient;
    if (faulty) analytic *= 1.01;
    const auto loss = [&](const Planed& p) { return masked_smooth_l1(p, gt, mask).value; };
    const auto near_kink = [&](Eigen::Index i) {
      return std::abs(std::abs(pred.data()[i] - gt.data()[i]) - 1.0) < 2 * kStep;
    };
    worst = std::max(worst, gradient_error(pred, analytic, loss, near_kink));
  }
  return {"smooth_l1_gradient", worst < kGradientTolerance, "max rel err " + sci(worst)};
}

CheckResult check_decode_roundtrip(Rng& rng) {
  const ImageGeometry geom(512, 512);
  const auto lines = random_lines<double>(rng, geom, 100, 8.0, true);
  const auto gt = build_gt(lines, geom, 64.0);
  DecodeConfig cfg;
  cfg.input_mode = InputMode::kRawScores;
  cfg.score_threshold = 0.5;
  const auto decoded = generate_lines(gt.tp, cfg, geom);

  std::vector<bool> used(lines.size());
  double worst = 0.0;
  std::size_t recovered = 0;
  for (const auto& d : decoded)
    for (std::size_t j = 0; j < lines.size(); ++j) {
      const double err = std::max((d.line.start - lines[j].start).norm(),
                                  (d.line.end - lines[j].end).norm());
      if (!used[j] && err <= 1e-3) {
        used[j] = true;
        ++recovered;
        worst = std::max(worst, err);
        break;
      }
    }
  const bool ok = recovered == lines.size() && decoded.size() == lines.size();
  return {"decode_roundtrip", ok,
          std::to_string(recovered) + "/" + std::to_string(lines.size()) + " lines, max err " +
              sci(worst)};
}

CheckResult check_sol_constants() {
  const double mu = 320 * 0.125;
  const auto short_parts = sol_split(Lined(0, 0, 40, 0), mu);
  const auto long_parts = sol_split(Lined(0, 0, 80, 0), mu);
  bool ok = mu == 40.0 && short_parts.size() == 1 && long_parts.size() == 3;
  for (const auto& p : long_parts) ok = ok && std::abs(p.length() - 40.0) < 1e-12;
  return {"sol_constants", ok, "mu=" + std::to_string(int(mu)) + " parts=" +
                                   std::to_string(long_parts.size())};
}

CheckResult check_matching_boundary() {
  const Lined gt(100, 100, 200, 100);
  const auto shifted = [](double d) {
    return DecodedLine<double>{Lined(100, 100 + d, 200, 100 + d), Pointd(150, 100 + d), {}};
  };
  const std::vector<Lined> gts{gt};
  const std::vector<DecodedLine<double>> at{shifted(5.0)}, inside{shifted(4.99)};
  const auto m_at = match_lines<double>(at, gts, 5.0);
  const auto m_in = match_lines<double>(inside, gts, 5.0);
  const bool ok = m_at.pairs.empty() && m_in.pairs.size() == 1;
  return {"matching_boundary", ok,
          "d=5.0 -> " + std::to_string(m_at.pairs.size()) + ", d=4.99 -> " +
              std::to_string(m_in.pairs.size())};
}

// Re-runs the ranked assignment from scratch for every prefix of the ranking.
double brute_force_sap(const std::vector<Lined>& preds, const std::vector<Lined>& gts,
                       double theta, const ImageGeometry& geom) {
  std::vector<Lined> p = to_sap_frame(preds, geom), g = to_sap_frame(gts, geom);
  std::stable_sort(p.begin(), p.end(), [](const Lined& a, const Lined& b) { return a.score > b.score; });
  std::vector<double> precision, recall;
  for (std::size_t k = 1; k <= p.size(); ++k) {
    std::vector<bool> taken(g.size());
    std::size_t tp = 0;
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t pick = g.size();
      for (std::size_t j = 0; j < g.size(); ++j) {
        const double d = structural_distance(p[i], g[j]);
        if (!taken[j] && d <= theta && (pick == g.size() || d < structural_distance(p[i], g[pick])))
          pick = j;
      }
      if (pick < g.size()) {
        taken[pick] = true;
        ++tp;
      }
    }
    precision.push_back(double(tp) / double(k));
    recall.push_back(double(tp) / double(g.size()));
  }
  double ap = 0.0, prev = 0.0;
  for (std::size_t k = 0; k < precision.size(); ++k) {
    const double best = *std::max_element(precision.begin() + std::ptrdiff_t(k), precision.end());
    ap += (recall[k] - prev) * best;
    prev = recall[k];
  }
  return ap;
}

CheckResult check_sap_oracle(Rng& rng) {
  const ImageGeometry geom(128, 128);
  std::uniform_int_distribution<int> count(1, 10);
  std::uniform_real_distribution<double> jitter(-3.0, 3.0), score(0.0, 1.0);
  int mismatches = 0, non_monotone = 0;
  for (int n = 0; n < 50; ++n) {
    const auto gts = random_lines<double>(rng, geom, count(rng), 4.0, false);
    std::vector<Lined> preds;
    const int n_preds = count(rng);
    for (int i = 0; i < n_preds; ++i) {
      Lined l = gts[std::size_t(i) % gts.size()];
      l.start += Pointd(jitter(rng), jitter(rng));
      l.end += Pointd(jitter(rng), jitter(rng));
      l.score = score(rng);
      preds.push_back(l);
    }
    const double ap5 = *structural_ap(preds, gts, 5.0, geom);
    const double ap10 = *structural_ap(preds, gts, 10.0, geom);
    mismatches += ap5 != brute_force_sap(preds, gts, 5.0, geom);
    mismatches += ap10 != brute_force_sap(preds, gts, 10.0, geom);
    non_monotone += ap10 < ap5;
  }
  return {"sap_oracle", mismatches == 0 && non_monotone == 0,
          std::to_string(mismatches) + " mismatches, " + std::to_string(non_monotone) +
              " non-monotone"};
}

CheckResult check_tensor_roundtrip(Rng& rng) {
  std::uniform_int_distribution<std::uint32_t> dim(1, 6);
  std::normal_distribution<float> value(0.0f, 10.0f);
  bool ok = true;
  for (int n = 0; n < 10; ++n) {
    Tensor t;
    t.dims.resize(std::size_t(1 + n % 4));
    for (auto& d : t.dims) d = dim(rng);
    t.data.resize(t.element_count());
    for (auto& v : t.data) v = value(rng);
    const auto bytes = encode_tensor(t);
    ok = ok && decode_tensor(bytes) == t && encode_tensor(decode_tensor(bytes)) == bytes;
  }
  return {"tensor_roundtrip", ok, "10 tensors"};
}

CheckResult check_loss_composition(Rng& rng) {
  const ImageGeometry geom(64, 64);
  bool ok = true;
  for (int n = 0; n < 5; ++n) {
    const auto lines = random_lines<double>(rng, geom, 4, 6.0, false);
    const auto gt = build_gt(lines, geom, 8.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    const auto jitter = [&](const Planed& p) {
      return Planed(p.unaryExpr([&](double v) { return v + noise(rng); }));
    };
    PredBundle<double> pred;
    pred.tp = gt.tp;
    pred.sol = gt.sol;
    for (auto* s : {&pred.tp, &pred.sol})
      for (auto& plane : s->planes) plane = jitter(plane);
    pred.junction = jitter(gt.seg.junction);
    pred.line = jitter(gt.seg.line);
    DecodeConfig cfg;
    const auto tp_decoded = generate_lines(pred.tp, cfg, geom);
    const auto sol_decoded = generate_lines(pred.sol, cfg, geom);
    const auto total = total_loss<double>(pred, gt, tp_decoded, sol_decoded);
    const auto tp = tp_loss<double>(pred.tp, gt, tp_decoded);
    const auto sol = sol_loss<double>(pred.sol, gt, sol_decoded);
    const double junc = separated_bce(pred.junction, gt.seg.junction, 1.0, 30.0).value;
    const double line = separated_bce(pred.line, gt.seg.line, 1.0, 1.0).value;
    ok = ok && total.value() == tp.value() + sol.value() + junc + line;
  }
  return {"loss_composition", ok, "5 instances"};
}

}  // namespace

std::vector<CheckResult> run_selfcheck(const SelfCheckOptions& options) {
  Rng rng(options.seed);
  std::vector<CheckResult> results;
  results.push_back(check_bce_gradient(rng, options.inject_fault == "bce_gradient"));
  results.push_back(check_smooth_l1_gradient(rng, options.inject_fault == "smooth_l1_gradient"));
  results.push_back(check_decode_roundtrip(rng));
  results.push_back(check_sol_constants());
  results.push_back(check_matching_boundary());
  results.push_back(check_sap_oracle(rng));
  results.push_back(check_tensor_roundtrip(rng));
  results.push_back(check_loss_composition(rng));
  return results;
}

std::string format_selfcheck(const SelfCheckOptions& options,
                             const std::vector<CheckResult>& results) {
  std::ostringstream out;
  std::size_t passed = 0;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
    passed += r.passed;
  }
  out << "selfcheck seed=" << options.seed << ": " << passed << "/" << results.size()
      << " passed\n";
  return out.str();
}

}  // namespace mlsd
