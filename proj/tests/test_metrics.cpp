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

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "mlsd/metrics.hpp"
#include "mlsd/synthetic.hpp"

using namespace mlsd;

namespace {

using Lines = std::vector<Lined>;

// Exhaustive evaluation: true-positive count is recomputed from scratch for every rank prefix.
double brute_force_ap(Lines preds, const Lines& gts, double theta, const ImageGeometry& geom) {
  std::stable_sort(preds.begin(), preds.end(),
                   [](const Lined& a, const Lined& b) { return a.score > b.score; });
  const double sx = 128.0 / geom.width(), sy = 128.0 / geom.height();
  const auto dist = [&](const Lined& p, const Lined& g) {
    const auto sq = [&](const Pointd& a, const Pointd& b) {
      const double dx = (a.x() - b.x()) * sx, dy = (a.y() - b.y()) * sy;
      return dx * dx + dy * dy;
    };
    return std::min(sq(p.start, g.start) + sq(p.end, g.end),
                    sq(p.start, g.end) + sq(p.end, g.start));
  };
  std::vector<double> precision, recall;
  for (std::size_t n = 1; n <= preds.size(); ++n) {
    std::vector<bool> used(gts.size());
    int tp = 0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = -1;
      double bd = INFINITY;
      for (std::size_t j = 0; j < gts.size(); ++j) {
        const double d = dist(preds[i], gts[j]);
        if (!used[j] && d <= theta && d < bd) {
          bd = d;
          best = int(j);
        }
      }
      if (best >= 0) {
        used[std::size_t(best)] = true;
        ++tp;
      }
    }
    precision.push_back(double(tp) / double(n));
    recall.push_back(double(tp) / double(gts.size()));
  }
  double ap = 0, prev = 0;
  for (std::size_t n = 0; n < precision.size(); ++n) {
    const double envelope = *std::max_element(precision.begin() + long(n), precision.end());
    ap += (recall[n] - prev) * envelope;
    prev = recall[n];
  }
  return ap;
}

Lines scored_noisy_copies(std::mt19937_64& rng, const Lines& gts, int count, double sigma) {
  std::normal_distribution<double> n(0.0, sigma);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Lines out;
  for (int i = 0; i < count; ++i) {
    Lined l = gts[std::size_t(i) % gts.size()];
    l.start += Pointd(n(rng), n(rng));
    l.end += Pointd(n(rng), n(rng));
    l.score = u(rng);
    out.push_back(l);
  }
  return out;
}

Lined hline(double y, double x0, double x1, double score = 1.0) {
  return Lined(x0, y, x1, y, score);
}

}  // namespace

TEST_CASE("ap_from_pr") {
  const std::vector<PrPoint> one{{1.0, 1.0, 1.0}};
  CHECK(ap_from_pr(one) == 1.0);
  const std::vector<PrPoint> two{{0.9, 1.0, 0.5}, {0.1, 0.5, 1.0}};
  CHECK(ap_from_pr(two) == doctest::Approx(0.75));
  CHECK(ap_from_pr({}) == 0.0);
}

TEST_CASE("structural_distance") {
  const Lined a(0, 0, 10, 0), b(10, 1, 0, 1);
  CHECK(structural_distance(a, b) == 2.0);
  CHECK(structural_distance(a, a) == 0.0);
}

TEST_CASE("structural_ap examples") {
  const ImageGeometry geom(128, 128);
  const Lines gts{Lined(10, 10, 60, 10), Lined(20, 30, 20, 90), Lined(70, 70, 120, 100)};
  CHECK(structural_ap(gts, gts, 5.0, geom) == 1.0);
  CHECK(structural_ap({}, gts, 5.0, geom) == 0.0);
  CHECK_FALSE(structural_ap(gts, {}, 5.0, geom).has_value());

  Lines preds = gts;
  preds.push_back(Lined(100, 10, 120, 20, 0.1));
  const double ap = *structural_ap(preds, gts, 5.0, geom);
  CHECK(ap == brute_force_ap(preds, gts, 5.0, geom));
  CHECK(ap == 1.0);

  // threshold is inclusive: squared distance exactly theta hits
  const Lines shifted{Lined(10, 11, 60, 11)};
  const Lines one{gts[0]};
  CHECK(*structural_ap(shifted, one, 2.0, geom) == 1.0);
  CHECK(*structural_ap(shifted, one, 1.99, geom) == 0.0);

  // distances are measured in the 128-frame
  const ImageGeometry big(512, 512);
  const Lines big_gt{Lined(40, 40, 240, 40)}, big_pred{Lined(40, 44, 240, 44)};
  CHECK(*structural_ap(big_pred, big_gt, 2.0, big) == 1.0);
  CHECK(*structural_ap(big_pred, big_gt, 1.99, big) == 0.0);
}

TEST_CASE("structural_ap equals brute force and is monotone in theta") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> count(1, 10);
  for (const ImageGeometry geom : {ImageGeometry(128, 128), ImageGeometry(320, 240)}) {
    for (int n = 0; n < 200; ++n) {
      const auto gts = random_lines<double>(rng, geom, count(rng), 4.0, false);
      const auto preds = scored_noisy_copies(rng, gts, count(rng), 2.0);
      const double ap5 = *structural_ap(preds, gts, 5.0, geom);
      const double ap10 = *structural_ap(preds, gts, 10.0, geom);
      CHECK(ap5 == brute_force_ap(preds, gts, 5.0, geom));
      CHECK(ap10 == brute_force_ap(preds, gts, 10.0, geom));
      CHECK(ap10 >= ap5);
      CHECK(ap5 >= 0.0);
      CHECK(ap10 <= 1.0);
    }
  }
}

TEST_CASE("metrics are invariant to GT order and endpoint swaps") {
  std::mt19937_64 rng(22);
  const ImageGeometry geom(64, 64);
  for (int n = 0; n < 50; ++n) {
    auto gts = random_lines<double>(rng, geom, 6, 4.0, false);
    const auto preds = scored_noisy_copies(rng, gts, 8, 1.5);
    const double ap = *structural_ap(preds, gts, 10.0, geom);
    const double f = *heatmap_fscore(preds, gts, geom);

    auto swapped = preds;
    for (auto& l : swapped) std::swap(l.start, l.end);
    std::shuffle(gts.begin(), gts.end(), rng);
    for (auto& l : gts) std::swap(l.start, l.end);
    CHECK(*structural_ap(swapped, gts, 10.0, geom) == ap);
    CHECK(*heatmap_fscore(swapped, gts, geom) == f);
  }
}

TEST_CASE("squared_distance_transform equals brute force") {
  std::mt19937_64 rng(23);
  std::bernoulli_distribution coin(0.05);
  for (int n = 0; n < 20; ++n) {
    const int w = 7 + n, h = 5 + 2 * n;
    std::vector<std::uint8_t> mask(std::size_t(w * h));
    for (auto& m : mask) m = coin(rng);
    const auto dt = squared_distance_transform(mask, w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double best = INFINITY;
        for (int v = 0; v < h; ++v)
          for (int u = 0; u < w; ++u)
            if (mask[std::size_t(v * w + u)])
              best = std::min(best, double((x - u) * (x - u) + (y - v) * (y - v)));
        CHECK(dt[std::size_t(y * w + x)] == best);
      }
  }
}

TEST_CASE("rasterize traces at input resolution") {
  const ImageGeometry geom(32, 32);
  const Lines l{hline(5, 2, 29), Lined(40, -3, 50, -1)};
  const auto r = rasterize(l, geom);
  int count = 0;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      if (r[std::size_t(y * 32 + x)]) {
        ++count;
        CHECK(((y == 5 && x >= 2 && x <= 29) || (y == 0 && x == 31)));
      }
  CHECK(count >= 29);  // out-of-frame line clamps onto the corner
}

TEST_CASE("heatmap_fscore examples") {
  const ImageGeometry geom(32, 32);
  const Lines gts{hline(5, 2, 29), hline(20, 2, 29)};
  CHECK(*heatmap_fscore(gts, gts, geom) == 1.0);
  CHECK_FALSE(heatmap_fscore(gts, {}, geom).has_value());
  CHECK(*heatmap_fscore({}, gts, geom) == 0.0);

  const Lines far{Lined(2, 28, 2, 31), Lined(29, 28, 29, 31)};
  const Lines near_top{hline(1, 2, 29)};
  CHECK(*heatmap_fscore(far, near_top, geom) == 0.0);

  // 28 predicted pixels, all within 2 px of GT; 28 of 56 GT pixels recalled
  const Lines half{hline(5, 2, 29)};
  CHECK(*heatmap_fscore(half, gts, geom) == doctest::Approx(2.0 / 3.0));

  // one line 2 px off (inside tolerance), one 5 px off (outside)
  const Lines offset{hline(7, 2, 29), hline(25, 2, 29)};
  CHECK(*heatmap_fscore(offset, gts, geom) == doctest::Approx(0.5));

  // the best threshold drops a low-score false positive
  const Lines ranked{hline(5, 2, 29, 0.9), hline(20, 2, 29, 0.9), hline(12, 2, 29, 0.1)};
  CHECK(*heatmap_fscore(ranked, gts, geom) == 1.0);
}

TEST_CASE("evaluate pools images") {
  const ImageGeometry geom(128, 128);
  const Lines a{Lined(10, 10, 60, 10), Lined(20, 30, 20, 90)};
  const Lines b{Lined(70, 70, 120, 100)};
  std::vector<EvalImage> images{{geom, a, a}, {geom, b, b}};
  const std::vector<double> thetas{5.0, 10.0};
  const auto report = evaluate(images, thetas);
  CHECK(report.images == 2);
  CHECK(report.predictions == 3);
  CHECK(report.ground_truth == 3);
  CHECK(*report.sap.at(5.0) == 1.0);
  CHECK(*report.sap.at(10.0) == 1.0);
  CHECK(*report.f_heatmap == 1.0);
  REQUIRE_FALSE(report.pr_samples.empty());
  CHECK(report.pr_samples.back().recall == 1.0);

  // ranking across images: a high-scoring miss in one image lowers precision for both
  Lines miss{Lined(100, 10, 120, 40, 0.95)};
  Lines b_scored = b;
  b_scored[0].score = 0.5;
  images = {{geom, a, a}, {geom, {miss[0], b_scored[0]}, b}};
  const auto pooled = evaluate(images, thetas);
  Lines all = a;
  all.push_back(miss[0]);
  all.push_back(b_scored[0]);
  Lines all_gt = a;
  all_gt.push_back(b[0]);
  CHECK(*pooled.sap.at(5.0) == doctest::Approx(brute_force_ap(all, all_gt, 5.0, geom)));

  const std::vector<EvalImage> empty{{geom, a, {}}};
  const auto none = evaluate(empty, thetas);
  CHECK_FALSE(none.sap.at(5.0).has_value());
  CHECK_FALSE(none.f_heatmap.has_value());
}
