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

#include "mlsd/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "mlsd/raster.hpp"

namespace mlsd {

namespace {

constexpr double kSapFrame = 128.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> rank_by_score(std::span<const Lined> lines) {
  std::vector<std::size_t> order(lines.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lines[a].score > lines[b].score; });
  return order;
}

std::vector<PrPoint> ranked_curve(std::span<const RankedHit> ranked, std::size_t n_gt) {
  std::vector<PrPoint> curve;
  curve.reserve(ranked.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    tp += ranked[i].hit;
    curve.push_back({ranked[i].score, double(tp) / double(i + 1), double(tp) / double(n_gt)});
  }
  return curve;
}

// Felzenszwalb-Huttenlocher lower envelope of parabolas along one line.
// Unset samples carry kFar so the envelope arithmetic stays finite.
constexpr double kFar = 1e20;

void distance_transform_1d(const std::vector<double>& f, std::vector<double>& d) {
  const std::size_t n = f.size();
  std::vector<std::size_t> v(n, 0);
  std::vector<double> z(n + 1);
  std::size_t k = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (std::size_t q = 1; q < n; ++q) {
    const auto dq = double(q);
    double s;
    for (;;) {
      const auto dp = double(v[k]);
      s = ((f[q] + dq * dq) - (f[v[k]] + dp * dp)) / (2.0 * (dq - dp));
      if (s > z[k]) break;
      --k;  // z[0] is -inf, so this stops at k == 0
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  d.resize(n);
  std::size_t j = 0;
  for (std::size_t q = 0; q < n; ++q) {
    while (z[j + 1] < double(q)) ++j;
    const double dq = double(q) - double(v[j]);
    d[q] = dq * dq + f[v[j]];
  }
}

struct PixelCounts {
  std::size_t pred_pixels = 0, pred_correct = 0;
  std::size_t gt_pixels = 0, gt_recalled = 0;

  PixelCounts& operator+=(const PixelCounts& o) {
    pred_pixels += o.pred_pixels;
    pred_correct += o.pred_correct;
    gt_pixels += o.gt_pixels;
    gt_recalled += o.gt_recalled;
    return *this;
  }
};

PixelCounts count_pixels(std::span<const Lined> preds, const std::vector<std::uint8_t>& gt_raster,
                         const std::vector<double>& gt_dt, const ImageGeometry& geom,
                         double tolerance) {
  const auto pred_raster = rasterize(preds, geom);
  const auto pred_dt = squared_distance_transform(pred_raster, geom.width(), geom.height());
  const double tol2 = tolerance * tolerance;
  PixelCounts c;
  for (std::size_t i = 0; i < pred_raster.size(); ++i) {
    if (pred_raster[i]) {
      ++c.pred_pixels;
      c.pred_correct += gt_dt[i] <= tol2;
    }
    if (gt_raster[i]) {
      ++c.gt_pixels;
      c.gt_recalled += pred_dt[i] <= tol2;
    }
  }
  return c;
}

double fscore(const PixelCounts& c) {
  const double p = c.pred_pixels ? double(c.pred_correct) / double(c.pred_pixels) : 0.0;
  const double r = c.gt_pixels ? double(c.gt_recalled) / double(c.gt_pixels) : 0.0;
  return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

// Lower deciles of the score distribution, deduplicated, ascending.
std::vector<double> decile_thresholds(std::vector<double> scores) {
  std::vector<double> out;
  if (scores.empty()) return out;
  std::sort(scores.begin(), scores.end());
  for (int q = 0; q < 10; ++q) {
    const auto idx = static_cast<std::size_t>(q) * scores.size() / 10;
    out.push_back(scores[idx]);
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Lined> above(std::span<const Lined> lines, double threshold) {
  std::vector<Lined> out;
  for (const auto& l : lines)
    if (l.score >= threshold) out.push_back(l);
  return out;
}

}  // namespace

double ap_from_pr(std::span<const PrPoint> points) {
  if (points.empty()) return 0.0;
  std::vector<PrPoint> sorted(points.begin(), points.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const PrPoint& a, const PrPoint& b) { return a.recall < b.recall; });
  std::vector<double> envelope(sorted.size());
  double best = 0.0;
  for (std::size_t i = sorted.size(); i-- > 0;) {
    best = std::max(best, sorted[i].precision);
    envelope[i] = best;
  }
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    ap += (sorted[i].recall - prev_recall) * envelope[i];
    prev_recall = sorted[i].recall;
  }
  return ap;
}

double structural_distance(const Lined& a, const Lined& b) {
  const double same = (a.start - b.start).squaredNorm() + (a.end - b.end).squaredNorm();
  const double swapped = (a.start - b.end).squaredNorm() + (a.end - b.start).squaredNorm();
  return std::min(same, swapped);
}

std::vector<Lined> to_sap_frame(std::span<const Lined> lines, const ImageGeometry& geom) {
  return rescale(lines, kSapFrame / geom.width(), kSapFrame / geom.height());
}

std::vector<RankedHit> structural_hits(std::span<const Lined> preds, std::span<const Lined> gts,
                                       double theta, const ImageGeometry& geom) {
  const auto p = to_sap_frame(preds, geom);
  const auto g = to_sap_frame(gts, geom);
  std::vector<bool> consumed(g.size(), false);
  std::vector<RankedHit> ranked;
  ranked.reserve(p.size());
  for (std::size_t i : rank_by_score(p)) {
    double best = kInf;
    std::size_t best_j = g.size();
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (consumed[j]) continue;
      const double d = structural_distance(p[i], g[j]);
      if (d <= theta && d < best) {
        best = d;
        best_j = j;
      }
    }
    if (best_j < g.size()) consumed[best_j] = true;
    ranked.push_back({p[i].score, best_j < g.size()});
  }
  return ranked;
}

std::optional<double> structural_ap(std::span<const Lined> preds, std::span<const Lined> gts,
                                    double theta, const ImageGeometry& geom) {
  if (gts.empty()) return std::nullopt;
  const auto ranked = structural_hits(preds, gts, theta, geom);
  const auto curve = ranked_curve(ranked, gts.size());
  return ap_from_pr(curve);
}

std::vector<double> squared_distance_transform(std::span<const std::uint8_t> mask, int width,
                                               int height) {
  const auto w = std::size_t(width), h = std::size_t(height);
  std::vector<double> out(w * h, kInf);
  std::vector<double> f, d;
  // columns, then rows
  f.resize(h);
  for (std::size_t x = 0; x < w; ++x) {
    for (std::size_t y = 0; y < h; ++y) f[y] = mask[y * w + x] ? 0.0 : kFar;
    distance_transform_1d(f, d);
    for (std::size_t y = 0; y < h; ++y) out[y * w + x] = d[y];
  }
  f.resize(w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) f[x] = out[y * w + x];
    distance_transform_1d(f, d);
    for (std::size_t x = 0; x < w; ++x) out[y * w + x] = d[x] >= kFar ? kInf : d[x];
  }
  return out;
}

std::vector<std::uint8_t> rasterize(std::span<const Lined> lines, const ImageGeometry& geom) {
  const int w = geom.width(), h = geom.height();
  std::vector<std::uint8_t> raster(std::size_t(w) * std::size_t(h), 0);
  const auto px = [](double v, int limit) {
    return static_cast<int>(std::clamp<long>(round_half_away(v), 0, limit - 1));
  };
  for (const auto& l : lines) {
    std::array<int, 2> a{px(l.start.x(), w), px(l.start.y(), h)};
    std::array<int, 2> b{px(l.end.x(), w), px(l.end.y(), h)};
    if (b < a) std::swap(a, b);
    trace_line(a[0], a[1], b[0], b[1],
               [&](int x, int y) { raster[std::size_t(y) * std::size_t(w) + std::size_t(x)] = 1; });
  }
  return raster;
}

std::optional<double> heatmap_fscore(std::span<const Lined> preds, std::span<const Lined> gts,
                                     const ImageGeometry& geom, double tolerance) {
  const EvalImage image{geom, {preds.begin(), preds.end()}, {gts.begin(), gts.end()}};
  return evaluate(std::span<const EvalImage>(&image, 1), {}, tolerance).f_heatmap;
}

EvalReport evaluate(std::span<const EvalImage> images, std::span<const double> thetas,
                    double tolerance) {
  EvalReport report;
  report.images = images.size();
  std::vector<double> scores;
  for (const auto& im : images) {
    report.predictions += im.preds.size();
    report.ground_truth += im.gts.size();
    for (const auto& l : im.preds) scores.push_back(l.score);
  }

  for (std::size_t t = 0; t < thetas.size(); ++t) {
    const double theta = thetas[t];
    if (report.ground_truth == 0) {
      report.sap[theta] = std::nullopt;
      continue;
    }
    std::vector<RankedHit> pooled;
    for (const auto& im : images) {
      const auto hits = structural_hits(im.preds, im.gts, theta, im.geom);
      pooled.insert(pooled.end(), hits.begin(), hits.end());
    }
    std::stable_sort(pooled.begin(), pooled.end(),
                     [](const RankedHit& a, const RankedHit& b) { return a.score > b.score; });
    auto curve = ranked_curve(pooled, report.ground_truth);
    report.sap[theta] = ap_from_pr(curve);
    if (t + 1 == thetas.size()) report.pr_samples = std::move(curve);
  }

  if (report.ground_truth == 0) return report;
  std::vector<std::vector<std::uint8_t>> gt_rasters;
  std::vector<std::vector<double>> gt_dts;
  for (const auto& im : images) {
    gt_rasters.push_back(rasterize(im.gts, im.geom));
    gt_dts.push_back(
        squared_distance_transform(gt_rasters.back(), im.geom.width(), im.geom.height()));
  }
  double best = 0.0;
  for (double threshold : decile_thresholds(scores)) {
    PixelCounts total;
    for (std::size_t i = 0; i < images.size(); ++i)
      total += count_pixels(above(images[i].preds, threshold), gt_rasters[i], gt_dts[i],
                            images[i].geom, tolerance);
    best = std::max(best, fscore(total));
  }
  report.f_heatmap = best;
  return report;
}

}  // namespace mlsd
