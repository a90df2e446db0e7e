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

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "mlsd/geometry.hpp"

namespace mlsd {

struct PrPoint {
  double threshold;
  double precision;
  double recall;
};

/// All-point interpolated area under a precision-recall curve. Points are sorted by recall
/// first; precision at each recall is replaced by the maximum precision at any recall >= it.
double ap_from_pr(std::span<const PrPoint> points);

/// Squared distance between two lines in the sAP sense: the smaller of the two endpoint
/// pairings of summed squared endpoint distances.
double structural_distance(const Lined& a, const Lined& b);

/// Rescales lines into the 128 x 128 frame used for structural matching.
std::vector<Lined> to_sap_frame(std::span<const Lined> lines, const ImageGeometry& geom);

/// Per prediction, in descending-score order: its score and whether it is a true positive.
/// A prediction hits when an unconsumed GT lies within `theta` (128-frame squared distance);
/// it consumes the nearest such GT.
struct RankedHit {
  double score;
  bool hit;
};
std::vector<RankedHit> structural_hits(std::span<const Lined> preds, std::span<const Lined> gts,
                                       double theta, const ImageGeometry& geom);

/// Structural AP for one image. nullopt when there is no GT.
std::optional<double> structural_ap(std::span<const Lined> preds, std::span<const Lined> gts,
                                    double theta, const ImageGeometry& geom);

/// Exact squared Euclidean distance transform: per pixel, the squared distance to the
/// nearest set pixel of `mask` (row-major, width x height); infinity if none is set.
std::vector<double> squared_distance_transform(std::span<const std::uint8_t> mask, int width,
                                               int height);

/// Binary raster of lines at input resolution, 8-connected 1-px tracing.
std::vector<std::uint8_t> rasterize(std::span<const Lined> lines, const ImageGeometry& geom);

/// Pixel F-score with a distance tolerance, maximized over score-decile thresholds.
/// nullopt when there is no GT.
std::optional<double> heatmap_fscore(std::span<const Lined> preds, std::span<const Lined> gts,
                                     const ImageGeometry& geom, double tolerance = 2.0);

struct EvalImage {
  ImageGeometry geom;
  std::vector<Lined> preds;
  std::vector<Lined> gts;
};

struct EvalReport {
  std::map<double, std::optional<double>> sap;  // theta -> AP
  std::optional<double> f_heatmap;
  std::vector<PrPoint> pr_samples;  // ranked PR curve at the largest theta
  std::size_t images = 0;
  std::size_t predictions = 0;
  std::size_t ground_truth = 0;
};

/// Dataset evaluation: predictions of all images are ranked together for sAP, and pixel
/// counts are pooled across images for the heatmap F-score.
EvalReport evaluate(std::span<const EvalImage> images, std::span<const double> thetas,
                    double tolerance = 2.0);

}  // namespace mlsd
