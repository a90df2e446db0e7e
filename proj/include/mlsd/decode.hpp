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

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mlsd/maps.hpp"

namespace mlsd {

enum class InputMode { kLogits, kRawScores };

struct DecodeConfig {
  double score_threshold = 0.2;
  int top_k = 200;
  InputMode input_mode = InputMode::kLogits;
  int nms_window = 3;

  void validate() const {
    if (!(score_threshold > 0.0 && score_threshold < 1.0))
      throw ConfigError("score threshold must lie in (0, 1), got " +
                        std::to_string(score_threshold));
    if (top_k < 1) throw ConfigError("top_k must be at least 1");
    if (nms_window < 1 || nms_window % 2 == 0)
      throw ConfigError("NMS window must be odd and positive, got " + std::to_string(nms_window));
  }
};

template <typename Scalar>
struct ScoredCenter {
  Cell cell;
  Scalar score;
};

/// A generated line together with the center it was generated from (input coordinates).
template <typename Scalar>
struct DecodedLine {
  LineSegment<Scalar> line;
  Point<Scalar> center;
  Cell cell;
};

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

namespace detail {

// A cell survives when no neighbour is larger and no neighbour earlier in row-major
// order is equal to it.
template <typename Scalar>
bool is_local_max(const Plane<Scalar>& m, int r, int c, int half) {
  const Scalar v = m(r, c);
  const int rows = static_cast<int>(m.rows()), cols = static_cast<int>(m.cols());
  const int r0 = std::max(r - half, 0), r1 = std::min(r + half, rows - 1);
  const int c0 = std::max(c - half, 0), c1 = std::min(c + half, cols - 1);
  for (int i = r0; i <= r1; ++i)
    for (int j = c0; j <= c1; ++j) {
      const Scalar w = m(i, j);
      if (w > v) return false;
      if (w == v && (i < r || (i == r && j < c))) return false;
    }
  return true;
}

}  // namespace detail

/// Keeps the local maxima of `map` over a window x window neighbourhood and zeroes the rest.
/// Ties keep the first cell in row-major order.
template <typename Scalar>
Plane<Scalar> local_max_nms(const Plane<Scalar>& map, int window) {
  if (window < 1 || window % 2 == 0) throw ConfigError("NMS window must be odd and positive");
  Plane<Scalar> out = Plane<Scalar>::Zero(map.rows(), map.cols());
  const int half = window / 2;
  for (int r = 0; r < map.rows(); ++r)
    for (int c = 0; c < map.cols(); ++c)
      if (detail::is_local_max(map, r, c, half)) out(r, c) = map(r, c);
  return out;
}

template <typename Scalar>
Plane<Scalar> center_scores(const MapStack<Scalar>& maps, InputMode mode) {
  if (mode == InputMode::kRawScores) return maps.center();
  return maps.center().unaryExpr([](Scalar x) { return sigmoid(x); });
}

/// NMS-surviving centers with score >= threshold, best first, at most top_k.
template <typename Scalar>
std::vector<ScoredCenter<Scalar>> extract_centers(const MapStack<Scalar>& maps,
                                                  const DecodeConfig& cfg) {
  cfg.validate();
  const Plane<Scalar> scores = center_scores(maps, cfg.input_mode);
  const Scalar threshold = static_cast<Scalar>(cfg.score_threshold);
  const int half = cfg.nms_window / 2;

  std::vector<ScoredCenter<Scalar>> centers;
  for (int r = 0; r < scores.rows(); ++r)
    for (int c = 0; c < scores.cols(); ++c)
      if (scores(r, c) >= threshold && detail::is_local_max(scores, r, c, half))
        centers.push_back({Cell{r, c}, scores(r, c)});

  // Candidates are already in row-major order; stable sort keeps that order among equal scores.
  std::stable_sort(centers.begin(), centers.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  if (centers.size() > std::size_t(cfg.top_k)) centers.resize(std::size_t(cfg.top_k));
  return centers;
}

/// Line generation: endpoints are the center cell plus its start / end displacements,
/// scaled back to input coordinates. Degenerate results are dropped.
template <typename Scalar>
std::vector<DecodedLine<Scalar>> generate_lines(const MapStack<Scalar>& maps,
                                                const DecodeConfig& cfg,
                                                const ImageGeometry& geom) {
  if (maps.rows() != geom.map_height() || maps.cols() != geom.map_width())
    throw ShapeError("map stack is " + std::to_string(maps.rows()) + "x" +
                     std::to_string(maps.cols()) + " but the image needs " +
                     std::to_string(geom.map_height()) + "x" + std::to_string(geom.map_width()));

  std::vector<DecodedLine<Scalar>> lines;
  for (const auto& center : extract_centers(maps, cfg)) {
    const int r = center.cell.row, c = center.cell.col;
    const Point<Scalar> q{Scalar(c), Scalar(r)};
    const Point<Scalar> ds(maps[Channel::kStartX](r, c), maps[Channel::kStartY](r, c));
    const Point<Scalar> de(maps[Channel::kEndX](r, c), maps[Channel::kEndY](r, c));
    LineSegment<Scalar> line((q + ds) * Scalar(2), (q + de) * Scalar(2), center.score);
    if (line.degenerate()) continue;
    lines.push_back({canonicalize(line), q * Scalar(2), center.cell});
  }
  return lines;
}

template <typename Scalar>
std::vector<LineSegment<Scalar>> segments_of(const std::vector<DecodedLine<Scalar>>& decoded) {
  std::vector<LineSegment<Scalar>> out;
  out.reserve(decoded.size());
  for (const auto& d : decoded) out.push_back(d.line);
  return out;
}

}  // namespace mlsd
