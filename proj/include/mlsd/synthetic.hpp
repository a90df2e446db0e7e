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
#include <random>
#include <vector>

#include "mlsd/maps.hpp"

namespace mlsd {

/// Random canonical lines inside the image with length >= min_length. When
/// `separate_windows` is set, the 3x3 center windows of any two lines are disjoint.
template <typename Scalar, typename Rng>
std::vector<LineSegment<Scalar>> random_lines(Rng& rng, const ImageGeometry& geom, int count,
                                              Scalar min_length, bool separate_windows,
                                              int max_attempts = 1000000) {
  std::uniform_real_distribution<double> ux(0.0, geom.width()), uy(0.0, geom.height());
  std::vector<LineSegment<Scalar>> lines;
  std::vector<Cell> anchors;
  for (int attempt = 0; int(lines.size()) < count && attempt < max_attempts; ++attempt) {
    LineSegment<Scalar> l(Scalar(ux(rng)), Scalar(uy(rng)), Scalar(ux(rng)), Scalar(uy(rng)));
    if (l.degenerate() || l.length() < min_length) continue;
    const auto anchor =
        detail::anchor_cell(Point<Scalar>(l.center() / Scalar(2)), geom.map_height(),
                            geom.map_width());
    if (!anchor) continue;
    if (separate_windows) {
      bool clash = false;
      for (const auto& a : anchors)
        clash |= std::abs(a.row - anchor->row) < 3 && std::abs(a.col - anchor->col) < 3;
      if (clash) continue;
    }
    anchors.push_back(*anchor);
    lines.push_back(canonicalize(l));
  }
  if (int(lines.size()) < count) throw ConfigError("could not place the requested lines");
  return lines;
}

}  // namespace mlsd
