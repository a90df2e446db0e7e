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

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "mlsd/geometry.hpp"
#include "mlsd/raster.hpp"

namespace mlsd {

/// One half-resolution map. Cell (row i, col j) sits at map coordinate (x = j, y = i);
/// input coordinates are exactly twice map coordinates.
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Planed = Plane<double>;
using Planef = Plane<float>;

/// Channel order of a TP / SoL map stack.
enum class Channel : int {
  kLength = 0,
  kDegree = 1,
  kCenter = 2,
  kStartX = 3,
  kStartY = 4,
  kEndX = 5,
  kEndY = 6,
};

inline constexpr int kStackChannels = 7;
inline constexpr double kGaussianSigma = 1.0;

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

template <typename Scalar>
struct MapStack {
  std::array<Plane<Scalar>, kStackChannels> planes;

  MapStack() = default;
  MapStack(int rows, int cols) {
    for (auto& p : planes) p = Plane<Scalar>::Zero(rows, cols);
  }
  explicit MapStack(const ImageGeometry& geom) : MapStack(geom.map_height(), geom.map_width()) {}

  int rows() const { return static_cast<int>(planes[0].rows()); }
  int cols() const { return static_cast<int>(planes[0].cols()); }

  Plane<Scalar>& operator[](Channel c) { return planes[static_cast<int>(c)]; }
  const Plane<Scalar>& operator[](Channel c) const { return planes[static_cast<int>(c)]; }

  Plane<Scalar>& length() { return (*this)[Channel::kLength]; }
  const Plane<Scalar>& length() const { return (*this)[Channel::kLength]; }
  Plane<Scalar>& degree() { return (*this)[Channel::kDegree]; }
  const Plane<Scalar>& degree() const { return (*this)[Channel::kDegree]; }
  Plane<Scalar>& center() { return (*this)[Channel::kCenter]; }
  const Plane<Scalar>& center() const { return (*this)[Channel::kCenter]; }

  bool same_shape(const MapStack& other) const {
    return rows() == other.rows() && cols() == other.cols();
  }

  template <typename Other>
  MapStack<Other> cast() const {
    MapStack<Other> out;
    for (int c = 0; c < kStackChannels; ++c) out.planes[c] = planes[c].template cast<Other>();
    return out;
  }
};

template <typename Scalar>
struct SegMaps {
  Plane<Scalar> junction;
  Plane<Scalar> line;
};

/// Ground truth for one image: TP maps from the annotated lines, SoL maps from their
/// subparts, and the two segmentation maps. Masks mark the nonzero center cells.
template <typename Scalar>
struct GtBundle {
  MapStack<Scalar> tp;
  MapStack<Scalar> sol;
  SegMaps<Scalar> seg;
  Plane<Scalar> tp_mask;
  Plane<Scalar> sol_mask;
  std::vector<LineSegment<Scalar>> tp_lines;
  std::vector<LineSegment<Scalar>> sol_lines;
  int skipped_lines = 0;  // lines whose center fell outside the map
};

struct EncodeStats {
  int skipped_lines = 0;
};

namespace detail {

template <typename Scalar>
Point<Scalar> to_map(const Point<Scalar>& p) {
  return p / Scalar(2);
}

template <typename Scalar>
std::optional<Cell> anchor_cell(const Point<Scalar>& map_point, int rows, int cols) {
  const Cell cell{static_cast<int>(round_half_away(double(map_point.y()))),
                  static_cast<int>(round_half_away(double(map_point.x())))};
  if (cell.row < 0 || cell.row >= rows || cell.col < 0 || cell.col >= cols) return std::nullopt;
  return cell;
}

template <typename Visitor>
void for_window(const Cell& anchor, int rows, int cols, Visitor&& visit) {
  for (int r = std::max(anchor.row - 1, 0); r <= std::min(anchor.row + 1, rows - 1); ++r)
    for (int c = std::max(anchor.col - 1, 0); c <= std::min(anchor.col + 1, cols - 1); ++c)
      visit(Cell{r, c});
}

/// Writes a 3x3-truncated Gaussian centred on `map_point`, fusing by per-cell maximum.
template <typename Scalar>
bool splat_gaussian(Plane<Scalar>& plane, const Point<Scalar>& map_point, double sigma) {
  const int rows = static_cast<int>(plane.rows());
  const int cols = static_cast<int>(plane.cols());
  const auto anchor = anchor_cell(map_point, rows, cols);
  if (!anchor) return false;
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for_window(*anchor, rows, cols, [&](const Cell& q) {
    const double dx = double(q.col) - double(map_point.x());
    const double dy = double(q.row) - double(map_point.y());
    const Scalar v = static_cast<Scalar>(std::exp(-(dx * dx + dy * dy) * inv));
    Scalar& cell = plane(q.row, q.col);
    cell = std::max(cell, v);
  });
  return true;
}

template <typename Scalar>
auto line_key(const LineSegment<Scalar>& l) {
  return std::make_tuple(l.start.x(), l.start.y(), l.end.x(), l.end.y());
}

/// For every cell, the index of the line that supervises its regression channels, or -1.
/// A cell covered by several 3x3 windows goes to the line whose map-space center is
/// nearest; exact ties go to the lexicographically smaller line.
template <typename Scalar>
Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> window_owners(
    std::span<const LineSegment<Scalar>> lines, int rows, int cols, EncodeStats* stats) {
  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> owner =
      decltype(owner)::Constant(rows, cols, -1);
  Planed best = Planed::Constant(rows, cols, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const Point<Scalar> mc = to_map(lines[i].center());
    const auto anchor = anchor_cell(mc, rows, cols);
    if (!anchor) {
      if (stats) ++stats->skipped_lines;
      continue;
    }
    for_window(*anchor, rows, cols, [&](const Cell& q) {
      const double dx = double(q.col) - double(mc.x());
      const double dy = double(q.row) - double(mc.y());
      const double d2 = dx * dx + dy * dy;
      int& cur = owner(q.row, q.col);
      double& cur_d2 = best(q.row, q.col);
      if (cur < 0 || d2 < cur_d2 ||
          (d2 == cur_d2 && line_key(lines[i]) < line_key(lines[std::size_t(cur)]))) {
        cur = static_cast<int>(i);
        cur_d2 = d2;
      }
    });
  }
  return owner;
}

template <typename Scalar>
std::vector<LineSegment<Scalar>> canonical_all(std::span<const LineSegment<Scalar>> lines) {
  std::vector<LineSegment<Scalar>> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(canonicalize(l));
  return out;
}

}  // namespace detail

/// Center heatmap: a 3x3-truncated Gaussian (sigma in map cells) per line center.
template <typename Scalar>
Plane<Scalar> encode_center(std::span<const LineSegment<Scalar>> lines, const ImageGeometry& geom,
                            EncodeStats* stats = nullptr, double sigma = kGaussianSigma) {
  Plane<Scalar> center = Plane<Scalar>::Zero(geom.map_height(), geom.map_width());
  for (const auto& l : lines)
    if (!detail::splat_gaussian(center, detail::to_map(l.center()), sigma) && stats)
      ++stats->skipped_lines;
  return center;
}

template <typename Scalar>
struct DisplacementMaps {
  std::array<Plane<Scalar>, 4> channels;  // start x, start y, end x, end y
  Plane<Scalar> mask;
};

/// Displacements from each supervised cell to the line endpoints, in map units. They are
/// relative to the cell itself, so adding them to any supervised cell recovers the endpoints.
template <typename Scalar>
DisplacementMaps<Scalar> encode_displacement(std::span<const LineSegment<Scalar>> lines,
                                             const ImageGeometry& geom) {
  const int rows = geom.map_height(), cols = geom.map_width();
  DisplacementMaps<Scalar> out;
  for (auto& c : out.channels) c = Plane<Scalar>::Zero(rows, cols);
  out.mask = Plane<Scalar>::Zero(rows, cols);
  const auto owner = detail::window_owners(lines, rows, cols, nullptr);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int i = owner(r, c);
      if (i < 0) continue;
      const auto& l = lines[std::size_t(i)];
      const Point<Scalar> q{Scalar(c), Scalar(r)};
      const Point<Scalar> ds = detail::to_map(l.start) - q;
      const Point<Scalar> de = detail::to_map(l.end) - q;
      out.channels[0](r, c) = ds.x();
      out.channels[1](r, c) = ds.y();
      out.channels[2](r, c) = de.x();
      out.channels[3](r, c) = de.y();
      out.mask(r, c) = Scalar(1);
    }
  return out;
}

template <typename Scalar>
Scalar normalized_length(const LineSegment<Scalar>& line, const ImageGeometry& geom) {
  return static_cast<Scalar>(double(line.length()) / geom.diagonal());
}

/// theta / (2 pi) + 0.5; canonical lines land in [0.25, 0.75].
template <typename Scalar>
Scalar normalized_degree(const LineSegment<Scalar>& line) {
  const double theta = double(length_and_degree(line).degree);
  return static_cast<Scalar>(theta / (2.0 * std::numbers::pi) + 0.5);
}

template <typename Scalar>
Scalar denormalize_length(Scalar value, const ImageGeometry& geom) {
  return static_cast<Scalar>(double(value) * geom.diagonal());
}

template <typename Scalar>
Scalar denormalize_degree(Scalar value) {
  return static_cast<Scalar>((double(value) - 0.5) * 2.0 * std::numbers::pi);
}

template <typename Scalar>
struct LengthDegreeMaps {
  Plane<Scalar> length;
  Plane<Scalar> degree;
};

/// Normalized length and degree, written uniformly over each line's 3x3 center window.
template <typename Scalar>
LengthDegreeMaps<Scalar> encode_length_degree(std::span<const LineSegment<Scalar>> lines,
                                              const ImageGeometry& geom) {
  const int rows = geom.map_height(), cols = geom.map_width();
  LengthDegreeMaps<Scalar> out{Plane<Scalar>::Zero(rows, cols), Plane<Scalar>::Zero(rows, cols)};
  const auto owner = detail::window_owners(lines, rows, cols, nullptr);
  std::vector<std::pair<Scalar, Scalar>> values;
  values.reserve(lines.size());
  for (const auto& l : lines) values.emplace_back(normalized_length(l, geom), normalized_degree(l));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (const int i = owner(r, c); i >= 0) {
        out.length(r, c) = values[std::size_t(i)].first;
        out.degree(r, c) = values[std::size_t(i)].second;
      }
  return out;
}

/// Full 7-channel stack plus its supervision mask.
template <typename Scalar>
std::pair<MapStack<Scalar>, Plane<Scalar>> encode_stack(std::span<const LineSegment<Scalar>> lines,
                                                        const ImageGeometry& geom,
                                                        EncodeStats* stats = nullptr) {
  MapStack<Scalar> stack(geom);
  stack.center() = encode_center(lines, geom, stats);
  auto disp = encode_displacement(lines, geom);
  stack[Channel::kStartX] = std::move(disp.channels[0]);
  stack[Channel::kStartY] = std::move(disp.channels[1]);
  stack[Channel::kEndX] = std::move(disp.channels[2]);
  stack[Channel::kEndY] = std::move(disp.channels[3]);
  auto ld = encode_length_degree(lines, geom);
  stack.length() = std::move(ld.length);
  stack.degree() = std::move(ld.degree);
  return {std::move(stack), std::move(disp.mask)};
}

/// Junction heatmap over the distinct endpoints and a binary line map traced at half resolution.
template <typename Scalar>
SegMaps<Scalar> encode_segmentation(std::span<const LineSegment<Scalar>> lines,
                                    const ImageGeometry& geom, double sigma = kGaussianSigma) {
  const int rows = geom.map_height(), cols = geom.map_width();
  SegMaps<Scalar> seg{Plane<Scalar>::Zero(rows, cols), Plane<Scalar>::Zero(rows, cols)};

  std::set<std::pair<Scalar, Scalar>> junctions;
  for (const auto& l : lines) {
    junctions.emplace(l.start.x(), l.start.y());
    junctions.emplace(l.end.x(), l.end.y());
  }
  for (const auto& [x, y] : junctions)
    detail::splat_gaussian(seg.junction, detail::to_map(Point<Scalar>(x, y)), sigma);

  for (const auto& l : lines) {
    const Point<Scalar> s = detail::to_map(l.start), e = detail::to_map(l.end);
    trace_line(int(round_half_away(double(s.x()))), int(round_half_away(double(s.y()))),
               int(round_half_away(double(e.x()))), int(round_half_away(double(e.y()))),
               [&](int x, int y) {
                 if (x >= 0 && x < cols && y >= 0 && y < rows) seg.line(y, x) = Scalar(1);
               });
  }
  return seg;
}

/// Builds the complete ground truth for one annotation. `mu` is the SoL base length in pixels.
template <typename Scalar>
GtBundle<Scalar> build_gt(std::span<const LineSegment<Scalar>> lines, const ImageGeometry& geom,
                          Scalar mu) {
  GtBundle<Scalar> gt;
  gt.tp_lines = detail::canonical_all(lines);
  for (const auto& l : gt.tp_lines)
    for (auto& part : sol_split(l, mu)) gt.sol_lines.push_back(part);

  EncodeStats stats;
  std::tie(gt.tp, gt.tp_mask) =
      encode_stack(std::span<const LineSegment<Scalar>>(gt.tp_lines), geom, &stats);
  std::tie(gt.sol, gt.sol_mask) =
      encode_stack(std::span<const LineSegment<Scalar>>(gt.sol_lines), geom);
  gt.seg = encode_segmentation(std::span<const LineSegment<Scalar>>(gt.tp_lines), geom);
  gt.skipped_lines = stats.skipped_lines;
  return gt;
}

template <typename Scalar>
GtBundle<Scalar> build_gt(const std::vector<LineSegment<Scalar>>& lines, const ImageGeometry& geom,
                          Scalar mu) {
  return build_gt(std::span<const LineSegment<Scalar>>(lines), geom, mu);
}

/// Number of strict-or-first local maxima above zero; handy for counting heatmap peaks.
template <typename Scalar>
int count_peaks(const Plane<Scalar>& plane) {
  int peaks = 0;
  const int rows = static_cast<int>(plane.rows()), cols = static_cast<int>(plane.cols());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const Scalar v = plane(r, c);
      if (v <= Scalar(0)) continue;
      bool peak = true;
      detail::for_window(Cell{r, c}, rows, cols, [&](const Cell& q) {
        const Scalar w = plane(q.row, q.col);
        const bool earlier = q.row < r || (q.row == r && q.col < c);
        if (w > v || (earlier && w == v)) peak = false;
      });
      peaks += peak;
    }
  return peaks;
}

}  // namespace mlsd
