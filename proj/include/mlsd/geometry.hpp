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
#include <Eigen/Geometry>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "mlsd/common.hpp"

namespace mlsd {

template <typename Scalar>
using Point = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
using Transform = Eigen::Matrix<Scalar, 3, 3>;

/// A line segment in input-image pixel coordinates. `score` is 1 for
/// annotations and the decode confidence for predictions.
template <typename Scalar>
struct LineSegment {
  Point<Scalar> start = Point<Scalar>::Zero();
  Point<Scalar> end = Point<Scalar>::Zero();
  Scalar score = Scalar(1);

  LineSegment() = default;
  LineSegment(const Point<Scalar>& s, const Point<Scalar>& e, Scalar sc = Scalar(1))
      : start(s), end(e), score(sc) {}
  LineSegment(Scalar x1, Scalar y1, Scalar x2, Scalar y2, Scalar sc = Scalar(1))
      : start(x1, y1), end(x2, y2), score(sc) {}

  Scalar length() const { return (end - start).norm(); }
  Point<Scalar> center() const { return (start + end) / Scalar(2); }
  bool degenerate() const { return start == end; }

  template <typename Other>
  LineSegment<Other> cast() const {
    return {start.template cast<Other>(), end.template cast<Other>(), static_cast<Other>(score)};
  }
};

using Pointd = Point<double>;
using Pointf = Point<float>;
using Lined = LineSegment<double>;
using Linef = LineSegment<float>;

/// Input image size. Both sides must be even so the half-resolution maps are integral.
class ImageGeometry {
 public:
  ImageGeometry(int width, int height) : width_(width), height_(height) {
    if (width <= 0 || height <= 0)
      throw GeometryError("image size must be positive, got " + std::to_string(width) + "x" +
                          std::to_string(height));
    if (width % 2 != 0 || height % 2 != 0)
      throw GeometryError("image size must be even, got " + std::to_string(width) + "x" +
                          std::to_string(height));
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int map_width() const { return width_ / 2; }
  int map_height() const { return height_ / 2; }
  double diagonal() const { return std::hypot(double(width_), double(height_)); }

  friend bool operator==(const ImageGeometry&, const ImageGeometry&) = default;

 private:
  int width_;
  int height_;
};

namespace detail {

template <typename Scalar>
bool lex_less(const Point<Scalar>& a, const Point<Scalar>& b) {
  return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
}

}  // namespace detail

/// Orders the endpoints so that start <= end lexicographically by (x, y).
/// Throws GeometryError for a zero-length line.
template <typename Scalar>
LineSegment<Scalar> canonicalize(const LineSegment<Scalar>& line) {
  if (line.degenerate()) throw GeometryError("zero-length line segment");
  if (detail::lex_less(line.end, line.start)) return {line.end, line.start, line.score};
  return line;
}

template <typename Scalar>
bool is_canonical(const LineSegment<Scalar>& line) {
  return !line.degenerate() && !detail::lex_less(line.end, line.start);
}

template <typename Scalar>
struct LengthDegree {
  Scalar length;
  Scalar degree;  // radians, in [-pi/2, pi/2] for canonical lines
};

template <typename Scalar>
LengthDegree<Scalar> length_and_degree(const LineSegment<Scalar>& line) {
  if (line.degenerate()) throw GeometryError("zero-length line segment");
  const Point<Scalar> d = line.end - line.start;
  return {d.norm(), std::atan2(d.y(), d.x())};
}

/// The k points dividing the segment into k + 1 equal intervals, ordered from start to end.
template <typename Scalar>
std::vector<Point<Scalar>> internal_points(const LineSegment<Scalar>& line, int k) {
  std::vector<Point<Scalar>> points;
  if (k <= 0) return points;
  points.reserve(static_cast<std::size_t>(k));
  const Point<Scalar> step = (line.end - line.start) / Scalar(k + 1);
  for (int i = 1; i <= k; ++i) points.push_back(line.start + Scalar(i) * step);
  return points;
}

/// Number of internal division points used by SoL splitting: round(r / (mu / 2)) - 1.
template <typename Scalar>
int sol_division_count(Scalar length, Scalar mu) {
  return static_cast<int>(round_half_away(double(length) / (double(mu) / 2.0))) - 1;
}

/// Splits a line into k overlapping subparts. Subpart i spans division points i and i + 2,
/// so adjacent subparts share one interval. Lines with k <= 1 are returned unchanged.
template <typename Scalar>
std::vector<LineSegment<Scalar>> sol_split(const LineSegment<Scalar>& line, Scalar mu) {
  if (!(mu > Scalar(0))) throw ConfigError("SoL base length must be positive");
  if (line.degenerate()) throw GeometryError("zero-length line segment");
  const int k = sol_division_count(line.length(), mu);
  if (k <= 1) return {line};

  std::vector<Point<Scalar>> division;
  division.reserve(static_cast<std::size_t>(k + 2));
  division.push_back(line.start);
  for (auto& p : internal_points(line, k)) division.push_back(p);
  division.push_back(line.end);

  std::vector<LineSegment<Scalar>> parts;
  parts.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) parts.emplace_back(division[i], division[i + 2], line.score);
  return parts;
}

/// Clips a segment to the rectangle [0, width] x [0, height] (Liang-Barsky).
/// Returns false when nothing of the segment remains inside.
template <typename Scalar>
bool clip_to_image(LineSegment<Scalar>& line, const ImageGeometry& geom) {
  const Point<Scalar> d = line.end - line.start;
  const Scalar p[4] = {-d.x(), d.x(), -d.y(), d.y()};
  const Scalar q[4] = {line.start.x(), Scalar(geom.width()) - line.start.x(), line.start.y(),
                       Scalar(geom.height()) - line.start.y()};
  Scalar t0 = 0, t1 = 1;
  for (int i = 0; i < 4; ++i) {
    if (p[i] == Scalar(0)) {
      if (q[i] < Scalar(0)) return false;
      continue;
    }
    const Scalar r = q[i] / p[i];
    if (p[i] < Scalar(0))
      t0 = std::max(t0, r);
    else
      t1 = std::min(t1, r);
  }
  if (t0 > t1) return false;
  const Point<Scalar> s = line.start;
  if (t0 > Scalar(0)) line.start = s + t0 * d;
  if (t1 < Scalar(1)) line.end = s + t1 * d;
  return true;
}

/// Maps annotation endpoints through a homogeneous transform, clips the results to the
/// image, drops lines that vanish or end up shorter than `min_length`, and canonicalizes.
template <typename Scalar>
std::vector<LineSegment<Scalar>> affine_augment(std::span<const LineSegment<Scalar>> lines,
                                                const Transform<Scalar>& transform,
                                                const ImageGeometry& geom,
                                                Scalar min_length = Scalar(4)) {
  if (!Eigen::FullPivLU<Eigen::Matrix<double, 3, 3>>(transform.template cast<double>())
           .isInvertible())
    throw GeometryError("augmentation transform is singular");

  const auto apply = [&](const Point<Scalar>& p, Point<Scalar>& out) {
    const Eigen::Matrix<Scalar, 3, 1> h = transform * p.homogeneous();
    if (h.z() == Scalar(0)) return false;
    out = h.template head<2>() / h.z();
    return true;
  };

  std::vector<LineSegment<Scalar>> out;
  out.reserve(lines.size());
  for (const auto& line : lines) {
    LineSegment<Scalar> mapped;
    mapped.score = line.score;
    if (!apply(line.start, mapped.start) || !apply(line.end, mapped.end)) continue;
    if (!clip_to_image(mapped, geom)) continue;
    if (mapped.degenerate() || mapped.length() < min_length) continue;
    out.push_back(canonicalize(mapped));
  }
  return out;
}

template <typename Scalar>
std::vector<LineSegment<Scalar>> affine_augment(const std::vector<LineSegment<Scalar>>& lines,
                                                const Transform<Scalar>& transform,
                                                const ImageGeometry& geom,
                                                Scalar min_length = Scalar(4)) {
  return affine_augment(std::span<const LineSegment<Scalar>>(lines), transform, geom,
                        min_length);
}

// Transform builders for the augmentations used in training: flips, shear, rotation, scaling.
// Everything except the flips acts about the image center.
namespace augment {

template <typename Scalar = double>
Transform<Scalar> horizontal_flip(const ImageGeometry& geom) {
  Transform<Scalar> t = Transform<Scalar>::Identity();
  t(0, 0) = -1;
  t(0, 2) = Scalar(geom.width());
  return t;
}

template <typename Scalar = double>
Transform<Scalar> vertical_flip(const ImageGeometry& geom) {
  Transform<Scalar> t = Transform<Scalar>::Identity();
  t(1, 1) = -1;
  t(1, 2) = Scalar(geom.height());
  return t;
}

template <typename Scalar = double>
Transform<Scalar> about_center(const ImageGeometry& geom, const Eigen::Matrix<Scalar, 2, 2>& m) {
  const Point<Scalar> c(Scalar(geom.width()) / 2, Scalar(geom.height()) / 2);
  Transform<Scalar> t = Transform<Scalar>::Identity();
  t.template topLeftCorner<2, 2>() = m;
  t.template topRightCorner<2, 1>() = c - m * c;
  return t;
}

template <typename Scalar = double>
Transform<Scalar> rotation(const ImageGeometry& geom, Scalar radians) {
  Eigen::Matrix<Scalar, 2, 2> m;
  m << std::cos(radians), -std::sin(radians), std::sin(radians), std::cos(radians);
  return about_center<Scalar>(geom, m);
}

template <typename Scalar = double>
Transform<Scalar> scaling(const ImageGeometry& geom, Scalar sx, Scalar sy) {
  Eigen::Matrix<Scalar, 2, 2> m;
  m << sx, 0, 0, sy;
  return about_center<Scalar>(geom, m);
}

template <typename Scalar = double>
Transform<Scalar> shear(const ImageGeometry& geom, Scalar shx, Scalar shy) {
  Eigen::Matrix<Scalar, 2, 2> m;
  m << 1, shx, shy, 1;
  return about_center<Scalar>(geom, m);
}

}  // namespace augment

/// Rescales line coordinates from one image frame to another.
template <typename Scalar>
std::vector<LineSegment<Scalar>> rescale(std::span<const LineSegment<Scalar>> lines,
                                         Scalar sx, Scalar sy) {
  std::vector<LineSegment<Scalar>> out;
  out.reserve(lines.size());
  const Eigen::Matrix<Scalar, 2, 1> s(sx, sy);
  for (const auto& l : lines)
    out.emplace_back(l.start.cwiseProduct(s), l.end.cwiseProduct(s), l.score);
  return out;
}

}  // namespace mlsd
