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
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mlsd/common.hpp"
#include "mlsd/geometry.hpp"
#include "mlsd/maps.hpp"

namespace mlsd {

// ---------------------------------------------------------------------------
// MLSDTNSR tensor container
//
//   offset  size       field
//   0       8          magic "MLSDTNSR"
//   8       1          version (1)
//   9       1          ndim, 1..4
//   10      2          reserved, zero
//   12      4 * ndim   dims, uint32 little-endian, each > 0
//   ...     4 * prod   float32 little-endian payload, row-major
//
// Map stacks are stored channel-first: (channel, row, col).
// ---------------------------------------------------------------------------

inline constexpr char kTensorMagic[8] = {'M', 'L', 'S', 'D', 'T', 'N', 'S', 'R'};
inline constexpr std::uint8_t kTensorVersion = 1;
inline constexpr std::size_t kMaxTensorDims = 4;

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const;
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

enum class TensorErrorKind {
  kIo,
  kBadMagic,
  kVersionMismatch,
  kBadReserved,
  kBadDims,
  kTruncated,
  kTrailingData,
  kShape,
};

const char* to_string(TensorErrorKind kind);

class TensorFormatError : public Error {
 public:
  TensorFormatError(TensorErrorKind kind, const std::string& what)
      : Error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  TensorErrorKind kind() const { return kind_; }

 private:
  TensorErrorKind kind_;
};

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const Tensor& tensor, const std::filesystem::path& path);

/// (planes, rows, cols) tensor from a list of equally sized planes.
Tensor planes_to_tensor(std::span<const Planef> planes);
/// Inverse of planes_to_tensor; requires a 3-d tensor.
std::vector<Planef> tensor_to_planes(const Tensor& tensor);

Tensor stack_to_tensor(const MapStack<float>& stack);
/// Requires shape (7, rows, cols).
MapStack<float> tensor_to_stack(const Tensor& tensor);

// ---------------------------------------------------------------------------
// Annotation sets (JSON)
//
//   {"images": [{"id": "a", "width": 320, "height": 320,
//                "lines": [[x1, y1, x2, y2], ...],
//                "scores": [s, ...]}]}          // "scores" only for predictions
// ---------------------------------------------------------------------------

struct AnnotatedImage {
  std::string id;
  int width = 0;
  int height = 0;
  std::vector<Lined> lines;
  bool scored = false;  // serialize line scores

  friend bool operator==(const AnnotatedImage& a, const AnnotatedImage& b);
};

struct AnnotationSet {
  std::vector<AnnotatedImage> images;
  friend bool operator==(const AnnotationSet&, const AnnotationSet&) = default;
};

class AnnotationError : public Error {
 public:
  using Error::Error;
};

AnnotationSet parse_annotations(std::string_view text);
std::string format_annotations(const AnnotationSet& set);

AnnotationSet read_annotations(const std::filesystem::path& path);
void write_annotations(const AnnotationSet& set, const std::filesystem::path& path);

}  // namespace mlsd
