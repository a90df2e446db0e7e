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

#include "mlsd/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "json.hpp"

namespace mlsd {

namespace {

constexpr std::size_t kFixedHeader = 12;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

// Element count, or throws kBadDims on a bad rank, a zero dim or an overflowing size.
std::size_t checked_count(std::span<const std::uint32_t> dims) {
  if (dims.empty() || dims.size() > kMaxTensorDims)
    throw TensorFormatError(TensorErrorKind::kBadDims,
                            "ndim must be 1.." + std::to_string(kMaxTensorDims) + ", got " +
                                std::to_string(dims.size()));
  std::size_t count = 1;
  for (auto d : dims) {
    if (d == 0) throw TensorFormatError(TensorErrorKind::kBadDims, "zero-sized dimension");
    if (count > std::numeric_limits<std::size_t>::max() / 4 / d)
      throw TensorFormatError(TensorErrorKind::kBadDims, "tensor size overflows");
    count *= d;
  }
  return count;
}

}  // namespace

const char* to_string(TensorErrorKind kind) {
  switch (kind) {
    case TensorErrorKind::kIo: return "io error";
    case TensorErrorKind::kBadMagic: return "bad magic";
    case TensorErrorKind::kVersionMismatch: return "version mismatch";
    case TensorErrorKind::kBadReserved: return "bad reserved bytes";
    case TensorErrorKind::kBadDims: return "bad dimensions";
    case TensorErrorKind::kTruncated: return "truncated";
    case TensorErrorKind::kTrailingData: return "trailing data";
    case TensorErrorKind::kShape: return "unexpected shape";
  }
  return "unknown";
}

std::size_t Tensor::element_count() const {
  std::size_t n = dims.empty() ? 0 : 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor) {
  const std::size_t count = checked_count(tensor.dims);
  if (count != tensor.data.size())
    throw TensorFormatError(TensorErrorKind::kBadDims,
                            "dims describe " + std::to_string(count) + " values but " +
                                std::to_string(tensor.data.size()) + " were given");
  std::vector<std::uint8_t> out;
  out.reserve(kFixedHeader + 4 * tensor.dims.size() + 4 * count);
  out.insert(out.end(), std::begin(kTensorMagic), std::end(kTensorMagic));
  out.push_back(kTensorVersion);
  out.push_back(static_cast<std::uint8_t>(tensor.dims.size()));
  out.push_back(0);
  out.push_back(0);
  for (auto d : tensor.dims) put_u32(out, d);
  for (float v : tensor.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFixedHeader)
    throw TensorFormatError(TensorErrorKind::kTruncated, "header shorter than 12 bytes");
  if (std::memcmp(bytes.data(), kTensorMagic, sizeof kTensorMagic) != 0)
    throw TensorFormatError(TensorErrorKind::kBadMagic, "expected \"MLSDTNSR\"");
  if (bytes[8] != kTensorVersion)
    throw TensorFormatError(TensorErrorKind::kVersionMismatch,
                            "expected version 1, got " + std::to_string(bytes[8]));
  const std::size_t ndim = bytes[9];
  if (ndim == 0 || ndim > kMaxTensorDims)
    throw TensorFormatError(TensorErrorKind::kBadDims,
                            "ndim must be 1..4, got " + std::to_string(ndim));
  if (bytes[10] != 0 || bytes[11] != 0)
    throw TensorFormatError(TensorErrorKind::kBadReserved, "reserved bytes must be zero");
  if (bytes.size() < kFixedHeader + 4 * ndim)
    throw TensorFormatError(TensorErrorKind::kTruncated, "dimension table cut short");

  Tensor tensor;
  for (std::size_t i = 0; i < ndim; ++i)
    tensor.dims.push_back(get_u32(bytes.data() + kFixedHeader + 4 * i));
  const std::size_t count = checked_count(tensor.dims);
  const std::size_t offset = kFixedHeader + 4 * ndim;
  const std::size_t payload = bytes.size() - offset;
  if (payload < 4 * count)
    throw TensorFormatError(TensorErrorKind::kTruncated,
                            "payload has " + std::to_string(payload) + " bytes, expected " +
                                std::to_string(4 * count));
  if (payload > 4 * count)
    throw TensorFormatError(TensorErrorKind::kTrailingData,
                            std::to_string(payload - 4 * count) + " bytes after payload");
  tensor.data.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    tensor.data[i] = std::bit_cast<float>(get_u32(bytes.data() + offset + 4 * i));
  return tensor;
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TensorFormatError(TensorErrorKind::kIo, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return decode_tensor(bytes);
}

void write_tensor(const Tensor& tensor, const std::filesystem::path& path) {
  const auto bytes = encode_tensor(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TensorFormatError(TensorErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw TensorFormatError(TensorErrorKind::kIo, "short write to " + path.string());
}

Tensor planes_to_tensor(std::span<const Planef> planes) {
  if (planes.empty()) throw TensorFormatError(TensorErrorKind::kShape, "no planes");
  const auto rows = planes[0].rows(), cols = planes[0].cols();
  Tensor t;
  t.dims = {std::uint32_t(planes.size()), std::uint32_t(rows), std::uint32_t(cols)};
  t.data.reserve(planes.size() * std::size_t(rows * cols));
  for (const auto& p : planes) {
    if (p.rows() != rows || p.cols() != cols)
      throw TensorFormatError(TensorErrorKind::kShape, "planes differ in size");
    t.data.insert(t.data.end(), p.data(), p.data() + p.size());  // row-major storage
  }
  return t;
}

std::vector<Planef> tensor_to_planes(const Tensor& tensor) {
  if (tensor.dims.size() != 3)
    throw TensorFormatError(TensorErrorKind::kShape,
                            "expected (channels, rows, cols), got ndim " +
                                std::to_string(tensor.dims.size()));
  const auto n = tensor.dims[0], rows = tensor.dims[1], cols = tensor.dims[2];
  std::vector<Planef> planes;
  planes.reserve(n);
  const float* src = tensor.data.data();
  for (std::uint32_t c = 0; c < n; ++c, src += std::size_t(rows) * cols)
    planes.push_back(Eigen::Map<const Planef>(src, rows, cols));
  return planes;
}

Tensor stack_to_tensor(const MapStack<float>& stack) {
  return planes_to_tensor(stack.planes);
}

MapStack<float> tensor_to_stack(const Tensor& tensor) {
  if (tensor.dims.size() != 3 || tensor.dims[0] != kStackChannels)
    throw TensorFormatError(TensorErrorKind::kShape,
                            "a map stack needs shape (7, rows, cols)");
  auto planes = tensor_to_planes(tensor);
  MapStack<float> stack;
  for (int c = 0; c < kStackChannels; ++c) stack.planes[c] = std::move(planes[c]);
  return stack;
}

// ---------------------------------------------------------------------------

bool operator==(const AnnotatedImage& a, const AnnotatedImage& b) {
  if (a.id != b.id || a.width != b.width || a.height != b.height || a.scored != b.scored ||
      a.lines.size() != b.lines.size())
    return false;
  for (std::size_t i = 0; i < a.lines.size(); ++i) {
    const auto &x = a.lines[i], &y = b.lines[i];
    if (x.start != y.start || x.end != y.end || (a.scored && x.score != y.score)) return false;
  }
  return true;
}

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& id, const std::string& what) {
  throw AnnotationError(id.empty() ? what : "image \"" + id + "\": " + what);
}

double number_at(const json& arr, std::size_t i, const std::string& id) {
  if (!arr[i].is_number()) fail(id, "line coordinates must be numbers");
  const double v = arr[i].get<double>();
  if (!std::isfinite(v)) fail(id, "non-finite coordinate");
  return v;
}

AnnotatedImage parse_image(const json& j) {
  if (!j.is_object()) fail("", "image entry must be an object");
  if (!j.contains("id") || !j["id"].is_string()) fail("", "image entry needs a string \"id\"");
  AnnotatedImage image;
  image.id = j["id"].get<std::string>();
  for (const char* key : {"width", "height"})
    if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<long long>() <= 0)
      fail(image.id, std::string("\"") + key + "\" must be a positive integer");
  image.width = j["width"].get<int>();
  image.height = j["height"].get<int>();
  if (!j.contains("lines") || !j["lines"].is_array()) fail(image.id, "\"lines\" must be an array");

  const json* scores = nullptr;
  if (j.contains("scores")) {
    scores = &j["scores"];
    if (!scores->is_array() || scores->size() != j["lines"].size())
      fail(image.id, "\"scores\" must be an array with one entry per line");
    image.scored = true;
  }

  for (std::size_t i = 0; i < j["lines"].size(); ++i) {
    const json& l = j["lines"][i];
    if (!l.is_array() || l.size() != 4) fail(image.id, "each line must be [x1, y1, x2, y2]");
    Lined line(number_at(l, 0, image.id), number_at(l, 1, image.id), number_at(l, 2, image.id),
               number_at(l, 3, image.id));
    for (const auto& p : {line.start, line.end})
      if (p.x() < 0 || p.x() > image.width || p.y() < 0 || p.y() > image.height)
        fail(image.id, "line " + std::to_string(i) + " leaves the image");
    if (line.degenerate()) fail(image.id, "line " + std::to_string(i) + " has zero length");
    if (scores) line.score = number_at(*scores, i, image.id);
    image.lines.push_back(line);
  }
  return image;
}

}  // namespace

AnnotationSet parse_annotations(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw AnnotationError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("images") || !doc["images"].is_array())
    throw AnnotationError("document must be an object with an \"images\" array");
  AnnotationSet set;
  for (const auto& image : doc["images"]) set.images.push_back(parse_image(image));
  return set;
}

std::string format_annotations(const AnnotationSet& set) {
  nlohmann::ordered_json doc;
  doc["images"] = nlohmann::ordered_json::array();
  for (const auto& image : set.images) {
    nlohmann::ordered_json j;
    j["id"] = image.id;
    j["width"] = image.width;
    j["height"] = image.height;
    j["lines"] = nlohmann::ordered_json::array();
    for (const auto& l : image.lines)
      j["lines"].push_back({l.start.x(), l.start.y(), l.end.x(), l.end.y()});
    if (image.scored) {
      j["scores"] = nlohmann::ordered_json::array();
      for (const auto& l : image.lines) j["scores"].push_back(l.score);
    }
    doc["images"].push_back(std::move(j));
  }
  return doc.dump(1) + "\n";
}

AnnotationSet read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw AnnotationError("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_annotations(text);
}

void write_annotations(const AnnotationSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw AnnotationError("cannot write " + path.string());
  out << format_annotations(set);
  if (!out) throw AnnotationError("short write to " + path.string());
}

}  // namespace mlsd
