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

#include "mlsd/maps.hpp"

namespace mlsd {

struct BenchResult {
  int map_size = 0;
  int centers = 0;
  int repetitions = 0;
  std::size_t decoded_lines = 0;
  double min_ms = 0, median_ms = 0, p99_ms = 0;
};

/// A map_size x map_size logit stack with `centers` well separated center peaks and
/// random displacements.
MapStack<float> synthetic_decode_input(int map_size, int centers, std::uint64_t seed);

/// Times single-threaded line generation on a synthetic stack.
BenchResult run_decode_bench(int map_size, int centers, int repetitions, std::uint64_t seed);

}  // namespace mlsd
