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

#include "mlsd/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "mlsd/decode.hpp"

namespace mlsd {

MapStack<float> synthetic_decode_input(int map_size, int centers, std::uint64_t seed) {
  if (map_size < 4 || map_size % 2 != 0) throw ConfigError("map size must be even and >= 4");
  if (centers < 0) throw ConfigError("center count must be non-negative");

  // Candidate peak sites on a stride-4 lattice keep every 3x3 window apart.
  std::vector<Cell> sites;
  for (int r = 1; r + 1 < map_size; r += 4)
    for (int c = 1; c + 1 < map_size; c += 4) sites.push_back({r, c});
  if (std::size_t(centers) > sites.size())
    throw ConfigError("at most " + std::to_string(sites.size()) + " centers fit a " +
                      std::to_string(map_size) + " map");

  std::mt19937_64 rng(seed);
  std::shuffle(sites.begin(), sites.end(), rng);
  std::uniform_real_distribution<float> disp(-20.0f, 20.0f), peak(2.0f, 6.0f);

  MapStack<float> stack(map_size, map_size);
  stack.center().setConstant(-6.0f);
  for (int i = 0; i < centers; ++i) {
    const Cell s = sites[std::size_t(i)];
    const float top = peak(rng);
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc)
        stack.center()(s.row + dr, s.col + dc) = (dr == 0 && dc == 0) ? top : top - 2.0f;
    stack[Channel::kStartX](s.row, s.col) = disp(rng);
    stack[Channel::kStartY](s.row, s.col) = disp(rng);
    stack[Channel::kEndX](s.row, s.col) = disp(rng);
    stack[Channel::kEndY](s.row, s.col) = disp(rng);
  }
  return stack;
}

BenchResult run_decode_bench(int map_size, int centers, int repetitions, std::uint64_t seed) {
  if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
  const MapStack<float> stack = synthetic_decode_input(map_size, centers, seed);
  const ImageGeometry geom(2 * map_size, 2 * map_size);
  DecodeConfig cfg;
  cfg.top_k = std::max(centers, 1);

  BenchResult result;
  result.map_size = map_size;
  result.centers = centers;
  result.repetitions = repetitions;

  std::vector<double> samples;
  samples.reserve(std::size_t(repetitions));
  for (int i = 0; i < repetitions; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto lines = generate_lines(stack, cfg, geom);
    const auto t1 = std::chrono::steady_clock::now();
    result.decoded_lines = lines.size();
    samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(samples.begin(), samples.end());
  const auto rank = [&](double q) {
    const auto idx = std::size_t(std::ceil(q * double(samples.size()))) - 1;
    return samples[std::min(idx, samples.size() - 1)];
  };
  result.min_ms = samples.front();
  result.median_ms = rank(0.5);
  result.p99_ms = rank(0.99);
  return result;
}

}  // namespace mlsd
