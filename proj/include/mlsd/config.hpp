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
#include <string_view>

#include "mlsd/decode.hpp"
#include "mlsd/loss.hpp"

namespace mlsd {

/// Settings shared by the command-line tools. Defaults follow the published training setup.
struct RunConfig {
  int input_size = 512;
  double mu_ratio = 0.125;  // SoL base length as a fraction of the input size
  LossWeights weights;
  DecodeConfig decode;
  std::uint64_t seed = 0;

  double mu() const { return input_size * mu_ratio; }
  ImageGeometry geometry() const { return {input_size, input_size}; }
  void validate() const;
};

/// Overlays the keys present in a JSON config document onto `base`:
///   {"input_size": 512, "mu_ratio": 0.125, "gamma": 5, "seed": 0,
///    "lambdas": {"center": [1, 30], "junction": [1, 30], "line": [1, 1]},
///    "decode": {"threshold": 0.2, "top_k": 200, "mode": "logits", "nms_window": 3}}
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

InputMode parse_input_mode(std::string_view name);

}  // namespace mlsd
