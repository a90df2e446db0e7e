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

#include "mlsd/config.hpp"

#include <fstream>
#include <iterator>
#include <string>

#include "json.hpp"

namespace mlsd {

void RunConfig::validate() const {
  if (input_size != 320 && input_size != 512)
    throw ConfigError("input size must be 320 or 512, got " + std::to_string(input_size));
  if (!(mu_ratio > 0.0)) throw ConfigError("mu ratio must be positive");
  if (!(weights.gamma > 0.0)) throw ConfigError("gamma must be positive");
  decode.validate();
}

InputMode parse_input_mode(std::string_view name) {
  if (name == "logits") return InputMode::kLogits;
  if (name == "raw" || name == "raw_scores") return InputMode::kRawScores;
  throw ConfigError("unknown input mode \"" + std::string(name) + "\"");
}

RunConfig parse_config(std::string_view text, RunConfig cfg) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  try {
    if (doc.contains("input_size")) cfg.input_size = doc["input_size"].get<int>();
    if (doc.contains("mu_ratio")) cfg.mu_ratio = doc["mu_ratio"].get<double>();
    if (doc.contains("gamma")) cfg.weights.gamma = doc["gamma"].get<double>();
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("lambdas")) {
      const auto& l = doc["lambdas"];
      const auto pair = [&](const char* key, double& pos, double& neg) {
        if (!l.contains(key)) return;
        const auto v = l[key].get<std::vector<double>>();
        if (v.size() != 2) throw ConfigError(std::string("lambdas.") + key + " needs two values");
        pos = v[0];
        neg = v[1];
      };
      pair("center", cfg.weights.center_pos, cfg.weights.center_neg);
      pair("junction", cfg.weights.junction_pos, cfg.weights.junction_neg);
      pair("line", cfg.weights.line_pos, cfg.weights.line_neg);
    }
    if (doc.contains("decode")) {
      const auto& d = doc["decode"];
      if (d.contains("threshold")) cfg.decode.score_threshold = d["threshold"].get<double>();
      if (d.contains("top_k")) cfg.decode.top_k = d["top_k"].get<int>();
      if (d.contains("mode")) cfg.decode.input_mode = parse_input_mode(d["mode"].get<std::string>());
      if (d.contains("nms_window")) cfg.decode.nms_window = d["nms_window"].get<int>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text, std::move(base));
}

}  // namespace mlsd
