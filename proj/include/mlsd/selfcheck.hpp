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
#include <string>
#include <vector>

namespace mlsd {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelfCheckOptions {
  std::uint64_t seed = 0;
  // Name of a check whose implementation under test is deliberately perturbed
  // ("bce_gradient", "smooth_l1_gradient"); used to prove the checks can fail.
  std::string inject_fault;
};

/// Runs the built-in gradient and oracle suites.
std::vector<CheckResult> run_selfcheck(const SelfCheckOptions& options);

/// One line per check plus a summary line; byte-identical for identical options.
std::string format_selfcheck(const SelfCheckOptions& options,
                             const std::vector<CheckResult>& results);

}  // namespace mlsd
