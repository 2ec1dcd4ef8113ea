// Copyright 2026 The dpgibo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

namespace dpgibo {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

// Runs the acceptance criteria (all twelve when `ids` is empty), printing one
// PASS/FAIL line per criterion. File-producing criteria write under
// `scratch_dir`. Returns the per-criterion results.
std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids,
                                            const std::string& scratch_dir);

}  // namespace dpgibo
