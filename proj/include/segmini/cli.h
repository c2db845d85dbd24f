/* Copyright 2026 The segmini Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef SEGMINI_CLI_H_
#define SEGMINI_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace segmini::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Entry point for the `segmini` tool. args[0] is the program name. Errors are
// written to `err` as a single line starting with "error: <kind>:".
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace segmini::cli

#endif  // SEGMINI_CLI_H_
