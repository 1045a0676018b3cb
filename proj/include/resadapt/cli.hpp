/*
 * Copyright (c) 2026, The resadapt Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace resadapt {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;    // bad flags, validation and format errors
inline constexpr int kExitRuntime = 2;  // divergence, IO, degenerate features

// Runs one subcommand. `args` excludes the program name. The human summary
// goes to `out`; errors go to `err` as one JSON object per line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace resadapt
