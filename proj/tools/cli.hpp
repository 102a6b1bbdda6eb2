/*
 * Copyright 2026 The uvcg Authors
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

#include <ostream>

namespace uvcg::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsage = 2,
    kData = 3,
    kNumerical = 4,
    kSidecar = 5,
};

/// Runs one command line; never throws. Human-readable output goes to out,
/// diagnostics and usage text to err.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace uvcg::cli
