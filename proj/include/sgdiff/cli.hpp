/* SPDX-License-Identifier: Apache-2.0 */
// Command-line front end. Exit codes: 0 ok, 2 validation failure, 64 usage
// error, 70 internal error. Failures print one JSON line to `err`.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sgdiff {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitInternal = 70;

inline constexpr const char* kVersion = "0.1.0";

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Keeps large matrix buffers on the heap instead of fresh mappings (glibc only; no-op elsewhere).
void tune_allocator();

}  // namespace sgdiff
