// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace lasst {

/// Exit codes: 0 success, 1 the job or input failed, 2 bad flags or config.
inline constexpr int kExitOk = 0;
inline constexpr int kExitJobFailed = 1;
inline constexpr int kExitUsage = 2;

/// Entry point behind the lasst executable, kept in the library so tests can
/// drive it in-process.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lasst
