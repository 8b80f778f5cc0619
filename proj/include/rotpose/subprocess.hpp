// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <string>

namespace rotpose {

struct CommandResult {
    int exit_code = 0;
    std::string stderr_text;
};

/// Runs `command` through /bin/sh -c. stdout is discarded, stderr captured.
/// Throws TimeoutError (after killing the process group) if the command runs
/// longer than `timeout`, BackendError if it cannot be started.
CommandResult run_shell_command(const std::string& command, std::chrono::milliseconds timeout);

/// Single-quotes a string for safe use as one /bin/sh word.
std::string shell_quote(const std::string& s);

} // namespace rotpose
