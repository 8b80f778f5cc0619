// Copyright (C) 2026 The rotpose Authors
// SPDX-License-Identifier: Apache-2.0

#include "rotpose/subprocess.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fmt/format.h>

#include "rotpose/error.hpp"

namespace rotpose {

std::string shell_quote(const std::string& s)
{
    std::string out = "'";
    for (char ch : s) {
        if (ch == '\'')
            out += "'\\''";
        else
            out += ch;
    }
    out += "'";
    return out;
}

namespace {

int decode_status(int status)
{
    if (WIFEXITED(status))
        return WEXITSTATUS(status);
    if (WIFSIGNALED(status))
        return 128 + WTERMSIG(status);
    return -1;
}

} // namespace

CommandResult run_shell_command(const std::string& command, std::chrono::milliseconds timeout)
{
    int err_pipe[2];
    if (::pipe2(err_pipe, O_CLOEXEC) != 0)
        throw BackendError(fmt::format("pipe failed: {}", std::strerror(errno)));

    const pid_t pid = ::fork();
    if (pid < 0) {
        ::close(err_pipe[0]);
        ::close(err_pipe[1]);
        throw BackendError(fmt::format("fork failed: {}", std::strerror(errno)));
    }
    if (pid == 0) {
        // own process group so a timeout can take down the whole pipeline
        ::setpgid(0, 0);
        ::dup2(err_pipe[1], STDERR_FILENO);
        const int devnull = ::open("/dev/null", O_RDWR);
        if (devnull >= 0) {
            ::dup2(devnull, STDIN_FILENO);
            ::dup2(devnull, STDOUT_FILENO);
        }
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(err_pipe[1]);
    ::setpgid(pid, pid);

    CommandResult result;
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    bool pipe_open = true;
    bool timed_out = false;
    char buf[4096];
    while (pipe_open) {
        const auto remaining =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (remaining.count() <= 0) {
            timed_out = true;
            break;
        }
        pollfd pfd{err_pipe[0], POLLIN, 0};
        const int rc = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining.count(), 1000)));
        if (rc < 0 && errno != EINTR)
            break;
        if (rc > 0) {
            const ssize_t n = ::read(err_pipe[0], buf, sizeof buf);
            if (n > 0)
                result.stderr_text.append(buf, static_cast<std::size_t>(n));
            else if (n == 0 || errno != EINTR)
                pipe_open = false;
        }
    }
    ::close(err_pipe[0]);

    int status = 0;
    if (!timed_out) {
        // stderr closed; the child may still linger if it detached its stderr
        while (true) {
            const pid_t w = ::waitpid(pid, &status, WNOHANG);
            if (w == pid)
                break;
            if (w < 0 && errno != EINTR)
                throw BackendError(fmt::format("waitpid failed: {}", std::strerror(errno)));
            if (std::chrono::steady_clock::now() >= deadline) {
                timed_out = true;
                break;
            }
            ::usleep(2000);
        }
    }
    if (timed_out) {
        ::kill(-pid, SIGKILL);
        ::waitpid(pid, &status, 0);
        throw TimeoutError(fmt::format("command timed out after {} ms: {}", timeout.count(), command));
    }
    result.exit_code = decode_status(status);
    return result;
}

} // namespace rotpose
