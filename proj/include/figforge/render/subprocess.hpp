#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace figforge::render {

struct ProcessLimits {
  std::chrono::milliseconds timeout{60'000};
  std::uint64_t memory_bytes = 1ull << 30;  // RLIMIT_AS; 0 leaves it unset
  bool isolate_network = true;              // best effort: unshare(CLONE_NEWNET) in the child
  std::size_t output_cap = 64 * 1024;
};

struct ProcessResult {
  int exit_code = -1;    // valid when exited normally
  int term_signal = 0;   // non-zero when killed by a signal
  bool timed_out = false;
  bool spawn_failed = false;
  double wall_ms = 0.0;
  std::string output;    // stdout and stderr interleaved, truncated to output_cap

  bool ok() const { return !timed_out && !spawn_failed && term_signal == 0 && exit_code == 0; }
};

/// Runs argv[0] (looked up in PATH) in its own process group with cwd as the
/// working directory and exactly `env` as the environment. On timeout the whole
/// group is SIGKILLed. Never throws for child-side failures.
ProcessResult run_process(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                          const std::map<std::string, std::string>& env, const ProcessLimits& limits);

/// Live and peak counts of child processes started by run_process, process-wide.
std::size_t live_subprocesses();
std::size_t peak_subprocesses();
void reset_peak_subprocesses();

/// Searches PATH for an executable; empty when not found.
std::filesystem::path find_executable(const std::string& name);

}  // namespace figforge::render
