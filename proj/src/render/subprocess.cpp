#include "figforge/render/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace figforge::render {

namespace {

std::atomic<std::size_t> g_live{0};
std::atomic<std::size_t> g_peak{0};

void note_started() {
  const std::size_t now = ++g_live;
  std::size_t peak = g_peak.load();
  while (now > peak && !g_peak.compare_exchange_weak(peak, now)) {
  }
}

}  // namespace

std::size_t live_subprocesses() { return g_live.load(); }
std::size_t peak_subprocesses() { return g_peak.load(); }
void reset_peak_subprocesses() { g_peak.store(g_live.load()); }

std::filesystem::path find_executable(const std::string& name) {
  if (name.find('/') != std::string::npos) {
    return ::access(name.c_str(), X_OK) == 0 ? std::filesystem::path(name) : std::filesystem::path();
  }
  const char* path = std::getenv("PATH");
  if (!path) return {};
  std::string_view rest(path);
  while (!rest.empty()) {
    const std::size_t colon = rest.find(':');
    const std::string dir(rest.substr(0, colon));
    if (!dir.empty()) {
      const auto candidate = std::filesystem::path(dir) / name;
      if (::access(candidate.c_str(), X_OK) == 0) return candidate;
    }
    if (colon == std::string_view::npos) break;
    rest.remove_prefix(colon + 1);
  }
  return {};
}

ProcessResult run_process(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                          const std::map<std::string, std::string>& env, const ProcessLimits& limits) {
  ProcessResult result;
  const auto started = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  };

  const std::filesystem::path exe = argv.empty() ? std::filesystem::path() : find_executable(argv[0]);
  if (exe.empty()) {
    result.spawn_failed = true;
    result.output = "executable not found: " + (argv.empty() ? std::string("<none>") : argv[0]);
    return result;
  }

  // Everything the child touches after fork is prepared here; the child only
  // makes async-signal-safe calls.
  std::vector<std::string> env_strings;
  for (const auto& [k, v] : env) env_strings.push_back(k + "=" + v);
  std::vector<char*> envp;
  for (auto& s : env_strings) envp.push_back(s.data());
  envp.push_back(nullptr);
  std::vector<std::string> args = argv;
  std::vector<char*> argp;
  for (auto& s : args) argp.push_back(s.data());
  argp.push_back(nullptr);
  const std::string cwd_str = cwd.string();
  const std::string exe_str = exe.string();

  int pipefd[2];
  if (::pipe2(pipefd, O_CLOEXEC) != 0) {
    result.spawn_failed = true;
    result.output = std::string("pipe: ") + std::strerror(errno);
    return result;
  }

  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(pipefd[0]);
    ::close(pipefd[1]);
    result.spawn_failed = true;
    result.output = std::string("fork: ") + std::strerror(errno);
    return result;
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    if (limits.isolate_network) {
      // Needs a user namespace when unprivileged; ignored if the kernel refuses.
      if (::unshare(CLONE_NEWNET) != 0) ::unshare(CLONE_NEWUSER | CLONE_NEWNET);
    }
    if (limits.memory_bytes > 0) {
      rlimit rl{limits.memory_bytes, limits.memory_bytes};
      ::setrlimit(RLIMIT_AS, &rl);
    }
    rlimit core{0, 0};
    ::setrlimit(RLIMIT_CORE, &core);
    ::dup2(pipefd[1], STDOUT_FILENO);
    ::dup2(pipefd[1], STDERR_FILENO);
    const int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    if (::chdir(cwd_str.c_str()) != 0) ::_exit(126);
    ::execve(exe_str.c_str(), argp.data(), envp.data());
    ::_exit(127);
  }
  note_started();
  ::setpgid(pid, pid);
  ::close(pipefd[1]);

  const double timeout_ms = static_cast<double>(limits.timeout.count());
  bool child_done = false;
  bool pipe_open = true;
  int status = 0;
  char buf[8192];
  while (pipe_open || !child_done) {
    if (!child_done) {
      const pid_t r = ::waitpid(pid, &status, WNOHANG);
      if (r == pid) {
        child_done = true;
        // Stragglers that inherited the pipe would keep it open forever.
        ::kill(-pid, SIGKILL);
      }
    }
    if (!result.timed_out && elapsed_ms() >= timeout_ms) {
      result.timed_out = true;
      ::kill(-pid, SIGKILL);
    }
    if (!pipe_open) {
      if (!child_done) {
        ::waitpid(pid, &status, 0);
        child_done = true;
      }
      break;
    }
    pollfd pfd{pipefd[0], POLLIN, 0};
    const int remaining = static_cast<int>(std::max(1.0, std::min(50.0, timeout_ms - elapsed_ms())));
    const int pr = ::poll(&pfd, 1, result.timed_out || child_done ? 50 : remaining);
    if (pr > 0) {
      const ssize_t n = ::read(pipefd[0], buf, sizeof(buf));
      if (n > 0) {
        const std::size_t room = limits.output_cap > result.output.size() ? limits.output_cap - result.output.size() : 0;
        result.output.append(buf, std::min<std::size_t>(room, static_cast<std::size_t>(n)));
      } else if (n == 0 || (n < 0 && errno != EINTR && errno != EAGAIN)) {
        pipe_open = false;
      }
    }
  }
  ::close(pipefd[0]);
  --g_live;

  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.term_signal = WTERMSIG(status);
  }
  if (result.exit_code == 127 && !result.timed_out && result.output.empty()) result.spawn_failed = true;
  result.wall_ms = elapsed_ms();
  return result;
}

}  // namespace figforge::render
