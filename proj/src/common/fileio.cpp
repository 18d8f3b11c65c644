#include "figforge/common/fileio.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <iterator>

#include "figforge/common/error.hpp"

namespace figforge {

namespace {

void write_all(int fd, const void* data, std::size_t n, const fs::path& path) {
  const auto* p = static_cast<const char*>(data);
  while (n > 0) {
    const ssize_t w = ::write(fd, p, n);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::IoFailure, "write " + path.string() + ": " + std::strerror(errno));
    }
    p += w;
    n -= static_cast<std::size_t>(w);
  }
}

}  // namespace

void atomic_write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::IoFailure, "open " + tmp.string() + ": " + std::strerror(errno));
  try {
    write_all(fd, bytes.data(), bytes.size(), tmp);
    if (::fsync(fd) != 0) throw Error(ErrorCode::IoFailure, "fsync " + tmp.string());
  } catch (...) {
    ::close(fd);
    ::unlink(tmp.c_str());
    throw;
  }
  ::close(fd);
  if (::rename(tmp.c_str(), path.c_str()) != 0) {
    ::unlink(tmp.c_str());
    throw Error(ErrorCode::IoFailure, "rename to " + path.string() + ": " + std::strerror(errno));
  }
}

void atomic_write_file(const fs::path& path, std::string_view text) {
  atomic_write_file(path, std::span<const std::uint8_t>(
                              reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void for_each_line(const fs::path& path, const std::function<void(std::string_view)>& fn,
                   bool include_unterminated) {
  if (!fs::exists(path)) return;
  const std::string text = read_text_file(path);
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) {
      if (include_unterminated) fn(std::string_view(text).substr(start));
      break;
    }
    if (nl > start) fn(std::string_view(text).substr(start, nl - start));
    start = nl + 1;
  }
}

std::size_t count_lines(const fs::path& path) {
  std::size_t n = 0;
  for_each_line(path, [&](std::string_view) { ++n; });
  return n;
}

bool truncate_to_lines(const fs::path& path, std::size_t n) {
  if (!fs::exists(path)) return n == 0;
  const std::string text = read_text_file(path);
  std::size_t pos = 0;
  std::size_t seen = 0;
  while (seen < n) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) return false;
    if (nl > pos) ++seen;
    pos = nl + 1;
  }
  fs::resize_file(path, pos);
  return true;
}

LineAppender::LineAppender(const fs::path& path) : path_(path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error(ErrorCode::IoFailure, "open " + path.string() + ": " + std::strerror(errno));
}

LineAppender::~LineAppender() { close(); }

LineAppender::LineAppender(LineAppender&& other) noexcept
    : path_(std::move(other.path_)), fd_(other.fd_) {
  other.fd_ = -1;
}

LineAppender& LineAppender::operator=(LineAppender&& other) noexcept {
  if (this != &other) {
    close();
    path_ = std::move(other.path_);
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

void LineAppender::append(std::string_view line) {
  if (fd_ < 0) throw Error(ErrorCode::IoFailure, "appender not open");
  // One write per line keeps concurrent readers from seeing half a record.
  std::string buf;
  buf.reserve(line.size() + 1);
  buf.append(line);
  buf.push_back('\n');
  write_all(fd_, buf.data(), buf.size(), path_);
}

void LineAppender::sync() {
  if (fd_ >= 0 && ::fsync(fd_) != 0) throw Error(ErrorCode::IoFailure, "fsync " + path_.string());
}

void LineAppender::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

ScopedDirectory::~ScopedDirectory() {
  std::error_code ec;
  if (!path_.empty()) fs::remove_all(path_, ec);
}

fs::path make_unique_directory(const fs::path& parent, const std::string& prefix) {
  fs::create_directories(parent);
  std::string tmpl = (parent / (prefix + "XXXXXX")).string();
  if (::mkdtemp(tmpl.data()) == nullptr) {
    throw Error(ErrorCode::SandboxSetupFailure,
                "mkdtemp under " + parent.string() + ": " + std::strerror(errno));
  }
  return fs::path(tmpl);
}

}  // namespace figforge
