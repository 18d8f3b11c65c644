#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace figforge {

namespace fs = std::filesystem;

/// Writes to "<path>.tmp.<pid>", fsyncs, then renames over path. Readers see
/// either the old file or the complete new one.
void atomic_write_file(const fs::path& path, std::span<const std::uint8_t> bytes);
void atomic_write_file(const fs::path& path, std::string_view text);

std::string read_text_file(const fs::path& path);

/// Calls fn for every non-empty line. A trailing line without '\n' is treated as
/// torn and skipped unless include_unterminated is set.
void for_each_line(const fs::path& path, const std::function<void(std::string_view)>& fn,
                   bool include_unterminated = false);

std::size_t count_lines(const fs::path& path);

/// Truncates path to its first n complete lines; returns false if fewer exist.
bool truncate_to_lines(const fs::path& path, std::size_t n);

// Appends whole lines to a file and can force them to stable storage.
class LineAppender {
 public:
  LineAppender() = default;
  explicit LineAppender(const fs::path& path);
  ~LineAppender();
  LineAppender(const LineAppender&) = delete;
  LineAppender& operator=(const LineAppender&) = delete;
  LineAppender(LineAppender&&) noexcept;
  LineAppender& operator=(LineAppender&&) noexcept;

  bool is_open() const { return fd_ >= 0; }
  void append(std::string_view line);
  void sync();
  void close();
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  int fd_ = -1;
};

// Removes a directory tree on scope exit.
class ScopedDirectory {
 public:
  explicit ScopedDirectory(fs::path path) : path_(std::move(path)) {}
  ~ScopedDirectory();
  ScopedDirectory(const ScopedDirectory&) = delete;
  ScopedDirectory& operator=(const ScopedDirectory&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

/// mkdtemp under parent with the given prefix.
fs::path make_unique_directory(const fs::path& parent, const std::string& prefix);

}  // namespace figforge
