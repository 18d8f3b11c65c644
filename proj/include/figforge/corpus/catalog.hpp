#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "figforge/common/fileio.hpp"
#include "figforge/corpus/asset.hpp"

namespace figforge::corpus {

struct SkipRecord {
  std::string storage_ref;
  SourceTag source = SourceTag::Synthesized;
  std::string reason;

  bool operator==(const SkipRecord&) const = default;
};

// Append-only NDJSON log of assets and skip records with an in-memory digest
// index rebuilt on open. Appends are serialized; lookups may run concurrently.
class Catalog {
 public:
  explicit Catalog(std::filesystem::path log_path);

  const std::filesystem::path& path() const { return path_; }

  /// Returns false (and writes nothing) when the digest is already present.
  bool append(const ImageAsset& asset);
  /// Returns false when the storage_ref already has a skip record.
  bool append_skip(const SkipRecord& skip);

  bool contains(const ContentDigest& d) const;
  std::optional<ImageAsset> find(const std::string& asset_id) const;
  std::optional<ImageAsset> find_by_digest(const ContentDigest& d) const;

  std::vector<ImageAsset> assets() const;
  std::vector<SkipRecord> skips() const;
  std::size_t size() const;

 private:
  void load();
  void write_line(const std::string& line);

  std::filesystem::path path_;
  mutable std::shared_mutex mu_;
  std::vector<ImageAsset> assets_;
  std::vector<SkipRecord> skips_;
  std::unordered_map<std::string, std::size_t> by_digest_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_set<std::string> skipped_refs_;
  LineAppender appender_;
};

nlohmann::json to_json(const SkipRecord& skip);

}  // namespace figforge::corpus
