#pragma once

#include <filesystem>
#include <mutex>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "figforge/common/digest.hpp"

namespace figforge::filters {

// Shared set of admitted dedup keys. admit() is an atomic insert-if-absent, so
// among equal keys the first caller wins regardless of thread timing.
class DedupStore {
 public:
  /// jaccard_threshold > 0 additionally rejects samples whose token-shingle
  /// Jaccard similarity with any admitted sample reaches the threshold.
  explicit DedupStore(double jaccard_threshold = 0.0) : jaccard_(jaccard_threshold) {}

  /// True if key was new (and is now recorded). `normalized` is only consulted
  /// for the near-duplicate check.
  bool admit(const ContentDigest& key, const std::string& normalized = {});
  bool contains(const ContentDigest& key) const;
  std::size_t size() const;
  void clear();

  /// One hex key per line, sorted. Shingle sets are not persisted.
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  mutable std::mutex mu_;
  std::unordered_set<ContentDigest> keys_;
  double jaccard_;
  std::vector<std::set<std::string>> seen_;
};

/// |A ∩ B| / |A ∪ B| over 3-token shingles of whitespace-separated tokens.
double shingle_jaccard(const std::string& a, const std::string& b);

}  // namespace figforge::filters
