#include "figforge/filters/dedup.hpp"

#include <algorithm>
#include <iterator>
#include <sstream>

#include "figforge/common/error.hpp"
#include "figforge/common/fileio.hpp"

namespace figforge::filters {

namespace {

constexpr std::size_t kShingleWidth = 3;

double jaccard_of(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& s : a) common += b.count(s);
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

std::set<std::string> shingle_set(const std::string& normalized) {
  std::istringstream in(normalized);
  std::vector<std::string> tokens{std::istream_iterator<std::string>(in), std::istream_iterator<std::string>()};
  std::set<std::string> out;
  if (tokens.size() < kShingleWidth) {
    std::string whole;
    for (const auto& t : tokens) whole += t + " ";
    if (!whole.empty()) out.insert(whole);
    return out;
  }
  for (std::size_t i = 0; i + kShingleWidth <= tokens.size(); ++i) {
    out.insert(tokens[i] + " " + tokens[i + 1] + " " + tokens[i + 2]);
  }
  return out;
}

}  // namespace

bool DedupStore::admit(const ContentDigest& key, const std::string& normalized) {
  std::lock_guard lock(mu_);
  if (keys_.count(key)) return false;
  if (jaccard_ > 0.0) {
    auto sh = shingle_set(normalized);
    for (const auto& other : seen_) {
      if (jaccard_of(sh, other) >= jaccard_) return false;
    }
    seen_.push_back(std::move(sh));
  }
  keys_.insert(key);
  return true;
}

bool DedupStore::contains(const ContentDigest& key) const {
  std::lock_guard lock(mu_);
  return keys_.count(key) > 0;
}

std::size_t DedupStore::size() const {
  std::lock_guard lock(mu_);
  return keys_.size();
}

void DedupStore::clear() {
  std::lock_guard lock(mu_);
  keys_.clear();
  seen_.clear();
}

void DedupStore::save(const std::filesystem::path& path) const {
  std::vector<std::string> hex;
  {
    std::lock_guard lock(mu_);
    hex.reserve(keys_.size());
    for (const auto& k : keys_) hex.push_back(k.hex);
  }
  std::sort(hex.begin(), hex.end());
  std::string text;
  for (const auto& h : hex) text += h + "\n";
  atomic_write_file(path, text);
}

void DedupStore::load(const std::filesystem::path& path) {
  std::lock_guard lock(mu_);
  keys_.clear();
  seen_.clear();
  if (!std::filesystem::exists(path)) return;
  for_each_line(path, [&](std::string_view line) { keys_.insert(ContentDigest{"sha256", std::string(line)}); });
}

double shingle_jaccard(const std::string& a, const std::string& b) {
  return jaccard_of(shingle_set(a), shingle_set(b));
}

}  // namespace figforge::filters
