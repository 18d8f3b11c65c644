#include "figforge/corpus/catalog.hpp"

#include "figforge/common/error.hpp"

namespace figforge::corpus {

nlohmann::json to_json(const SkipRecord& skip) {
  return nlohmann::json{
      {"asset_id", "skip-" + sha256(skip.storage_ref).prefix(20)},
      {"source", to_string(skip.source)},
      {"width_px", 0},
      {"height_px", 0},
      {"digest_alg", ""},
      {"digest_hex", ""},
      {"storage_ref", skip.storage_ref},
      {"kind", to_string(AssetKind::Unknown)},
      {"skipped_reason", skip.reason},
  };
}

Catalog::Catalog(std::filesystem::path log_path) : path_(std::move(log_path)) {
  load();
  try {
    appender_ = LineAppender(path_);
  } catch (const Error& e) {
    throw Error(ErrorCode::CatalogWriteFailure, e.what());
  }
}

void Catalog::load() {
  // A torn final line from an interrupted append is dropped and cut off the file
  // so the next append starts on a clean line.
  std::size_t complete = 0;
  for_each_line(path_, [&](std::string_view line) {
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorCode::CatalogWriteFailure, "corrupt catalog line in " + path_.string());
    }
    ++complete;
    if (j.contains("skipped_reason")) {
      SkipRecord s{j.at("storage_ref").get<std::string>(),
                   parse_source_tag(j.at("source").get<std::string>()),
                   j.at("skipped_reason").get<std::string>()};
      skipped_refs_.insert(s.storage_ref);
      skips_.push_back(std::move(s));
      return;
    }
    ImageAsset a = asset_from_json(j);
    if (by_digest_.count(a.digest.qualified())) return;
    by_digest_.emplace(a.digest.qualified(), assets_.size());
    by_id_.emplace(a.asset_id, assets_.size());
    assets_.push_back(std::move(a));
  });
  if (std::filesystem::exists(path_)) truncate_to_lines(path_, complete);
}

void Catalog::write_line(const std::string& line) {
  try {
    appender_.append(line);
  } catch (const Error& e) {
    throw Error(ErrorCode::CatalogWriteFailure, e.what());
  }
}

bool Catalog::append(const ImageAsset& asset) {
  std::unique_lock lock(mu_);
  if (by_digest_.count(asset.digest.qualified())) return false;
  write_line(to_json(asset).dump());
  by_digest_.emplace(asset.digest.qualified(), assets_.size());
  by_id_.emplace(asset.asset_id, assets_.size());
  assets_.push_back(asset);
  return true;
}

bool Catalog::append_skip(const SkipRecord& skip) {
  std::unique_lock lock(mu_);
  if (skipped_refs_.count(skip.storage_ref)) return false;
  write_line(to_json(skip).dump());
  skipped_refs_.insert(skip.storage_ref);
  skips_.push_back(skip);
  return true;
}

bool Catalog::contains(const ContentDigest& d) const {
  std::shared_lock lock(mu_);
  return by_digest_.count(d.qualified()) != 0;
}

std::optional<ImageAsset> Catalog::find(const std::string& asset_id) const {
  std::shared_lock lock(mu_);
  auto it = by_id_.find(asset_id);
  if (it == by_id_.end()) return std::nullopt;
  return assets_[it->second];
}

std::optional<ImageAsset> Catalog::find_by_digest(const ContentDigest& d) const {
  std::shared_lock lock(mu_);
  auto it = by_digest_.find(d.qualified());
  if (it == by_digest_.end()) return std::nullopt;
  return assets_[it->second];
}

std::vector<ImageAsset> Catalog::assets() const {
  std::shared_lock lock(mu_);
  return assets_;
}

std::vector<SkipRecord> Catalog::skips() const {
  std::shared_lock lock(mu_);
  return skips_;
}

std::size_t Catalog::size() const {
  std::shared_lock lock(mu_);
  return assets_.size();
}

}  // namespace figforge::corpus
