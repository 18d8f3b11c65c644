#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "figforge/common/digest.hpp"
#include "figforge/common/image.hpp"

namespace figforge::corpus {

enum class SourceTag { DatikzSeed, K12, Textbook, Arxiv, OpenDataset, Synthesized };
enum class AssetKind { Figure, Equation, Unknown };

std::string_view to_string(SourceTag tag);
std::string_view to_string(AssetKind kind);
/// Throws Error(ConfigInvalid) for names outside the enum.
SourceTag parse_source_tag(std::string_view name);
AssetKind parse_asset_kind(std::string_view name);

struct ImageAsset {
  std::string asset_id;
  SourceTag source = SourceTag::Synthesized;
  std::uint32_t width_px = 0;
  std::uint32_t height_px = 0;
  ContentDigest digest;
  std::string storage_ref;
  AssetKind kind = AssetKind::Unknown;

  bool operator==(const ImageAsset&) const = default;
};

// Thresholds below which a crop is treated as a typeset equation line.
struct ClassifyConfig {
  std::uint32_t max_equation_height_px = 40;
  std::uint64_t max_equation_area_px = 6400;
};

AssetKind classify_asset(const ImageAsset& asset, const ClassifyConfig& cfg);
AssetKind classify_dimensions(std::uint32_t width_px, std::uint32_t height_px,
                              const ClassifyConfig& cfg);

/// Digest over decoded pixel bytes. Throws Error(EmptyInput) on an empty span.
ContentDigest digest(std::span<const std::uint8_t> pixels);
/// digest() of canonical_pixel_bytes(image).
ContentDigest pixel_digest(const Image& image);

/// Ids are derived from the digest so re-ingestion reproduces them.
std::string asset_id_for(const ContentDigest& d);

/// Builds an asset record for a decoded image. Kind comes from cfg.
ImageAsset make_asset(const Image& image, SourceTag source, std::string storage_ref,
                      const ClassifyConfig& cfg);

nlohmann::json to_json(const ImageAsset& asset);
ImageAsset asset_from_json(const nlohmann::json& j);

}  // namespace figforge::corpus
