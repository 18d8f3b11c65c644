#include "figforge/corpus/asset.hpp"

#include <array>
#include <utility>

#include "figforge/common/error.hpp"

namespace figforge::corpus {

namespace {

constexpr std::array<std::pair<SourceTag, std::string_view>, 6> kSourceNames{{
    {SourceTag::DatikzSeed, "DATIKZ_SEED"},
    {SourceTag::K12, "K12"},
    {SourceTag::Textbook, "TEXTBOOK"},
    {SourceTag::Arxiv, "ARXIV"},
    {SourceTag::OpenDataset, "OPEN_DATASET"},
    {SourceTag::Synthesized, "SYNTHESIZED"},
}};

constexpr std::array<std::pair<AssetKind, std::string_view>, 3> kKindNames{{
    {AssetKind::Figure, "FIGURE"},
    {AssetKind::Equation, "EQUATION"},
    {AssetKind::Unknown, "UNKNOWN"},
}};

}  // namespace

std::string_view to_string(SourceTag tag) {
  for (const auto& [t, name] : kSourceNames) {
    if (t == tag) return name;
  }
  return "UNKNOWN";
}

std::string_view to_string(AssetKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "UNKNOWN";
}

SourceTag parse_source_tag(std::string_view name) {
  for (const auto& [t, n] : kSourceNames) {
    if (n == name) return t;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown source tag '" + std::string(name) + "'");
}

AssetKind parse_asset_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown asset kind '" + std::string(name) + "'");
}

AssetKind classify_dimensions(std::uint32_t width_px, std::uint32_t height_px,
                              const ClassifyConfig& cfg) {
  const std::uint64_t area = static_cast<std::uint64_t>(width_px) * height_px;
  if (height_px <= cfg.max_equation_height_px || area <= cfg.max_equation_area_px) {
    return AssetKind::Equation;
  }
  return AssetKind::Figure;
}

AssetKind classify_asset(const ImageAsset& asset, const ClassifyConfig& cfg) {
  return classify_dimensions(asset.width_px, asset.height_px, cfg);
}

ContentDigest digest(std::span<const std::uint8_t> pixels) {
  if (pixels.empty()) throw Error(ErrorCode::EmptyInput, "cannot digest an empty pixel buffer");
  return sha256(pixels);
}

ContentDigest pixel_digest(const Image& image) { return digest(canonical_pixel_bytes(image)); }

std::string asset_id_for(const ContentDigest& d) { return "img-" + d.prefix(20); }

ImageAsset make_asset(const Image& image, SourceTag source, std::string storage_ref,
                      const ClassifyConfig& cfg) {
  ImageAsset a;
  a.digest = pixel_digest(image);
  a.asset_id = asset_id_for(a.digest);
  a.source = source;
  a.width_px = image.width;
  a.height_px = image.height;
  a.storage_ref = std::move(storage_ref);
  a.kind = classify_dimensions(image.width, image.height, cfg);
  return a;
}

nlohmann::json to_json(const ImageAsset& asset) {
  return nlohmann::json{
      {"asset_id", asset.asset_id},
      {"source", to_string(asset.source)},
      {"width_px", asset.width_px},
      {"height_px", asset.height_px},
      {"digest_alg", asset.digest.algorithm},
      {"digest_hex", asset.digest.hex},
      {"storage_ref", asset.storage_ref},
      {"kind", to_string(asset.kind)},
  };
}

ImageAsset asset_from_json(const nlohmann::json& j) {
  ImageAsset a;
  a.asset_id = j.at("asset_id").get<std::string>();
  a.source = parse_source_tag(j.at("source").get<std::string>());
  a.width_px = j.at("width_px").get<std::uint32_t>();
  a.height_px = j.at("height_px").get<std::uint32_t>();
  a.digest.algorithm = j.at("digest_alg").get<std::string>();
  a.digest.hex = j.at("digest_hex").get<std::string>();
  a.storage_ref = j.at("storage_ref").get<std::string>();
  a.kind = parse_asset_kind(j.at("kind").get<std::string>());
  return a;
}

}  // namespace figforge::corpus
