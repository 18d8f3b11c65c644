#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "figforge/common/digest.hpp"
#include "figforge/common/image.hpp"
#include "figforge/filters/verdict.hpp"
#include "figforge/modelgate/types.hpp"

namespace figforge::filters {

using modelgate::CodeSample;
using modelgate::Dialect;

// Grayscale statistics. Pixels are composited over white by their alpha, then
// reduced to luma as (299 R + 587 G + 114 B + 500) / 1000 in integers.
struct PixelStats {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::uint32_t width_px = 0;
  std::uint32_t height_px = 0;
};

/// Gray level of one RGBA pixel under the rule above.
std::uint8_t gray_level(std::uint8_t r, std::uint8_t g, std::uint8_t b, std::uint8_t a);

/// Mean and variance come from exact integer sums, so a constant image has
/// std exactly 0.
PixelStats pixel_stats(const Image& image);
/// Decodes first; throws Error(DecodeFailure).
PixelStats pixel_stats(std::span<const std::uint8_t> encoded);

struct FilterConfig {
  std::size_t max_code_chars = 8000;
  std::vector<std::string> banned_keywords = default_banlist();
  double blank_std_threshold = 5.0;
  double near_white_mean_min = 250.0;
  double near_white_std_max = 10.0;
  double black_mean_max = 5.0;
  /// Token-shingle Jaccard threshold for near-duplicate rejection; 0 disables.
  double near_duplicate_jaccard = 0.0;

  static std::vector<std::string> default_banlist();
  /// Throws Error(ConfigInvalid) for negative or non-finite thresholds.
  void validate() const;
};

/// One keyword per line; blank lines and lines starting with '#' are skipped.
std::vector<std::string> load_banlist(const std::filesystem::path& path);
std::vector<std::string> parse_banlist(std::string_view text);

FilterConfig filter_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const FilterConfig& cfg);

FilterVerdict blank_filter(const PixelStats& stats, const FilterConfig& cfg);
FilterVerdict white_black_filter(const PixelStats& stats, const FilterConfig& cfg);

/// Strips comments (unescaped % in TikZ, # outside string literals in Python),
/// collapses whitespace runs to one space, trims. Case is preserved.
std::string normalize_code(Dialect dialect, std::string_view text);
std::string normalize_code(const CodeSample& code);

/// Digest of the dialect tag and the normalized text.
ContentDigest dedup_key(Dialect dialect, std::string_view text);
ContentDigest dedup_key(const CodeSample& code);

FilterVerdict keyword_filter(const CodeSample& code, const FilterConfig& cfg);
FilterVerdict length_filter(const CodeSample& code, const FilterConfig& cfg);

}  // namespace figforge::filters
