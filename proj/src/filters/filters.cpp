#include "figforge/filters/filters.hpp"

#include <cmath>

#include "figforge/common/error.hpp"
#include "figforge/common/fileio.hpp"
#include "figforge/common/text.hpp"

namespace figforge::filters {

__extension__ typedef unsigned __int128 u128;

std::uint8_t gray_level(std::uint8_t r, std::uint8_t g, std::uint8_t b, std::uint8_t a) {
  auto over_white = [a](std::uint32_t c) { return (c * a + 255u * (255u - a) + 127u) / 255u; };
  const std::uint32_t rr = over_white(r), gg = over_white(g), bb = over_white(b);
  return static_cast<std::uint8_t>((299u * rr + 587u * gg + 114u * bb + 500u) / 1000u);
}

PixelStats pixel_stats(const Image& image) {
  if (image.empty()) throw Error(ErrorCode::DecodeFailure, "pixel_stats of an empty image");
  std::uint64_t sum = 0;
  u128 sum_sq = 0;
  const std::size_t n = image.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = image.rgba.data() + 4 * i;
    const std::uint64_t v = gray_level(p[0], p[1], p[2], p[3]);
    sum += v;
    sum_sq += v * v;
  }
  // n^2 * variance = n * sum_sq - sum^2, exact in 128 bits.
  const u128 nn = n;
  const u128 scaled_var = nn * sum_sq - static_cast<u128>(sum) * sum;
  PixelStats s;
  s.width_px = image.width;
  s.height_px = image.height;
  s.mean = static_cast<double>(sum) / static_cast<double>(n);
  s.std = std::sqrt(static_cast<double>(scaled_var)) / static_cast<double>(n);
  return s;
}

PixelStats pixel_stats(std::span<const std::uint8_t> encoded) { return pixel_stats(decode_image(encoded)); }

std::vector<std::string> FilterConfig::default_banlist() {
  // Random-coordinate generators in both dialects; see resources/banlist.txt.
  return {"rand(", "rand*", "rand,", "rand)", "rand}", "rnd", "random", "randint", "randn",
          "default_rng"};
}

void FilterConfig::validate() const {
  for (double v : {blank_std_threshold, near_white_mean_min, near_white_std_max, black_mean_max,
                   near_duplicate_jaccard}) {
    if (!std::isfinite(v) || v < 0.0) throw Error(ErrorCode::ConfigInvalid, "filter thresholds must be finite and >= 0");
  }
  if (max_code_chars == 0) throw Error(ErrorCode::ConfigInvalid, "max_code_chars must be positive");
  if (near_duplicate_jaccard > 1.0) throw Error(ErrorCode::ConfigInvalid, "near_duplicate_jaccard must be <= 1");
}

std::vector<std::string> parse_banlist(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& line : text::split_lines(text)) {
    // Keywords may carry meaningful trailing spaces, so only the
    // line terminator is stripped.
    if (text::trim(line).empty() || line.front() == '#') continue;
    out.push_back(line);
  }
  return out;
}

std::vector<std::string> load_banlist(const std::filesystem::path& path) { return parse_banlist(read_text_file(path)); }

FilterConfig filter_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  FilterConfig cfg;
  cfg.max_code_chars = j.value("max_code_chars", cfg.max_code_chars);
  cfg.blank_std_threshold = j.value("blank_std_threshold", cfg.blank_std_threshold);
  cfg.near_white_mean_min = j.value("near_white_mean_min", cfg.near_white_mean_min);
  cfg.near_white_std_max = j.value("near_white_std_max", cfg.near_white_std_max);
  cfg.black_mean_max = j.value("black_mean_max", cfg.black_mean_max);
  cfg.near_duplicate_jaccard = j.value("near_duplicate_jaccard", cfg.near_duplicate_jaccard);
  if (j.contains("banlist_file")) {
    std::filesystem::path p = j.at("banlist_file").get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    cfg.banned_keywords = load_banlist(p);
  } else if (j.contains("banned_keywords")) {
    cfg.banned_keywords = j.at("banned_keywords").get<std::vector<std::string>>();
  }
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const FilterConfig& cfg) {
  return {{"max_code_chars", cfg.max_code_chars},
          {"banned_keywords", cfg.banned_keywords},
          {"blank_std_threshold", cfg.blank_std_threshold},
          {"near_white_mean_min", cfg.near_white_mean_min},
          {"near_white_std_max", cfg.near_white_std_max},
          {"black_mean_max", cfg.black_mean_max},
          {"near_duplicate_jaccard", cfg.near_duplicate_jaccard}};
}

FilterVerdict blank_filter(const PixelStats& stats, const FilterConfig& cfg) {
  if (stats.std < cfg.blank_std_threshold) {
    return FilterVerdict::reject(RejectReason::Blank, "std " + std::to_string(stats.std));
  }
  return FilterVerdict::pass();
}

FilterVerdict white_black_filter(const PixelStats& stats, const FilterConfig& cfg) {
  if (stats.mean >= cfg.near_white_mean_min && stats.std <= cfg.near_white_std_max) {
    return FilterVerdict::reject(RejectReason::NearWhite,
                                 "mean " + std::to_string(stats.mean) + " std " + std::to_string(stats.std));
  }
  if (stats.mean <= cfg.black_mean_max) {
    return FilterVerdict::reject(RejectReason::BlackSquare, "mean " + std::to_string(stats.mean));
  }
  return FilterVerdict::pass();
}

namespace {

std::string strip_tex_comments(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_comment = false;
  std::size_t backslashes = 0;
  for (char c : text) {
    if (in_comment) {
      if (c == '\n') {
        in_comment = false;
        out.push_back(c);
      }
      continue;
    }
    if (c == '%' && backslashes % 2 == 0) {
      in_comment = true;
      backslashes = 0;
      continue;
    }
    backslashes = c == '\\' ? backslashes + 1 : 0;
    out.push_back(c);
  }
  return out;
}

std::string strip_python_comments(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  char quote = 0;       // active string delimiter
  bool triple = false;
  bool escaped = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quote) {
      out.push_back(c);
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == quote) {
        if (!triple) {
          quote = 0;
        } else if (i + 2 < text.size() && text[i + 1] == quote && text[i + 2] == quote) {
          out.push_back(text[++i]);
          out.push_back(text[++i]);
          quote = 0;
          triple = false;
        }
      } else if (c == '\n' && !triple) {
        quote = 0;  // unterminated single-line literal
      }
      continue;
    }
    if (c == '#') {
      while (i + 1 < text.size() && text[i + 1] != '\n') ++i;
      continue;
    }
    if (c == '\'' || c == '"') {
      quote = c;
      out.push_back(c);
      if (i + 2 < text.size() && text[i + 1] == c && text[i + 2] == c) {
        triple = true;
        out.push_back(text[++i]);
        out.push_back(text[++i]);
      }
      continue;
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string normalize_code(Dialect dialect, std::string_view text) {
  return text::collapse_whitespace(dialect == Dialect::Tikz ? strip_tex_comments(text) : strip_python_comments(text));
}

std::string normalize_code(const CodeSample& code) { return normalize_code(code.dialect, code.text); }

ContentDigest dedup_key(Dialect dialect, std::string_view text) {
  std::string keyed(modelgate::to_string(dialect));
  keyed.push_back('\n');
  keyed.append(normalize_code(dialect, text));
  return sha256(keyed);
}

ContentDigest dedup_key(const CodeSample& code) { return dedup_key(code.dialect, code.text); }

FilterVerdict keyword_filter(const CodeSample& code, const FilterConfig& cfg) {
  if (cfg.banned_keywords.empty()) return FilterVerdict::pass();
  const std::string normalized = normalize_code(code);
  std::vector<std::string> hits;
  for (const auto& kw : cfg.banned_keywords) {
    if (!kw.empty() && normalized.find(kw) != std::string::npos) hits.push_back(kw);
  }
  if (hits.empty()) return FilterVerdict::pass();
  return FilterVerdict::reject(RejectReason::Keyword, text::join(hits, ", "));
}

FilterVerdict length_filter(const CodeSample& code, const FilterConfig& cfg) {
  const std::size_t n = text::utf8_length(code.text);
  if (n > cfg.max_code_chars) {
    return FilterVerdict::reject(RejectReason::TooLong,
                                 std::to_string(n) + " chars > " + std::to_string(cfg.max_code_chars));
  }
  return FilterVerdict::pass();
}

}  // namespace figforge::filters
