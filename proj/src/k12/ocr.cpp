#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "figforge/k12/ocr.hpp"

#include <filesystem>
#include <regex>

#include <nlohmann/json.hpp>

#include "figforge/common/digest.hpp"
#include "figforge/common/error.hpp"
#include "figforge/common/image.hpp"

namespace figforge::k12 {

std::string StubOcr::recognize(const corpus::ImageAsset& equation) {
  auto it = table_.find(equation.digest.hex);
  if (it == table_.end()) throw Error(ErrorCode::OcrUnreachable, "no OCR fixture for " + equation.asset_id);
  return it->second;
}

std::string HttpOcr::recognize(const corpus::ImageAsset& equation) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file_bytes(equation.storage_ref);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::OcrUnreachable, "cannot read " + equation.storage_ref + ": " + e.what());
  }
  const std::size_t scheme_end = cfg_.url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::ConfigInvalid, "OCR url needs a scheme: " + cfg_.url);
  const std::size_t path_start = cfg_.url.find('/', scheme_end + 3);
  const std::string base = path_start == std::string::npos ? cfg_.url : cfg_.url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : cfg_.url.substr(path_start);

  httplib::Client client(base);
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(cfg_.timeout);
  const nlohmann::json body{{"image", base64_encode(bytes)},
                            {"mime", sniff_format(bytes) == ImageFormat::Jpeg ? "image/jpeg" : "image/png"}};
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) throw Error(ErrorCode::OcrUnreachable, cfg_.url + ": " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::OcrUnreachable, cfg_.url + ": HTTP " + std::to_string(res->status));
  }
  const auto reply = nlohmann::json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.contains("latex") || !reply["latex"].is_string()) {
    throw Error(ErrorCode::OcrUnreachable, cfg_.url + ": reply has no latex field");
  }
  return reply["latex"].get<std::string>();
}

OcrResult ocr_equations(const std::vector<corpus::ImageAsset>& equations, OcrClient& ocr) {
  OcrResult r;
  for (const auto& eq : equations) {
    try {
      r.latex[eq.asset_id] = ocr.recognize(eq);
    } catch (const Error&) {
      r.failed.push_back(eq.asset_id);
    }
  }
  return r;
}

std::string ocr_placeholder(const std::string& asset_id) { return "[equation unavailable: " + asset_id + "]"; }

SplicedText splice_equations(const std::string& question, const std::vector<corpus::ImageAsset>& equations,
                             const OcrResult& ocr) {
  static const std::regex img(R"(<img\b[^>]*?\bsrc\s*=\s*["']?([^"'\s>]+)["']?[^>]*>)", std::regex::icase);
  SplicedText out;
  std::vector<bool> placed(equations.size(), false);

  auto replacement = [&](std::size_t i) {
    const auto& id = equations[i].asset_id;
    auto it = ocr.latex.find(id);
    if (it == ocr.latex.end()) {
      out.flagged = true;
      return ocr_placeholder(id);
    }
    return "$" + it->second + "$";
  };
  auto matches = [&](const std::string& src, const corpus::ImageAsset& eq) {
    if (src == eq.asset_id) return true;
    if (eq.storage_ref.empty()) return false;
    return std::filesystem::path(src).filename() == std::filesystem::path(eq.storage_ref).filename();
  };

  std::string text;
  auto last = question.cbegin();
  for (auto it = std::sregex_iterator(question.begin(), question.end(), img); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    text.append(last, m[0].first);
    last = m[0].second;
    std::optional<std::size_t> hit;
    for (std::size_t i = 0; i < equations.size(); ++i) {
      if (!placed[i] && matches(m[1].str(), equations[i])) {
        hit = i;
        break;
      }
    }
    if (hit) {
      placed[*hit] = true;
      text += replacement(*hit);
    } else {
      text.append(m[0].first, m[0].second);  // figure or unrelated image stays
    }
  }
  text.append(last, question.cend());
  for (std::size_t i = 0; i < equations.size(); ++i) {
    if (placed[i]) continue;
    const std::string r = replacement(i);
    text += r.front() == '$' ? " [equation: " + r + "]" : " " + r;
  }
  out.text = std::move(text);
  return out;
}

}  // namespace figforge::k12
