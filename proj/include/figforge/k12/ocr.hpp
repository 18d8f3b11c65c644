#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "figforge/corpus/asset.hpp"

namespace figforge::k12 {

// Equation image -> LaTeX. Implementations throw Error(OcrUnreachable).
class OcrClient {
 public:
  virtual ~OcrClient() = default;
  virtual std::string recognize(const corpus::ImageAsset& equation) = 0;
};

// Fixture table keyed by pixel digest hex. Unknown digests fail.
class StubOcr : public OcrClient {
 public:
  StubOcr() = default;
  explicit StubOcr(std::map<std::string, std::string> table) : table_(std::move(table)) {}
  void set(const std::string& digest_hex, std::string latex) { table_[digest_hex] = std::move(latex); }
  std::string recognize(const corpus::ImageAsset& equation) override;

 private:
  std::map<std::string, std::string> table_;
};

struct HttpOcrConfig {
  std::string url;  // POST {"image": base64, "mime": ...} -> {"latex": ...}
  std::chrono::seconds timeout{60};
};

class HttpOcr : public OcrClient {
 public:
  explicit HttpOcr(HttpOcrConfig cfg) : cfg_(std::move(cfg)) {}
  std::string recognize(const corpus::ImageAsset& equation) override;

 private:
  HttpOcrConfig cfg_;
};

struct OcrResult {
  std::map<std::string, std::string> latex;  // asset_id -> LaTeX
  std::vector<std::string> failed;           // asset ids, in input order
};

/// Never throws for a single image; failures are collected.
OcrResult ocr_equations(const std::vector<corpus::ImageAsset>& equations, OcrClient& ocr);

struct SplicedText {
  std::string text;
  bool flagged = false;
};

/// Replaces each equation's <img> token (matched on src equal to the asset id
/// or to the basename of its storage_ref) with $latex$, or with a flagged
/// placeholder when OCR failed. Equations without a token are appended in
/// order as " [equation: $latex$]".
SplicedText splice_equations(const std::string& question, const std::vector<corpus::ImageAsset>& equations,
                             const OcrResult& ocr);

std::string ocr_placeholder(const std::string& asset_id);

}  // namespace figforge::k12
