#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "figforge/common/fileio.hpp"
#include "figforge/common/image.hpp"
#include "figforge/modelgate/gateway.hpp"
#include "figforge/modelgate/types.hpp"
#include "figforge/render/renderer.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using figforge::Image;
using figforge::modelgate::CodeSample;
using figforge::modelgate::Dialect;

struct TempDir {
  fs::path path;
  TempDir() : path(figforge::make_unique_directory(fs::temp_directory_path(), "figforge-test-")) {}
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  fs::path operator/(const std::string& s) const { return path / s; }
};

inline Image random_image(std::mt19937_64& rng, std::uint32_t w, std::uint32_t h, bool random_alpha = true) {
  Image img(w, h);
  std::uniform_int_distribution<int> byte(0, 255);
  for (auto& b : img.rgba) b = static_cast<std::uint8_t>(byte(rng));
  if (!random_alpha) {
    for (std::size_t i = 3; i < img.rgba.size(); i += 4) img.rgba[i] = 255;
  }
  return img;
}

inline Image gray_image(std::uint32_t w, std::uint32_t h, std::uint8_t v) { return Image(w, h, v, v, v, 255); }

// White canvas with a few dark strokes; `salt` moves them around.
inline Image figure_image(std::uint32_t w, std::uint32_t h, std::uint32_t salt) {
  Image img(w, h);
  std::mt19937 rng(salt);
  for (int k = 0; k < 4; ++k) {
    const std::uint32_t y = rng() % h;
    const std::uint32_t x0 = rng() % (w / 2);
    for (std::uint32_t x = x0; x < w; ++x) img.set(x, y, 0, 0, 0);
    const std::uint32_t x = rng() % w;
    for (std::uint32_t yy = 0; yy < h; ++yy) img.set(x, yy, 20, 20, 20);
  }
  return img;
}

inline void write_png(const fs::path& path, const Image& img) {
  fs::create_directories(path.parent_path());
  figforge::atomic_write_file(path, figforge::encode_png(img));
}

inline CodeSample code(Dialect d, std::string text, std::string seed = "img-seed", std::uint32_t round = 0) {
  return figforge::modelgate::make_code_sample(d, std::move(text), {std::move(seed), round, "default", 0.0, ""});
}

inline CodeSample tikz(std::string text) { return code(Dialect::Tikz, std::move(text)); }
inline CodeSample python(std::string text) { return code(Dialect::PlotScript, std::move(text)); }

inline figforge::render::RenderOutcome success_outcome(const CodeSample& c, const Image& img) {
  figforge::render::RenderOutcome o;
  o.outcome_id = figforge::render::outcome_id_for(c);
  o.code_id = c.code_id;
  o.dialect = c.dialect;
  figforge::render::attach_png(o, figforge::encode_png(img));
  return o;
}

// Gateway with one stub endpoint under `id` and no real sleeping.
inline std::unique_ptr<figforge::modelgate::ModelGateway> stub_gateway(
    std::shared_ptr<figforge::modelgate::StubEndpoint> stub, const std::string& id = "default",
    std::size_t max_in_flight = 8) {
  auto gw = std::make_unique<figforge::modelgate::ModelGateway>();
  gw->set_sleeper([](std::chrono::milliseconds) {});
  gw->add_endpoint({id, std::move(stub), "stub-model", max_in_flight, 0.0, 1.0});
  return gw;
}

inline std::string random_code_text(std::mt19937_64& rng, std::size_t max_len = 200) {
  static const std::string alphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 \t\n{}()[];,.=+-*/\\%#'\"`$_:<>|&^~!?@";
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string s;
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[pick(rng)]);
  return s;
}

}  // namespace testsupport
