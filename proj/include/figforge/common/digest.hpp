#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace figforge {

/// Algorithm id plus fixed-length lowercase hex. Only SHA-256 is produced.
struct ContentDigest {
  std::string algorithm = "sha256";
  std::string hex;

  bool operator==(const ContentDigest&) const = default;
  auto operator<=>(const ContentDigest&) const = default;

  /// "sha256:<hex>" form, used as a set key and in logs.
  std::string qualified() const { return algorithm + ":" + hex; }
  /// First n hex characters, for building short deterministic ids.
  std::string prefix(std::size_t n) const { return hex.substr(0, n); }
};

constexpr std::size_t kSha256HexLength = 64;

ContentDigest sha256(std::span<const std::uint8_t> bytes);
ContentDigest sha256(std::string_view text);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::string base64_decode(std::string_view text);

}  // namespace figforge

template <>
struct std::hash<figforge::ContentDigest> {
  std::size_t operator()(const figforge::ContentDigest& d) const noexcept {
    return std::hash<std::string>{}(d.hex);
  }
};
