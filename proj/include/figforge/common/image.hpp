#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace figforge {

// Decoded raster, always normalized to 8-bit RGBA, row-major, no padding.
struct Image {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> rgba;

  Image() = default;
  Image(std::uint32_t w, std::uint32_t h, std::uint8_t r = 255, std::uint8_t g = 255,
        std::uint8_t b = 255, std::uint8_t a = 255);

  bool empty() const { return width == 0 || height == 0; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  void set(std::uint32_t x, std::uint32_t y, std::uint8_t r, std::uint8_t g, std::uint8_t b,
           std::uint8_t a = 255);
  const std::uint8_t* at(std::uint32_t x, std::uint32_t y) const {
    return rgba.data() + (static_cast<std::size_t>(y) * width + x) * 4;
  }

  bool operator==(const Image&) const = default;
};

enum class ImageFormat { Png, Jpeg, Unknown };

ImageFormat sniff_format(std::span<const std::uint8_t> bytes);

/// Throws Error(DecodeFailure) on anything that is not a readable PNG or JPEG.
Image decode_image(std::span<const std::uint8_t> bytes);
Image load_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const Image& image);

/// Bytes the pixel digest is taken over: a "WxH\n" header then the RGBA payload.
/// The header keeps 2x8 and 4x4 images with identical bytes apart.
std::vector<std::uint8_t> canonical_pixel_bytes(const Image& image);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace figforge
