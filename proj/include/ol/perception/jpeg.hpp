#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ol::perception {

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB triplets
};

// Throws DecodeError on corrupt or unsupported input.
RgbImage decode_jpeg(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_jpeg(const RgbImage& image, int quality = 90);

}  // namespace ol::perception
