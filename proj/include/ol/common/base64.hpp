#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ol {

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Throws ArgumentError on characters outside the base64 alphabet.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace ol
