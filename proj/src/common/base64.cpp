#include "ol/common/base64.hpp"

#include <boost/beast/core/detail/base64.hpp>

#include "ol/common/error.hpp"

namespace ol {

namespace b64 = boost::beast::detail::base64;

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw ArgumentError("invalid base64 payload");
  std::string_view body = text;
  for (int i = 0; i < 2 && !body.empty() && body.back() == '='; ++i) body.remove_suffix(1);
  std::vector<std::uint8_t> out(b64::decoded_size(text.size()));
  auto [written, read] = b64::decode(out.data(), body.data(), body.size());
  if (read != body.size()) throw ArgumentError("invalid base64 payload");
  out.resize(written);
  return out;
}

}  // namespace ol
