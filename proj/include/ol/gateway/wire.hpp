#pragma once

// Gateway wire format.
//
// Text frames are JSON objects {type, session, payload}. Binary frames are
//
//   byte 0       kind (0x01 audio-in, 0x02 frame-in, 0x11 audio-out)
//   bytes 1..4   seq, uint32 big-endian
//   bytes 5..12  t_ms, int64 big-endian
//   bytes 13..   body
//
// Audio-in bodies are 16-bit LE mono 16 kHz PCM; frame-in bodies are JPEG.
// Audio-out bodies start with the answer's generation id (uint32
// big-endian) followed by PCM.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ol/common/error.hpp"
#include "ol/reasoning/reasoning.hpp"

namespace ol::gateway {

inline constexpr const char* kProtocolVersion = "ol/1";
inline constexpr std::size_t kBinaryHeaderBytes = 13;
inline constexpr std::size_t kAudioOutPrefixBytes = 4;

inline constexpr std::array<const char*, 7> kMessageTypes = {"hello", "ready", "interrupt", "transcript",
                                                             "answer", "status", "bye"};

enum class BinaryKind : std::uint8_t { AudioIn = 0x01, FrameIn = 0x02, AudioOut = 0x11 };

class WireError : public Error {
 public:
  using Error::Error;
};

struct BinaryFrame {
  BinaryKind kind = BinaryKind::AudioIn;
  std::uint32_t seq = 0;
  std::int64_t t_ms = 0;
  std::vector<std::uint8_t> body;
  bool operator==(const BinaryFrame&) const = default;
};

std::vector<std::uint8_t> encode_binary(const BinaryFrame& frame);
// Throws WireError on a short header or an unknown kind byte.
BinaryFrame decode_binary(std::span<const std::uint8_t> bytes);

struct AudioOut {
  std::uint32_t seq = 0;
  std::int64_t t_ms = 0;
  std::uint32_t generation = 0;
  std::vector<std::int16_t> samples;
  bool operator==(const AudioOut&) const = default;
};

BinaryFrame encode_audio_out(const AudioOut& audio);
BinaryFrame encode_audio_out(const reasoning::OutAudioChunk& chunk);
AudioOut decode_audio_out(const BinaryFrame& frame);

struct JsonMessage {
  std::string type;
  std::string session;
  nlohmann::json payload = nlohmann::json::object();
};

bool is_message_type(std::string_view type);

std::string encode_message(const JsonMessage& msg);
// Throws WireError for invalid JSON, a missing field or an unknown type.
JsonMessage decode_message(std::string_view text);

JsonMessage make_message(std::string type, std::string session, nlohmann::json payload = nlohmann::json::object());
JsonMessage interrupt_message(const std::string& session, std::uint64_t generation, std::int64_t t_ms);
JsonMessage status_message(const std::string& session, std::string level, std::string code, std::string detail,
                           nlohmann::json extra = nlohmann::json::object());

}  // namespace ol::gateway
