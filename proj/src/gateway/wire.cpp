#include "ol/gateway/wire.hpp"

#include <algorithm>

#include "ol/ingest/audio.hpp"

namespace ol::gateway {

namespace {

template <typename U>
void put_be(std::vector<std::uint8_t>& out, U v) {
  for (int shift = static_cast<int>(sizeof(U) * 8) - 8; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>((v >> shift) & 0xff));
  }
}

template <typename U>
U get_be(std::span<const std::uint8_t> bytes, std::size_t at) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v = static_cast<U>((v << 8) | bytes[at + i]);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_binary(const BinaryFrame& frame) {
  std::vector<std::uint8_t> out;
  out.reserve(kBinaryHeaderBytes + frame.body.size());
  out.push_back(static_cast<std::uint8_t>(frame.kind));
  put_be(out, frame.seq);
  put_be(out, static_cast<std::uint64_t>(frame.t_ms));
  out.insert(out.end(), frame.body.begin(), frame.body.end());
  return out;
}

BinaryFrame decode_binary(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kBinaryHeaderBytes) throw WireError("binary frame shorter than its 13-byte header");
  BinaryFrame f;
  switch (bytes[0]) {
    case 0x01: f.kind = BinaryKind::AudioIn; break;
    case 0x02: f.kind = BinaryKind::FrameIn; break;
    case 0x11: f.kind = BinaryKind::AudioOut; break;
    default: throw WireError("unknown binary kind " + std::to_string(bytes[0]));
  }
  f.seq = get_be<std::uint32_t>(bytes, 1);
  f.t_ms = static_cast<std::int64_t>(get_be<std::uint64_t>(bytes, 5));
  f.body.assign(bytes.begin() + kBinaryHeaderBytes, bytes.end());
  return f;
}

BinaryFrame encode_audio_out(const AudioOut& audio) {
  BinaryFrame f{BinaryKind::AudioOut, audio.seq, audio.t_ms, {}};
  f.body.reserve(kAudioOutPrefixBytes + audio.samples.size() * 2);
  put_be(f.body, audio.generation);
  const auto pcm = ingest::to_bytes(audio.samples);
  f.body.insert(f.body.end(), pcm.begin(), pcm.end());
  return f;
}

BinaryFrame encode_audio_out(const reasoning::OutAudioChunk& chunk) {
  return encode_audio_out(AudioOut{chunk.seq, chunk.t_ms, static_cast<std::uint32_t>(chunk.generation), chunk.samples});
}

AudioOut decode_audio_out(const BinaryFrame& frame) {
  if (frame.kind != BinaryKind::AudioOut) throw WireError("not an audio-out frame");
  if (frame.body.size() < kAudioOutPrefixBytes || (frame.body.size() - kAudioOutPrefixBytes) % 2 != 0) {
    throw WireError("audio-out body must be a 4-byte generation plus whole samples");
  }
  AudioOut a;
  a.seq = frame.seq;
  a.t_ms = frame.t_ms;
  a.generation = get_be<std::uint32_t>(frame.body, 0);
  a.samples = ingest::to_samples(std::span(frame.body).subspan(kAudioOutPrefixBytes));
  return a;
}

bool is_message_type(std::string_view type) {
  return std::find(kMessageTypes.begin(), kMessageTypes.end(), type) != kMessageTypes.end();
}

std::string encode_message(const JsonMessage& msg) {
  return nlohmann::json{{"type", msg.type}, {"session", msg.session}, {"payload", msg.payload}}.dump();
}

JsonMessage decode_message(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw WireError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw WireError("message must be a JSON object");
  if (!j.contains("type") || !j["type"].is_string()) throw WireError("message has no string 'type'");
  JsonMessage m;
  m.type = j["type"].get<std::string>();
  if (!is_message_type(m.type)) throw WireError("unknown message type '" + m.type + "'");
  if (j.contains("session")) {
    if (!j["session"].is_string()) throw WireError("'session' must be a string");
    m.session = j["session"].get<std::string>();
  }
  if (j.contains("payload")) {
    if (!j["payload"].is_object()) throw WireError("'payload' must be an object");
    m.payload = j["payload"];
  }
  return m;
}

JsonMessage make_message(std::string type, std::string session, nlohmann::json payload) {
  return {std::move(type), std::move(session), std::move(payload)};
}

JsonMessage interrupt_message(const std::string& session, std::uint64_t generation, std::int64_t t_ms) {
  return make_message("interrupt", session, {{"generation", generation}, {"t_ms", t_ms}});
}

JsonMessage status_message(const std::string& session, std::string level, std::string code, std::string detail,
                           nlohmann::json extra) {
  nlohmann::json p = {{"level", std::move(level)}, {"code", std::move(code)}, {"detail", std::move(detail)}};
  for (auto& [k, v] : extra.items()) p[k] = v;
  return make_message("status", session, std::move(p));
}

}  // namespace ol::gateway
