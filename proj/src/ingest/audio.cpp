#include "ol/ingest/audio.hpp"

#include "ol/common/error.hpp"

namespace ol::ingest {

void AudioChunker::feed(std::span<const std::uint8_t> bytes) {
  if (pending_head_ > 0 && pending_head_ >= pending_.size() / 2) {
    pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(pending_head_));
    pending_head_ = 0;
  }
  pending_.insert(pending_.end(), bytes.begin(), bytes.end());
  total_ += bytes.size();
}

AudioChunk AudioChunker::make_chunk(std::size_t n_bytes) {
  AudioChunk chunk;
  chunk.session_id = session_id_;
  chunk.seq = seq_;
  chunk.t_start_ms = static_cast<std::int64_t>(seq_) * kChunkMs;
  chunk.samples = to_samples({pending_.data() + pending_head_, n_bytes});
  pending_head_ += n_bytes;
  ++seq_;
  return chunk;
}

std::optional<AudioChunk> AudioChunker::next() {
  if (pending_.size() - pending_head_ < kChunkBytes) return std::nullopt;
  return make_chunk(kChunkBytes);
}

std::optional<AudioChunk> AudioChunker::finish() {
  const std::size_t left = pending_.size() - pending_head_;
  if (left % 2 != 0) {
    throw MalformedStream(total_ - 1, "odd PCM byte count: byte at offset " +
                                          std::to_string(total_ - 1) + " splits a 16-bit sample");
  }
  if (left == 0) return std::nullopt;
  return make_chunk(left);
}

std::vector<AudioChunk> chunk_audio(std::span<const std::uint8_t> bytes, const std::string& session_id) {
  if (bytes.size() % 2 != 0) {
    throw MalformedStream(bytes.size() - 1, "odd PCM byte count: byte at offset " +
                                                std::to_string(bytes.size() - 1) +
                                                " splits a 16-bit sample");
  }
  AudioChunker chunker(session_id);
  chunker.feed(bytes);
  std::vector<AudioChunk> out;
  out.reserve(bytes.size() / kChunkBytes + 1);
  while (auto c = chunker.next()) out.push_back(std::move(*c));
  if (auto tail = chunker.finish()) out.push_back(std::move(*tail));
  return out;
}

std::vector<std::uint8_t> to_bytes(std::span<const std::int16_t> samples) {
  std::vector<std::uint8_t> out(samples.size() * 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto u = static_cast<std::uint16_t>(samples[i]);
    out[2 * i] = static_cast<std::uint8_t>(u & 0xff);
    out[2 * i + 1] = static_cast<std::uint8_t>(u >> 8);
  }
  return out;
}

std::vector<std::int16_t> to_samples(std::span<const std::uint8_t> bytes) {
  std::vector<std::int16_t> out(bytes.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto u = static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8));
    out[i] = static_cast<std::int16_t>(u);
  }
  return out;
}

}  // namespace ol::ingest
