#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ol::ingest {

// Wire audio is 16-bit little-endian mono PCM at 16 kHz. One chunk is 4096
// bits: 256 samples, 16 ms.
inline constexpr int kSampleRate = 16000;
inline constexpr std::size_t kChunkBits = 4096;
inline constexpr std::size_t kChunkBytes = kChunkBits / 8;
inline constexpr std::size_t kChunkSamples = kChunkBytes / 2;
inline constexpr std::int64_t kChunkMs = 16;

struct AudioChunk {
  std::string session_id;
  std::uint64_t seq = 0;
  std::int64_t t_start_ms = 0;
  std::vector<std::int16_t> samples;

  std::size_t byte_length() const noexcept { return samples.size() * 2; }
  bool operator==(const AudioChunk&) const = default;
};

// Incremental chunker for a byte stream that arrives in arbitrary pieces.
class AudioChunker {
 public:
  explicit AudioChunker(std::string session_id) : session_id_(std::move(session_id)) {}

  void feed(std::span<const std::uint8_t> bytes);

  // Next complete 4096-bit chunk, if one is buffered.
  std::optional<AudioChunk> next();

  // Flushes the trailing partial chunk at end of stream. Throws
  // MalformedStream if an odd byte is left over.
  std::optional<AudioChunk> finish();

  std::uint64_t next_seq() const noexcept { return seq_; }
  std::size_t total_bytes() const noexcept { return total_; }

 private:
  AudioChunk make_chunk(std::size_t n_bytes);

  std::string session_id_;
  std::vector<std::uint8_t> pending_;
  std::size_t pending_head_ = 0;
  std::uint64_t seq_ = 0;
  std::size_t total_ = 0;
};

std::vector<AudioChunk> chunk_audio(std::span<const std::uint8_t> bytes, const std::string& session_id);

std::vector<std::uint8_t> to_bytes(std::span<const std::int16_t> samples);
std::vector<std::int16_t> to_samples(std::span<const std::uint8_t> bytes);

}  // namespace ol::ingest
