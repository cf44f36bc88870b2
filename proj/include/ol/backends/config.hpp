#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ol/ingest/frames.hpp"
#include "ol/memory/memory.hpp"
#include "ol/perception/types.hpp"
#include "ol/vad/vad.hpp"

namespace ol::backends {

enum class Implementation { Reference, Wizard, Remote };

struct BackendDescriptor {
  std::string role;
  Implementation implementation = Implementation::Reference;
  std::string endpoint;  // remote only, e.g. http://host:port/path
  std::int64_t timeout_ms = 2000;
  int max_retries = 2;
  int max_in_flight = 2;
};

struct QueueConfig {
  std::size_t audio = 512;
  std::size_t frame = 8;
  std::size_t asr_todo = 4;
  std::size_t llm_todo = 4;
  std::size_t tts_todo = 16;
};

struct ReasoningConfig {
  std::set<std::string> filler_lexicon;
  std::size_t min_content_tokens = 2;
  bool sentence_streaming = true;
  bool cancel_llm_on_voice_start = false;
};

struct TtsConfig {
  std::int64_t ms_per_char = 80;
  std::int64_t lead_ms = 200;
};

struct GatewayConfig {
  std::string host = "0.0.0.0";
  std::uint16_t port = 8765;
  std::string ws_path = "/ws/ol";
  std::size_t outbound_cap = 256;
};

struct RuntimeConfig {
  vad::VadConfig vad;
  QueueConfig queues;
  ingest::SamplerConfig video;
  perception::FeatureProfile profile;
  memory::MemoryConfig memory;
  ReasoningConfig reasoning;
  TtsConfig tts;
  GatewayConfig gateway;
  BackendDescriptor asr;
  BackendDescriptor frame_encoder;
  BackendDescriptor compressor;
  BackendDescriptor reasoner;
  BackendDescriptor tts_backend;
  BackendDescriptor gate;

  RuntimeConfig();

  // Throws ConfigError listing every offending field.
  void validate() const;
};

// One documented, dumpable configuration key.
struct ConfigKey {
  std::string name;  // dotted, e.g. "vad.hangover_ms"
  std::string doc;
};

const std::vector<ConfigKey>& config_keys();

// Parses the TOML text, applies `overrides` (key=value pairs from the command
// line) on top, and validates. Unknown keys are an error.
RuntimeConfig load_config_text(std::string_view toml_text,
                               const std::vector<std::pair<std::string, std::string>>& overrides = {});

// Reads `path` if given, else $OL_CONFIG if set, else starts from defaults.
RuntimeConfig load_config(const std::optional<std::filesystem::path>& path,
                          const std::vector<std::pair<std::string, std::string>>& overrides = {});

// Effective configuration as TOML; every key is written.
std::string dump_config(const RuntimeConfig& cfg);

}  // namespace ol::backends
