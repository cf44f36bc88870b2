#pragma once

// JSON-over-HTTP adapter for external model servers. Each call POSTs
// {role, version: "ol/1", request} and expects {response: {...}} back, or
// {error: "..."} for an application failure.
//
// Retries: connection failures and 5xx statuses are retried up to
// max_retries times with exponential backoff (base 100 ms, factor 2, jitter
// +-20%). Timeouts, 4xx statuses, application errors and responses that
// fail the role's schema are never retried.

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <string>

#include <json.hpp>

#include "ol/backends/config.hpp"
#include "ol/backends/contracts.hpp"
#include "ol/common/json_schema.hpp"

namespace ol::backends {

inline constexpr const char* kRemoteProtocolVersion = "ol/1";

struct BackoffPolicy {
  std::chrono::milliseconds base{100};
  double factor = 2.0;
  double jitter = 0.2;

  // Delay before retry number `attempt` (1-based), given u in [0, 1).
  std::chrono::milliseconds delay(int attempt, double u) const;
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;

struct RemoteCallStats {
  int attempts = 0;
  std::vector<std::chrono::milliseconds> backoffs;
};

class RemoteClient {
 public:
  // `schema` validates the "response" object; null skips validation.
  RemoteClient(BackendDescriptor descriptor, std::shared_ptr<const JsonSchema> schema = nullptr,
               SleepFn sleep = {}, std::uint64_t jitter_seed = 0x6f6c2f31);

  nlohmann::json call(const nlohmann::json& request);

  RemoteCallStats last_stats() const;
  const BackendDescriptor& descriptor() const noexcept { return descriptor_; }

 private:
  struct Target {
    std::string base;  // scheme://host:port
    std::string path;
  };

  BackendDescriptor descriptor_;
  Target target_;
  std::shared_ptr<const JsonSchema> schema_;
  SleepFn sleep_;
  BackoffPolicy backoff_;
  std::counting_semaphore<1024> in_flight_;

  mutable std::mutex mu_;
  std::mt19937_64 rng_;
  RemoteCallStats last_;
};

// Schema asset for a role, from assets/schemas/remote/<role>.response.json.
std::shared_ptr<const JsonSchema> remote_response_schema(const std::string& role);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

class RemoteAsr final : public AsrBackend {
 public:
  explicit RemoteAsr(std::shared_ptr<RemoteClient> client) : client_(std::move(client)) {}
  AsrOutput recognize(const vad::VoiceSegment& segment) override;

 private:
  std::shared_ptr<RemoteClient> client_;
};

class RemoteFrameEncoder final : public FrameEncoderBackend {
 public:
  explicit RemoteFrameEncoder(std::shared_ptr<RemoteClient> client) : client_(std::move(client)) {}
  Matrix encode(const ingest::RawFrame& frame, const perception::FeatureProfile& profile) override;

 private:
  std::shared_ptr<RemoteClient> client_;
};

class RemoteCompressor final : public CompressorBackend {
 public:
  explicit RemoteCompressor(std::shared_ptr<RemoteClient> client) : client_(std::move(client)) {}
  CompressOutput compress(const CompressInput& input) override;
  Matrix integrate(const IntegrateInput& input) override;
  Vector encode_question(const Matrix& long_term, std::span<const std::string> tokens,
                         std::string_view question, std::size_t channels) override;

 private:
  std::shared_ptr<RemoteClient> client_;
};

class RemoteReasoner final : public ReasonerBackend {
 public:
  explicit RemoteReasoner(std::shared_ptr<RemoteClient> client) : client_(std::move(client)) {}
  void generate(const reasoning::AssembledPrompt& prompt, const IncrementSink& sink) override;

 private:
  std::shared_ptr<RemoteClient> client_;
};

class RemoteTts final : public TtsBackend {
 public:
  explicit RemoteTts(std::shared_ptr<RemoteClient> client) : client_(std::move(client)) {}
  std::vector<std::int16_t> synthesize(std::string_view text) override;

 private:
  std::shared_ptr<RemoteClient> client_;
};

class RemoteGate final : public GateBackend {
 public:
  explicit RemoteGate(std::shared_ptr<RemoteClient> client) : client_(std::move(client)) {}
  reasoning::GateDecision predict(std::string_view transcript) override;

 private:
  std::shared_ptr<RemoteClient> client_;
};

}  // namespace ol::backends
