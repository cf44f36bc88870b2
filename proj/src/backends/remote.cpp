#include "ol/backends/remote.hpp"

#include <cmath>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "ol/backends/reference.hpp"
#include "ol/common/base64.hpp"
#include "ol/common/error.hpp"
#include "ol/ingest/audio.hpp"

namespace ol::backends {

using nlohmann::json;

std::chrono::milliseconds BackoffPolicy::delay(int attempt, double u) const {
  const double nominal = static_cast<double>(base.count()) * std::pow(factor, attempt - 1);
  const double scale = 1.0 + jitter * (2.0 * u - 1.0);
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(nominal * scale)));
}

namespace {

// Splits "http://host:port/path" into the client base and the request path.
std::pair<std::string, std::string> split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError({"endpoint"}, "endpoint must be an http URL: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

RemoteClient::RemoteClient(BackendDescriptor descriptor, std::shared_ptr<const JsonSchema> schema, SleepFn sleep,
                           std::uint64_t jitter_seed)
    : descriptor_(std::move(descriptor)),
      schema_(std::move(schema)),
      sleep_(sleep ? std::move(sleep) : SleepFn([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      in_flight_(std::max(1, descriptor_.max_in_flight)),
      rng_(jitter_seed) {
  if (descriptor_.endpoint.empty()) {
    throw ConfigError({"backends." + descriptor_.role + ".endpoint"}, "remote backend requires an endpoint");
  }
  auto [base, path] = split_endpoint(descriptor_.endpoint);
  target_ = {std::move(base), std::move(path)};
}

RemoteCallStats RemoteClient::last_stats() const {
  std::lock_guard lock(mu_);
  return last_;
}

json RemoteClient::call(const json& request) {
  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  const json envelope = {{"role", descriptor_.role}, {"version", kRemoteProtocolVersion}, {"request", request}};
  const std::string body = envelope.dump();
  const auto timeout = std::chrono::milliseconds(descriptor_.timeout_ms);

  RemoteCallStats stats;
  auto finish = [&] {
    std::lock_guard lock(mu_);
    last_ = stats;
  };

  for (int attempt = 0;; ++attempt) {
    if (attempt > 0) {
      double u;
      {
        std::lock_guard lock(mu_);
        u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
      }
      const auto wait = backoff_.delay(attempt, u);
      stats.backoffs.push_back(wait);
      sleep_(wait);
    }
    ++stats.attempts;
    httplib::Client cli(target_.base);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    auto res = cli.Post(target_.path, body, "application/json");

    const bool retries_left = attempt < descriptor_.max_retries;
    if (!res) {
      const auto err = res.error();
      if (err == httplib::Error::Connection && retries_left) {
        spdlog::warn("{}: connect failed, retrying", descriptor_.role);
        continue;
      }
      finish();
      if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
        throw BackendError(BackendError::Kind::Timeout, descriptor_.role + ": " + httplib::to_string(err));
      }
      throw BackendError(BackendError::Kind::Unavailable, descriptor_.role + ": " + httplib::to_string(err));
    }
    if (res->status >= 500) {
      if (retries_left) {
        spdlog::warn("{}: server status {}, retrying", descriptor_.role, res->status);
        continue;
      }
      finish();
      throw BackendError(BackendError::Kind::Unavailable,
                         descriptor_.role + ": server status " + std::to_string(res->status));
    }
    finish();
    if (res->status >= 400) {
      throw BackendError(BackendError::Kind::Application,
                         descriptor_.role + ": request rejected with status " + std::to_string(res->status));
    }
    json reply;
    try {
      reply = json::parse(res->body);
    } catch (const json::exception& e) {
      throw BackendError(BackendError::Kind::Protocol, descriptor_.role + ": malformed response: " + e.what());
    }
    if (reply.is_object() && reply.contains("error")) {
      throw BackendError(BackendError::Kind::Application, descriptor_.role + ": " + reply["error"].dump());
    }
    if (!reply.is_object() || !reply.contains("response")) {
      throw BackendError(BackendError::Kind::Protocol, descriptor_.role + ": response envelope missing 'response'");
    }
    if (schema_) {
      const auto errors = schema_->validate(reply["response"]);
      if (!errors.empty()) {
        throw BackendError(BackendError::Kind::Protocol, descriptor_.role + ": schema violation: " + errors.front());
      }
    }
    return reply["response"];
  }
}

std::shared_ptr<const JsonSchema> remote_response_schema(const std::string& role) {
  return std::make_shared<const JsonSchema>(
      JsonSchema::load(asset_path("schemas/remote/" + role + ".response.json")));
}

json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != rows * cols) {
    throw BackendError(BackendError::Kind::Protocol, "matrix data length does not match rows*cols");
  }
  return Matrix(rows, cols, std::move(data));
}

namespace {

json profile_json(const perception::FeatureProfile& p) {
  return {{"T", p.frames_per_clip}, {"N", p.tokens_per_frame}, {"P", p.memory_tokens_per_frame}, {"C", p.channels}};
}

}  // namespace

AsrOutput RemoteAsr::recognize(const vad::VoiceSegment& segment) {
  const auto bytes = ingest::to_bytes(segment.samples);
  const json resp = client_->call({{"session", segment.session_id},
                                   {"segment_id", segment.id},
                                   {"t_start_ms", segment.t_start_ms},
                                   {"t_end_ms", segment.t_end_ms},
                                   {"sample_rate", ingest::kSampleRate},
                                   {"pcm_b64", base64_encode(bytes)}});
  return {resp.at("sound_class").get<std::string>(), resp.value("transcript", std::string{})};
}

Matrix RemoteFrameEncoder::encode(const ingest::RawFrame& frame, const perception::FeatureProfile& profile) {
  json req = {{"t_ms", frame.t_ms}, {"profile", profile_json(profile)}};
  if (const auto* jpeg = std::get_if<ingest::JpegImage>(&frame.payload)) {
    req["jpeg_b64"] = base64_encode(jpeg->bytes);
  } else {
    req["features"] = matrix_to_json(std::get<Matrix>(frame.payload));
  }
  json resp;
  try {
    resp = client_->call(req);
  } catch (const BackendError& e) {
    if (e.kind() == BackendError::Kind::Application) throw DecodeError(e.what());
    throw;
  }
  Matrix m = matrix_from_json(resp.at("features"));
  if (m.rows() != profile.tokens_per_frame || m.cols() != profile.channels) {
    throw BackendError(BackendError::Kind::Protocol, "frame_encoder: feature shape does not match profile");
  }
  return m;
}

CompressOutput RemoteCompressor::compress(const CompressInput& input) {
  const json resp = client_->call({{"op", "compress"},
                                   {"tokens", matrix_to_json(input.tokens)},
                                   {"layout",
                                    {{"feature_rows", input.layout.feature_rows},
                                     {"short_term_rows", input.layout.short_term_rows},
                                     {"global_rows", input.layout.global_rows}}},
                                   {"profile", profile_json(input.profile)}});
  return {matrix_from_json(resp.at("short_term")), resp.at("global").get<Vector>()};
}

Matrix RemoteCompressor::integrate(const IntegrateInput& input) {
  const json resp = client_->call({{"op", "integrate"},
                                   {"tokens", matrix_to_json(input.tokens)},
                                   {"short_rows", input.short_rows},
                                   {"global_rows", input.global_rows},
                                   {"first_clip", input.first_clip}});
  return matrix_from_json(resp.at("long_term"));
}

Vector RemoteCompressor::encode_question(const Matrix& long_term, std::span<const std::string> tokens,
                                         std::string_view question, std::size_t channels) {
  const json resp = client_->call({{"op", "encode_question"},
                                   {"long_term", matrix_to_json(long_term)},
                                   {"tokens", std::vector<std::string>(tokens.begin(), tokens.end())},
                                   {"question", std::string(question)},
                                   {"channels", channels}});
  auto v = resp.at("vector").get<Vector>();
  if (v.size() != channels) throw BackendError(BackendError::Kind::Protocol, "compressor: question vector has wrong width");
  return v;
}

void RemoteReasoner::generate(const reasoning::AssembledPrompt& prompt, const IncrementSink& sink) {
  json clips = json::array();
  for (const auto& c : prompt.clips) {
    json frames = json::array();
    for (const auto& f : c.frames) frames.push_back({{"seq", f.seq}, {"t_ms", f.t_ms}});
    clips.push_back({{"clip_index", c.clip_index},
                     {"frames", frames},
                     {"short_term", c.short_term ? matrix_to_json(*c.short_term) : json(nullptr)}});
  }
  const json resp = client_->call({{"prompt", prompt.text}, {"question", prompt.question}, {"clips", clips}});
  stream_words(resp.at("text").get<std::string>(), sink);
}

std::vector<std::int16_t> RemoteTts::synthesize(std::string_view text) {
  const json resp = client_->call({{"text", std::string(text)}, {"sample_rate", ingest::kSampleRate}});
  const auto bytes = base64_decode(resp.at("pcm_b64").get<std::string>());
  if (bytes.size() % 2 != 0) throw BackendError(BackendError::Kind::Protocol, "tts: odd PCM byte count");
  return ingest::to_samples(bytes);
}

reasoning::GateDecision RemoteGate::predict(std::string_view transcript) {
  const json resp = client_->call({{"transcript", std::string(transcript)}});
  const auto verdict = resp.at("verdict").get<std::string>();
  return {verdict == "answer" ? reasoning::Verdict::Answer : reasoning::Verdict::Ignore,
          resp.value("reason", verdict == "answer" ? std::string("instruction") : std::string("filler"))};
}

}  // namespace ol::backends
