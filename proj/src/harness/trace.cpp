#include "ol/harness/trace.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ol/common/base64.hpp"
#include "ol/common/error.hpp"
#include "ol/harness/replay.hpp"
#include "ol/ingest/audio.hpp"

namespace ol::harness {

using nlohmann::json;

namespace {

constexpr std::int64_t kBytesPerMs = ingest::kSampleRate * 2 / 1000;

EventKind parse_kind(const std::string& s, std::size_t line) {
  if (s == "audio") return EventKind::Audio;
  if (s == "frame") return EventKind::Frame;
  if (s == "annotation") return EventKind::Annotation;
  if (s == "expect") return EventKind::Expect;
  throw TraceError(line, "unknown event kind '" + s + "'");
}

void check_payload(const TraceEvent& e) {
  const auto& p = e.payload;
  switch (e.kind) {
    case EventKind::Audio:
      if (!p.contains("pcm_b64") || !p["pcm_b64"].is_string()) throw TraceError(e.line, "audio event needs pcm_b64");
      break;
    case EventKind::Frame:
      if (!p.contains("features") && !p.contains("jpeg_b64")) {
        throw TraceError(e.line, "frame event needs features or jpeg_b64");
      }
      break;
    case EventKind::Annotation:
    case EventKind::Expect:
      if (!p.contains("type") || !p["type"].is_string()) throw TraceError(e.line, "payload needs a string 'type'");
      break;
  }
  if (e.kind == EventKind::Expect) {
    const auto& known = expect_types();
    if (std::find(known.begin(), known.end(), p["type"].get<std::string>()) == known.end()) {
      throw TraceError(e.line, "unknown expect type '" + p["type"].get<std::string>() + "'");
    }
  }
  // Media payloads are decoded once here so a bad one is reported with its line.
  try {
    if (e.kind == EventKind::Audio) (void)audio_bytes(e);
    if (e.kind == EventKind::Frame) (void)frame_payload(e);
  } catch (const TraceError&) {
    throw;
  } catch (const std::exception& ex) {
    throw TraceError(e.line, ex.what());
  }
}

}  // namespace

const char* kind_name(EventKind k) {
  switch (k) {
    case EventKind::Audio: return "audio";
    case EventKind::Frame: return "frame";
    case EventKind::Annotation: return "annotation";
    case EventKind::Expect: return "expect";
  }
  return "audio";
}

Trace parse_trace(std::string_view text, std::string name) {
  Trace trace;
  trace.name = std::move(name);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::int64_t last_t = std::numeric_limits<std::int64_t>::min();
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw TraceError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("t_ms") || !j["t_ms"].is_number_integer() || !j.contains("kind") ||
        !j["kind"].is_string() || !j.contains("payload") || !j["payload"].is_object()) {
      throw TraceError(line_no, "event needs integer t_ms, string kind and object payload");
    }
    TraceEvent e;
    e.t_ms = j["t_ms"].get<std::int64_t>();
    e.kind = parse_kind(j["kind"].get<std::string>(), line_no);
    e.payload = std::move(j["payload"]);
    e.line = line_no;
    if (e.t_ms < 0) throw TraceError(line_no, "negative t_ms");
    if (e.t_ms < last_t) throw TraceError(line_no, "events are not sorted by t_ms");
    last_t = e.t_ms;
    check_payload(e);
    trace.events.push_back(std::move(e));
  }
  return trace;
}

Trace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceError(0, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_trace(ss.str(), path.stem().string());
}

std::string serialize_event(const TraceEvent& e) {
  // Key order is fixed so generated traces are stable byte for byte.
  return "{\"t_ms\":" + std::to_string(e.t_ms) + ",\"kind\":\"" + kind_name(e.kind) + "\",\"payload\":" +
         e.payload.dump() + "}";
}

std::string serialize_trace(const Trace& t) {
  std::string out;
  for (const auto& e : t.events) out += serialize_event(e) + "\n";
  return out;
}

backends::WizardData Trace::wizard() const {
  backends::WizardData w;
  for (const auto& e : events) {
    if (e.kind != EventKind::Annotation) continue;
    const auto type = e.payload["type"].get<std::string>();
    if (type == "segment") {
      w.segments.push_back({e.t_ms, e.payload.value("class", std::string("speech")),
                            e.payload.value("transcript", std::string{})});
    } else if (type == "answer") {
      w.answers[e.payload.at("question").get<std::string>()] = e.payload.at("answer").get<std::string>();
    }
  }
  return w;
}

std::vector<std::pair<std::string, std::string>> Trace::config_overrides() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : events) {
    if (e.kind != EventKind::Annotation || e.payload["type"] != "session") continue;
    const json cfg = e.payload.value("config", json::object());
    for (const auto& [k, v] : cfg.items()) {
      out.emplace_back(k, v.is_string() ? "\"" + v.get<std::string>() + "\"" : v.dump());
    }
  }
  return out;
}

std::map<std::string, std::vector<std::size_t>> Trace::ground_truth() const {
  std::map<std::string, std::vector<std::size_t>> out;
  for (const auto& e : events) {
    if (e.kind != EventKind::Annotation || e.payload["type"] != "query") continue;
    out[e.payload.at("question").get<std::string>()] = e.payload.at("clips").get<std::vector<std::size_t>>();
  }
  return out;
}

json audio_payload(std::span<const std::int16_t> samples) {
  return {{"pcm_b64", base64_encode(ingest::to_bytes(samples))}};
}

json features_payload(const Matrix& m) {
  std::vector<std::uint8_t> bytes(m.rows() * m.cols() * 4);
  std::size_t i = 0;
  for (double v : m.data()) {
    const float f = static_cast<float>(v);
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    for (int b = 0; b < 4; ++b) bytes[i++] = static_cast<std::uint8_t>((u >> (8 * b)) & 0xff);
  }
  return {{"features", {{"rows", m.rows()}, {"cols", m.cols()}, {"f32_b64", base64_encode(bytes)}}}};
}

json jpeg_payload(std::span<const std::uint8_t> bytes) { return {{"jpeg_b64", base64_encode(bytes)}}; }

std::vector<std::uint8_t> audio_bytes(const TraceEvent& e) {
  try {
    auto bytes = base64_decode(e.payload.at("pcm_b64").get<std::string>());
    if (bytes.size() % 2 != 0) throw TraceError(e.line, "audio payload has an odd byte count");
    return bytes;
  } catch (const ArgumentError& err) {
    throw TraceError(e.line, err.what());
  }
}

ingest::FramePayload frame_payload(const TraceEvent& e) {
  try {
    if (e.payload.contains("jpeg_b64")) {
      return ingest::JpegImage{base64_decode(e.payload["jpeg_b64"].get<std::string>())};
    }
    const auto& f = e.payload.at("features");
    const auto rows = f.at("rows").get<std::size_t>();
    const auto cols = f.at("cols").get<std::size_t>();
    const auto bytes = base64_decode(f.at("f32_b64").get<std::string>());
    if (bytes.size() != rows * cols * 4) throw TraceError(e.line, "feature payload size does not match rows*cols");
    Matrix m(rows, cols);
    auto data = m.data();
    for (std::size_t i = 0; i < rows * cols; ++i) {
      std::uint32_t u = 0;
      for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
      float fv;
      std::memcpy(&fv, &u, 4);
      data[i] = fv;
    }
    return m;
  } catch (const ArgumentError& err) {
    throw TraceError(e.line, err.what());
  } catch (const json::exception& err) {
    throw TraceError(e.line, err.what());
  }
}

std::vector<Delivery> media_deliveries(const Trace& trace) {
  std::vector<Delivery> out;
  std::vector<std::uint8_t> stream;
  std::uint64_t frame_seq = 0;
  for (const auto& e : trace.events) {
    if (e.kind == EventKind::Audio) {
      const auto offset = static_cast<std::size_t>(e.t_ms * kBytesPerMs);
      if (offset < stream.size()) throw TraceError(e.line, "audio event overlaps the previous one");
      stream.resize(offset, 0);
      const auto bytes = audio_bytes(e);
      stream.insert(stream.end(), bytes.begin(), bytes.end());
    } else if (e.kind == EventKind::Frame) {
      Delivery d;
      d.t_ms = e.t_ms;
      d.is_audio = false;
      d.frame.seq = frame_seq++;
      d.frame.t_ms = e.t_ms;
      d.frame.payload = frame_payload(e);
      out.push_back(std::move(d));
    }
  }
  for (std::size_t off = 0; off < stream.size(); off += ingest::kChunkBytes) {
    const std::size_t n = std::min(ingest::kChunkBytes, stream.size() - off);
    Delivery d;
    d.t_ms = static_cast<std::int64_t>((off + n + kBytesPerMs - 1) / kBytesPerMs);
    d.bytes.assign(stream.begin() + static_cast<std::ptrdiff_t>(off),
                   stream.begin() + static_cast<std::ptrdiff_t>(off + n));
    out.push_back(std::move(d));
  }
  std::stable_sort(out.begin(), out.end(), [](const Delivery& a, const Delivery& b) { return a.t_ms < b.t_ms; });
  return out;
}

}  // namespace ol::harness
