#include "ol/backends/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "ol/backends/reference.hpp"
#include "ol/common/error.hpp"

namespace ol::backends {

RuntimeConfig::RuntimeConfig() {
  reasoning.filler_lexicon = default_filler_lexicon();
  asr.role = "asr";
  asr.implementation = Implementation::Wizard;
  frame_encoder.role = "frame_encoder";
  compressor.role = "compressor";
  reasoner.role = "reasoner";
  tts_backend.role = "tts";
  gate.role = "gate";
}

namespace {

using Setter = std::function<void(RuntimeConfig&, const toml::node&)>;
using Getter = std::function<void(const RuntimeConfig&, toml::table&, std::string_view)>;

struct KeyImpl {
  ConfigKey key;
  Setter set;
  Getter get;
};

[[noreturn]] void type_error(std::string_view key, std::string_view want) {
  throw ConfigError({std::string(key)}, std::string(key) + ": expected " + std::string(want));
}

std::int64_t as_int(const toml::node& n, std::string_view key) {
  if (auto v = n.value<std::int64_t>(); v && n.is_integer()) return *v;
  type_error(key, "an integer");
}

double as_double(const toml::node& n, std::string_view key) {
  if (n.is_integer() || n.is_floating_point()) return *n.value<double>();
  type_error(key, "a number");
}

bool as_bool(const toml::node& n, std::string_view key) {
  if (n.is_boolean()) return *n.value<bool>();
  type_error(key, "a boolean");
}

std::string as_string(const toml::node& n, std::string_view key) {
  if (n.is_string()) return *n.value<std::string>();
  type_error(key, "a string");
}

std::string impl_name(Implementation i) {
  switch (i) {
    case Implementation::Reference: return "reference";
    case Implementation::Wizard: return "wizard";
    case Implementation::Remote: return "remote";
  }
  return "reference";
}

Implementation parse_impl(const std::string& s, std::string_view key) {
  if (s == "reference") return Implementation::Reference;
  if (s == "wizard") return Implementation::Wizard;
  if (s == "remote") return Implementation::Remote;
  type_error(key, "one of reference, wizard, remote");
}

// Inserts value at a dotted path, creating intermediate tables.
template <typename V>
void put(toml::table& root, std::string_view dotted, V&& value) {
  toml::table* t = &root;
  std::size_t pos = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', pos);
    if (dot == std::string_view::npos) {
      t->insert_or_assign(std::string(dotted.substr(pos)), std::forward<V>(value));
      return;
    }
    const std::string part(dotted.substr(pos, dot - pos));
    auto it = t->find(part);
    if (it == t->end()) it = t->insert(part, toml::table{}).first;
    t = it->second.as_table();
    pos = dot + 1;
  }
}

template <typename Field>
KeyImpl int_key(std::string name, std::string doc, Field field) {
  return {{name, std::move(doc)},
          [field, name](RuntimeConfig& c, const toml::node& n) {
            const auto v = as_int(n, name);
            using T = std::remove_reference_t<decltype(field(c))>;
            if constexpr (std::is_unsigned_v<T>) {
              if (v < 0) type_error(name, "a non-negative integer");
            }
            field(c) = static_cast<T>(v);
          },
          [field](const RuntimeConfig& c, toml::table& t, std::string_view k) {
            put(t, k, static_cast<std::int64_t>(field(const_cast<RuntimeConfig&>(c))));
          }};
}

template <typename Field>
KeyImpl double_key(std::string name, std::string doc, Field field) {
  return {{name, std::move(doc)},
          [field, name](RuntimeConfig& c, const toml::node& n) { field(c) = as_double(n, name); },
          [field](const RuntimeConfig& c, toml::table& t, std::string_view k) {
            put(t, k, field(const_cast<RuntimeConfig&>(c)));
          }};
}

template <typename Field>
KeyImpl bool_key(std::string name, std::string doc, Field field) {
  return {{name, std::move(doc)},
          [field, name](RuntimeConfig& c, const toml::node& n) { field(c) = as_bool(n, name); },
          [field](const RuntimeConfig& c, toml::table& t, std::string_view k) {
            put(t, k, field(const_cast<RuntimeConfig&>(c)));
          }};
}

template <typename Field>
KeyImpl string_key(std::string name, std::string doc, Field field) {
  return {{name, std::move(doc)},
          [field, name](RuntimeConfig& c, const toml::node& n) { field(c) = as_string(n, name); },
          [field](const RuntimeConfig& c, toml::table& t, std::string_view k) {
            put(t, k, field(const_cast<RuntimeConfig&>(c)));
          }};
}

void add_backend_keys(std::vector<KeyImpl>& keys, const std::string& role,
                      BackendDescriptor& (*pick)(RuntimeConfig&)) {
  const std::string p = "backends." + role + ".";
  keys.push_back({{p + "implementation", "reference | wizard | remote"},
                  [pick, n = p + "implementation"](RuntimeConfig& c, const toml::node& v) {
                    pick(c).implementation = parse_impl(as_string(v, n), n);
                  },
                  [pick](const RuntimeConfig& c, toml::table& t, std::string_view k) {
                    put(t, k, impl_name(pick(const_cast<RuntimeConfig&>(c)).implementation));
                  }});
  keys.push_back(string_key(p + "endpoint", "HTTP endpoint of the model server (remote only)",
                            [pick](RuntimeConfig& c) -> std::string& { return pick(c).endpoint; }));
  keys.push_back(int_key(p + "timeout_ms", "per-call timeout",
                         [pick](RuntimeConfig& c) -> std::int64_t& { return pick(c).timeout_ms; }));
  keys.push_back(int_key(p + "max_retries", "retries on connection failures",
                         [pick](RuntimeConfig& c) -> int& { return pick(c).max_retries; }));
  keys.push_back(int_key(p + "max_in_flight", "concurrent remote calls",
                         [pick](RuntimeConfig& c) -> int& { return pick(c).max_in_flight; }));
}

const std::vector<KeyImpl>& registry() {
  static const std::vector<KeyImpl> keys = [] {
    std::vector<KeyImpl> k;
    using C = RuntimeConfig;
    k.push_back(double_key("vad.energy_threshold", "RMS threshold in PCM units",
                           [](C& c) -> double& { return c.vad.energy_threshold; }));
    k.push_back(int_key("vad.onset_min_ms", "voiced time before onset", [](C& c) -> std::int64_t& { return c.vad.onset_min_ms; }));
    k.push_back(int_key("vad.hangover_ms", "unvoiced time before offset", [](C& c) -> std::int64_t& { return c.vad.hangover_ms; }));
    k.push_back(int_key("vad.max_segment_ms", "forced segment closure", [](C& c) -> std::int64_t& { return c.vad.max_segment_ms; }));
    k.push_back(int_key("queues.audio", "Audio Queue capacity (chunks)", [](C& c) -> std::size_t& { return c.queues.audio; }));
    k.push_back(int_key("queues.frame", "Frame Queue capacity", [](C& c) -> std::size_t& { return c.queues.frame; }));
    k.push_back(int_key("queues.asr_todo", "ASR Todo Queue capacity", [](C& c) -> std::size_t& { return c.queues.asr_todo; }));
    k.push_back(int_key("queues.llm_todo", "LLM Todo Queue capacity", [](C& c) -> std::size_t& { return c.queues.llm_todo; }));
    k.push_back(int_key("queues.tts_todo", "TTS Todo Queue capacity", [](C& c) -> std::size_t& { return c.queues.tts_todo; }));
    k.push_back(double_key("video.rate_fps", "frame sampling rate", [](C& c) -> double& { return c.video.rate_fps; }));
    k.push_back(int_key("video.stall_ms", "source gap reported as a stall", [](C& c) -> std::int64_t& { return c.video.stall_ms; }));
    k.push_back(int_key("profile.T", "frames per clip", [](C& c) -> std::size_t& { return c.profile.frames_per_clip; }));
    k.push_back(int_key("profile.N", "tokens per frame", [](C& c) -> std::size_t& { return c.profile.tokens_per_frame; }));
    k.push_back(int_key("profile.P", "memory tokens per frame", [](C& c) -> std::size_t& { return c.profile.memory_tokens_per_frame; }));
    k.push_back(int_key("profile.C", "feature channels", [](C& c) -> std::size_t& { return c.profile.channels; }));
    k.push_back(int_key("memory.top_k", "clips handed to reasoning", [](C& c) -> std::size_t& { return c.memory.top_k; }));
    k.push_back(int_key("memory.window", "short-term memories per integration", [](C& c) -> std::size_t& { return c.memory.window; }));
    k.push_back(int_key("memory.max_snapshots", "retained backup snapshots", [](C& c) -> std::size_t& { return c.memory.max_snapshots; }));
    k.push_back(int_key("memory.frame_refs", "frames kept per clip for prompts", [](C& c) -> std::size_t& { return c.memory.frame_refs; }));
    k.push_back(double_key("memory.recency_lambda", "recency bonus weight", [](C& c) -> double& { return c.memory.recency_lambda; }));
    k.push_back(bool_key("memory.keep_clip_features", "retain raw clip features", [](C& c) -> bool& { return c.memory.keep_clip_features; }));
    k.push_back({{"reasoning.filler_lexicon", "transcripts made only of these words are ignored"},
                 [](C& c, const toml::node& n) {
                   const auto* arr = n.as_array();
                   if (!arr) type_error("reasoning.filler_lexicon", "an array of strings");
                   std::set<std::string> words;
                   for (const auto& e : *arr) words.insert(as_string(e, "reasoning.filler_lexicon"));
                   c.reasoning.filler_lexicon = std::move(words);
                 },
                 [](const C& c, toml::table& t, std::string_view key) {
                   toml::array arr;
                   for (const auto& w : c.reasoning.filler_lexicon) arr.push_back(w);
                   put(t, key, std::move(arr));
                 }});
    k.push_back(int_key("reasoning.min_content_tokens", "non-filler words needed to answer",
                        [](C& c) -> std::size_t& { return c.reasoning.min_content_tokens; }));
    k.push_back(bool_key("reasoning.sentence_streaming", "forward sentences to TTS as they close",
                         [](C& c) -> bool& { return c.reasoning.sentence_streaming; }));
    k.push_back(bool_key("reasoning.cancel_llm_on_voice_start", "abort generation on barge-in",
                         [](C& c) -> bool& { return c.reasoning.cancel_llm_on_voice_start; }));
    k.push_back(int_key("tts.ms_per_char", "reference TTS audio per character", [](C& c) -> std::int64_t& { return c.tts.ms_per_char; }));
    k.push_back(int_key("tts.lead_ms", "outbound audio sent ahead of playback", [](C& c) -> std::int64_t& { return c.tts.lead_ms; }));
    k.push_back(string_key("gateway.host", "listen address", [](C& c) -> std::string& { return c.gateway.host; }));
    k.push_back(int_key("gateway.port", "listen port", [](C& c) -> std::uint16_t& { return c.gateway.port; }));
    k.push_back(string_key("gateway.ws_path", "WebSocket endpoint path", [](C& c) -> std::string& { return c.gateway.ws_path; }));
    k.push_back(int_key("gateway.outbound_cap", "outbound audio buffer (chunks)", [](C& c) -> std::size_t& { return c.gateway.outbound_cap; }));
    add_backend_keys(k, "asr", [](C& c) -> BackendDescriptor& { return c.asr; });
    add_backend_keys(k, "frame_encoder", [](C& c) -> BackendDescriptor& { return c.frame_encoder; });
    add_backend_keys(k, "compressor", [](C& c) -> BackendDescriptor& { return c.compressor; });
    add_backend_keys(k, "reasoner", [](C& c) -> BackendDescriptor& { return c.reasoner; });
    add_backend_keys(k, "tts", [](C& c) -> BackendDescriptor& { return c.tts_backend; });
    add_backend_keys(k, "gate", [](C& c) -> BackendDescriptor& { return c.gate; });
    return k;
  }();
  return keys;
}

const KeyImpl* find_key(std::string_view name) {
  for (const auto& k : registry()) {
    if (k.key.name == name) return &k;
  }
  return nullptr;
}

void flatten(const toml::table& t, const std::string& prefix, std::vector<std::pair<std::string, const toml::node*>>& out) {
  for (const auto& [k, v] : t) {
    std::string name = prefix.empty() ? std::string(k.str()) : prefix + "." + std::string(k.str());
    if (const auto* sub = v.as_table(); sub && !find_key(name)) {
      flatten(*sub, name, out);
    } else {
      out.emplace_back(std::move(name), &v);
    }
  }
}

// A command-line value is parsed as a TOML value; bare words become strings.
toml::table parse_override(const std::string& value) {
  try {
    return toml::parse("v = " + value);
  } catch (const toml::parse_error&) {
    toml::table t;
    t.insert("v", value);
    return t;
  }
}

void validate_descriptor(const BackendDescriptor& d, std::vector<std::string>& bad) {
  const std::string p = "backends." + d.role + ".";
  if (d.implementation == Implementation::Remote && d.endpoint.empty()) bad.push_back(p + "endpoint");
  if (d.implementation == Implementation::Wizard && d.role != "asr" && d.role != "reasoner") {
    bad.push_back(p + "implementation");
  }
  if (d.timeout_ms <= 0) bad.push_back(p + "timeout_ms");
  if (d.max_retries < 0) bad.push_back(p + "max_retries");
  if (d.max_in_flight <= 0) bad.push_back(p + "max_in_flight");
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& k : registry()) out.push_back(k.key);
    return out;
  }();
  return keys;
}

void RuntimeConfig::validate() const {
  std::vector<std::string> bad;
  std::string detail;
  auto collect = [&](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      bad.insert(bad.end(), e.fields().begin(), e.fields().end());
      detail += std::string(detail.empty() ? "" : "; ") + e.what();
    }
  };
  collect([&] { vad.validate(); });
  collect([&] { profile.validate(); });
  collect([&] { memory.validate(); });
  std::vector<std::string> more;
  if (queues.audio == 0) more.emplace_back("queues.audio");
  if (queues.frame == 0) more.emplace_back("queues.frame");
  if (queues.asr_todo == 0) more.emplace_back("queues.asr_todo");
  if (queues.llm_todo == 0) more.emplace_back("queues.llm_todo");
  if (queues.tts_todo == 0) more.emplace_back("queues.tts_todo");
  if (!(video.rate_fps > 0.0)) more.emplace_back("video.rate_fps");
  if (video.stall_ms <= 0) more.emplace_back("video.stall_ms");
  if (tts.ms_per_char <= 0) more.emplace_back("tts.ms_per_char");
  if (tts.lead_ms < 0) more.emplace_back("tts.lead_ms");
  if (gateway.outbound_cap == 0) more.emplace_back("gateway.outbound_cap");
  if (gateway.ws_path.empty() || gateway.ws_path.front() != '/') more.emplace_back("gateway.ws_path");
  for (const auto* d : {&asr, &frame_encoder, &compressor, &reasoner, &tts_backend, &gate}) validate_descriptor(*d, more);
  if (!more.empty()) {
    std::string msg = "invalid values:";
    for (const auto& m : more) msg += " " + m;
    detail += std::string(detail.empty() ? "" : "; ") + msg;
    bad.insert(bad.end(), more.begin(), more.end());
  }
  if (!bad.empty()) throw ConfigError(bad, detail);
}

RuntimeConfig load_config_text(std::string_view toml_text,
                               const std::vector<std::pair<std::string, std::string>>& overrides) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config parse error at line " << e.source().begin.line << ": " << e.description();
    throw ConfigError({}, msg.str());
  }
  std::vector<std::pair<std::string, const toml::node*>> entries;
  flatten(root, "", entries);

  std::vector<std::string> unknown;
  for (const auto& [name, _] : entries) {
    if (!find_key(name)) unknown.push_back(name);
  }
  for (const auto& [name, _] : overrides) {
    if (!find_key(name)) unknown.push_back(name);
  }
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& u : unknown) msg += " " + u;
    throw ConfigError(unknown, msg);
  }

  RuntimeConfig cfg;
  for (const auto& [name, node] : entries) find_key(name)->set(cfg, *node);
  for (const auto& [name, value] : overrides) {
    const auto t = parse_override(value);
    find_key(name)->set(cfg, *t.get("v"));
  }
  cfg.validate();
  return cfg;
}

RuntimeConfig load_config(const std::optional<std::filesystem::path>& path,
                          const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::optional<std::filesystem::path> p = path;
  if (!p) {
    if (const char* env = std::getenv("OL_CONFIG"); env && *env) p = env;
  }
  std::string text;
  if (p) {
    std::ifstream in(*p);
    if (!in) throw ConfigError({}, "cannot read config file " + p->string());
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return load_config_text(text, overrides);
}

std::string dump_config(const RuntimeConfig& cfg) {
  toml::table root;
  for (const auto& k : registry()) k.get(cfg, root, k.key.name);
  std::ostringstream out;
  out << toml::toml_formatter(root) << '\n';
  return out.str();
}

}  // namespace ol::backends
