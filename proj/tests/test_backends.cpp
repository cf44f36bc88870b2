#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <set>

#include "ol/backends/config.hpp"
#include "ol/backends/factory.hpp"
#include "ol/backends/hashed_vector.hpp"
#include "ol/backends/reference.hpp"
#include "ol/backends/text.hpp"
#include "ol/common/error.hpp"
#include "support.hpp"

using namespace ol;
using namespace ol::backends;

namespace {

bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

std::vector<std::string> config_error_fields(const std::string& toml,
                                             const std::vector<std::pair<std::string, std::string>>& ov = {}) {
  try {
    (void)load_config_text(toml, ov);
  } catch (const ConfigError& e) {
    return e.fields();
  }
  return {};
}

}  // namespace

TEST_SUITE("backends") {
  TEST_CASE("hashed vector is deterministic and matches frozen values") {
    const auto a = hashed_vector("a", 8);
    CHECK(a == hashed_vector("a", 8));
    // From the independent implementation in oracles/hashed_vector.py.
    const double want[8] = {0.47561916072406235, -0.1337395278696955, 0.216457958021937,  -0.3052601470455472,
                            -0.24571880099762486, -0.2641252376116388, 0.18470317815928952, -0.6720172716104671};
    for (std::size_t i = 0; i < 8; ++i) CHECK(a[i] == want[i]);
  }

  TEST_CASE("hashed vectors have unit norm") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 1000; ++i) {
      std::string key(rng() % 40, ' ');
      for (auto& ch : key) ch = static_cast<char>(rng() % 256);
      const auto v = hashed_vector(key, 2 + rng() % 127);
      CHECK(std::abs(l2_norm(v) - 1.0) <= 1e-9);
    }
  }

  TEST_CASE("ten thousand keys give distinct vectors") {
    std::vector<Vector> vs;
    for (int i = 0; i < 10000; ++i) vs.push_back(hashed_vector("k" + std::to_string(i), 8));
    std::sort(vs.begin(), vs.end());
    for (std::size_t i = 1; i < vs.size(); ++i) {
      double d = 0;
      for (std::size_t c = 0; c < 8; ++c) d += (vs[i][c] - vs[i - 1][c]) * (vs[i][c] - vs[i - 1][c]);
      REQUIRE(std::sqrt(d) > 1e-6);
    }
    CHECK(hashed_vector("a", 8) != hashed_vector("b", 8));
  }

  TEST_CASE("fewer than two channels is rejected") { CHECK_THROWS_AS(hashed_vector("a", 1), ArgumentError); }

  TEST_CASE("fnv1a64 reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  }

  TEST_CASE("tokenizer and code-point length") {
    CHECK(tokenize("Where's my MUG?") == std::vector<std::string>{"where's", "my", "mug"});
    CHECK(tokenize("'quoted' ...").front() == "quoted");
    CHECK(tokenize("").empty());
    CHECK(utf8_length("héllo") == 5);
  }

  TEST_CASE("empty config gives documented defaults") {
    const auto cfg = load_config_text("");
    CHECK(cfg.vad.energy_threshold == 1000.0);
    CHECK(cfg.vad.onset_min_ms == 64);
    CHECK(cfg.vad.hangover_ms == 256);
    CHECK(cfg.vad.max_segment_ms == 30000);
    CHECK(cfg.queues.audio == 512);
    CHECK(cfg.queues.frame == 8);
    CHECK(cfg.queues.asr_todo == 4);
    CHECK(cfg.queues.llm_todo == 4);
    CHECK(cfg.queues.tts_todo == 16);
    CHECK(cfg.video.rate_fps == 1.0);
    CHECK(cfg.profile.frames_per_clip == 16);
    CHECK(cfg.profile.tokens_per_frame == 16);
    CHECK(cfg.profile.channels == 64);
    CHECK(cfg.memory.top_k == 2);
    CHECK(cfg.memory.window == 32);
    CHECK(cfg.memory.max_snapshots == 8);
    CHECK(cfg.memory.frame_refs == 4);
    CHECK(cfg.memory.recency_lambda == 0.0);
    CHECK(cfg.reasoning.sentence_streaming);
    CHECK_FALSE(cfg.reasoning.cancel_llm_on_voice_start);
    CHECK(cfg.tts.ms_per_char == 80);
    CHECK(cfg.gateway.ws_path == "/ws/ol");
    CHECK(cfg.gateway.outbound_cap == 256);
    CHECK(cfg.reasoner.max_in_flight == 2);
  }

  TEST_CASE("P not dividing N names both fields") {
    const auto fields = config_error_fields("[profile]\nP = 3\nN = 16\n");
    CHECK(contains(fields, "profile.P"));
    CHECK(contains(fields, "profile.N"));
  }

  TEST_CASE("command-line values override the file") {
    const auto cfg = load_config_text("[memory]\ntop_k = 2\n", {{"memory.top_k", "5"}});
    CHECK(cfg.memory.top_k == 5);
    CHECK(load_config_text("[memory]\ntop_k = 2\n").memory.top_k == 2);
    const auto s = load_config_text("", {{"backends.reasoner.implementation", "wizard"}, {"gateway.host", "127.0.0.1"}});
    CHECK(s.reasoner.implementation == Implementation::Wizard);
    CHECK(s.gateway.host == "127.0.0.1");
  }

  TEST_CASE("unknown keys are listed") {
    const auto fields = config_error_fields("[memory]\ntopk = 2\n[nope]\nx = 1\n");
    CHECK(contains(fields, "memory.topk"));
    CHECK(contains(fields, "nope.x"));
    CHECK(contains(config_error_fields("", {{"vad.bogus", "1"}}), "vad.bogus"));
  }

  TEST_CASE("invalid combinations name their fields") {
    CHECK(contains(config_error_fields("[backends.compressor]\nimplementation = \"remote\"\n"),
                   "backends.compressor.endpoint"));
    CHECK(contains(config_error_fields("[backends.tts]\nimplementation = \"wizard\"\n"),
                   "backends.tts.implementation"));
    CHECK(contains(config_error_fields("[vad]\nhangover_ms = 100\n"), "vad.hangover_ms"));
    CHECK(contains(config_error_fields("[backends.asr]\ntimeout_ms = 0\n"), "backends.asr.timeout_ms"));
  }

  TEST_CASE("dump and reload is a fixed point") {
    const auto once = dump_config(load_config_text("[memory]\ntop_k = 3\nrecency_lambda = 0.25\n[profile]\nT = 4\n"));
    const auto twice = dump_config(load_config_text(once));
    CHECK(once == twice);
    CHECK(dump_config(load_config_text("")) == dump_config(RuntimeConfig{}));
    for (const auto& key : config_keys()) {
      const auto leaf = key.name.substr(key.name.rfind('.') + 1);
      CHECK_MESSAGE(once.find(leaf) != std::string::npos, key.name);
    }
  }

  TEST_CASE("config file path and environment variable") {
    const auto path = std::filesystem::temp_directory_path() / "ol_cfg_test.toml";
    std::ofstream(path) << "[memory]\ntop_k = 7\n";
    CHECK(load_config(path).memory.top_k == 7);
    ::setenv("OL_CONFIG", path.c_str(), 1);
    CHECK(load_config(std::nullopt).memory.top_k == 7);
    CHECK(load_config(std::nullopt, {{"memory.top_k", "1"}}).memory.top_k == 1);
    ::unsetenv("OL_CONFIG");
    CHECK(load_config(std::nullopt).memory.top_k == 2);
    std::filesystem::remove(path);
  }

  TEST_CASE("factory builds every role") {
    RuntimeConfig cfg;
    cfg.reasoner.implementation = Implementation::Wizard;
    const auto set = make_backends(cfg, {{{0, "speech", "hi there"}}, {{"hi there", "Hello."}}});
    CHECK(set.asr);
    CHECK(set.frame_encoder);
    CHECK(set.compressor);
    CHECK(set.reasoner);
    CHECK(set.tts);
    CHECK(set.gate);
    cfg.gate.implementation = Implementation::Wizard;
    CHECK_THROWS_AS(make_backends(cfg), ConfigError);
  }

  TEST_CASE("wizard ASR picks the closest annotation in its window") {
    WizardAsr asr({{1000, "speech", "first"}, {1100, "speech", "second"}, {5000, "clapping", ""}});
    vad::VoiceSegment s{"s", 0, 1050, 1500, {}, false};
    CHECK(asr.recognize(s).transcript == "first");
    s.t_start_ms = 1090;
    CHECK(asr.recognize(s).transcript == "second");
    s.t_start_ms = 3000;
    s.t_end_ms = 3400;
    CHECK(asr.recognize(s).sound_class == "unknown");
    s.t_start_ms = 4960;
    s.t_end_ms = 5400;
    CHECK(asr.recognize(s).sound_class == "clapping");
  }

  TEST_CASE("wizard reasoner answers from the trace, falling back to the template") {
    WizardReasoner r(std::map<std::string, std::string>{{"what time is it?", "Noon."}});
    reasoning::AssembledPrompt p;
    p.question = "what time is it?";
    std::string out;
    r.generate(p, [&](std::string_view s) {
      out += s;
      return true;
    });
    CHECK(out == "Noon.");
    p.question = "other";
    out.clear();
    r.generate(p, [&](std::string_view s) {
      out += s;
      return true;
    });
    CHECK(out == "Answering 'other' using clips [].");
  }

  TEST_CASE("reference backends are pure") {
    ReferenceTts tts;
    CHECK(tts.synthesize("Hello.") == tts.synthesize("Hello."));
    ReferenceCompressor c;
    const std::vector<std::string> toks{"a", "b"};
    CHECK(c.encode_question(Matrix(), toks, "a b", 16) == c.encode_question(Matrix(), toks, "a b", 16));
  }
}
