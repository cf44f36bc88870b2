#include <doctest.h>

#include "ol/common/error.hpp"
#include "ol/vad/vad.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace ol;
using namespace ol::vad;

namespace {

struct Run {
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;  // (start, end)
  std::vector<VadEvent> events;
};

Run run_vad(const std::vector<std::int16_t>& pcm, VadConfig cfg) {
  EnergyVad vad(cfg);
  Run r;
  std::optional<std::int64_t> open;
  auto take = [&](std::vector<VadEvent> evs) {
    for (auto& e : evs) {
      if (const auto* s = std::get_if<VoiceStart>(&e)) {
        REQUIRE_FALSE(open.has_value());
        open = s->t_ms;
      } else {
        const auto& seg = std::get<VoiceEnd>(e).segment;
        REQUIRE(open.has_value());
        CHECK(seg.t_start_ms == *open);
        r.pairs.emplace_back(seg.t_start_ms, seg.t_end_ms);
        open.reset();
      }
      r.events.push_back(std::move(e));
    }
  };
  for (auto& c : ingest::chunk_audio(ingest::to_bytes(pcm), "s")) take(vad.process(c));
  take(vad.flush());
  return r;
}

}  // namespace

TEST_SUITE("vad") {
  TEST_CASE("silence produces no events") {
    const auto r = run_vad(test::silence(3000), {});
    CHECK(r.events.empty());
  }

  TEST_CASE("single tone burst matches the scanning oracle") {
    auto pcm = test::silence(500);
    test::append(pcm, test::tone(400, 32000));
    test::append(pcm, test::silence(500));
    VadConfig cfg{1000, 64, 256, 30000};
    const auto r = run_vad(pcm, cfg);
    REQUIRE(r.pairs.size() == 1);
    CHECK(std::llabs(r.pairs[0].first - 500) <= 16);
    CHECK(std::llabs(r.pairs[0].second - (900 + 256)) <= 16);
    const auto o = oracle::vad_segments(pcm, 1000, 64, 256);
    REQUIRE(o.size() == 1);
    CHECK(r.pairs[0].first == o[0].start_ms);
    CHECK(r.pairs[0].second == o[0].end_ms);
  }

  TEST_CASE("three bursts give three ordered pairs") {
    std::vector<std::int16_t> pcm;
    for (int i = 0; i < 3; ++i) {
      test::append(pcm, test::silence(700));
      test::append(pcm, test::tone(300 + 100 * i, 9000));
    }
    test::append(pcm, test::silence(600));
    VadConfig cfg{1000, 64, 256, 30000};
    const auto r = run_vad(pcm, cfg);
    const auto o = oracle::vad_segments(pcm, 1000, 64, 256);
    REQUIRE(o.size() == 3);
    REQUIRE(r.pairs.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(r.pairs[i].first == o[i].start_ms);
      CHECK(r.pairs[i].second == o[i].end_ms);
    }
  }

  TEST_CASE("short blips below the onset duration are ignored") {
    std::vector<std::int16_t> pcm = test::silence(320);
    test::append(pcm, test::tone(48, 9000));
    test::append(pcm, test::silence(640));
    CHECK(run_vad(pcm, {1000, 64, 256, 30000}).events.empty());
  }

  TEST_CASE("segments carry the candidate prefix and the exact input slice") {
    std::vector<std::int16_t> pcm = test::silence(320);
    test::append(pcm, test::tone(480, 9000));
    test::append(pcm, test::silence(640));
    const auto r = run_vad(pcm, {1000, 64, 256, 30000});
    REQUIRE(r.events.size() == 2);
    const auto& seg = std::get<VoiceEnd>(r.events[1]).segment;
    const auto first = static_cast<std::size_t>(seg.t_start_ms * 16);
    REQUIRE(seg.samples.size() == static_cast<std::size_t>((seg.t_end_ms - seg.t_start_ms) * 16));
    CHECK(std::equal(seg.samples.begin(), seg.samples.end(), pcm.begin() + static_cast<std::ptrdiff_t>(first)));
    CHECK(seg.t_end_ms - seg.t_start_ms >= 64);
  }

  TEST_CASE("max segment length forces closure and re-onsets") {
    auto pcm = test::tone(2000, 9000);
    test::append(pcm, test::silence(500));
    const auto r = run_vad(pcm, {1000, 64, 256, 800});
    REQUIRE(r.pairs.size() >= 3);
    CHECK(std::get<VoiceEnd>(r.events[1]).segment.forced);
    CHECK(r.pairs[0] == std::pair<std::int64_t, std::int64_t>{0, 800});
    CHECK(r.pairs[1].first == 800);
  }

  TEST_CASE("identical input gives bitwise identical events") {
    std::mt19937_64 rng(3);
    std::vector<std::int16_t> pcm;
    for (int i = 0; i < 20; ++i) {
      test::append(pcm, test::silence(std::uniform_int_distribution<int>(16, 900)(rng)));
      test::append(pcm, test::tone(std::uniform_int_distribution<int>(16, 900)(rng), 4000));
    }
    const auto a = run_vad(pcm, {});
    const auto b = run_vad(pcm, {});
    CHECK(a.events == b.events);
    const auto o = oracle::vad_segments(pcm, 1000, 64, 256);
    REQUIRE(a.pairs.size() == o.size());
    for (std::size_t i = 0; i < o.size(); ++i) {
      CHECK(a.pairs[i].first == o[i].start_ms);
      CHECK(a.pairs[i].second == o[i].end_ms);
    }
  }

  TEST_CASE("out-of-order chunk faults the detector") {
    EnergyVad vad(VadConfig{});
    ingest::AudioChunk c{"s", 0, 0, std::vector<std::int16_t>(256, 0)};
    vad.process(c);
    c.seq = 2;
    CHECK_THROWS_AS(vad.process(c), SequencingError);
    c.seq = 1;
    CHECK_THROWS_AS(vad.process(c), SequencingError);
    CHECK(vad.state().faulted);
  }

  TEST_CASE("config durations must be positive multiples of 16 ms") {
    VadConfig cfg;
    cfg.onset_min_ms = 60;
    cfg.energy_threshold = 0;
    try {
      cfg.validate();
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.fields() == std::vector<std::string>{"vad.energy_threshold", "vad.onset_min_ms"});
    }
  }

  TEST_CASE("voice start sends the interrupt before the backup, same time") {
    GenerationCounter gen;
    ControlChannel<Interrupt> to_gateway;
    ControlChannel<Backup> to_memory;
    const auto irq = on_voice_start(500, gen, to_gateway, to_memory);
    CHECK(irq.generation == 1);
    auto i = to_gateway.try_receive();
    auto b = to_memory.try_receive();
    REQUIRE(i);
    REQUIRE(b);
    CHECK(i->t_ms == 500);
    CHECK(b->t_ms == 500);
    on_voice_start(2500, gen, to_gateway, to_memory);
    CHECK(to_memory.try_receive()->t_ms == 2500);
    CHECK(to_gateway.try_receive()->generation == 2);
  }

  TEST_CASE("closed control channel is fatal") {
    GenerationCounter gen;
    ControlChannel<Interrupt> to_gateway;
    ControlChannel<Backup> to_memory;
    to_gateway.close();
    CHECK_THROWS_AS(on_voice_start(0, gen, to_gateway, to_memory), ChannelClosed);
  }
}
