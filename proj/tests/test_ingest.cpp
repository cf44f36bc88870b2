#include <doctest.h>

#include <random>
#include <thread>

#include "ol/common/error.hpp"
#include "ol/ingest/audio.hpp"
#include "ol/ingest/bounded_queue.hpp"
#include "ol/ingest/frames.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace ol;
using namespace ol::ingest;

TEST_SUITE("ingest") {
  TEST_CASE("1024 bytes give two full chunks") {
    std::vector<std::uint8_t> bytes(1024, 7);
    const auto chunks = chunk_audio(bytes, "s");
    REQUIRE(chunks.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(chunks[i].byte_length() * 8 == 4096);
      CHECK(chunks[i].seq == i);
      CHECK(chunks[i].t_start_ms == static_cast<std::int64_t>(i) * 16);
      CHECK(chunks[i].session_id == "s");
    }
  }

  TEST_CASE("empty stream gives no chunks") { CHECK(chunk_audio({}, "s").empty()); }

  TEST_CASE("odd byte count reports the offset") {
    std::vector<std::uint8_t> bytes(1025, 0);
    try {
      (void)chunk_audio(bytes, "s");
      FAIL("expected MalformedStream");
    } catch (const MalformedStream& e) {
      CHECK(e.offset() == 1024);
    }
  }

  TEST_CASE("random streams round-trip through arbitrary feed sizes") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 2 * std::uniform_int_distribution<std::size_t>(0, 4000)(rng);
      std::vector<std::uint8_t> bytes(n);
      for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
      AudioChunker chunker("s");
      std::vector<AudioChunk> chunks;
      std::size_t pos = 0;
      while (pos < n) {
        const std::size_t step = std::min(n - pos, std::uniform_int_distribution<std::size_t>(1, 900)(rng));
        chunker.feed(std::span(bytes).subspan(pos, step));
        pos += step;
        while (auto c = chunker.next()) chunks.push_back(std::move(*c));
      }
      if (auto c = chunker.finish()) chunks.push_back(std::move(*c));
      std::vector<std::uint8_t> back;
      for (std::size_t i = 0; i < chunks.size(); ++i) {
        if (i + 1 < chunks.size()) REQUIRE(chunks[i].byte_length() == 512);
        CHECK(chunks[i].seq == i);
        auto b = to_bytes(chunks[i].samples);
        back.insert(back.end(), b.begin(), b.end());
      }
      REQUIRE(back == bytes);
    }
  }

  TEST_CASE("drop-oldest evicts the head") {
    BoundedQueue<char> q(2, OverflowPolicy::DropOldest);
    CHECK(q.push('a').kind == EnqueueResult<char>::Kind::Accepted);
    q.push('b');
    auto r = q.push('c');
    CHECK(r.kind == EnqueueResult<char>::Kind::Dropped);
    CHECK(r.evicted == 'a');
    CHECK(q.try_pop() == 'b');
    CHECK(q.try_pop() == 'c');
  }

  TEST_CASE("block policy suspends the producer until space exists") {
    BoundedQueue<int> q(1, OverflowPolicy::Block);
    q.push(1);
    int probe = 2;
    CHECK_FALSE(q.try_push(probe).has_value());
    std::atomic<bool> done{false};
    std::thread producer([&] {
      q.push(2);
      done = true;
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    CHECK_FALSE(done.load());
    CHECK(q.pop() == 1);
    producer.join();
    CHECK(done.load());
    CHECK(q.try_pop() == 2);
  }

  TEST_CASE("push on a closed queue throws") {
    BoundedQueue<int> q(4, OverflowPolicy::Block);
    q.close();
    CHECK_THROWS_AS(q.push(1), QueueClosed);
    CHECK(q.pop() == std::nullopt);
  }

  TEST_CASE("random push/pop matches the FIFO model") {
    std::mt19937_64 rng(5);
    BoundedQueue<int> q(7, OverflowPolicy::DropOldest);
    oracle::DropOldestModel<int> model{7, {}};
    for (int i = 0; i < 10000; ++i) {
      if (rng() % 3) {
        auto r = q.push(i);
        auto e = model.push(i);
        REQUIRE(r.evicted == e);
      } else {
        REQUIRE(q.try_pop() == model.pop());
      }
      REQUIRE(q.size() <= q.capacity());
      REQUIRE(q.size() == model.items.size());
    }
  }

  TEST_CASE("30 fps source for 10 s samples ten frames") {
    std::vector<RawFrame> src;
    for (int i = 0; i < 300; ++i) src.push_back({"s", static_cast<std::uint64_t>(i), i * 1000 / 30, JpegImage{}});
    std::vector<RawFrame> out;
    for (auto& o : sample_frames(src)) {
      REQUIRE(std::holds_alternative<RawFrame>(o));
      out.push_back(std::get<RawFrame>(o));
    }
    REQUIRE(out.size() == 10);
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(std::llabs(out[i].t_ms - static_cast<std::int64_t>(i) * 1000) <= 34);
      CHECK(out[i].seq == i);
    }
  }

  TEST_CASE("one source frame gives one frame") {
    std::vector<RawFrame> src{{"s", 0, 0, JpegImage{}}};
    CHECK(sample_frames(src).size() == 1);
  }

  TEST_CASE("replayed frames at exact seconds pass through unchanged") {
    std::vector<RawFrame> src;
    for (int i = 0; i < 3; ++i) src.push_back({"s", static_cast<std::uint64_t>(i), i * 1000, Matrix(2, 2, i)});
    const auto out = sample_frames(src);
    REQUIRE(out.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(std::get<RawFrame>(out[i]) == src[i]);
  }

  TEST_CASE("a gap beyond the stall threshold is reported without synthetic frames") {
    std::vector<RawFrame> src{{"s", 0, 0, JpegImage{}}, {"s", 1, 5000, JpegImage{}}};
    const auto out = sample_frames(src, {1.0, 3000});
    std::size_t frames = 0, stalls = 0;
    for (const auto& o : out) {
      if (std::holds_alternative<RawFrame>(o)) ++frames;
      if (const auto* s = std::get_if<StreamStalled>(&o)) {
        ++stalls;
        CHECK(s->last_frame_ms == 0);
        CHECK(s->resumed_ms == 5000);
      }
    }
    CHECK(frames == 2);
    CHECK(stalls == 1);
  }
}
