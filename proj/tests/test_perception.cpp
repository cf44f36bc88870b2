#include <doctest.h>

#include "ol/backends/hashed_vector.hpp"
#include "ol/backends/reference.hpp"
#include "ol/common/error.hpp"
#include "ol/perception/jpeg.hpp"
#include "ol/perception/perception.hpp"
#include "support.hpp"

using namespace ol;
using namespace ol::perception;

namespace {

vad::VoiceSegment segment_at(std::int64_t t, std::uint64_t id = 0) {
  vad::VoiceSegment s;
  s.session_id = "s";
  s.id = id;
  s.t_start_ms = t;
  s.t_end_ms = t + 400;
  s.samples.assign(400 * 16, 100);
  return s;
}

ingest::RawFrame jpeg_frame(const RgbImage& img) {
  return {"s", 0, 0, ingest::JpegImage{encode_jpeg(img)}};
}

RgbImage solid(std::size_t w, std::size_t h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  RgbImage img{w, h, {}};
  for (std::size_t i = 0; i < w * h; ++i) img.pixels.insert(img.pixels.end(), {r, g, b});
  return img;
}

class ThrowingAsr final : public backends::AsrBackend {
 public:
  backends::AsrOutput recognize(const vad::VoiceSegment&) override {
    throw BackendError(BackendError::Kind::Timeout, "slow");
  }
};

FrameFeatures feature_frame(std::size_t i, std::size_t n, std::size_t c, double fill) {
  return {{i, static_cast<std::int64_t>(i) * 1000}, Matrix(n, c, fill)};
}

}  // namespace

TEST_SUITE("perception") {
  TEST_CASE("wizard ASR echoes the annotation for a speech segment") {
    backends::WizardAsr asr({{1000, "speech", "what is this"}});
    const auto r = classify_and_transcribe(segment_at(1000), asr);
    CHECK(r.sound_class == "speech");
    CHECK(r.transcript == "what is this");
  }

  TEST_CASE("non-speech classes carry no transcript") {
    backends::WizardAsr asr({{1000, "raining", "ignored text"}});
    const auto r = classify_and_transcribe(segment_at(1000), asr);
    CHECK(r.sound_class == "raining");
    CHECK(r.transcript.empty());
  }

  TEST_CASE("50 annotated segments map one to one") {
    std::vector<backends::SegmentAnnotation> ann;
    for (int i = 0; i < 50; ++i) {
      ann.push_back({i * 2000, i % 5 ? "speech" : kBaseSoundClasses[static_cast<std::size_t>(i) % 5],
                     i % 5 ? "utterance " + std::to_string(i) : ""});
    }
    backends::WizardAsr asr(ann);
    for (int i = 0; i < 50; ++i) {
      const auto r = classify_and_transcribe(segment_at(i * 2000 + 16, static_cast<std::uint64_t>(i)), asr);
      CHECK(r.sound_class == ann[static_cast<std::size_t>(i)].sound_class);
      CHECK(r.transcript == ann[static_cast<std::size_t>(i)].transcript);
      CHECK((r.transcript.empty() || r.is_speech()));
    }
  }

  TEST_CASE("ASR failure becomes class error") {
    ThrowingAsr asr;
    const auto r = classify_and_transcribe(segment_at(0), asr);
    CHECK(r.sound_class == kErrorClass);
    CHECK(r.transcript.empty());
  }

  TEST_CASE("replay matrices pass through") {
    backends::ReferenceFrameEncoder enc;
    FeatureProfile p{4, 16, 4, 8};
    std::mt19937_64 rng(1);
    const Matrix m = test::random_matrix(rng, 16, 8);
    const auto f = extract_frame_features({"s", 3, 3000, m}, enc, p);
    REQUIRE(f);
    CHECK(f->tokens == m);
    CHECK(f->frame.seq == 3);
  }

  TEST_CASE("reference encoder is deterministic on a fixed image") {
    RgbImage img{64, 48, {}};
    for (std::size_t y = 0; y < 48; ++y) {
      for (std::size_t x = 0; x < 64; ++x) {
        img.pixels.insert(img.pixels.end(), {static_cast<std::uint8_t>(x * 4), static_cast<std::uint8_t>(y * 5),
                                             static_cast<std::uint8_t>((x + y) % 256)});
      }
    }
    backends::ReferenceFrameEncoder a, b;
    FeatureProfile p;
    const auto frame = jpeg_frame(img);
    const auto fa = a.encode(frame, p);
    const auto fb = b.encode(frame, p);
    CHECK(fa == fb);
    CHECK(fa.rows() == 16);
    CHECK(fa.all_finite());
  }

  TEST_CASE("all-black image maps every cell to the rgb:0,0,0 vector") {
    backends::ReferenceFrameEncoder enc;
    FeatureProfile p;
    const auto m = enc.encode(jpeg_frame(solid(32, 32, 0, 0, 0)), p);
    // Frozen from the independent implementation in oracles/hashed_vector.py.
    const double head[4] = {-0x1.bdc69fc50784dp-5, -0x1.0ff172f05a301p-4, -0x1.726dcf2060778p-4,
                            0x1.712a2d90ee72fp-4};
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < 4; ++c) CHECK(m(r, c) == head[c]);
    }
  }

  TEST_CASE("corrupt JPEG is dropped, not thrown") {
    backends::ReferenceFrameEncoder enc;
    ingest::RawFrame f{"s", 0, 0, ingest::JpegImage{{0xff, 0xd8, 0x00, 0x01, 0x02}}};
    CHECK_FALSE(extract_frame_features(f, enc, FeatureProfile{}).has_value());
    CHECK_THROWS_AS(decode_jpeg(std::get<ingest::JpegImage>(f.payload).bytes), DecodeError);
  }

  TEST_CASE("T=4 with nine frames gives clips of 4, 4 and 1") {
    ClipAssembler as({4, 2, 1, 3});
    std::vector<ClipFeatures> clips;
    for (std::size_t i = 0; i < 9; ++i) {
      if (auto c = as.add(feature_frame(i, 2, 3, static_cast<double>(i)))) clips.push_back(std::move(*c));
    }
    if (auto c = as.flush()) clips.push_back(std::move(*c));
    REQUIRE(clips.size() == 3);
    CHECK(clips[0].frame_count == 4);
    CHECK(clips[1].frame_count == 4);
    CHECK(clips[2].frame_count == 1);
    CHECK(clips[2].features.rows() == 2);
    for (std::size_t k = 0; k < 3; ++k) CHECK(clips[k].index == k);
    CHECK(clips[0].t_start_ms == 0);
    CHECK(clips[0].t_end_ms == 3000);
  }

  TEST_CASE("stacking clip rows reproduces the frame stream") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t t = 1 + rng() % 6, n = 2 + rng() % 4, c = 2 + rng() % 6, frames = rng() % 30;
      ClipAssembler as({t, n, 1, c});
      Matrix all, stacked;
      for (std::size_t i = 0; i < frames; ++i) {
        FrameFeatures f{{i, static_cast<std::int64_t>(i) * 1000}, test::random_matrix(rng, n, c)};
        all.append_rows(f.tokens);
        if (auto clip = as.add(std::move(f))) stacked.append_rows(clip->features);
      }
      if (auto clip = as.flush()) stacked.append_rows(clip->features);
      REQUIRE(stacked == all);
    }
  }

  TEST_CASE("shape changes within a session are rejected") {
    ClipAssembler as({4, 2, 1, 3});
    as.add(feature_frame(0, 2, 3, 1));
    CHECK_THROWS_AS(as.add(feature_frame(1, 2, 4, 1)), ProfileMismatch);
  }
}
