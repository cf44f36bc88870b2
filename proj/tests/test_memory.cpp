#include <doctest.h>

#include <filesystem>

#include "ol/backends/hashed_vector.hpp"
#include "ol/backends/reference.hpp"
#include "ol/backends/text.hpp"
#include "ol/common/error.hpp"
#include "ol/kernels/kernels.hpp"
#include "ol/memory/memory.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace ol;
using namespace ol::memory;
using perception::FeatureProfile;

namespace {

Vector basis(std::size_t i, std::size_t c) {
  Vector v(c, 0.0);
  v[i] = 1.0;
  return v;
}

MemorySnapshot bank_of(const std::vector<Vector>& globals) {
  MemorySnapshot s;
  auto g = std::make_shared<Matrix>();
  for (std::size_t j = 0; j < globals.size(); ++j) {
    auto rec = std::make_shared<ClipRecord>();
    rec->clip_index = j;
    rec->global = globals[j];
    rec->t_end_ms = static_cast<std::int64_t>(j + 1) * 1000;
    s.clips.push_back(rec);
    g->append_row(globals[j]);
  }
  s.globals = g;
  return s;
}

std::vector<std::size_t> indices(const RetrievalResult& r) {
  std::vector<std::size_t> out;
  for (const auto& h : r.hits) out.push_back(h.clip_index);
  return out;
}

perception::ClipFeatures clip_of(std::size_t index, const Matrix& features, const FeatureProfile& p) {
  perception::ClipFeatures c;
  c.index = index;
  c.frame_count = features.rows() / p.tokens_per_frame;
  c.t_start_ms = static_cast<std::int64_t>(index * p.frames_per_clip) * 1000;
  c.t_end_ms = c.t_start_ms + static_cast<std::int64_t>(c.frame_count - 1) * 1000;
  c.features = features;
  for (std::size_t f = 0; f < c.frame_count; ++f) {
    c.frames.push_back({index * p.frames_per_clip + f, c.t_start_ms + static_cast<std::int64_t>(f) * 1000});
  }
  return c;
}

}  // namespace

TEST_SUITE("memory") {
  TEST_CASE("down-sampling N=2 P=1 averages the two tokens") {
    backends::ReferenceCompressor comp;
    const auto h = init_short_term(Matrix::from_rows({{1, 0}, {0, 1}}), {1, 2, 1, 2}, comp);
    CHECK(h == Matrix::from_rows({{0.5, 0.5}}));
  }

  TEST_CASE("down-sampling with P=N is the identity") {
    backends::ReferenceCompressor comp;
    std::mt19937_64 rng(2);
    const Matrix f = test::random_matrix(rng, 12, 5);
    CHECK(init_short_term(f, {3, 4, 4, 5}, comp) == f);
  }

  TEST_CASE("down-sampling equals the group-mean oracle") {
    backends::ReferenceCompressor comp;
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix f = test::random_matrix(rng, 4 * 16, 32);
      const auto h = init_short_term(f, {4, 16, 4, 32}, comp);
      const auto want = oracle::group_mean(test::to_rows(f), 16, 4);
      REQUIRE(h.rows() == want.size());
      for (std::size_t r = 0; r < h.rows(); ++r) {
        for (std::size_t c = 0; c < h.cols(); ++c) CHECK(std::abs(h(r, c) - want[r][c]) <= 1e-12);
      }
    }
  }

  TEST_CASE("P must divide N") {
    backends::ReferenceCompressor comp;
    CHECK_THROWS_AS(init_short_term(Matrix(16, 4), {1, 16, 3, 4}, comp), ConfigError);
  }

  TEST_CASE("identical unit rows compress to that vector") {
    backends::ReferenceCompressor comp;
    const FeatureProfile p{2, 4, 2, 3};
    Matrix f;
    for (int i = 0; i < 8; ++i) f.append_row(basis(0, 3));
    const auto h0 = init_short_term(f, p, comp);
    const auto r = compress_clip(f, h0, Vector(3, 0.0), p, comp);
    CHECK(r.global == basis(0, 3));
    for (std::size_t i = 0; i < r.short_term.rows(); ++i) CHECK(Vector(r.short_term.row(i).begin(), r.short_term.row(i).end()) == basis(0, 3));
    CHECK_FALSE(r.degraded);
  }

  TEST_CASE("half e1, half e2 compresses to their normalized sum") {
    backends::ReferenceCompressor comp;
    const FeatureProfile p{2, 2, 1, 2};
    const Matrix f = Matrix::from_rows({{1, 0}, {0, 1}, {1, 0}, {0, 1}});
    const auto r = compress_clip(f, init_short_term(f, p, comp), Vector(2, 0.0), p, comp);
    CHECK(std::abs(r.global[0] - 1 / std::sqrt(2.0)) <= 1e-15);
    CHECK(std::abs(r.global[1] - 1 / std::sqrt(2.0)) <= 1e-15);
  }

  TEST_CASE("global memories have unit norm") {
    backends::ReferenceCompressor comp;
    std::mt19937_64 rng(4);
    const FeatureProfile p{4, 4, 2, 16};
    for (int i = 0; i < 200; ++i) {
      const Matrix f = test::random_matrix(rng, 16, 16);
      const auto r = compress_clip(f, init_short_term(f, p, comp), Vector(16, 0.0), p, comp);
      CHECK(std::abs(l2_norm(r.global) - 1.0) <= 1e-9);
      CHECK(r.short_term.rows() == 8);
    }
  }

  TEST_CASE("single-clip integration equals the clip's global memory") {
    backends::ReferenceCompressor comp;
    const Vector g = backends::hashed_vector("one", 8);
    Matrix h;
    for (int i = 0; i < 4; ++i) h.append_row(g);
    const Matrix* hs[] = {&h};
    const auto lt = integrate(hs, std::vector<Vector>{g}, 0, comp);
    REQUIRE(lt.rows() == 1);
    for (std::size_t c = 0; c < 8; ++c) CHECK(std::abs(lt(0, c) - g[c]) <= 1e-15);
  }

  TEST_CASE("orthogonal clips integrate to their normalized short-term means") {
    backends::ReferenceCompressor comp;
    std::vector<Matrix> hs;
    std::vector<Vector> gs;
    for (std::size_t k = 0; k < 3; ++k) {
      Matrix h(2, 6, 0.0);
      h(0, 2 * k) = 3.0;
      h(1, 2 * k + 1) = 1.0;
      hs.push_back(h);
      gs.push_back(basis(2 * k, 6));
    }
    std::vector<const Matrix*> ptrs{&hs[0], &hs[1], &hs[2]};
    const auto lt = integrate(ptrs, gs, 0, comp);
    for (std::size_t k = 0; k < 3; ++k) {
      const double n = std::sqrt(1.5 * 1.5 + 0.5 * 0.5);
      CHECK(std::abs(lt(k, 2 * k) - 1.5 / n) <= 1e-15);
      CHECK(std::abs(lt(k, 2 * k + 1) - 0.5 / n) <= 1e-15);
    }
  }

  TEST_CASE("permuting clips permutes the long-term rows") {
    backends::ReferenceCompressor comp;
    std::mt19937_64 rng(8);
    std::vector<Matrix> hs;
    std::vector<Vector> gs;
    for (int k = 0; k < 5; ++k) {
      hs.push_back(test::random_matrix(rng, 4, 7));
      gs.push_back(normalized(test::random_matrix(rng, 1, 7).row(0)));
    }
    std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    std::vector<const Matrix*> a, b;
    std::vector<Vector> gb;
    for (auto& h : hs) a.push_back(&h);
    for (auto i : perm) {
      b.push_back(&hs[i]);
      gb.push_back(gs[i]);
    }
    const auto la = integrate(a, gs, 0, comp);
    const auto lb = integrate(b, gb, 0, comp);
    for (std::size_t r = 0; r < perm.size(); ++r) {
      CHECK(Vector(lb.row(r).begin(), lb.row(r).end()) == Vector(la.row(perm[r]).begin(), la.row(perm[r]).end()));
    }
  }

  TEST_CASE("one-token question encodes to its hashed vector") {
    backends::ReferenceCompressor comp;
    const auto q = encode_question(Matrix(), "umbrella", 16, comp);
    CHECK(q.q == backends::hashed_vector("umbrella", 16));
    CHECK(encode_question(Matrix(), "umbrella", 16, comp).q == q.q);
  }

  TEST_CASE("multi-token question is the normalized token mean") {
    backends::ReferenceCompressor comp;
    const std::string question = "Where can I heat my sandwiches?";
    const auto q = encode_question(Matrix(), question, 32, comp);
    Vector mean(32, 0.0);
    const auto toks = backends::tokenize(question);
    CHECK(toks == std::vector<std::string>{"where", "can", "i", "heat", "my", "sandwiches"});
    for (const auto& t : toks) {
      const auto v = backends::hashed_vector(t, 32);
      for (std::size_t c = 0; c < 32; ++c) mean[c] += v[c];
    }
    double n = 0;
    for (double x : mean) n += x * x;
    n = std::sqrt(n);
    for (std::size_t c = 0; c < 32; ++c) CHECK(std::abs(q.q[c] - mean[c] / n) <= 1e-12);
  }

  TEST_CASE("empty question is an argument error") {
    backends::ReferenceCompressor comp;
    CHECK_THROWS_AS(encode_question(Matrix(), "", 8, comp), ArgumentError);
  }

  TEST_CASE("retrieval basic cases") {
    const auto bank = bank_of({basis(0, 4), basis(1, 4)});
    auto r = retrieve({basis(1, 4), "q"}, bank, 1);
    REQUIRE(r.hits.size() == 1);
    CHECK(r.hits[0].clip_index == 1);
    CHECK(r.hits[0].score == doctest::Approx(1.0).epsilon(1e-12));

    const auto ortho = bank_of({basis(0, 4), basis(1, 4), basis(2, 4)});
    r = retrieve({basis(3, 4), "q"}, ortho, 2);
    CHECK(indices(r) == std::vector<std::size_t>{0, 1});
    for (const auto& h : r.hits) CHECK(h.score == 0.0);

    r = retrieve({basis(0, 4), "q"}, MemorySnapshot{}, 2);
    CHECK(r.no_memory);
    CHECK(r.hits.empty());
  }

  TEST_CASE("retrieval equals the brute-force sort") {
    std::mt19937_64 rng(12);
    for (int b = 0; b < 100; ++b) {
      const std::size_t k = 1 + rng() % 64, c = 2 + rng() % 31;
      std::vector<Vector> globals;
      for (std::size_t j = 0; j < k; ++j) {
        if (j > 0 && rng() % 5 == 0) {
          globals.push_back(globals[rng() % j]);  // exact ties
        } else {
          globals.push_back(normalized(test::random_matrix(rng, 1, c).row(0)));
        }
      }
      const auto bank = bank_of(globals);
      for (int qi = 0; qi < 10; ++qi) {
        const Vector q = normalized(test::random_matrix(rng, 1, c).row(0));
        const std::size_t top_k = 1 + rng() % 8;
        const double lambda = qi % 3 == 0 ? 0.3 : 0.0;
        const auto got = indices(retrieve({q, "q"}, bank, top_k, lambda));
        REQUIRE(got == oracle::brute_force_top_k(q, globals, top_k, lambda));
        for (const auto& h : retrieve({q, "q"}, bank, top_k).hits) {
          CHECK(h.cosine >= -1.0 - 1e-12);
          CHECK(h.cosine <= 1.0 + 1e-12);
        }
      }
    }
  }

  TEST_CASE("recency bonus prefers the latest clip among equals") {
    const auto g = basis(0, 4);
    const auto bank = bank_of({g, g, g, g});
    CHECK(indices(retrieve({g, "q"}, bank, 1, 0.0)) == std::vector<std::size_t>{0});
    CHECK(indices(retrieve({g, "q"}, bank, 1, 1.0)) == std::vector<std::size_t>{3});
  }

  TEST_CASE("snapshots hide clips finished after the backup") {
    backends::ReferenceCompressor comp;
    const FeatureProfile p{2, 4, 2, 8};
    MemoryBank bank({}, p, comp);
    std::mt19937_64 rng(1);
    CHECK(bank.restore_for_grounding(10000)->empty());
    bank.ingest(clip_of(0, test::random_matrix(rng, 8, 8), p));  // ends 1000
    bank.ingest(clip_of(1, test::random_matrix(rng, 8, 8), p));  // ends 3000
    auto s1 = bank.snapshot(2000);
    bank.ingest(clip_of(2, test::random_matrix(rng, 8, 8), p));  // ends 5000
    auto s2 = bank.snapshot(5000);
    bank.ingest(clip_of(3, test::random_matrix(rng, 8, 8), p));  // ends 7000
    CHECK(s1->size() == 1);
    CHECK(s2->size() == 3);
    CHECK(bank.restore_for_grounding(4000)->snapshot_t_ms == 2000);
    CHECK(bank.restore_for_grounding(6000)->snapshot_t_ms == 5000);
    CHECK(bank.restore_for_grounding(1000)->empty());
    CHECK(s2->long_term->rows() == 3);
    for (const auto& c : s2->clips) CHECK(c->t_end_ms <= 5000);
  }

  TEST_CASE("snapshot contents survive heavy ingestion") {
    backends::ReferenceCompressor comp;
    const FeatureProfile p{2, 4, 2, 8};
    MemoryBank bank({}, p, comp);
    std::mt19937_64 rng(2);
    for (std::size_t k = 0; k < 5; ++k) bank.ingest(clip_of(k, test::random_matrix(rng, 8, 8), p));
    const auto snap = bank.snapshot(100000);
    const auto before = content_hash(*snap);
    for (std::size_t k = 5; k < 105; ++k) bank.ingest(clip_of(k, test::random_matrix(rng, 8, 8), p));
    CHECK(content_hash(*snap) == before);
    CHECK(bank.live_view()->long_term->rows() == 105);
  }

  TEST_CASE("short-term and long-term shapes are conserved") {
    backends::ReferenceCompressor comp;
    const FeatureProfile p{3, 4, 2, 6};
    MemoryConfig cfg;
    cfg.window = 4;
    MemoryBank bank(cfg, p, comp);
    std::mt19937_64 rng(5);
    for (std::size_t k = 0; k < 10; ++k) {
      auto rec = bank.ingest(clip_of(k, test::random_matrix(rng, 12, 6), p));
      CHECK(rec->short_term->rows() == 6);
      CHECK(rec->clip_index == k);
      CHECK(bank.live_view()->long_term->rows() == k + 1);
      CHECK(rec->frame_refs.size() == 3);
    }
  }

  TEST_CASE("export and import round-trip") {
    backends::ReferenceCompressor comp;
    const FeatureProfile p{2, 4, 2, 8};
    MemoryBank bank({}, p, comp);
    std::mt19937_64 rng(6);
    for (std::size_t k = 0; k < 4; ++k) bank.ingest(clip_of(k, test::random_matrix(rng, 8, 8), p));
    const auto snap = bank.live_view();
    const auto dir = std::filesystem::temp_directory_path() / "ol_memory_roundtrip";
    std::filesystem::remove_all(dir);
    export_memory(*snap, p, dir);
    const auto back = import_memory(dir);
    CHECK(back.profile == p);
    REQUIRE(back.snapshot.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(back.snapshot.clips[k]->t_end_ms == snap->clips[k]->t_end_ms);
      for (std::size_t c = 0; c < 8; ++c) {
        CHECK(back.snapshot.clips[k]->global[c] == static_cast<double>(static_cast<float>(snap->clips[k]->global[c])));
      }
    }
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("serial and parallel kernels agree bitwise") {
    std::mt19937_64 rng(7);
    const Matrix rows = test::random_matrix(rng, 300, 33);
    const Vector q = normalized(test::random_matrix(rng, 1, 33).row(0));
    std::vector<double> a(300), b(300);
    kernels::serial::cosine_scores(q, rows, a);
    kernels::parallel::cosine_scores(q, rows, b);
    CHECK(a == b);
    const Matrix tokens = test::random_matrix(rng, 16 * 20, 33);
    CHECK(kernels::serial::group_mean(tokens, 16, 4) == kernels::parallel::group_mean(tokens, 16, 4));
    CHECK(kernels::serial::column_mean(tokens) == kernels::parallel::column_mean(tokens));
  }
}
