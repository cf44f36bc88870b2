#include <bit>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "ol/common/error.hpp"
#include "ol/memory/memory.hpp"

namespace ol::memory {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormatTag = "omnimem/1";

static_assert(std::endian::native == std::endian::little, "float32 export assumes a little-endian host");

void write_f32(const fs::path& path, std::span<const double> values) {
  std::vector<float> buf(values.begin(), values.end());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw Error("short write to " + path.string());
}

std::vector<double> read_f32(const fs::path& path, std::size_t expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<float> buf(expected);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(expected * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != expected * sizeof(float) || in.peek() != EOF) {
    throw Error(path.string() + " does not hold " + std::to_string(expected) + " float32 values");
  }
  return {buf.begin(), buf.end()};
}

std::string clip_file(std::size_t index, const char* kind) {
  char name[64];
  std::snprintf(name, sizeof name, "clip_%05zu_%s.f32", index, kind);
  return name;
}

}  // namespace

void export_memory(const MemorySnapshot& snapshot, const perception::FeatureProfile& profile, const fs::path& dir) {
  fs::create_directories(dir);
  json manifest;
  manifest["format"] = kFormatTag;
  manifest["k"] = snapshot.clips.size();
  manifest["T"] = profile.frames_per_clip;
  manifest["N"] = profile.tokens_per_frame;
  manifest["P"] = profile.memory_tokens_per_frame;
  manifest["C"] = profile.channels;
  manifest["snapshot_t_ms"] = snapshot.snapshot_t_ms;
  json clips = json::array();
  for (const auto& c : snapshot.clips) {
    json frames = json::array();
    for (const auto& f : c->frame_refs) frames.push_back({f.seq, f.t_ms});
    const auto short_name = clip_file(c->clip_index, "short");
    const auto global_name = clip_file(c->clip_index, "global");
    write_f32(dir / short_name, c->short_term->data());
    write_f32(dir / global_name, c->global);
    clips.push_back({{"index", c->clip_index},
                     {"t_start_ms", c->t_start_ms},
                     {"t_end_ms", c->t_end_ms},
                     {"frame_count", c->frame_count},
                     {"degraded", c->degraded},
                     {"frames", frames},
                     {"short_term", {{"file", short_name}, {"rows", c->short_term->rows()}}},
                     {"global", {{"file", global_name}}}});
  }
  manifest["clips"] = clips;
  const std::size_t lt_rows = snapshot.long_term ? snapshot.long_term->rows() : 0;
  if (lt_rows > 0) write_f32(dir / "long_term.f32", snapshot.long_term->data());
  manifest["long_term"] = {{"file", "long_term.f32"}, {"rows", lt_rows}};

  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  out << manifest.dump(2) << '\n';
  if (!out) throw Error("cannot write manifest in " + dir.string());
}

ImportedMemory import_memory(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw Error("no manifest.json in " + dir.string());
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(std::string("manifest.json: ") + e.what());
  }
  if (m.value("format", "") != kFormatTag) {
    throw Error("unsupported memory format '" + m.value("format", "") + "', expected " + kFormatTag);
  }
  ImportedMemory out;
  auto& p = out.profile;
  p.frames_per_clip = m.at("T");
  p.tokens_per_frame = m.at("N");
  p.memory_tokens_per_frame = m.at("P");
  p.channels = m.at("C");
  p.validate();
  const std::size_t c = p.channels;

  auto& s = out.snapshot;
  s.snapshot_t_ms = m.at("snapshot_t_ms");
  for (const auto& jc : m.at("clips")) {
    auto rec = std::make_shared<ClipRecord>();
    rec->clip_index = jc.at("index");
    rec->t_start_ms = jc.at("t_start_ms");
    rec->t_end_ms = jc.at("t_end_ms");
    rec->frame_count = jc.at("frame_count");
    rec->degraded = jc.value("degraded", false);
    for (const auto& f : jc.at("frames")) rec->frame_refs.push_back({f.at(0), f.at(1)});
    const std::size_t rows = jc.at("short_term").at("rows");
    rec->short_term = std::make_shared<const Matrix>(
        rows, c, read_f32(dir / jc.at("short_term").at("file").get<std::string>(), rows * c));
    rec->global = read_f32(dir / jc.at("global").at("file").get<std::string>(), c);
    if (rec->clip_index != s.clips.size()) throw Error("clip indices in manifest are not contiguous from 0");
    s.clips.push_back(std::move(rec));
  }
  if (m.at("k").get<std::size_t>() != s.clips.size()) throw Error("manifest k does not match clip list");
  const std::size_t lt_rows = m.at("long_term").at("rows");
  if (lt_rows != s.clips.size()) throw Error("long-term memory must have one row per clip");
  s.long_term = lt_rows == 0 ? std::make_shared<const Matrix>()
                             : std::make_shared<const Matrix>(
                                   lt_rows, c, read_f32(dir / m.at("long_term").at("file").get<std::string>(), lt_rows * c));
  Matrix g(s.clips.size(), c);
  for (std::size_t i = 0; i < s.clips.size(); ++i) {
    std::copy(s.clips[i]->global.begin(), s.clips[i]->global.end(), g.row(i).begin());
  }
  s.globals = std::make_shared<const Matrix>(std::move(g));
  return out;
}

}  // namespace ol::memory
