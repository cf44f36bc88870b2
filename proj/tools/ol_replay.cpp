// Replays a trace through the full pipeline and reports the results.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "cli_config.hpp"
#include "ol/common/error.hpp"
#include "ol/harness/replay.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Replay a trace through the pipeline"};
  std::string trace_path;
  std::string mode = "virtual";
  std::string report_path;
  ol::tools::ConfigFlags flags;
  app.add_option("trace", trace_path, "JSONL trace")->required();
  app.add_option("--mode", mode, "virtual (deterministic) or realtime")->check(CLI::IsMember({"virtual", "realtime"}));
  app.add_option("--report", report_path, "write the JSON report here");
  ol::tools::add_config_flags(app, flags);
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::warn);

  try {
    const auto trace = ol::harness::load_trace(trace_path);
    ol::harness::ReplayOptions opts;
    opts.mode = mode == "realtime" ? ol::harness::Mode::RealTime : ol::harness::Mode::Virtual;
    if (flags.path) {
      std::ifstream in(*flags.path);
      if (!in) throw ol::ConfigError({}, "cannot read " + *flags.path);
      opts.config_toml.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    } else if (const char* env = std::getenv("OL_CONFIG"); env && *env) {
      std::ifstream in(env);
      if (!in) throw ol::ConfigError({}, std::string("cannot read ") + env);
      opts.config_toml.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    opts.overrides = flags.overrides();
    const auto report = ol::harness::replay(trace, opts);
    const auto j = report.to_json();
    if (!report_path.empty()) {
      std::ofstream(report_path) << j.dump(2) << '\n';
    }
    for (const auto& e : report.expects) {
      std::cout << (e.pass ? "PASS " : "FAIL ") << e.type << " (line " << e.line << "): " << e.detail << '\n';
    }
    const auto& m = j["metrics"];
    std::cout << "queries " << report.queries.size() << ", interrupts " << report.interrupts.size()
              << ", first_audio_ms p50 " << m["first_audio_ms"]["p50"] << " p95 " << m["first_audio_ms"]["p95"]
              << ", precision@k " << m["precision_at_k"]["mean"] << '\n';
    return report.passed() ? 0 : 1;
  } catch (const ol::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
