// Writes the bundled replay scenarios.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ol/harness/scenarios.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the bundled replay traces"};
  std::string out_dir = "assets/traces";
  std::vector<std::string> only;
  bool check = false;
  app.add_option("-o,--out", out_dir, "output directory");
  app.add_option("--only", only, "generate just these files");
  app.add_flag("--check", check, "compare against the existing files instead of writing");
  CLI11_PARSE(app, argc, argv);

  int stale = 0;
  std::filesystem::create_directories(out_dir);
  for (const auto& [file, trace] : ol::harness::bundled_scenarios()) {
    if (!only.empty() && std::find(only.begin(), only.end(), file) == only.end()) continue;
    const auto path = std::filesystem::path(out_dir) / file;
    const auto text = ol::harness::serialize_trace(trace);
    if (check) {
      std::ifstream in(path, std::ios::binary);
      const std::string existing((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      if (existing != text) {
        std::cerr << path.string() << " is out of date\n";
        ++stale;
      }
      continue;
    }
    std::ofstream(path, std::ios::binary) << text;
    std::cout << path.string() << " (" << trace.events.size() << " events)\n";
  }
  return stale == 0 ? 0 : 1;
}
