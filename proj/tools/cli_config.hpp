#pragma once

// Command-line mirror of the config file: --config <path> plus one
// --<dotted.key> <value> flag per documented key.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "ol/backends/config.hpp"

namespace ol::tools {

struct ConfigFlags {
  std::optional<std::string> path;
  std::map<std::string, std::string> values;

  std::vector<std::pair<std::string, std::string>> overrides() const {
    return {values.begin(), values.end()};
  }
};

inline void add_config_flags(CLI::App& app, ConfigFlags& flags) {
  app.add_option("--config", flags.path, "TOML config file (default: $OL_CONFIG)");
  for (const auto& key : backends::config_keys()) {
    app.add_option_function<std::string>(
           "--" + key.name, [&flags, name = key.name](const std::string& v) { flags.values[name] = v; }, key.doc)
        ->group("Config keys");
  }
}

}  // namespace ol::tools
