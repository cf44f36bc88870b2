// Runs the WebSocket gateway with the configured backends.

#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "cli_config.hpp"
#include "ol/backends/factory.hpp"
#include "ol/common/error.hpp"
#include "ol/gateway/server.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Serve the ol/1 WebSocket gateway"};
  ol::tools::ConfigFlags flags;
  bool print_config = false;
  std::string log_level = "info";
  app.add_flag("--print-config", print_config, "print the effective config and exit");
  app.add_option("--log-level", log_level, "spdlog level")->check(CLI::IsMember({"trace", "debug", "info", "warn", "error"}));
  ol::tools::add_config_flags(app, flags);
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    auto cfg = ol::backends::load_config(flags.path, flags.overrides());
    if (print_config) {
      std::cout << ol::backends::dump_config(cfg);
      return 0;
    }
    ol::gateway::SessionOptions opts;
    opts.config = cfg;
    opts.make_backends = [](const ol::backends::RuntimeConfig& c) { return ol::backends::make_backends(c, {}); };
    ol::gateway::GatewayServer server(std::move(opts));
    const auto port = server.listen();
    spdlog::info("listening on {}:{}{} (health: /healthz)", cfg.gateway.host, port, cfg.gateway.ws_path);
    server.run();
    return 0;
  } catch (const ol::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
