#include "singflow/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv) {
  namespace cli = singflow::cli;
  CLI::App app{"Rescaled pressure estimates for flows with singularities"};
  std::string command, config, out = "out";
  std::size_t threads = 0;
  bool threads_given = false;
  app.add_option("command", command, "command to run")
      ->required()
      ->check(CLI::IsMember(cli::command_names()));
  app.add_option("--config", config, "JSON config file")->required();
  app.add_option("--out", out, "output directory");
  auto *t = app.add_option("--threads", threads, "worker threads (0 = all cores)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  threads_given = t->count() > 0;

  try {
    cli::RunConfig cfg = cli::load_config(config);
    if (threads_given)
      cfg.threads = threads;
    return cli::run(command, cfg, out);
  } catch (const cli::ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
