// cfk: batch driver for the kernel experiments.
//
//   cfk <command> [--config PATH] [--out DIR] [--seed N] [--resolution R] [--threads T]
//
// Each flag falls back to the environment variable CFK_CONFIG, CFK_OUT,
// CFK_SEED, CFK_RESOLUTION or CFK_THREADS; both override the config file.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cfk/cli.hpp"

namespace {

void addFlags(CLI::App& sub, cfk::cli::Overrides& o) {
  sub.add_option_function<std::string>("--config", [&o](const std::string& v) { o.config = v; },
                                       "configuration file")
      ->envname("CFK_CONFIG");
  sub.add_option_function<std::string>("--out", [&o](const std::string& v) { o.out = v; }, "report directory")
      ->envname("CFK_OUT");
  sub.add_option_function<std::uint64_t>("--seed", [&o](std::uint64_t v) { o.seed = v; }, "sampling seed")
      ->envname("CFK_SEED");
  sub.add_option_function<int>("--resolution", [&o](int v) { o.resolution = v; }, "nodes per chart axis")
      ->envname("CFK_RESOLUTION");
  sub.add_option_function<int>("--threads", [&o](int v) { o.threads = v; }, "worker threads (0: all cores)")
      ->envname("CFK_THREADS");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel experiments on pseudoconvex domains in C^n"};
  app.require_subcommand(1);
  cfk::cli::Overrides overrides;
  for (const std::string& name : cfk::cli::commandNames()) addFlags(*app.add_subcommand(name), overrides);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cfk::cli::kConfigFailure;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return cfk::cli::run(command, overrides, std::cerr);
}
