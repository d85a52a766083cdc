#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "optinet/tensor.hpp"

namespace optinet::cli {

namespace {

struct Args {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
};

void add_common(CLI::App& sub, Args& args) {
  sub.add_option("--config", args.config, "JSON config file")->required();
  sub.add_option("--out", args.out, "Output directory (overrides the config)");
  sub.add_option("--seed", args.seed, "Master seed (overrides the config)");
  sub.add_option("--jobs", args.jobs, "Worker threads (default: OPTINET_JOBS or 1)");
}

template <class Parse>
auto load(const Args& args, Parse parse) {
  const std::string text = read_file(args.config);
  return parse(apply_overrides(text, args.seed, args.out));
}

}  // namespace

int run_main(int argc, char** argv) {
  CLI::App app{"Optimization-inspired network structures: equivalence checks, convergence race, training sweep "
               "and DOT export."};
  app.set_version_flag("--version", std::string(OPTINET_VERSION));
  app.require_subcommand(1, 1);

  Args args;
  CLI::App* verify = app.add_subcommand("verify", "Run the equivalence checks; exit 1 if any fails");
  CLI::App* race = app.add_subcommand("race", "Iteration counts of gd/hb/agd/agd2/admm on random quadratics");
  CLI::App* simulate = app.add_subcommand("simulate", "Train every structure/depth/seed cell and report MSE");
  CLI::App* exporter = app.add_subcommand("export", "Write Graphviz DOT files for structures");
  for (CLI::App* sub : {verify, race, simulate, exporter}) add_common(*sub, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (verify->parsed()) return cmd_verify(load(args, parse_verify), resolve_jobs(args.jobs), std::cout);
    if (race->parsed()) return cmd_race(load(args, parse_race), resolve_jobs(args.jobs), std::cout);
    if (simulate->parsed()) {
      retain_freed_memory();
      return cmd_simulate(load(args, parse_simulate), resolve_jobs(args.jobs), std::cout);
    }
    if (exporter->parsed()) return cmd_export(load(args, parse_export), std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const optinet::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace optinet::cli
