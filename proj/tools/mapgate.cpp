#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mapgate/config.hpp"
#include "mapgate/errors.hpp"
#include "mapgate/runner.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> shots;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON configuration file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "seed for finite-shot sampling");
  cmd->add_option("--shots", o.shots, "shots per measurement, or inf");
}

mapgate::ExperimentConfig resolve(const Overrides& o, std::optional<mapgate::Experiment> experiment) {
  mapgate::ExperimentConfig c = mapgate::load_config(o.config);
  if (experiment) {
    if (c.experiment && *c.experiment != *experiment) {
      throw mapgate::ConfigError("config selects experiment " + mapgate::to_string(*c.experiment) +
                                 " but the subcommand is " + mapgate::to_string(*experiment));
    }
    c.experiment = experiment;
  }
  if (o.out) c.output_directory = *o.out;
  if (o.workers) c.workers = *o.workers;
  if (o.seed) c.seed = *o.seed;
  if (o.shots) {
    if (*o.shots == "inf") {
      c.shots.reset();
    } else {
      try {
        std::size_t used = 0;
        const unsigned long long n = std::stoull(*o.shots, &used);
        if (used != o.shots->size() || n == 0) throw std::invalid_argument("shots");
        c.shots = n;
      } catch (const std::logic_error&) {
        throw mapgate::ConfigError("--shots expects a positive integer or inf, got '" + *o.shots + "'");
      }
    }
  }
  return c;
}

void print_problems(const mapgate::ConfigError& e) {
  if (e.problems().empty()) {
    std::cerr << "config error: " << e.what() << "\n";
    return;
  }
  std::cerr << "config error (" << e.problems().size() << "):\n";
  for (const auto& p : e.problems()) std::cerr << "  " << p << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pulse-level simulation and tune-up of a microwave-activated conditional-phase gate"};
  app.require_subcommand(1);

  Overrides overrides;
  std::optional<mapgate::Experiment> chosen;
  bool validate_only = false;
  for (auto e : {mapgate::Experiment::Spectroscopy, mapgate::Experiment::RamseyDirect,
                 mapgate::Experiment::RamseyRefocused, mapgate::Experiment::Sweep, mapgate::Experiment::PertCompare,
                 mapgate::Experiment::Qpt}) {
    CLI::App* cmd = app.add_subcommand(mapgate::to_string(e), "run the " + mapgate::to_string(e) + " experiment");
    add_common(cmd, overrides);
    cmd->callback([&chosen, e] { chosen = e; });
  }
  CLI::App* check = app.add_subcommand("validate", "check a config without running it");
  add_common(check, overrides);
  check->callback([&validate_only] { validate_only = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const mapgate::ExperimentConfig config = resolve(overrides, chosen);
    if (validate_only) {
      const auto problems = mapgate::validate(config);
      if (!problems.empty()) throw mapgate::ConfigError(problems);
      std::cout << "ok\n";
      return 0;
    }
    const mapgate::RunManifest manifest = mapgate::run(config);
    for (const auto& w : manifest.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << manifest.experiment << ": " << manifest.files.size() << " files in " << manifest.directory.string()
              << "\n";
    return 0;
  } catch (const mapgate::ConfigError& e) {
    print_problems(e);
    return 2;
  } catch (const mapgate::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
