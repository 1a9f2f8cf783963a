// Command-line front end: run configs and presets, validate configs.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "cxlsim/system/config.hpp"
#include "cxlsim/system/experiments.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kSimulationError = 3;

void report(const std::vector<cxlsim::RunSummary>& runs) {
  for (const auto& r : runs) {
    std::printf("%-28s seed %-4llu bw %8.4f x  mean %10.2f ns  max %8llu ns\n", r.label.c_str(),
                static_cast<unsigned long long>(r.seed), r.normalized_bandwidth, r.mean_latency,
                static_cast<unsigned long long>(r.max_latency));
  }
}

int execute(cxlsim::Experiment e, const std::string& out, unsigned jobs, bool quiet) {
  std::string dir = out;
  if (dir.empty()) dir = e.points.empty() ? "out" : e.points.front().config.output_dir;
  const auto runs = cxlsim::run_experiment(e, jobs);
  cxlsim::write_outputs(dir, runs);
  if (!quiet) report(runs);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cxlsim: discrete-event simulator for CXL-style memory fabrics"};
  app.require_subcommand(1);

  std::string format = "csv";
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv"}));

  std::string config_path, out_dir, preset_name;
  unsigned jobs = 1;
  bool quiet = false;
  cxlsim::PresetOptions opts;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> repeat;

  auto* run = app.add_subcommand("run", "Run a config file (system config or preset reference)");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("--out", out_dir, "Output directory (default: config output_dir)");
  run->add_option("--seed", seed, "Override the seed");
  run->add_option("--repeat", repeat, "Override the repeat count");
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--quiet", quiet, "No per-run lines on stdout");

  auto* preset = app.add_subcommand("preset", "Run a built-in experiment");
  preset->add_option("name", preset_name, "Preset name")->required();
  preset->add_option("--scale", opts.scale, "Requesters + endpoints");
  preset->add_option("--seed", opts.seed, "Seed of the first repetition");
  preset->add_option("--repeat", opts.repeat, "Runs per point (seed, seed+1, ...)");
  preset->add_option("--out", opts.output_dir, "Output directory");
  preset->add_option("--bisection", opts.bisection_target, "iso_bisection target, bytes per ns");
  preset->add_option("--requests", opts.requests, "Measured requests per requester");
  preset->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  preset->add_flag("--quiet", quiet, "No per-run lines on stdout");

  auto* validate = app.add_subcommand("validate", "Check a config file without running it");
  validate->add_option("config", config_path, "Config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*validate) {
      const auto e = cxlsim::load_experiment(config_path);
      for (const auto& p : e.points) {
        // Building the fabric catches topology errors the schema cannot.
        cxlsim::build_graph(cxlsim::topology_spec(p.config));
      }
      std::printf("%s: ok (%zu point%s)\n", config_path.c_str(), e.points.size(), e.points.size() == 1 ? "" : "s");
      return kOk;
    }
    if (*run) {
      auto e = cxlsim::load_experiment(config_path);
      for (auto& p : e.points) {
        if (seed) p.config.seed = *seed;
        if (repeat) p.config.repeat = *repeat;
      }
      return execute(std::move(e), out_dir, jobs, quiet);
    }
    return execute(cxlsim::make_preset(preset_name, opts), opts.output_dir, jobs, quiet);
  } catch (const cxlsim::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const cxlsim::SimulationError& e) {
    std::fprintf(stderr, "simulation error: %s\n", e.what());
    return kSimulationError;
  }
}
