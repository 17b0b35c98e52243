#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "tauclock/scenario.hpp"

namespace {

int fail(tauclock::ErrorKind kind, const std::string& field, const std::string& message) {
  std::cerr << tauclock::error_line(kind, field, message) << '\n';
  return 2;
}

int run(const std::string& subcommand, const std::string& config_path, const std::string& out_prefix) {
  using namespace tauclock;
  json raw;
  try {
    raw = load_config_file(config_path);
  } catch (const Error& e) {
    return fail(e.kind(), "-", e.what());
  }
  const auto result = validate_config(raw);
  if (!result.ok()) {
    for (const auto& e : result.errors) std::cerr << error_line(e.kind, e.field, e.message) << '\n';
    return 2;
  }
  const ScenarioConfig& cfg = *result.config;
  if (subcommand == "validate") {
    std::cout << cfg.echo.dump(2) << '\n';
    return 0;
  }
  if (to_string(cfg.kind) != subcommand)
    return fail(ErrorKind::invalid_input, "kind",
                "config kind is " + to_string(cfg.kind) + " but subcommand is " + subcommand);
  try {
    const auto output = run_scenario(cfg);
    const std::string prefix = out_prefix.empty() ? cfg.output : out_prefix;
    for (const auto& [suffix, content] : output.files) write_text_file(prefix + suffix, content);
    std::cout << output.summary;
    return 0;
  } catch (const ScenarioError& e) {
    return fail(e.kind(), e.field(), e.what());
  } catch (const Error& e) {
    return fail(e.kind(), "-", e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traversal-time amplitudes and Larmor clocks for 1D tunnelling"};
  app.require_subcommand(1);
  app.footer(std::string("Environment: ") + tauclock::kThreadsEnv + " caps the number of worker threads.");

  std::string config_path;
  std::string out_prefix;
  const char* const subcommands[][2] = {
      {"taudist", "Traversal-time amplitude distribution and complex time"},
      {"clock", "Spin-j Larmor clock readouts over a list of field strengths"},
      {"interferometer", "Two-arm interferometer: weak mean time and phase sweep"},
      {"oracle", "Lattice path-sum vs lambda-Fourier equivalence report"},
      {"validate", "Validate a config and print it with defaults filled in"},
  };
  for (const auto& sc : subcommands) {
    auto* sub = app.add_subcommand(sc[0], sc[1]);
    sub->add_option("--config", config_path, "Scenario JSON file")->required();
    if (std::string(sc[0]) != "validate")
      sub->add_option("--out", out_prefix, "Output path prefix (default: the config's output field)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  return run(app.get_subcommands().front()->get_name(), config_path, out_prefix);
}
