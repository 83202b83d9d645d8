// Command-line driver: run, compare and validate scenarios.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vhsim.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;

vhsim::Mode mode_or_throw(const std::string& text) {
  auto m = vhsim::parse_mode(text);
  if (!m)
    throw vhsim::ConfigError("unknown mode '" + text + "' (valid modes: " + std::string(vhsim::kValidModes) + ")");
  return *m;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw vhsim::ConfigError("cannot write '" + path + "'");
  return out;
}

int cmd_run(const std::string& scenario_path, const std::string& mode_text, std::optional<std::uint64_t> seed,
            const std::string& metrics_path, const std::string& trace_path) {
  const vhsim::Scenario sc = vhsim::load_scenario(scenario_path);
  const vhsim::Mode mode = mode_text.empty() ? sc.sim.mode : mode_or_throw(mode_text);
  const std::uint64_t s = seed.value_or(sc.sim.seed);

  std::ofstream trace_file;
  if (!trace_path.empty()) trace_file = open_out(trace_path);
  const vhsim::RunMetrics m = vhsim::run_scenario(sc, mode, s, trace_path.empty() ? nullptr : &trace_file);

  if (metrics_path.empty()) {
    vhsim::write_metrics_csv(std::cout, {m});
  } else {
    auto out = open_out(metrics_path);
    vhsim::write_metrics_csv(out, {m});
  }
  return kExitOk;
}

int cmd_compare(const std::string& scenario_path, const std::vector<std::string>& mode_texts,
                std::optional<std::uint64_t> seed, const std::string& out_path) {
  const vhsim::Scenario sc = vhsim::load_scenario(scenario_path);
  std::vector<vhsim::Mode> modes;
  for (const auto& t : mode_texts) modes.push_back(mode_or_throw(t));
  const auto runs = vhsim::compare(sc, modes, seed.value_or(sc.sim.seed));
  if (out_path.empty()) {
    vhsim::write_metrics_csv(std::cout, runs);
  } else {
    auto out = open_out(out_path);
    vhsim::write_metrics_csv(out, runs);
  }
  return kExitOk;
}

int cmd_validate(const std::string& scenario_path, bool canonical) {
  const vhsim::Scenario sc = vhsim::load_scenario(scenario_path);
  if (canonical) std::cout << vhsim::to_canonical(sc);
  else std::cout << scenario_path << ": ok\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vertical handover TCP simulator"};
  app.require_subcommand(1);

  std::string scenario, mode, metrics, trace, out;
  std::vector<std::string> modes;
  std::optional<std::uint64_t> seed;
  bool canonical = false;

  auto* run = app.add_subcommand("run", "Run one scenario");
  run->add_option("--scenario", scenario, "Scenario file")->required();
  run->add_option("--mode", mode, "baseline | proactive | reset-cwnd (default: scenario's mode)");
  run->add_option("--seed", seed, "Random seed (default: scenario's seed)");
  run->add_option("--metrics", metrics, "Metrics CSV output (default: stdout)");
  run->add_option("--trace", trace, "Event trace output");

  auto* cmp = app.add_subcommand("compare", "Run one scenario under several modes");
  cmp->add_option("--scenario", scenario, "Scenario file")->required();
  cmp->add_option("--modes", modes, "Comma-separated modes")->required()->delimiter(',');
  cmp->add_option("--seed", seed, "Random seed shared by every run");
  cmp->add_option("--out", out, "Comparison CSV output (default: stdout)");

  auto* val = app.add_subcommand("validate", "Check a scenario file");
  val->add_option("--scenario", scenario, "Scenario file")->required();
  val->add_flag("--canonical", canonical, "Print the canonical form");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(scenario, mode, seed, metrics, trace);
    if (*cmp) return cmd_compare(scenario, modes, seed, out);
    return cmd_validate(scenario, canonical);
  } catch (const vhsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const vhsim::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInvariant;
  }
}
