#pragma once

#include <cstdint>
#include <future>
#include <set>
#include <string>
#include <vector>

#include "vhsim/errors.hpp"
#include "vhsim/metrics.hpp"
#include "vhsim/scenario.hpp"
#include "vhsim/simulation.hpp"

namespace vhsim {

struct RunRequest {
  Mode mode = Mode::Baseline;
  std::uint64_t seed = 1;
};

/// Runs the same scenario under several modes, concurrently, and returns the
/// metrics in request order. All requests must share one seed.
inline std::vector<RunMetrics> compare_runs(const Scenario& sc, const std::vector<RunRequest>& requests) {
  if (requests.size() < 2) throw ConfigError("compare needs at least two modes");
  std::set<Mode> seen;
  for (const auto& r : requests) {
    if (r.seed != requests.front().seed) throw ConfigError("compare requires every run to use the same seed");
    if (!seen.insert(r.mode).second) throw ConfigError("mode '" + std::string(to_string(r.mode)) + "' listed twice");
  }
  std::vector<std::future<RunMetrics>> jobs;
  jobs.reserve(requests.size());
  for (const auto& r : requests)
    jobs.push_back(std::async(std::launch::async, [&sc, r] { return run_scenario(sc, r.mode, r.seed); }));
  std::vector<RunMetrics> out;
  out.reserve(jobs.size());
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

inline std::vector<RunMetrics> compare(const Scenario& sc, const std::vector<Mode>& modes, std::uint64_t seed) {
  std::vector<RunRequest> reqs;
  for (Mode m : modes) reqs.push_back({m, seed});
  return compare_runs(sc, reqs);
}

}  // namespace vhsim
