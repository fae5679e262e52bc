// Single-worker throughput of sweep trials, in agent-ticks per millisecond.

#include <chrono>
#include <iomanip>
#include <iostream>
#include <string>

#include "swarmsim/config_io.hpp"
#include "swarmsim/sweep.hpp"

using namespace swarmsim;

int main(int argc, char** argv) {
  const std::uint64_t ticks = argc > 1 ? std::stoull(argv[1]) : 5455;
  std::cout << std::setw(6) << "N" << std::setw(12) << "sensing" << std::setw(16) << "agent-ticks/ms" << '\n';
  for (std::uint32_t n : {6U, 12U, 20U}) {
    for (const auto method : {SensingMethod::Grid, SensingMethod::BruteForce}) {
      RunConfig rc = parse_run_config_text(
          R"({"n_agents": )" + std::to_string(n) +
          R"(, "spawn": {"width_m": 3, "height_m": 3}, "controller": {"law": "milling", "v_m_s": 0.25, "omega_deg_s": 45}})");
      rc.world.sensing = method;
      double best = 0.0;
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        rc.world.seed = seed;
        const auto start = std::chrono::steady_clock::now();
        const TrialResult r = run_trial(rc.world, ticks, rc.classifier);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        if (!r.label) {
          std::cerr << "trial failed: " << r.error << '\n';
          return 1;
        }
        best = std::max(best, static_cast<double>(ticks) * n / ms);
      }
      std::cout << std::setw(6) << n << std::setw(12) << (method == SensingMethod::Grid ? "grid" : "brute")
                << std::setw(16) << std::fixed << std::setprecision(0) << best << '\n';
    }
  }
}
