#pragma once

#include "qgrp/config.hpp"
#include "qgrp/metrics.hpp"
#include "qgrp/simulator.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace qgrp::exp {

struct RunSpec {
  Protocol protocol = Protocol::Qgrp;
  int nodes = 0;
  std::uint64_t seed = 0;
};

struct RunOutcome {
  RunSpec spec;
  metrics::RunMetrics metrics;
  sim::RunResult result;  // log dropped unless kept
  std::string error;      // non-empty if the run threw
};

/// Repetition r of a size uses seed base + r.
std::vector<RunSpec> grid(const std::vector<Protocol>& protocols, const std::vector<int>& sizes,
                          std::uint64_t base_seed, int repetitions);

/// Config for one grid point.
ScenarioConfig specialize(const ScenarioConfig& base, const RunSpec& spec);

/// Runs every spec on `jobs` threads. Results come back in spec order.
std::vector<RunOutcome> execute(const ScenarioConfig& base, const std::vector<RunSpec>& specs,
                                int jobs, bool keep_logs);

struct OutputOptions {
  std::filesystem::path dir;
  bool write_logs = false;
  int jobs = 1;
};

/// Writes runs.csv (per-run rows plus seed=avg rows), summary.csv, one
/// plot_<metric>.csv per metric and, on request, logs/. Failed runs go to
/// failures.txt. Returns 0, or 1 if any run failed.
int write_outputs(const std::vector<RunOutcome>& outcomes, const std::vector<Protocol>& protocols,
                  const std::vector<int>& sizes, const OutputOptions& opts);

/// `run`: the configured protocol at the configured size, `repetitions` seeds.
int run_experiment(const ScenarioConfig& config, const OutputOptions& opts);

/// `compare`: both protocols over experiment.sizes.
int compare(const ScenarioConfig& config, const OutputOptions& opts);

/// Solves the collision table and writes its CSV. Returns 1 on solver failure.
int solve_dcf_command(const dcf::DcfParams& params, dcf::CollisionModel model,
                      const std::vector<double>& densities, const std::vector<double>& distances,
                      const std::filesystem::path& output);

}  // namespace qgrp::exp
