#pragma once

#include "qgrp/config.hpp"
#include "qgrp/dcf_model.hpp"
#include "qgrp/event_log.hpp"
#include "qgrp/geometry.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace qgrp::sim {

/// splitmix64 finalizer; derives independent stream seeds from one run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct Topology {
  std::vector<geo::Position> positions;
  NodeId sink = kNoNode;
  double field = 0.0;
  double tx_range = 0.0;

  int size() const { return static_cast<int>(positions.size()); }
  /// Connectivity graph: u ~ v iff distance <= tx_range. Lists are sorted.
  std::vector<std::vector<NodeId>> adjacency() const;
};

/// n uniform positions in [0, field]² and a uniformly chosen sink.
Topology generate_topology(int n, double field, double tx_range, std::uint64_t seed);

/// Hop distances from `from` (-1 where unreachable).
std::vector<int> bfs_hops(const Topology& topo, NodeId from);

/// First-order radio model.
double tx_energy(double bits, double distance, const RadioConfig& radio);
double rx_energy(double bits, const RadioConfig& radio);

/// E[B] T_v / (1 - p_c): mean backoff time spent before a successful attempt.
double contention_delay(double p_c, const dcf::DcfParams& params);

/// bits / b_no + contention_delay(p_c).
double airtime(double bits, double b_no, double p_c, const dcf::DcfParams& params);

/// Independent per-attempt loss draws.
class LossChannel {
 public:
  explicit LossChannel(std::uint64_t seed) : rng_(seed) {}
  bool lost(double p_c) { return p_c > 0.0 && unit_(rng_) < p_c; }

 private:
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

struct FlowPlan {
  FlowId id = -1;
  NodeId source = kNoNode;
  FlowConfig config;
};

/// Sources are distinct non-sink nodes drawn from the run seed.
std::vector<FlowPlan> plan_flows(const Topology& topo, const std::vector<FlowConfig>& flows,
                                 std::uint64_t seed);

/// The collision table a scenario runs with.
dcf::CollisionTable scenario_table(const ScenarioConfig& config);

struct RunResult {
  Topology topology;
  std::vector<FlowPlan> flows;
  EventLog log;
};

/// One deterministic run seeded by config.topology.seed. Throws
/// ConfigValidationError before any event executes if the config is invalid.
RunResult run(const ScenarioConfig& config);

}  // namespace qgrp::sim
