#pragma once

#include "qgrp/dcf_model.hpp"
#include "qgrp/geometry.hpp"
#include "qgrp/types.hpp"

#include <deque>
#include <span>
#include <utility>
#include <vector>

namespace qgrp::link {

/// Passive per-link available bandwidth B_{U,V}.
struct LinkEstimate {
  NodeId peer = kNoNode;
  double available_bandwidth = 0.0;  // bit/s
  double p_c_used = 0.0;
  double last_update = 0.0;
};

struct ChannelObservation {
  double window = 1.0;  // seconds
  double local_idle_fraction = 1.0;
  double peer_idle_fraction = 1.0;
};

/// b_no * idle_local * idle_peer * (1 - p_c) * (1 - backoff_overhead), in [0, b_no].
double estimate_bandwidth(const ChannelObservation& obs, double p_c, double b_no,
                          double backoff_overhead);

/// Expected backoff slots per delivered frame: sum_{i=0..m} p_c^i (CW_i - 1) / 2
/// with CW_i = min(CW_min 2^i, CW_max). Requires 0 <= p_c < 1.
double expected_backoff_slots(double p_c, const dcf::DcfParams& params);

/// Fraction of channel time spent in backoff: E[B] T_v / (V + E[B] T_v).
double average_backoff_overhead(double p_c, const dcf::DcfParams& params);

/// What a node has learned about one neighbor from its hellos.
struct NeighborObservation {
  NodeId peer = kNoNode;
  geo::Position position;
  double idle_fraction = 1.0;
  double last_heard = 0.0;
};

struct EstimatorSettings {
  double b_no = 2e6;
  double tx_range = 250.0;
  double hello_expiry = 3.0;  // seconds without a hello before a neighbor is dropped
  double window = 1.0;
};

/// Rebuilds the estimate set for every fresh in-range neighbor. P_c per link
/// comes from the collision table at the sender/receiver distance.
std::vector<LinkEstimate> refresh_estimates(std::span<const NeighborObservation> neighbors,
                                            double local_idle_fraction, const geo::Position& self,
                                            double now, const dcf::CollisionTable& table,
                                            double density_per_km2,
                                            const dcf::DcfParams& params,
                                            const EstimatorSettings& settings);

/// Sliding-window record of when a node's medium was busy (transmitting,
/// receiving, or sensing a neighbor's transmission).
class BusyTracker {
 public:
  explicit BusyTracker(double window = 1.0) : window_(window) {}

  /// Marks [start, end) busy. `now` is the time the reservation is made and is
  /// used to discard intervals that can no longer fall inside any window.
  void add_busy(double now, double start, double end);

  /// Idle share of [max(0, now - window), now].
  double idle_fraction(double now) const;

  double window() const { return window_; }

 private:
  double window_;
  std::deque<std::pair<double, double>> intervals_;
};

}  // namespace qgrp::link
