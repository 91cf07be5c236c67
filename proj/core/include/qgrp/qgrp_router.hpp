#pragma once

#include "qgrp/agent.hpp"
#include "qgrp/dcf_model.hpp"
#include "qgrp/geometry.hpp"
#include "qgrp/link_estimation.hpp"
#include "qgrp/packet.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace qgrp::proto {

struct NodeEnergy {
  double residual = 0.0;
  double initial = 1.0;
};

/// alpha weighs bandwidth, beta residual energy; alpha + beta = 1.
struct MetricWeights {
  double alpha = 0.7;
  double beta = 0.3;

  void validate() const;
};

struct RouteEntry {
  NodeId destination = kNoNode;
  NodeId next_hop = kNoNode;
  std::uint64_t dest_seq = 0;
  double path_bandwidth = 0.0;
  double established_at = 0.0;
  bool valid = false;
};

/// Strict freshness order: higher sequence number, or the same sequence
/// number with strictly higher path bandwidth.
bool is_fresher(std::uint64_t seq, double bandwidth, std::uint64_t than_seq, double than_bandwidth);

enum class SourcePolicy { Retry, Reduce };

struct FlowState {
  FlowId flow_id = -1;
  double required_bandwidth = 0.0;
  bool admitted = false;
  bool failed = false;
  bool pending = false;  // a request or retry is outstanding
  std::deque<Data> buffered_packets;
  int rreq_retries_used = 0;
  int attempts = 0;  // retry_index of the next request; never reused within a flow
  double next_retry_at = 0.0;
  double admitted_at = 0.0;
  double min_notified = -1.0;  // smallest grantable bandwidth reported so far (< 0: none yet)
  std::uint64_t generation = 0;
};

/// A neighbor as seen by the forwarding decision.
struct Candidate {
  NodeId id = kNoNode;
  geo::Position position;
  double available_bandwidth = 0.0;
  NodeEnergy energy;
};

struct LocalView {
  geo::Position self_pos;
  geo::Position sink_pos;
  std::vector<Candidate> neighbors;
};

class MissingEstimate : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Neighbors with forward progress toward the sink and enough bandwidth.
/// A neighbor sitting exactly on the node is skipped.
std::vector<NodeId> forwarder_set(const LocalView& view, double required_bandwidth);

/// [alpha B/B_no + beta E/E_in] / (max(r, 1 m) * max(theta, 0.01 rad)).
double link_metric(const LocalView& view, NodeId candidate, const MetricWeights& weights,
                   double b_no);

/// Argmax of the metric over the forwarder set; ties go to the lowest id.
std::optional<NodeId> select_next_hop(const LocalView& view, double required_bandwidth,
                                      const MetricWeights& weights, double b_no);

/// Largest bandwidth any forward-progress neighbor could carry (0 if none).
double max_grantable_bandwidth(const LocalView& view);

inline constexpr double kMinMetricDistance = 1.0;
inline constexpr double kMinMetricAngle = 0.01;

struct QgrpSettings {
  MetricWeights weights;
  double b_no = 2e6;
  double tx_range = 250.0;
  double hello_interval = 1.0;
  double hello_jitter = 0.1;
  int hello_expiry_intervals = 3;
  double observation_window = 1.0;
  double rrep_wait = 0.5;
  int max_retries = 3;
  double retry_backoff = 0.5;
  std::size_t buffer_capacity = 64;
  SourcePolicy policy = SourcePolicy::Retry;
  double reservation_timeout = 3.0;
  double route_lifetime = 10.0;
  double density_per_km2 = 100.0;
  dcf::DcfParams dcf;
  NodeId sink = kNoNode;
  geo::Position sink_pos;
};

/// One node's QGRP state machine.
class QgrpRouter final : public RoutingAgent {
 public:
  QgrpRouter(NodeServices& node, const QgrpSettings& settings, const dcf::CollisionTable& table);

  void start() override;
  void receive(const Packet& pkt, NodeId from) override;
  void on_timer(const Timer& timer) override;
  void link_failed(const Packet& pkt, NodeId next_hop) override;
  void originate(Data pkt) override;
  void add_flow(FlowId flow, double rate) override;
  double flow_rate(FlowId flow) const override;

  void handle_hello(const Hello& hello);
  void handle_rreq(const Rreq& pkt, NodeId from);
  void handle_rrep(const Rrep& pkt, NodeId from);
  void handle_admission_notify(const AdmissionNotify& pkt);
  void rreq_retry_timer(FlowId flow);
  void forward_data(Data pkt);

  /// Current view: fresh neighbors with bandwidth net of local reservations.
  /// `own`'s reservation is not counted against itself.
  LocalView local_view(FlowId own = -1);
  std::vector<link::LinkEstimate> link_estimates();

  const std::map<NodeId, RouteEntry>& routes() const { return routes_; }
  const std::map<FlowId, FlowState>& flows() const { return flows_; }
  std::optional<NodeId> flow_next_hop(FlowId flow) const;
  double reserved_on(NodeId next_hop, FlowId except = -1) const;
  std::uint64_t own_seq() const { return own_seq_; }
  int loop_witnesses() const { return loop_witnesses_; }

  /// Test hooks.
  void set_route(const RouteEntry& entry) { routes_[entry.destination] = entry; }

 private:
  struct NeighborRecord {
    geo::Position position;
    double residual_energy = 0.0;
    double idle_fraction = 1.0;
    double last_heard = 0.0;
  };
  struct FlowRoute {
    NodeId next_hop = kNoNode;
    double rate = 0.0;
    double last_used = 0.0;
    bool valid = false;
  };

  bool is_sink() const { return node_.self() == settings_.sink; }
  bool neighbor_fresh(NodeId peer) const;
  double hello_expiry() const;
  double link_estimate_to(NodeId peer);
  void purge_reservations();
  void release(FlowId flow, FlowRoute& route);
  bool commit(FlowId flow, NodeId next_hop, double rate, int retry_index);
  void send_rreq(FlowId flow);
  void source_rejected(FlowId flow, double max_grantable, NodeId rejecting, int retry_index);
  void fail_flow(FlowId flow);
  void admit(FlowId flow, const Rrep& pkt);
  void restart_flow(FlowId flow);
  void invalidate_next_hop(NodeId next_hop);
  void drop(const Data& pkt, RecordCode reason);
  void note_loop(FlowId flow, RecordCode code, const std::vector<NodeId>& trace);

  NodeServices& node_;
  QgrpSettings settings_;
  const dcf::CollisionTable& table_;

  std::map<NodeId, NeighborRecord> neighbors_;
  std::map<NodeId, RouteEntry> routes_;
  std::map<FlowId, FlowRoute> flow_routes_;
  std::map<FlowId, FlowState> flows_;
  std::uint64_t own_seq_ = 0;
  std::uint64_t hello_seq_ = 0;
  int loop_witnesses_ = 0;
};

}  // namespace qgrp::proto
