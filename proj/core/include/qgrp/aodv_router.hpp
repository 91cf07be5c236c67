#pragma once

#include "qgrp/agent.hpp"
#include "qgrp/packet.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <utility>

namespace qgrp::aodv {

struct AodvRouteEntry {
  NodeId destination = kNoNode;
  NodeId next_hop = kNoNode;
  int hop_count = 0;
  std::uint64_t dest_seq = 0;
  bool valid = false;
  double lifetime = 0.0;  // absolute expiry time
};

struct AodvSettings {
  NodeId sink = kNoNode;
  double rrep_wait = 0.5;
  int max_retries = 3;
  std::size_t buffer_capacity = 64;
  double route_lifetime = 10.0;  // refreshed whenever the route carries data
  double rerr_interval = 0.1;    // at most one error per source per interval
};

/// Simplified AODV: flooded requests, destination-only replies, no hellos.
/// Link breaks come from the neighbor oracle; errors walk back along the data trace.
class AodvRouter final : public RoutingAgent {
 public:
  AodvRouter(NodeServices& node, const AodvSettings& settings);

  void start() override {}
  void receive(const Packet& pkt, NodeId from) override;
  void on_timer(const Timer& timer) override;
  void link_failed(const Packet& pkt, NodeId next_hop) override;
  void originate(Data pkt) override;
  void add_flow(FlowId flow, double rate) override { rates_[flow] = rate; }
  double flow_rate(FlowId flow) const override;

  void handle_rreq(const AodvRreq& pkt, NodeId from);
  void handle_rrep(const AodvRrep& pkt, NodeId from);
  void handle_rerr(AodvRerr pkt, NodeId from);
  void forward_data(Data pkt);

  const std::map<NodeId, AodvRouteEntry>& routes() const { return routes_; }
  /// Valid, unexpired route to `dest`, or nullptr.
  const AodvRouteEntry* route_to(NodeId dest) const;

 private:
  struct Seen {
    int hops = 0;
    std::uint64_t reply_seq = 0;
  };

  void discover();
  void retry_or_fail();
  bool offer(NodeId dest, NodeId next_hop, int hops, std::uint64_t seq);
  void buffer(Data pkt);
  void drop(const Data& pkt, RecordCode reason);
  void report_break(const Data& pkt);

  NodeServices& node_;
  AodvSettings settings_;
  std::map<NodeId, AodvRouteEntry> routes_;
  std::map<std::pair<NodeId, std::uint32_t>, Seen> seen_;
  std::map<FlowId, double> rates_;
  std::map<NodeId, double> last_rerr_;  // per data source
  std::deque<Data> buffered_;
  std::uint64_t own_seq_ = 0;
  std::uint32_t rreq_id_ = 0;
  bool pending_ = false;
  int retries_used_ = 0;
  std::uint64_t generation_ = 0;
};

}  // namespace qgrp::aodv
