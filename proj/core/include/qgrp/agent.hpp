#pragma once

#include "qgrp/event_log.hpp"
#include "qgrp/geometry.hpp"
#include "qgrp/packet.hpp"
#include "qgrp/types.hpp"

#include <cstdint>

namespace qgrp {

enum class TimerKind : std::uint8_t { Hello, RrepWait, RetryBackoff, DiscoveryWait };

struct Timer {
  TimerKind kind = TimerKind::Hello;
  FlowId flow = -1;
  std::uint64_t generation = 0;
};

/// What the simulator exposes to the routing layer of one node.
class NodeServices {
 public:
  virtual ~NodeServices() = default;

  virtual double now() const = 0;
  virtual NodeId self() const = 0;
  virtual geo::Position position() const = 0;
  virtual double residual_energy() const = 0;
  virtual double initial_energy() const = 0;

  /// Idle share of the local medium over the observation window.
  virtual double idle_fraction() const = 0;

  /// Alive and within transmission range right now (connectivity oracle).
  virtual bool neighbor_alive(NodeId peer) const = 0;

  virtual void unicast(NodeId next_hop, Packet pkt) = 0;
  virtual void broadcast(Packet pkt) = 0;
  virtual void schedule(double delay, Timer timer) = 0;

  /// Uniform draw from the node's jitter stream.
  virtual double uniform(double lo, double hi) = 0;

  /// Appends a protocol event; time and node are filled in by the caller.
  virtual void record(LogRecord rec) = 0;
};

/// Per-node routing protocol instance driven by the simulator's dispatch.
class RoutingAgent {
 public:
  virtual ~RoutingAgent() = default;

  virtual void start() = 0;
  virtual void receive(const Packet& pkt, NodeId from) = 0;
  virtual void on_timer(const Timer& timer) = 0;

  /// The MAC gave up on `pkt` after exhausting its retries toward `next_hop`.
  virtual void link_failed(const Packet& pkt, NodeId next_hop) = 0;

  /// A locally generated application packet.
  virtual void originate(Data pkt) = 0;

  /// Registers a flow sourced at this node.
  virtual void add_flow(FlowId flow, double rate) = 0;

  /// Rate the application should currently emit at for a local flow.
  virtual double flow_rate(FlowId flow) const = 0;
};

}  // namespace qgrp
