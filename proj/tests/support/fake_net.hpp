#pragma once

// In-memory network for driving routers without the simulator: instant
// delivery, a manual clock and a range-based neighbor oracle.

#include "qgrp/agent.hpp"
#include "qgrp/geometry.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace qgrp::testing {

class FakeNet;

struct Sent {
  NodeId from = kNoNode;
  NodeId to = kNoNode;  // kNoNode = broadcast
  Packet pkt;
};

struct PendingTimer {
  double at = 0.0;
  NodeId node = kNoNode;
  Timer timer;
};

class FakeNode final : public NodeServices {
 public:
  FakeNode(FakeNet& net, NodeId id, geo::Position pos) : net_(net), id_(id), pos_(pos) {}

  double now() const override;
  NodeId self() const override { return id_; }
  geo::Position position() const override { return pos_; }
  double residual_energy() const override { return residual; }
  double initial_energy() const override { return initial; }
  double idle_fraction() const override { return idle; }
  bool neighbor_alive(NodeId peer) const override;
  void unicast(NodeId next_hop, Packet pkt) override;
  void broadcast(Packet pkt) override;
  void schedule(double delay, Timer timer) override;
  double uniform(double lo, double hi) override { return 0.5 * (lo + hi); }
  void record(LogRecord rec) override;

  double residual = 40.0;
  double initial = 40.0;
  double idle = 1.0;
  bool alive = true;

 private:
  FakeNet& net_;
  NodeId id_;
  geo::Position pos_;
};

class FakeNet {
 public:
  explicit FakeNet(double range = 250.0) : range_(range) {}

  FakeNode& add(geo::Position pos) {
    const auto id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back(std::make_unique<FakeNode>(*this, id, pos));
    agents_.push_back(nullptr);
    return *nodes_.back();
  }
  void attach(NodeId id, RoutingAgent& agent) { agents_.at(id) = &agent; }
  FakeNode& node(NodeId id) { return *nodes_.at(id); }
  int size() const { return static_cast<int>(nodes_.size()); }

  double now() const { return now_; }
  double range() const { return range_; }

  bool in_range(NodeId a, NodeId b) const {
    return a != b && geo::distance(nodes_.at(a)->position(), nodes_.at(b)->position()) <= range_;
  }

  /// Delivers queued frames (and frames they trigger) until none are left.
  /// Unicasts to nodes out of range are reported back as link failures.
  int pump(int limit = 100000) {
    int n = 0;
    while (!queue_.empty() && n < limit) {
      Sent s = std::move(queue_.front());
      queue_.pop_front();
      ++n;
      if (s.to == kNoNode) {
        for (NodeId v = 0; v < size(); ++v) {
          if (in_range(s.from, v) && nodes_[v]->alive && agents_[v] != nullptr) {
            agents_[v]->receive(s.pkt, s.from);
          }
        }
        continue;
      }
      if (!in_range(s.from, s.to) || !nodes_[s.to]->alive || drop_next_) {
        drop_next_ = false;
        if (agents_[s.from] != nullptr) {
          agents_[s.from]->link_failed(s.pkt, s.to);
        }
        continue;
      }
      if (agents_[s.to] != nullptr) {
        agents_[s.to]->receive(s.pkt, s.from);
      }
    }
    return n;
  }

  /// Moves the clock forward, firing due timers in time order and pumping after each.
  void advance_to(double t) {
    for (;;) {
      auto it = std::min_element(timers_.begin(), timers_.end(),
                                 [](const auto& a, const auto& b) { return a.at < b.at; });
      if (it == timers_.end() || it->at > t) {
        break;
      }
      PendingTimer pt = *it;
      timers_.erase(it);
      now_ = pt.at;
      if (agents_[pt.node] != nullptr) {
        agents_[pt.node]->on_timer(pt.timer);
      }
      pump();
    }
    now_ = t;
  }

  /// Every node broadcasts a hello built from its current state, then frames are pumped.
  void exchange_hellos() {
    for (const auto& n : nodes_) {
      if (!n->alive) {
        continue;
      }
      Hello h;
      h.sender = n->self();
      h.position = n->position();
      h.residual_energy = n->residual;
      h.idle_fraction = n->idle;
      queue_.push_back({n->self(), kNoNode, h});
    }
    pump();
  }

  void drop_next_unicast() { drop_next_ = true; }
  void clear_sent() { sent_.clear(); }

  const std::vector<Sent>& sent() const { return sent_; }
  const std::vector<LogRecord>& records() const { return records_; }
  const std::vector<PendingTimer>& timers() const { return timers_; }

  template <class P>
  std::vector<P> sent_of(std::optional<NodeId> from = std::nullopt) const {
    std::vector<P> out;
    for (const auto& s : sent_) {
      if (const auto* p = std::get_if<P>(&s.pkt); p != nullptr && (!from || s.from == *from)) {
        out.push_back(*p);
      }
    }
    return out;
  }

  std::vector<LogRecord> records_of(EventKind kind) const {
    std::vector<LogRecord> out;
    for (const auto& r : records_) {
      if (r.kind == kind) {
        out.push_back(r);
      }
    }
    return out;
  }

 private:
  friend class FakeNode;

  double range_;
  double now_ = 0.0;
  bool drop_next_ = false;
  std::vector<std::unique_ptr<FakeNode>> nodes_;
  std::vector<RoutingAgent*> agents_;
  std::deque<Sent> queue_;
  std::vector<Sent> sent_;
  std::vector<PendingTimer> timers_;
  std::vector<LogRecord> records_;
};

inline double FakeNode::now() const { return net_.now_; }

inline bool FakeNode::neighbor_alive(NodeId peer) const {
  return net_.in_range(id_, peer) && net_.nodes_.at(peer)->alive;
}

inline void FakeNode::unicast(NodeId next_hop, Packet pkt) {
  net_.sent_.push_back({id_, next_hop, pkt});
  net_.queue_.push_back({id_, next_hop, std::move(pkt)});
}

inline void FakeNode::broadcast(Packet pkt) {
  net_.sent_.push_back({id_, kNoNode, pkt});
  net_.queue_.push_back({id_, kNoNode, std::move(pkt)});
}

inline void FakeNode::schedule(double delay, Timer timer) {
  net_.timers_.push_back({net_.now_ + delay, id_, timer});
}

inline void FakeNode::record(LogRecord rec) {
  rec.time = net_.now_;
  rec.node = id_;
  net_.records_.push_back(std::move(rec));
}

}  // namespace qgrp::testing
