#include "qgrp/aodv_router.hpp"

#include <algorithm>

namespace qgrp::aodv {

AodvRouter::AodvRouter(NodeServices& node, const AodvSettings& settings)
    : node_(node), settings_(settings) {}

double AodvRouter::flow_rate(FlowId flow) const {
  auto it = rates_.find(flow);
  return it == rates_.end() ? 0.0 : it->second;
}

const AodvRouteEntry* AodvRouter::route_to(NodeId dest) const {
  auto it = routes_.find(dest);
  if (it == routes_.end() || !it->second.valid || node_.now() > it->second.lifetime) {
    return nullptr;
  }
  return &it->second;
}

void AodvRouter::receive(const Packet& pkt, NodeId from) {
  if (const auto* p = std::get_if<AodvRreq>(&pkt)) {
    handle_rreq(*p, from);
  } else if (const auto* p = std::get_if<AodvRrep>(&pkt)) {
    handle_rrep(*p, from);
  } else if (const auto* p = std::get_if<AodvRerr>(&pkt)) {
    handle_rerr(*p, from);
  } else if (const auto* p = std::get_if<Data>(&pkt)) {
    forward_data(*p);
  }
}

// Higher sequence number wins, then fewer hops.
bool AodvRouter::offer(NodeId dest, NodeId next_hop, int hops, std::uint64_t seq) {
  const AodvRouteEntry* cur = route_to(dest);
  if (cur != nullptr && (seq < cur->dest_seq || (seq == cur->dest_seq && hops >= cur->hop_count))) {
    return false;
  }
  routes_[dest] =
      AodvRouteEntry{dest, next_hop, hops, seq, true, node_.now() + settings_.route_lifetime};
  return true;
}

void AodvRouter::handle_rreq(const AodvRreq& pkt, NodeId from) {
  const NodeId self = node_.self();
  if (pkt.source == self) {
    return;
  }
  const int hops = pkt.hop_count + 1;
  offer(pkt.source, from, hops, pkt.source_seq);

  const auto key = std::make_pair(pkt.source, pkt.rreq_id);
  auto it = seen_.find(key);
  const bool first = it == seen_.end();
  if (!first && it->second.hops <= hops) {
    return;
  }
  Seen& s = seen_[key];
  s.hops = hops;

  if (self == pkt.destination) {
    if (first) {
      own_seq_ = std::max(own_seq_ + 1, pkt.dest_seq_known);
      s.reply_seq = own_seq_;
    }
    node_.unicast(from, AodvRrep{pkt.source, self, s.reply_seq, 0});
    return;
  }
  AodvRreq fwd = pkt;
  fwd.hop_count = hops;
  node_.broadcast(fwd);
}

void AodvRouter::handle_rrep(const AodvRrep& pkt, NodeId from) {
  const int hops = pkt.hop_count + 1;
  const bool installed = offer(pkt.destination, from, hops, pkt.dest_seq);
  if (pkt.source == node_.self()) {
    if (!installed) {
      return;
    }
    LogRecord rec;
    rec.kind = EventKind::Route;
    rec.peer = from;
    rec.seq = static_cast<std::int64_t>(pkt.dest_seq);
    rec.value = hops;
    node_.record(std::move(rec));
    if (pending_) {
      pending_ = false;
      ++generation_;
      std::deque<Data> backlog;
      backlog.swap(buffered_);
      for (auto& d : backlog) {
        forward_data(std::move(d));
      }
    }
    return;
  }
  const AodvRouteEntry* back = route_to(pkt.source);
  if (back == nullptr) {
    return;
  }
  AodvRrep fwd = pkt;
  fwd.hop_count = hops;
  node_.unicast(back->next_hop, fwd);
}

void AodvRouter::handle_rerr(AodvRerr pkt, NodeId from) {
  auto it = routes_.find(pkt.destination);
  if (it != routes_.end() && it->second.next_hop == from) {
    it->second.valid = false;
  }
  if (pkt.trace.empty() || pkt.trace.back() != node_.self()) {
    return;
  }
  pkt.trace.pop_back();
  if (pkt.trace.empty()) {
    return;
  }
  const NodeId up = pkt.trace.back();
  node_.unicast(up, std::move(pkt));
}

// hop_trace ends with this node
void AodvRouter::report_break(const Data& pkt) {
  if (pkt.hop_trace.size() < 2) {
    return;
  }
  const NodeId source = pkt.hop_trace.front();
  const double now = node_.now();
  auto it = last_rerr_.find(source);
  if (it != last_rerr_.end() && now - it->second < settings_.rerr_interval) {
    return;
  }
  last_rerr_[source] = now;
  AodvRerr err{settings_.sink, {pkt.hop_trace.begin(), pkt.hop_trace.end() - 1}};
  const NodeId up = err.trace.back();
  node_.unicast(up, std::move(err));
}

void AodvRouter::discover() {
  pending_ = true;
  ++generation_;
  AodvRreq r;
  r.rreq_id = ++rreq_id_;
  r.source = node_.self();
  r.source_seq = ++own_seq_;
  r.destination = settings_.sink;
  if (auto it = routes_.find(settings_.sink); it != routes_.end()) {
    r.dest_seq_known = it->second.dest_seq;
  }
  seen_[{r.source, r.rreq_id}] = Seen{0, 0};
  node_.broadcast(r);
  node_.schedule(settings_.rrep_wait, Timer{TimerKind::DiscoveryWait, -1, generation_});
}

void AodvRouter::retry_or_fail() {
  if (retries_used_ < settings_.max_retries) {
    ++retries_used_;
    discover();
    return;
  }
  pending_ = false;
  retries_used_ = 0;
  ++generation_;
  while (!buffered_.empty()) {
    drop(buffered_.front(), RecordCode::NoRoute);
    buffered_.pop_front();
  }
}

void AodvRouter::on_timer(const Timer& timer) {
  if (timer.kind == TimerKind::DiscoveryWait && timer.generation == generation_ && pending_) {
    retry_or_fail();
  }
}

void AodvRouter::link_failed(const Packet& pkt, NodeId next_hop) {
  if (node_.neighbor_alive(next_hop)) {
    return;
  }
  for (auto& [dest, e] : routes_) {
    if (e.next_hop == next_hop) {
      e.valid = false;
    }
  }
  if (const auto* d = std::get_if<Data>(&pkt)) {
    report_break(*d);
  }
}

void AodvRouter::buffer(Data pkt) {
  if (buffered_.size() >= settings_.buffer_capacity) {
    drop(buffered_.front(), RecordCode::BufferOverflow);
    buffered_.pop_front();
  }
  buffered_.push_back(std::move(pkt));
  if (!pending_) {
    retries_used_ = 0;
    discover();
  }
}

void AodvRouter::originate(Data pkt) {
  if (route_to(settings_.sink) == nullptr) {
    buffer(std::move(pkt));
    return;
  }
  forward_data(std::move(pkt));
}

void AodvRouter::forward_data(Data pkt) {
  const NodeId self = node_.self();
  if (std::find(pkt.hop_trace.begin(), pkt.hop_trace.end(), self) != pkt.hop_trace.end()) {
    LogRecord rec;
    rec.kind = EventKind::LoopWitness;
    rec.flow = pkt.flow_id;
    rec.code = RecordCode::Data;
    rec.trace = pkt.hop_trace;
    node_.record(std::move(rec));
    drop(pkt, RecordCode::Loop);
    return;
  }
  pkt.hop_trace.push_back(self);
  if (self == settings_.sink) {
    LogRecord rec;
    rec.kind = EventKind::Deliver;
    rec.flow = pkt.flow_id;
    rec.seq = static_cast<std::int64_t>(pkt.sequence);
    rec.value = pkt.origin_timestamp;
    rec.value2 = pkt.payload_size;
    rec.trace = std::move(pkt.hop_trace);
    node_.record(std::move(rec));
    return;
  }
  auto it = routes_.find(settings_.sink);
  if (route_to(settings_.sink) == nullptr) {
    drop(pkt, RecordCode::NoRoute);
    report_break(pkt);
    return;
  }
  AodvRouteEntry& e = it->second;
  if (!node_.neighbor_alive(e.next_hop)) {
    e.valid = false;
    drop(pkt, RecordCode::LinkBroken);
    report_break(pkt);
    return;
  }
  e.lifetime = node_.now() + settings_.route_lifetime;
  LogRecord rec;
  rec.kind = EventKind::Forward;
  rec.peer = e.next_hop;
  rec.flow = pkt.flow_id;
  rec.seq = static_cast<std::int64_t>(pkt.sequence);
  rec.value = e.hop_count;
  rec.value2 = static_cast<double>(e.dest_seq);
  node_.record(std::move(rec));
  node_.unicast(e.next_hop, std::move(pkt));
}

void AodvRouter::drop(const Data& pkt, RecordCode reason) {
  LogRecord rec;
  rec.kind = EventKind::Drop;
  rec.flow = pkt.flow_id;
  rec.seq = static_cast<std::int64_t>(pkt.sequence);
  rec.code = reason;
  node_.record(std::move(rec));
}

}  // namespace qgrp::aodv
