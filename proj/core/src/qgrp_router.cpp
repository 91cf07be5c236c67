#include "qgrp/qgrp_router.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace qgrp::proto {

namespace {

bool on_trace(const std::vector<NodeId>& trace, NodeId id) {
  return std::find(trace.begin(), trace.end(), id) != trace.end();
}

const Candidate* find_candidate(const LocalView& view, NodeId id) {
  for (const auto& c : view.neighbors) {
    if (c.id == id) {
      return &c;
    }
  }
  return nullptr;
}

bool forward_progress(const LocalView& view, const Candidate& c) {
  if (c.position == view.self_pos) {
    return false;
  }
  if (view.self_pos == view.sink_pos) {
    return true;
  }
  return geo::is_forward_progress({view.self_pos, c.position, view.sink_pos});
}

}  // namespace

void MetricWeights::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0 && beta >= 0.0 && beta <= 1.0)) {
    throw std::invalid_argument("metric weights must lie in [0, 1]");
  }
  if (std::abs(alpha + beta - 1.0) > 1e-12) {
    throw std::invalid_argument(fmt::format("alpha + beta must equal 1 (got {})", alpha + beta));
  }
}

bool is_fresher(std::uint64_t seq, double bandwidth, std::uint64_t than_seq,
                double than_bandwidth) {
  return seq > than_seq || (seq == than_seq && bandwidth > than_bandwidth);
}

std::vector<NodeId> forwarder_set(const LocalView& view, double required_bandwidth) {
  std::vector<NodeId> out;
  for (const auto& c : view.neighbors) {
    if (forward_progress(view, c) && c.available_bandwidth >= required_bandwidth) {
      out.push_back(c.id);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

double link_metric(const LocalView& view, NodeId candidate, const MetricWeights& weights,
                   double b_no) {
  const Candidate* c = find_candidate(view, candidate);
  if (c == nullptr) {
    throw MissingEstimate(fmt::format("no link or energy data for neighbor {}", candidate));
  }
  const double r = geo::distance(c->position, view.sink_pos);
  double theta = 0.0;
  if (!(view.self_pos == view.sink_pos) && !(c->position == view.self_pos)) {
    theta = geo::deviation_angle({view.self_pos, c->position, view.sink_pos});
  }
  const double gain = weights.alpha * (c->available_bandwidth / b_no) +
                      weights.beta * (c->energy.residual / c->energy.initial);
  return gain / (std::max(r, kMinMetricDistance) * std::max(theta, kMinMetricAngle));
}

std::optional<NodeId> select_next_hop(const LocalView& view, double required_bandwidth,
                                      const MetricWeights& weights, double b_no) {
  std::optional<NodeId> best;
  double best_score = -std::numeric_limits<double>::infinity();
  // forwarder_set is sorted by id, so strict '>' keeps the lowest id on ties.
  for (NodeId id : forwarder_set(view, required_bandwidth)) {
    const double score = link_metric(view, id, weights, b_no);
    if (score > best_score) {
      best_score = score;
      best = id;
    }
  }
  return best;
}

double max_grantable_bandwidth(const LocalView& view) {
  double best = 0.0;
  for (const auto& c : view.neighbors) {
    if (forward_progress(view, c)) {
      best = std::max(best, c.available_bandwidth);
    }
  }
  return best;
}

QgrpRouter::QgrpRouter(NodeServices& node, const QgrpSettings& settings,
                       const dcf::CollisionTable& table)
    : node_(node), settings_(settings), table_(table) {
  settings_.weights.validate();
}

void QgrpRouter::start() {
  node_.schedule(node_.uniform(0.0, settings_.hello_interval), Timer{TimerKind::Hello, -1, 0});
}

void QgrpRouter::receive(const Packet& pkt, NodeId from) {
  if (const auto* p = std::get_if<Hello>(&pkt)) {
    handle_hello(*p);
  } else if (const auto* p = std::get_if<Rreq>(&pkt)) {
    handle_rreq(*p, from);
  } else if (const auto* p = std::get_if<Rrep>(&pkt)) {
    handle_rrep(*p, from);
  } else if (const auto* p = std::get_if<AdmissionNotify>(&pkt)) {
    handle_admission_notify(*p);
  } else if (const auto* p = std::get_if<Data>(&pkt)) {
    forward_data(*p);
  }
}

void QgrpRouter::on_timer(const Timer& timer) {
  switch (timer.kind) {
    case TimerKind::Hello: {
      Hello h;
      h.sender = node_.self();
      h.position = node_.position();
      h.residual_energy = node_.residual_energy();
      h.idle_fraction = node_.idle_fraction();
      h.seq = ++hello_seq_;
      node_.broadcast(h);
      const double j = settings_.hello_jitter;
      node_.schedule(settings_.hello_interval * node_.uniform(1.0 - j, 1.0 + j), timer);
      break;
    }
    case TimerKind::RrepWait: {
      auto it = flows_.find(timer.flow);
      if (it != flows_.end() && it->second.generation == timer.generation) {
        rreq_retry_timer(timer.flow);
      }
      break;
    }
    case TimerKind::RetryBackoff: {
      auto it = flows_.find(timer.flow);
      if (it != flows_.end() && it->second.generation == timer.generation &&
          !it->second.admitted && !it->second.failed) {
        send_rreq(timer.flow);
      }
      break;
    }
    case TimerKind::DiscoveryWait:
      break;
  }
}

// A frame that ran out of MAC retries only breaks the link once hellos stop too.
void QgrpRouter::link_failed(const Packet&, NodeId next_hop) {
  if (!neighbor_fresh(next_hop)) {
    invalidate_next_hop(next_hop);
  }
}

void QgrpRouter::add_flow(FlowId flow, double rate) {
  FlowState f;
  f.flow_id = flow;
  f.required_bandwidth = rate;
  flows_[flow] = std::move(f);
}

double QgrpRouter::flow_rate(FlowId flow) const {
  auto it = flows_.find(flow);
  return it == flows_.end() ? 0.0 : it->second.required_bandwidth;
}

void QgrpRouter::originate(Data pkt) {
  auto it = flows_.find(pkt.flow_id);
  if (it == flows_.end()) {
    forward_data(std::move(pkt));
    return;
  }
  FlowState& f = it->second;
  if (f.failed) {
    drop(pkt, RecordCode::FlowFailed);
    return;
  }
  if (f.admitted) {
    // routes are soft state: re-request once the admitted route gets old
    if (!f.pending && node_.now() - f.admitted_at >= settings_.route_lifetime) {
      f.rreq_retries_used = 0;
      send_rreq(f.flow_id);
    }
    forward_data(std::move(pkt));
    return;
  }
  if (f.buffered_packets.size() >= settings_.buffer_capacity) {
    drop(f.buffered_packets.front(), RecordCode::BufferOverflow);
    f.buffered_packets.pop_front();
  }
  f.buffered_packets.push_back(std::move(pkt));
  if (!f.pending) {
    send_rreq(f.flow_id);
  }
}

void QgrpRouter::handle_hello(const Hello& hello) {
  if (hello.sender == node_.self()) {
    return;
  }
  NeighborRecord& n = neighbors_[hello.sender];
  n.position = hello.position;
  n.residual_energy = hello.residual_energy;
  n.idle_fraction = hello.idle_fraction;
  n.last_heard = node_.now();
}

bool QgrpRouter::neighbor_fresh(NodeId peer) const {
  auto it = neighbors_.find(peer);
  return it != neighbors_.end() && node_.now() - it->second.last_heard <= hello_expiry();
}

// the longest jittered gap, so a neighbor survives until it really missed that many hellos
double QgrpRouter::hello_expiry() const {
  return settings_.hello_expiry_intervals * settings_.hello_interval *
         (1.0 + settings_.hello_jitter);
}

std::vector<link::LinkEstimate> QgrpRouter::link_estimates() {
  std::vector<link::NeighborObservation> obs;
  obs.reserve(neighbors_.size());
  for (const auto& [id, n] : neighbors_) {
    obs.push_back({id, n.position, n.idle_fraction, n.last_heard});
  }
  link::EstimatorSettings es;
  es.b_no = settings_.b_no;
  es.tx_range = settings_.tx_range;
  es.hello_expiry = hello_expiry();
  es.window = settings_.observation_window;
  return link::refresh_estimates(obs, node_.idle_fraction(), node_.position(), node_.now(),
                                 table_, settings_.density_per_km2, settings_.dcf, es);
}

double QgrpRouter::link_estimate_to(NodeId peer) {
  for (const auto& e : link_estimates()) {
    if (e.peer == peer) {
      return e.available_bandwidth;
    }
  }
  return 0.0;
}

double QgrpRouter::reserved_on(NodeId next_hop, FlowId except) const {
  double sum = 0.0;
  for (const auto& [flow, r] : flow_routes_) {
    if (r.valid && r.next_hop == next_hop && flow != except) {
      sum += r.rate;
    }
  }
  return sum;
}

std::optional<NodeId> QgrpRouter::flow_next_hop(FlowId flow) const {
  auto it = flow_routes_.find(flow);
  if (it == flow_routes_.end() || !it->second.valid) {
    return std::nullopt;
  }
  return it->second.next_hop;
}

void QgrpRouter::purge_reservations() {
  const double now = node_.now();
  for (auto& [flow, r] : flow_routes_) {
    if (r.valid && now - r.last_used > settings_.reservation_timeout) {
      release(flow, r);
    }
  }
}

void QgrpRouter::release(FlowId flow, FlowRoute& route) {
  LogRecord rec;
  rec.kind = EventKind::Release;
  rec.peer = route.next_hop;
  rec.flow = flow;
  rec.value = route.rate;
  node_.record(std::move(rec));
  route.valid = false;
}

LocalView QgrpRouter::local_view(FlowId own) {
  purge_reservations();
  LocalView view;
  view.self_pos = node_.position();
  view.sink_pos = settings_.sink_pos;
  for (const auto& e : link_estimates()) {
    const NeighborRecord& n = neighbors_.at(e.peer);
    Candidate c;
    c.id = e.peer;
    c.position = n.position;
    c.available_bandwidth = std::max(0.0, e.available_bandwidth - reserved_on(e.peer, own));
    c.energy = {n.residual_energy, node_.initial_energy()};
    view.neighbors.push_back(c);
  }
  return view;
}

bool QgrpRouter::commit(FlowId flow, NodeId next_hop, double rate, int retry_index) {
  purge_reservations();
  auto it = flow_routes_.find(flow);
  if (it != flow_routes_.end() && it->second.valid) {
    release(flow, it->second);
  }
  const double estimate = link_estimate_to(next_hop);
  const double sum = reserved_on(next_hop) + rate;
  if (!(sum <= estimate)) {
    return false;
  }
  flow_routes_[flow] = FlowRoute{next_hop, rate, node_.now(), true};
  LogRecord rec;
  rec.kind = EventKind::AdmitLink;
  rec.peer = next_hop;
  rec.flow = flow;
  rec.seq = retry_index;
  rec.value = estimate;
  rec.value2 = sum;
  rec.value3 = rate;
  node_.record(std::move(rec));
  return true;
}

void QgrpRouter::send_rreq(FlowId flow) {
  FlowState& f = flows_.at(flow);
  f.pending = true;
  ++f.generation;
  const int attempt = f.attempts++;
  const LocalView view = local_view(flow);
  const auto next =
      select_next_hop(view, f.required_bandwidth, settings_.weights, settings_.b_no);
  if (!next) {
    source_rejected(flow, max_grantable_bandwidth(view), node_.self(), attempt);
    return;
  }
  const double link_bw = find_candidate(view, *next)->available_bandwidth;
  Rreq r;
  r.flow_id = flow;
  r.source = node_.self();
  r.destination = settings_.sink;
  r.required_bandwidth = f.required_bandwidth;
  r.path_bandwidth_so_far = std::min(settings_.b_no, link_bw);
  if (auto it = routes_.find(settings_.sink); it != routes_.end()) {
    r.dest_seq_known = it->second.dest_seq;
  }
  r.retry_index = attempt;
  r.hop_trace = {node_.self()};

  LogRecord rec;
  rec.kind = EventKind::RreqHop;
  rec.peer = *next;
  rec.flow = flow;
  rec.seq = r.retry_index;
  rec.value = link_bw;
  rec.value2 = r.required_bandwidth;
  rec.trace = r.hop_trace;
  node_.record(std::move(rec));

  node_.unicast(*next, std::move(r));
  node_.schedule(settings_.rrep_wait, Timer{TimerKind::RrepWait, flow, f.generation});
}

void QgrpRouter::handle_rreq(const Rreq& pkt, NodeId) {
  const NodeId self = node_.self();
  if (on_trace(pkt.hop_trace, self)) {
    note_loop(pkt.flow_id, RecordCode::Rreq, pkt.hop_trace);
    return;
  }
  const NodeId back = pkt.hop_trace.back();

  if (self == pkt.destination || is_sink()) {
    Rrep r;
    r.flow_id = pkt.flow_id;
    r.source = pkt.source;
    r.destination = self;
    r.dest_seq = ++own_seq_;
    r.path_bandwidth = pkt.path_bandwidth_so_far;
    r.required_bandwidth = pkt.required_bandwidth;
    r.retry_index = pkt.retry_index;
    r.hop_trace = pkt.hop_trace;
    r.hop_trace.push_back(self);
    node_.unicast(back, std::move(r));
    return;
  }

  LocalView view = local_view(pkt.flow_id);
  std::erase_if(view.neighbors, [&](const Candidate& c) { return on_trace(pkt.hop_trace, c.id); });

  if (auto it = routes_.find(pkt.destination); it != routes_.end()) {
    const RouteEntry& e = it->second;
    const Candidate* via = find_candidate(view, e.next_hop);
    if (e.valid && node_.now() - e.established_at <= settings_.route_lifetime &&
        e.dest_seq >= pkt.dest_seq_known && via != nullptr &&
        via->available_bandwidth >= pkt.required_bandwidth &&
        commit(pkt.flow_id, e.next_hop, pkt.required_bandwidth, pkt.retry_index)) {
      LogRecord rec;
      rec.kind = EventKind::CacheReply;
      rec.peer = e.next_hop;
      rec.flow = pkt.flow_id;
      rec.seq = pkt.retry_index;
      rec.value = e.path_bandwidth;
      node_.record(std::move(rec));

      Rrep r;
      r.flow_id = pkt.flow_id;
      r.source = pkt.source;
      r.destination = pkt.destination;
      r.dest_seq = e.dest_seq;
      r.path_bandwidth = std::min(pkt.path_bandwidth_so_far, e.path_bandwidth);
      r.required_bandwidth = pkt.required_bandwidth;
      r.retry_index = pkt.retry_index;
      r.hop_trace = pkt.hop_trace;
      r.hop_trace.push_back(self);
      node_.unicast(back, std::move(r));
      return;
    }
  }

  const auto next =
      select_next_hop(view, pkt.required_bandwidth, settings_.weights, settings_.b_no);
  if (next) {
    const double link_bw = find_candidate(view, *next)->available_bandwidth;
    Rreq fwd = pkt;
    fwd.path_bandwidth_so_far = std::min(pkt.path_bandwidth_so_far, link_bw);
    fwd.hop_trace.push_back(self);

    LogRecord rec;
    rec.kind = EventKind::RreqHop;
    rec.peer = *next;
    rec.flow = pkt.flow_id;
    rec.seq = pkt.retry_index;
    rec.value = link_bw;
    rec.value2 = pkt.required_bandwidth;
    rec.trace = fwd.hop_trace;
    node_.record(std::move(rec));

    node_.unicast(*next, std::move(fwd));
    return;
  }

  AdmissionNotify n;
  n.flow_id = pkt.flow_id;
  n.max_grantable_bandwidth = max_grantable_bandwidth(view);
  n.rejecting_node = self;
  n.retry_index = pkt.retry_index;
  n.hop_trace = pkt.hop_trace;
  node_.unicast(back, std::move(n));
}

void QgrpRouter::handle_rrep(const Rrep& pkt, NodeId from) {
  const auto pos = std::find(pkt.hop_trace.begin(), pkt.hop_trace.end(), node_.self());
  if (pos == pkt.hop_trace.end()) {
    return;
  }
  const auto idx = static_cast<std::size_t>(pos - pkt.hop_trace.begin());
  const bool at_source = idx == 0;
  if (at_source) {
    auto it = flows_.find(pkt.flow_id);
    if (it == flows_.end() || it->second.failed || (it->second.admitted && !it->second.pending)) {
      return;
    }
  }

  RouteEntry& e = routes_[pkt.destination];
  const bool fresher = !e.valid || is_fresher(pkt.dest_seq, pkt.path_bandwidth, e.dest_seq,
                                               e.path_bandwidth);
  if (fresher) {
    e = RouteEntry{pkt.destination, from, pkt.dest_seq, pkt.path_bandwidth, node_.now(), true};
  }
  LogRecord rec;
  rec.kind = EventKind::RrepInstall;
  rec.peer = from;
  rec.flow = pkt.flow_id;
  rec.seq = static_cast<std::int64_t>(pkt.dest_seq);
  rec.value = pkt.path_bandwidth;
  rec.code = fresher ? RecordCode::Fresher : RecordCode::Stale;
  node_.record(std::move(rec));

  if (commit(pkt.flow_id, from, pkt.required_bandwidth, pkt.retry_index)) {
    if (at_source) {
      admit(pkt.flow_id, pkt);
    } else {
      node_.unicast(pkt.hop_trace[idx - 1], pkt);
    }
    return;
  }

  // The link no longer fits the flow: turn the reply into a rejection.
  const double grantable = std::max(0.0, link_estimate_to(from) - reserved_on(from));
  if (at_source) {
    // the old reservation was released by the failed commit
    flows_.at(pkt.flow_id).admitted = false;
    source_rejected(pkt.flow_id, grantable, node_.self(), pkt.retry_index);
    return;
  }
  AdmissionNotify n;
  n.flow_id = pkt.flow_id;
  n.max_grantable_bandwidth = grantable;
  n.rejecting_node = node_.self();
  n.retry_index = pkt.retry_index;
  n.hop_trace.assign(pkt.hop_trace.begin(), pkt.hop_trace.begin() + static_cast<long>(idx) + 1);
  node_.unicast(pkt.hop_trace[idx - 1], std::move(n));
}

void QgrpRouter::handle_admission_notify(const AdmissionNotify& pkt) {
  const auto pos = std::find(pkt.hop_trace.begin(), pkt.hop_trace.end(), node_.self());
  if (pos == pkt.hop_trace.end()) {
    return;
  }
  if (pos == pkt.hop_trace.begin()) {
    source_rejected(pkt.flow_id, pkt.max_grantable_bandwidth, pkt.rejecting_node,
                    pkt.retry_index);
    return;
  }
  node_.unicast(*(pos - 1), pkt);
}

void QgrpRouter::source_rejected(FlowId flow, double max_grantable, NodeId rejecting,
                                 int retry_index) {
  FlowState& f = flows_.at(flow);
  if (f.failed || (f.admitted && !f.pending)) {
    return;
  }
  LogRecord rec;
  rec.kind = EventKind::Notify;
  rec.peer = rejecting;
  rec.flow = flow;
  rec.seq = retry_index;
  rec.value = max_grantable;
  node_.record(std::move(rec));
  if (f.admitted) {
    // a refresh was refused: keep the current route, ask again later
    f.pending = false;
    f.admitted_at = node_.now();
    ++f.generation;
    return;
  }

  f.min_notified = f.min_notified < 0.0 ? max_grantable : std::min(f.min_notified, max_grantable);
  ++f.generation;
  if (f.rreq_retries_used >= settings_.max_retries) {
    fail_flow(flow);
    return;
  }
  ++f.rreq_retries_used;
  if (settings_.policy == SourcePolicy::Reduce && f.min_notified > 0.0) {
    f.required_bandwidth = f.min_notified;
    send_rreq(flow);
    return;
  }
  const double delay = settings_.retry_backoff * std::ldexp(1.0, f.rreq_retries_used - 1);
  f.next_retry_at = node_.now() + delay;
  node_.schedule(delay, Timer{TimerKind::RetryBackoff, flow, f.generation});
}

void QgrpRouter::rreq_retry_timer(FlowId flow) {
  FlowState& f = flows_.at(flow);
  if (f.failed) {
    return;
  }
  if (f.admitted) {
    f.pending = false;
    f.admitted_at = node_.now();
    return;
  }
  if (f.rreq_retries_used >= settings_.max_retries) {
    fail_flow(flow);
    return;
  }
  ++f.rreq_retries_used;
  send_rreq(flow);
}

void QgrpRouter::fail_flow(FlowId flow) {
  FlowState& f = flows_.at(flow);
  f.failed = true;
  f.pending = false;
  ++f.generation;
  LogRecord rec;
  rec.kind = EventKind::FlowFailed;
  rec.flow = flow;
  node_.record(std::move(rec));
  while (!f.buffered_packets.empty()) {
    drop(f.buffered_packets.front(), RecordCode::FlowFailed);
    f.buffered_packets.pop_front();
  }
}

void QgrpRouter::admit(FlowId flow, const Rrep& pkt) {
  FlowState& f = flows_.at(flow);
  f.admitted = true;
  f.pending = false;
  f.admitted_at = node_.now();
  ++f.generation;
  LogRecord rec;
  rec.kind = EventKind::Admit;
  rec.flow = flow;
  rec.seq = pkt.retry_index;
  rec.value = pkt.path_bandwidth;
  rec.value2 = pkt.required_bandwidth;
  rec.trace = pkt.hop_trace;
  node_.record(std::move(rec));
  std::deque<Data> backlog;
  backlog.swap(f.buffered_packets);
  for (auto& d : backlog) {
    forward_data(std::move(d));
  }
}

void QgrpRouter::restart_flow(FlowId flow) {
  FlowState& f = flows_.at(flow);
  if (f.failed) {
    return;
  }
  f.admitted = false;
  f.rreq_retries_used = 0;
  f.min_notified = -1.0;
  send_rreq(flow);
}

void QgrpRouter::invalidate_next_hop(NodeId next_hop) {
  for (auto& [dest, e] : routes_) {
    if (e.valid && e.next_hop == next_hop) {
      e.valid = false;
    }
  }
  for (auto& [flow, r] : flow_routes_) {
    if (r.valid && r.next_hop == next_hop) {
      release(flow, r);
    }
  }
  std::vector<FlowId> orphaned;
  for (const auto& [flow, f] : flows_) {
    if (f.admitted && !flow_next_hop(flow)) {
      orphaned.push_back(flow);
    }
  }
  for (FlowId flow : orphaned) {
    restart_flow(flow);
  }
}

void QgrpRouter::forward_data(Data pkt) {
  const NodeId self = node_.self();
  if (on_trace(pkt.hop_trace, self)) {
    note_loop(pkt.flow_id, RecordCode::Data, pkt.hop_trace);
    drop(pkt, RecordCode::Loop);
    return;
  }
  pkt.hop_trace.push_back(self);
  if (is_sink()) {
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

  NodeId next = kNoNode;
  auto fr = flow_routes_.find(pkt.flow_id);
  if (fr != flow_routes_.end() && fr->second.valid) {
    next = fr->second.next_hop;
  } else if (auto rt = routes_.find(settings_.sink); rt != routes_.end() && rt->second.valid) {
    next = rt->second.next_hop;
  }
  if (next == kNoNode) {
    drop(pkt, RecordCode::NoRoute);
    return;
  }
  if (!neighbor_fresh(next)) {
    drop(pkt, RecordCode::LinkBroken);
    invalidate_next_hop(next);
    return;
  }
  if (fr != flow_routes_.end() && fr->second.valid) {
    fr->second.last_used = node_.now();
  }
  node_.unicast(next, std::move(pkt));
}

void QgrpRouter::drop(const Data& pkt, RecordCode reason) {
  LogRecord rec;
  rec.kind = EventKind::Drop;
  rec.flow = pkt.flow_id;
  rec.seq = static_cast<std::int64_t>(pkt.sequence);
  rec.code = reason;
  node_.record(std::move(rec));
}

void QgrpRouter::note_loop(FlowId flow, RecordCode code, const std::vector<NodeId>& trace) {
  ++loop_witnesses_;
  LogRecord rec;
  rec.kind = EventKind::LoopWitness;
  rec.flow = flow;
  rec.code = code;
  rec.trace = trace;
  node_.record(std::move(rec));
}

}  // namespace qgrp::proto
