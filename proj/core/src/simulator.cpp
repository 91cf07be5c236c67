#include "qgrp/simulator.hpp"

#include "qgrp/agent.hpp"
#include "qgrp/aodv_router.hpp"
#include "qgrp/link_estimation.hpp"
#include "qgrp/qgrp_router.hpp"

#include <algorithm>
#include <deque>
#include <memory>
#include <numeric>
#include <queue>
#include <variant>

namespace qgrp::sim {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {
constexpr std::uint64_t kTopologyStream = 0;
constexpr std::uint64_t kFlowStream = 1;
constexpr std::uint64_t kLossStream = 2;
constexpr std::uint64_t kNodeStreamBase = 1000;
}  // namespace

std::vector<std::vector<NodeId>> Topology::adjacency() const {
  std::vector<std::vector<NodeId>> adj(positions.size());
  for (int u = 0; u < size(); ++u) {
    for (int v = 0; v < size(); ++v) {
      if (u != v && geo::distance(positions[u], positions[v]) <= tx_range) {
        adj[u].push_back(v);
      }
    }
  }
  return adj;
}

Topology generate_topology(int n, double field, double tx_range, std::uint64_t seed) {
  if (n < 2) {
    throw std::invalid_argument("a topology needs at least 2 nodes");
  }
  std::mt19937_64 rng(derive_seed(seed, kTopologyStream));
  std::uniform_real_distribution<double> coord(0.0, field);
  Topology t;
  t.field = field;
  t.tx_range = tx_range;
  t.positions.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double x = coord(rng);
    const double y = coord(rng);
    t.positions.push_back({x, y});
  }
  t.sink = static_cast<NodeId>(std::uniform_int_distribution<int>(0, n - 1)(rng));
  return t;
}

std::vector<int> bfs_hops(const Topology& topo, NodeId from) {
  const auto adj = topo.adjacency();
  std::vector<int> hops(adj.size(), -1);
  std::deque<NodeId> frontier{from};
  hops[from] = 0;
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop_front();
    for (NodeId v : adj[u]) {
      if (hops[v] < 0) {
        hops[v] = hops[u] + 1;
        frontier.push_back(v);
      }
    }
  }
  return hops;
}

double tx_energy(double bits, double distance, const RadioConfig& radio) {
  return radio.e_elec * bits + radio.e_amp * bits * distance * distance;
}

double rx_energy(double bits, const RadioConfig& radio) { return radio.e_elec * bits; }

double contention_delay(double p_c, const dcf::DcfParams& params) {
  return link::expected_backoff_slots(p_c, params) * params.virtual_slot / (1.0 - p_c);
}

double airtime(double bits, double b_no, double p_c, const dcf::DcfParams& params) {
  return bits / b_no + contention_delay(p_c, params);
}

std::vector<FlowPlan> plan_flows(const Topology& topo, const std::vector<FlowConfig>& flows,
                                 std::uint64_t seed) {
  std::vector<NodeId> pool;
  for (NodeId i = 0; i < topo.size(); ++i) {
    if (i != topo.sink) {
      pool.push_back(i);
    }
  }
  if (flows.size() > pool.size()) {
    throw std::invalid_argument("more flows than candidate sources");
  }
  std::mt19937_64 rng(derive_seed(seed, kFlowStream));
  std::vector<FlowPlan> out;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const auto j = std::uniform_int_distribution<std::size_t>(i, pool.size() - 1)(rng);
    std::swap(pool[i], pool[j]);
    out.push_back({static_cast<FlowId>(i), pool[i], flows[i]});
  }
  return out;
}

dcf::CollisionTable scenario_table(const ScenarioConfig& config) {
  if (config.dcf.table == TableSource::Reference) {
    return dcf::reference_table();
  }
  dcf::SolverOptions opts;
  opts.model = config.dcf.model;
  return dcf::build_table(dcf::default_density_axis(), dcf::default_distance_axis(),
                          config.dcf.params, opts);
}

namespace {

struct Frame {
  Packet pkt;
  NodeId next = kNoNode;  // kNoNode: broadcast
  int attempt = 0;
  double start = 0.0;
  double end = 0.0;
};

struct NodeState {
  bool alive = true;
  double residual = 0.0;
  double free_at = 0.0;
  bool transmitting = false;
  std::deque<Frame> queue;
  link::BusyTracker busy;
  std::mt19937_64 rng;
};

struct TimerEv {
  NodeId node;
  Timer timer;
};
struct EmitEv {
  std::size_t flow;
};
struct TxStartEv {
  NodeId node;
};
struct TxEndEv {
  NodeId node;
};

struct Event {
  double time;
  std::uint64_t seq;
  std::variant<TimerEv, EmitEv, TxStartEv, TxEndEv> what;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    return a.time > b.time || (a.time == b.time && a.seq > b.seq);
  }
};

class Engine;

class Services final : public NodeServices {
 public:
  Services(Engine& engine, NodeId id) : engine_(engine), id_(id) {}
  double now() const override;
  NodeId self() const override { return id_; }
  geo::Position position() const override;
  double residual_energy() const override;
  double initial_energy() const override;
  double idle_fraction() const override;
  bool neighbor_alive(NodeId peer) const override;
  void unicast(NodeId next_hop, Packet pkt) override;
  void broadcast(Packet pkt) override;
  void schedule(double delay, Timer timer) override;
  double uniform(double lo, double hi) override;
  void record(LogRecord rec) override;

 private:
  Engine& engine_;
  NodeId id_;
};

class Engine {
 public:
  Engine(const ScenarioConfig& config, RunResult& out)
      : cfg_(config),
        out_(out),
        table_(scenario_table(config)),
        loss_(derive_seed(config.topology.seed, kLossStream)) {
    out_.topology = generate_topology(cfg_.topology.nodes, cfg_.topology.field,
                                      cfg_.topology.tx_range, cfg_.topology.seed);
    out_.flows = plan_flows(out_.topology, cfg_.flows, cfg_.topology.seed);
    emitted_.assign(out_.flows.size(), 0);
    const Topology& topo = out_.topology;
    const int n = topo.size();
    density_ = n / (topo.field * topo.field) * 1e6;

    nodes_.resize(n);
    in_range_.resize(n);
    in_sense_.resize(n);
    for (NodeId i = 0; i < n; ++i) {
      nodes_[i].residual = cfg_.radio.initial_energy;
      nodes_[i].busy = link::BusyTracker(cfg_.qgrp.observation_window);
      nodes_[i].rng.seed(derive_seed(cfg_.topology.seed, kNodeStreamBase + i));
      for (NodeId j = 0; j < n; ++j) {
        const double d = geo::distance(topo.positions[i], topo.positions[j]);
        if (j != i && d <= topo.tx_range) {
          in_range_[i].push_back(j);
        }
        if (j == i || d <= cfg_.mac.sense_range) {
          in_sense_[i].push_back(j);
        }
      }
    }

    for (NodeId i = 0; i < n; ++i) {
      services_.push_back(std::make_unique<Services>(*this, i));
    }
    for (NodeId i = 0; i < n; ++i) {
      agents_.push_back(make_agent(i));
    }
  }

  void run() {
    for (auto& a : agents_) {
      a->start();
    }
    for (std::size_t f = 0; f < out_.flows.size(); ++f) {
      const FlowPlan& plan = out_.flows[f];
      agents_[plan.source]->add_flow(plan.id, plan.config.rate);
      push(plan.config.start, EmitEv{f});
    }
    while (!queue_.empty() && queue_.top().time <= cfg_.sim_duration) {
      Event ev = queue_.top();
      queue_.pop();
      now_ = ev.time;
      std::visit([this](const auto& e) { handle(e); }, ev.what);
    }
    now_ = cfg_.sim_duration;
    for (NodeId i = 0; i < static_cast<NodeId>(nodes_.size()); ++i) {
      LogRecord rec;
      rec.kind = EventKind::Residual;
      rec.value = nodes_[i].residual;
      rec.value2 = cfg_.radio.initial_energy;
      log(i, std::move(rec));
    }
  }

  // services
  double now() const { return now_; }
  const geo::Position& position(NodeId i) const { return out_.topology.positions[i]; }
  const NodeState& node(NodeId i) const { return nodes_[i]; }
  double initial_energy() const { return cfg_.radio.initial_energy; }
  bool neighbor_alive(NodeId i, NodeId peer) const {
    return peer >= 0 && peer < static_cast<NodeId>(nodes_.size()) && nodes_[peer].alive &&
           geo::distance(position(i), position(peer)) <= out_.topology.tx_range;
  }
  double uniform(NodeId i, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(nodes_[i].rng);
  }
  void schedule(NodeId i, double delay, Timer timer) { push(now_ + delay, TimerEv{i, timer}); }
  void log(NodeId i, LogRecord rec) {
    rec.time = now_;
    rec.node = i;
    out_.log.push_back(std::move(rec));
  }

  void enqueue(NodeId i, Packet pkt, NodeId next) {
    NodeState& s = nodes_[i];
    if (!s.alive) {
      return;
    }
    Frame f{std::move(pkt), next, 0, 0.0, 0.0};
    if (std::holds_alternative<Data>(f.pkt)) {
      if (s.queue.size() >= cfg_.mac.queue_capacity) {
        drop_frame(i, f.pkt, RecordCode::QueueFull);
        return;
      }
      s.queue.push_back(std::move(f));
    } else {
      // control goes ahead of data; the head frame may already be on the air
      auto pos = s.queue.begin() + (s.transmitting ? 1 : 0);
      while (pos != s.queue.end() && !std::holds_alternative<Data>(pos->pkt)) {
        ++pos;
      }
      s.queue.insert(pos, std::move(f));
      if (s.queue.size() > cfg_.mac.queue_capacity) {
        drop_frame(i, s.queue.back().pkt, RecordCode::QueueFull);
        s.queue.pop_back();
      }
    }
    if (!s.transmitting) {
      start_next(i);
    }
  }

 private:
  std::unique_ptr<RoutingAgent> make_agent(NodeId i) {
    const Topology& topo = out_.topology;
    if (cfg_.protocol == Protocol::Aodv) {
      aodv::AodvSettings s;
      s.sink = topo.sink;
      s.rrep_wait = cfg_.aodv.rrep_wait;
      s.max_retries = cfg_.aodv.max_retries;
      s.buffer_capacity = cfg_.aodv.buffer_capacity;
      s.route_lifetime = cfg_.aodv.route_lifetime;
      return std::make_unique<aodv::AodvRouter>(*services_[i], s);
    }
    proto::QgrpSettings s;
    const QgrpConfig& q = cfg_.qgrp;
    s.weights = q.weights;
    s.b_no = cfg_.radio.b_no;
    s.tx_range = topo.tx_range;
    s.hello_interval = q.hello_interval;
    s.hello_jitter = q.hello_jitter;
    s.hello_expiry_intervals = q.hello_expiry_intervals;
    s.observation_window = q.observation_window;
    s.rrep_wait = q.rrep_wait;
    s.max_retries = q.max_retries;
    s.retry_backoff = q.retry_backoff;
    s.buffer_capacity = q.buffer_capacity;
    s.policy = q.policy;
    s.reservation_timeout = q.reservation_timeout;
    s.route_lifetime = q.route_lifetime;
    s.density_per_km2 = density_;
    s.dcf = cfg_.dcf.params;
    s.sink = topo.sink;
    s.sink_pos = topo.positions[topo.sink];
    return std::make_unique<proto::QgrpRouter>(*services_[i], s, table_);
  }

  template <typename E>
  void push(double time, E what) {
    queue_.push(Event{time, next_seq_++, what});
  }

  double link_distance(NodeId i, const Frame& f) const {
    return f.next == kNoNode ? out_.topology.tx_range : geo::distance(position(i), position(f.next));
  }

  double p_c(NodeId i, const Frame& f) const {
    if (cfg_.mac.lossless) {
      return 0.0;
    }
    return table_.lookup(density_, link_distance(i, f));
  }

  double p_c(NodeId from, NodeId to) const {
    if (cfg_.mac.lossless) {
      return 0.0;
    }
    return table_.lookup(density_, geo::distance(position(from), position(to)));
  }

  double bits(const Packet& pkt) const { return size_bits(pkt, cfg_.packets); }

  // Returns the energy actually taken; a node reaching zero dies.
  double debit(NodeId i, double joules) {
    NodeState& s = nodes_[i];
    const double taken = std::min(joules, s.residual);
    s.residual -= taken;
    return taken;
  }

  void kill_if_drained(NodeId i) {
    NodeState& s = nodes_[i];
    if (!s.alive || s.residual > 0.0) {
      return;
    }
    s.alive = false;
    s.residual = 0.0;
    std::deque<Frame> lost;
    lost.swap(s.queue);
    s.transmitting = false;
    // queued frames die with the node, logged before the death itself
    for (const auto& f : lost) {
      drop_frame(i, f.pkt, RecordCode::DeadNode);
    }
    LogRecord rec;
    rec.kind = EventKind::Death;
    log(i, std::move(rec));
  }

  void drop_frame(NodeId i, const Packet& pkt, RecordCode reason) {
    if (const auto* d = std::get_if<Data>(&pkt)) {
      LogRecord rec;
      rec.kind = EventKind::Drop;
      rec.flow = d->flow_id;
      rec.seq = static_cast<std::int64_t>(d->sequence);
      rec.code = reason;
      log(i, std::move(rec));
    }
  }

  void start_next(NodeId i) {
    NodeState& s = nodes_[i];
    if (s.queue.empty() || !s.alive) {
      s.transmitting = false;
      return;
    }
    s.transmitting = true;
    reserve(i);
  }

  // Books the medium for the head-of-line frame.
  void reserve(NodeId i) {
    NodeState& s = nodes_[i];
    Frame& f = s.queue.front();
    double begin = std::max(now_, s.free_at);
    if (f.next != kNoNode) {
      begin = std::max(begin, nodes_[f.next].free_at);
    }
    // the whole airtime, contention included, is held against the neighborhood
    const double start = begin + contention_delay(p_c(i, f), cfg_.dcf.params);
    const double end = start + bits(f.pkt) / cfg_.radio.b_no;
    f.start = start;
    f.end = end;
    for (NodeId m : in_sense_[i]) {
      mark_busy(m, begin, end);
    }
    if (f.next != kNoNode && geo::distance(position(i), position(f.next)) > cfg_.mac.sense_range) {
      mark_busy(f.next, begin, end);
    }
    push(start, TxStartEv{i});
  }

  void mark_busy(NodeId m, double start, double end) {
    NodeState& s = nodes_[m];
    s.free_at = std::max(s.free_at, end);
    s.busy.add_busy(now_, start, end);
  }

  void handle(const TimerEv& e) {
    if (nodes_[e.node].alive) {
      agents_[e.node]->on_timer(e.timer);
    }
  }

  void handle(const EmitEv& e) {
    const FlowPlan& plan = out_.flows[e.flow];
    const NodeId src = plan.source;
    if (!nodes_[src].alive) {
      return;
    }
    Data d;
    d.flow_id = plan.id;
    d.source = src;
    d.payload_size = plan.config.packet_bits;
    d.origin_timestamp = now_;
    d.sequence = emitted_[e.flow]++;
    LogRecord rec;
    rec.kind = EventKind::Originate;
    rec.flow = d.flow_id;
    rec.seq = static_cast<std::int64_t>(d.sequence);
    rec.value = d.payload_size;
    log(src, std::move(rec));
    agents_[src]->originate(std::move(d));

    const double rate = agents_[src]->flow_rate(plan.id);
    const double next = now_ + plan.config.packet_bits / (rate > 0.0 ? rate : plan.config.rate);
    if (next < plan.config.stop) {
      push(next, EmitEv{e.flow});
    }
  }

  void handle(const TxStartEv& e) {
    const NodeId i = e.node;
    NodeState& s = nodes_[i];
    if (!s.alive || s.queue.empty()) {
      return;
    }
    const Frame& f = s.queue.front();
    const double b = bits(f.pkt);
    LogRecord rec;
    rec.kind = EventKind::Tx;
    rec.peer = f.next;
    rec.flow = flow_of(f.pkt);
    rec.seq = f.attempt;
    rec.code = code_of(kind_of(f.pkt));
    rec.value = b;
    rec.value2 = debit(i, tx_energy(b, link_distance(i, f), cfg_.radio));
    log(i, std::move(rec));
    kill_if_drained(i);
    if (s.alive) {
      push(f.end, TxEndEv{i});
    }
  }

  // Delivers one copy; returns false if the receiver died on it.
  bool receive(NodeId to, NodeId from, const Packet& pkt) {
    const double b = bits(pkt);
    LogRecord rec;
    rec.kind = EventKind::Rx;
    rec.peer = from;
    rec.flow = flow_of(pkt);
    rec.code = code_of(kind_of(pkt));
    rec.value = b;
    rec.value2 = debit(to, rx_energy(b, cfg_.radio));
    log(to, std::move(rec));
    kill_if_drained(to);
    if (!nodes_[to].alive) {
      return false;
    }
    agents_[to]->receive(pkt, from);
    return true;
  }

  void handle(const TxEndEv& e) {
    const NodeId i = e.node;
    NodeState& s = nodes_[i];
    if (!s.alive || s.queue.empty()) {
      return;
    }
    Frame& head = s.queue.front();
    if (head.next == kNoNode) {
      Frame f = std::move(head);
      s.queue.pop_front();
      s.transmitting = false;
      for (NodeId m : in_range_[i]) {
        if (nodes_[m].alive && !loss_.lost(p_c(i, m))) {
          receive(m, i, f.pkt);
        }
      }
    } else {
      const NodeId to = head.next;
      const bool ok = neighbor_alive(i, to) && !loss_.lost(p_c(i, to));
      if (!ok && head.attempt < cfg_.mac.retries) {
        ++head.attempt;
        reserve(i);
        return;
      }
      Frame f = std::move(head);
      s.queue.pop_front();
      s.transmitting = false;
      if (ok) {
        receive(to, i, f.pkt);
      } else {
        drop_frame(i, f.pkt, RecordCode::MacRetries);
        agents_[i]->link_failed(f.pkt, to);
      }
    }
    if (nodes_[i].alive && !nodes_[i].transmitting) {
      start_next(i);
    }
  }

  const ScenarioConfig& cfg_;
  RunResult& out_;
  dcf::CollisionTable table_;
  LossChannel loss_;
  double density_ = 0.0;
  double now_ = 0.0;
  std::uint64_t next_seq_ = 0;
  std::vector<NodeState> nodes_;
  std::vector<std::vector<NodeId>> in_range_;
  std::vector<std::vector<NodeId>> in_sense_;
  std::vector<std::unique_ptr<Services>> services_;
  std::vector<std::unique_ptr<RoutingAgent>> agents_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::vector<std::uint64_t> emitted_;
};

double Services::now() const { return engine_.now(); }
geo::Position Services::position() const { return engine_.position(id_); }
double Services::residual_energy() const { return engine_.node(id_).residual; }
double Services::initial_energy() const { return engine_.initial_energy(); }
double Services::idle_fraction() const { return engine_.node(id_).busy.idle_fraction(engine_.now()); }
bool Services::neighbor_alive(NodeId peer) const { return engine_.neighbor_alive(id_, peer); }
void Services::unicast(NodeId next_hop, Packet pkt) { engine_.enqueue(id_, std::move(pkt), next_hop); }
void Services::broadcast(Packet pkt) { engine_.enqueue(id_, std::move(pkt), kNoNode); }
void Services::schedule(double delay, Timer timer) { engine_.schedule(id_, delay, timer); }
double Services::uniform(double lo, double hi) { return engine_.uniform(id_, lo, hi); }
void Services::record(LogRecord rec) { engine_.log(id_, std::move(rec)); }

}  // namespace

RunResult run(const ScenarioConfig& config) {
  validate(config);
  RunResult out;
  Engine engine(config, out);
  engine.run();
  return out;
}

}  // namespace qgrp::sim
