#include "qgrp/config.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <optional>

namespace qgrp {

std::string_view to_string(Protocol p) { return p == Protocol::Qgrp ? "qgrp" : "aodv"; }

ConfigParseError::ConfigParseError(int line, int column, const std::string& what)
    : std::runtime_error(fmt::format("{}:{}: {}", line, column, what)),
      line_(line),
      column_(column) {}

ConfigValidationError::ConfigValidationError(std::string key_path, const std::string& constraint)
    : std::runtime_error(fmt::format("{}: {}", key_path, constraint)),
      key_path_(std::move(key_path)) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Thrown by value parsers; the caller adds the position.
struct BadValue {
  std::string what;
};

double to_double(std::string_view s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
    throw BadValue{fmt::format("expected a number, got '{}'", s)};
  }
  return v;
}

template <typename Int>
Int to_int(std::string_view s) {
  Int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw BadValue{fmt::format("expected an integer, got '{}'", s)};
  }
  return v;
}

bool to_bool(std::string_view s) {
  if (s == "true") {
    return true;
  }
  if (s == "false") {
    return false;
  }
  throw BadValue{fmt::format("expected true or false, got '{}'", s)};
}

struct Binding {
  std::function<void(std::string_view)> set;
  std::function<std::string()> get;
};

Binding num(double& v) {
  return {[&v](std::string_view s) { v = to_double(s); }, [&v] { return fmt::format("{}", v); }};
}

template <typename Int>
Binding integer(Int& v) {
  return {[&v](std::string_view s) { v = to_int<Int>(s); },
          [&v] { return fmt::format("{}", v); }};
}

Binding boolean(bool& v) {
  return {[&v](std::string_view s) { v = to_bool(s); },
          [&v] { return std::string(v ? "true" : "false"); }};
}

template <typename E>
Binding choice(E& v, std::vector<std::pair<std::string_view, E>> names) {
  return {[&v, names](std::string_view s) {
            for (const auto& [n, e] : names) {
              if (n == s) {
                v = e;
                return;
              }
            }
            std::string allowed;
            for (const auto& [n, e] : names) {
              allowed += allowed.empty() ? "" : "|";
              allowed += n;
            }
            throw BadValue{fmt::format("expected one of {}, got '{}'", allowed, s)};
          },
          [&v, names] {
            for (const auto& [n, e] : names) {
              if (e == v) {
                return std::string(n);
              }
            }
            return std::string("?");
          }};
}

Binding int_list(std::vector<int>& v) {
  return {[&v](std::string_view s) {
            v.clear();
            while (true) {
              const auto comma = s.find(',');
              v.push_back(to_int<int>(trim(s.substr(0, comma))));
              if (comma == std::string_view::npos) {
                break;
              }
              s.remove_prefix(comma + 1);
            }
          },
          [&v] { return fmt::format("{}", fmt::join(v, ",")); }};
}

using Section = std::vector<std::pair<std::string, Binding>>;

std::map<std::string, Section> bindings(ScenarioConfig& c) {
  std::map<std::string, Section> m;
  m["sim"] = {
      {"protocol", choice(c.protocol, {{"qgrp", Protocol::Qgrp}, {"aodv", Protocol::Aodv}})},
      {"duration", num(c.sim_duration)},
      {"warm_up", num(c.warm_up)},
  };
  m["topology"] = {
      {"nodes", integer(c.topology.nodes)},
      {"field", num(c.topology.field)},
      {"tx_range", num(c.topology.tx_range)},
      {"seed", integer(c.topology.seed)},
  };
  m["mac"] = {
      {"retries", integer(c.mac.retries)},
      {"queue_capacity", integer(c.mac.queue_capacity)},
      {"sense_range", num(c.mac.sense_range)},
      {"lossless", boolean(c.mac.lossless)},
  };
  m["radio"] = {
      {"b_no", num(c.radio.b_no)},
      {"e_elec", num(c.radio.e_elec)},
      {"e_amp", num(c.radio.e_amp)},
      {"initial_energy", num(c.radio.initial_energy)},
  };
  m["pkt"] = {
      {"hello_bits", integer(c.packets.hello_bits)},
      {"rreq_bits", integer(c.packets.rreq_bits)},
      {"rrep_bits", integer(c.packets.rrep_bits)},
      {"notify_bits", integer(c.packets.notify_bits)},
      {"data_header_bits", integer(c.packets.data_header_bits)},
      {"aodv_rreq_bits", integer(c.packets.aodv_rreq_bits)},
      {"aodv_rrep_bits", integer(c.packets.aodv_rrep_bits)},
      {"aodv_rerr_bits", integer(c.packets.aodv_rerr_bits)},
  };
  m["dcf"] = {
      {"cw_min", integer(c.dcf.params.cw_min)},
      {"cw_max", integer(c.dcf.params.cw_max)},
      {"payload_duration", num(c.dcf.params.payload_duration)},
      {"virtual_slot", num(c.dcf.params.virtual_slot)},
      {"carrier_sense_radius", num(c.dcf.params.carrier_sense_radius)},
      {"interference_radius", num(c.dcf.params.interference_radius)},
      {"model", choice(c.dcf.model, {{"reduced", dcf::CollisionModel::Reduced},
                                     {"full", dcf::CollisionModel::Full}})},
      {"table", choice(c.dcf.table, {{"reference", TableSource::Reference},
                                     {"solved", TableSource::Solved}})},
  };
  m["qgrp"] = {
      {"alpha", num(c.qgrp.weights.alpha)},
      {"beta", num(c.qgrp.weights.beta)},
      {"policy", choice(c.qgrp.policy, {{"retry", proto::SourcePolicy::Retry},
                                        {"reduce", proto::SourcePolicy::Reduce}})},
      {"hello_interval", num(c.qgrp.hello_interval)},
      {"hello_jitter", num(c.qgrp.hello_jitter)},
      {"hello_expiry_intervals", integer(c.qgrp.hello_expiry_intervals)},
      {"observation_window", num(c.qgrp.observation_window)},
      {"rrep_wait", num(c.qgrp.rrep_wait)},
      {"max_retries", integer(c.qgrp.max_retries)},
      {"retry_backoff", num(c.qgrp.retry_backoff)},
      {"buffer_capacity", integer(c.qgrp.buffer_capacity)},
      {"reservation_timeout", num(c.qgrp.reservation_timeout)},
      {"route_lifetime", num(c.qgrp.route_lifetime)},
  };
  m["aodv"] = {
      {"rrep_wait", num(c.aodv.rrep_wait)},
      {"max_retries", integer(c.aodv.max_retries)},
      {"buffer_capacity", integer(c.aodv.buffer_capacity)},
      {"route_lifetime", num(c.aodv.route_lifetime)},
  };
  m["experiment"] = {
      {"repetitions", integer(c.experiment.repetitions)},
      {"sizes", int_list(c.experiment.sizes)},
  };
  return m;
}

Section flow_bindings(FlowConfig& f) {
  return {
      {"rate", num(f.rate)},
      {"packet_bits", num(f.packet_bits)},
      {"start", num(f.start)},
      {"stop", num(f.stop)},
  };
}

Binding* find(Section& section, std::string_view key) {
  for (auto& [k, b] : section) {
    if (k == key) {
      return &b;
    }
  }
  return nullptr;
}

void require(bool ok, const std::string& key, const std::string& constraint) {
  if (!ok) {
    throw ConfigValidationError(key, constraint);
  }
}

}  // namespace

ScenarioConfig parse_config(std::string_view text) {
  ScenarioConfig c;
  auto table = bindings(c);
  std::string section = "sim";
  bool saw_flow = false;
  bool saw_alpha = false;
  bool saw_beta = false;
  Section current_flow;

  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    const std::string_view raw = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);

    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const int indent = static_cast<int>(raw.find_first_not_of(" \t")) + 1;

    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigParseError(line_no, indent, "unterminated section header");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section == "flow") {
        if (!saw_flow) {
          c.flows.clear();
          saw_flow = true;
        }
        c.flows.emplace_back();
        // bindings hold references, so rebuild after every push_back
        table = bindings(c);
      } else if (table.find(section) == table.end()) {
        throw ConfigParseError(line_no, indent + 1, fmt::format("unknown section '{}'", section));
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigParseError(line_no, indent, "expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const int eq_col = static_cast<int>(line.data() - raw.data() + eq) + 1;
    const int value_col =
        value.empty() ? eq_col + 1 : static_cast<int>(value.data() - raw.data()) + 1;

    Binding* b = nullptr;
    if (section == "flow") {
      current_flow = flow_bindings(c.flows.back());
      b = find(current_flow, key);
    } else {
      b = find(table[section], key);
    }
    if (b == nullptr) {
      throw ConfigParseError(line_no, indent, fmt::format("unknown key '{}.{}'", section, key));
    }
    if (value.empty()) {
      throw ConfigParseError(line_no, value_col, fmt::format("missing value for '{}'", key));
    }
    try {
      b->set(value);
    } catch (const BadValue& e) {
      throw ConfigParseError(line_no, value_col, fmt::format("{}.{}: {}", section, key, e.what));
    }
    if (section == "qgrp" && key == "alpha") {
      saw_alpha = true;
    }
    if (section == "qgrp" && key == "beta") {
      saw_beta = true;
    }
  }

  if (saw_alpha && !saw_beta) {
    c.qgrp.weights.beta = 1.0 - c.qgrp.weights.alpha;
  } else if (saw_beta && !saw_alpha) {
    c.qgrp.weights.alpha = 1.0 - c.qgrp.weights.beta;
  }
  validate(c);
  return c;
}

std::string emit_config(const ScenarioConfig& config) {
  ScenarioConfig c = config;
  auto table = bindings(c);
  std::string out;
  const auto emit_section = [&out](const std::string& name, Section& s) {
    out += fmt::format("[{}]\n", name);
    for (auto& [k, b] : s) {
      out += fmt::format("{} = {}\n", k, b.get());
    }
    out += "\n";
  };
  for (const char* name :
       {"sim", "topology", "mac", "radio", "pkt", "dcf", "qgrp", "aodv", "experiment"}) {
    emit_section(name, table[name]);
  }
  for (auto& f : c.flows) {
    Section s = flow_bindings(f);
    emit_section("flow", s);
  }
  return out;
}

void validate(const ScenarioConfig& c) {
  require(c.sim_duration > 0.0, "sim.duration", "must be > 0");
  require(c.warm_up >= 0.0 && c.warm_up < c.sim_duration, "sim.warm_up",
          "must satisfy 0 <= warm_up < duration");

  require(c.topology.nodes >= 2, "topology.nodes", "must be >= 2");
  require(c.topology.field > 0.0, "topology.field", "must be > 0");
  require(c.topology.tx_range > 0.0, "topology.tx_range", "must be > 0");

  for (std::size_t i = 0; i < c.flows.size(); ++i) {
    const auto& f = c.flows[i];
    const auto key = [i](const char* k) { return fmt::format("flow[{}].{}", i, k); };
    require(f.rate > 0.0, key("rate"), "must be > 0");
    require(f.packet_bits > 0.0, key("packet_bits"), "must be > 0");
    require(f.start >= 0.0, key("start"), "must be >= 0");
    require(f.stop > f.start, key("stop"), "must be > start");
  }
  require(c.flows.size() + 1 <= static_cast<std::size_t>(c.topology.nodes), "flow",
          "needs one distinct source per flow besides the sink");

  require(c.mac.retries >= 0, "mac.retries", "must be >= 0");
  require(c.mac.queue_capacity >= 1, "mac.queue_capacity", "must be >= 1");
  require(c.mac.sense_range >= 0.0, "mac.sense_range", "must be >= 0");

  require(c.radio.b_no > 0.0, "radio.b_no", "must be > 0");
  require(c.radio.e_elec >= 0.0, "radio.e_elec", "must be >= 0");
  require(c.radio.e_amp >= 0.0, "radio.e_amp", "must be >= 0");
  require(c.radio.initial_energy > 0.0, "radio.initial_energy", "must be > 0");

  const PacketSizes& p = c.packets;
  require(p.hello_bits > 0, "pkt.hello_bits", "must be > 0");
  require(p.rreq_bits > 0, "pkt.rreq_bits", "must be > 0");
  require(p.rrep_bits > 0, "pkt.rrep_bits", "must be > 0");
  require(p.notify_bits > 0, "pkt.notify_bits", "must be > 0");
  require(p.data_header_bits >= 0, "pkt.data_header_bits", "must be >= 0");
  require(p.aodv_rreq_bits > 0, "pkt.aodv_rreq_bits", "must be > 0");
  require(p.aodv_rrep_bits > 0, "pkt.aodv_rrep_bits", "must be > 0");
  require(p.aodv_rerr_bits > 0, "pkt.aodv_rerr_bits", "must be > 0");

  try {
    c.dcf.params.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigValidationError("dcf", e.what());
  }

  const auto& w = c.qgrp.weights;
  require(w.alpha >= 0.0 && w.alpha <= 1.0, "qgrp.alpha", "must lie in [0, 1]");
  require(w.beta >= 0.0 && w.beta <= 1.0, "qgrp.beta", "must lie in [0, 1]");
  require(std::abs(w.alpha + w.beta - 1.0) <= 1e-12, "qgrp.beta",
          fmt::format("alpha + beta must equal 1 (got {})", w.alpha + w.beta));
  const QgrpConfig& q = c.qgrp;
  require(q.hello_interval > 0.0, "qgrp.hello_interval", "must be > 0");
  require(q.hello_jitter >= 0.0 && q.hello_jitter < 1.0, "qgrp.hello_jitter",
          "must lie in [0, 1)");
  require(q.hello_expiry_intervals >= 1, "qgrp.hello_expiry_intervals", "must be >= 1");
  require(q.observation_window > 0.0, "qgrp.observation_window", "must be > 0");
  require(q.rrep_wait > 0.0, "qgrp.rrep_wait", "must be > 0");
  require(q.max_retries >= 0, "qgrp.max_retries", "must be >= 0");
  require(q.retry_backoff > 0.0, "qgrp.retry_backoff", "must be > 0");
  require(q.buffer_capacity >= 1, "qgrp.buffer_capacity", "must be >= 1");
  require(q.reservation_timeout > 0.0, "qgrp.reservation_timeout", "must be > 0");
  require(q.route_lifetime > 0.0, "qgrp.route_lifetime", "must be > 0");

  require(c.aodv.rrep_wait > 0.0, "aodv.rrep_wait", "must be > 0");
  require(c.aodv.max_retries >= 0, "aodv.max_retries", "must be >= 0");
  require(c.aodv.buffer_capacity >= 1, "aodv.buffer_capacity", "must be >= 1");
  require(c.aodv.route_lifetime > 0.0, "aodv.route_lifetime", "must be > 0");

  require(c.experiment.repetitions >= 1, "experiment.repetitions", "must be >= 1");
  require(!c.experiment.sizes.empty(), "experiment.sizes", "must not be empty");
  for (int n : c.experiment.sizes) {
    require(n >= static_cast<int>(c.flows.size()) + 1, "experiment.sizes",
            "every size needs room for the flow sources and the sink");
  }
}

}  // namespace qgrp
