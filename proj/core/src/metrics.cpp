#include "qgrp/metrics.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <cmath>
#include <map>
#include <set>
#include <utility>

namespace qgrp::metrics {

const std::array<std::string_view, kMetricCount>& metric_names() {
  static const std::array<std::string_view, kMetricCount> names{
      "throughput",           "pdr",
      "mean_delay",           "mean_residual_energy",
      "energy_efficiency",    "std_energy_deviation"};
  return names;
}

std::array<std::optional<double>, kMetricCount> metric_values(const RunMetrics& m) {
  return {m.throughput, m.pdr, m.mean_delay, m.mean_residual_energy, m.energy_efficiency,
          m.std_energy_deviation};
}

RunMetrics compute_metrics(const EventLog& log, double warm_up, double duration) {
  RunMetrics m;
  std::set<std::pair<FlowId, std::int64_t>> delivered;
  std::set<NodeId> senders;  // sources and forwarders
  std::set<NodeId> sinks;
  std::map<NodeId, std::pair<double, double>> residual;  // node -> (final, initial)
  double bits_in_window = 0.0;
  double delay_sum = 0.0;

  for (const auto& r : log) {
    switch (r.kind) {
      case EventKind::Originate:
        ++m.originated;
        senders.insert(r.node);
        break;
      case EventKind::Deliver:
        sinks.insert(r.node);
        if (delivered.emplace(r.flow, r.seq).second) {
          delay_sum += r.time - r.value;
          if (r.time >= warm_up && r.time <= duration) {
            bits_in_window += r.value2;
          }
        }
        break;
      case EventKind::Tx:
        if (r.code == RecordCode::Data) {
          senders.insert(r.node);
        }
        break;
      case EventKind::Residual:
        residual[r.node] = {r.value, r.value2};
        break;
      default:
        break;
    }
  }

  m.delivered = delivered.size();
  m.throughput = duration > warm_up ? bits_in_window / (duration - warm_up) : 0.0;
  if (m.originated > 0) {
    m.pdr = static_cast<double>(m.delivered) / static_cast<double>(m.originated);
  }
  if (m.delivered > 0) {
    m.mean_delay = delay_sum / static_cast<double>(m.delivered);
    double spent = 0.0;
    for (NodeId n : senders) {
      if (sinks.count(n) == 0) {
        if (auto it = residual.find(n); it != residual.end()) {
          spent += it->second.second - it->second.first;
        }
      }
    }
    m.energy_efficiency = spent / static_cast<double>(m.delivered);
  }
  if (!residual.empty()) {
    double sum = 0.0;
    for (const auto& [n, e] : residual) {
      sum += e.first;
    }
    const double mean = sum / static_cast<double>(residual.size());
    double sq = 0.0;
    for (const auto& [n, e] : residual) {
      sq += (e.first - mean) * (e.first - mean);
    }
    m.mean_residual_energy = mean;
    m.std_energy_deviation = std::sqrt(sq / static_cast<double>(residual.size()));
  }
  return m;
}

Aggregate aggregate(const std::vector<RunMetrics>& runs) {
  Aggregate agg{};
  for (std::size_t k = 0; k < kMetricCount; ++k) {
    std::vector<double> xs;
    for (const auto& r : runs) {
      if (const auto v = metric_values(r)[k]) {
        xs.push_back(*v);
      } else {
        ++agg[k].undefined;
      }
    }
    agg[k].samples = static_cast<int>(xs.size());
    if (xs.empty()) {
      continue;
    }
    double sum = 0.0;
    for (double x : xs) {
      sum += x;
    }
    agg[k].mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
      double sq = 0.0;
      for (double x : xs) {
        sq += (x - agg[k].mean) * (x - agg[k].mean);
      }
      const double sd = std::sqrt(sq / static_cast<double>(xs.size() - 1));
      agg[k].std_error = sd / std::sqrt(static_cast<double>(xs.size()));
    }
  }
  return agg;
}

namespace {
std::string cell(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : "NA"; }
}  // namespace

std::string csv_header() {
  return fmt::format("protocol,nodes,seed,{}", fmt::join(metric_names(), ","));
}

std::string csv_row(std::string_view protocol, int nodes, std::string_view seed,
                    const std::array<std::optional<double>, kMetricCount>& values) {
  std::string out = fmt::format("{},{},{}", protocol, nodes, seed);
  for (const auto& v : values) {
    out += ',';
    out += cell(v);
  }
  return out;
}

std::string csv_avg_row(std::string_view protocol, int nodes, const Aggregate& agg) {
  std::array<std::optional<double>, kMetricCount> values;
  for (std::size_t k = 0; k < kMetricCount; ++k) {
    if (agg[k].samples > 0) {
      values[k] = agg[k].mean;
    }
  }
  return csv_row(protocol, nodes, "avg", values);
}

std::string summary_header() {
  std::string out = "protocol,nodes,runs";
  for (auto name : metric_names()) {
    out += fmt::format(",{0}_mean,{0}_se,{0}_na", name);
  }
  return out;
}

std::string summary_row(std::string_view protocol, int nodes, int runs, const Aggregate& agg) {
  std::string out = fmt::format("{},{},{}", protocol, nodes, runs);
  for (const auto& s : agg) {
    const std::optional<double> mean = s.samples > 0 ? std::optional<double>(s.mean) : std::nullopt;
    out += fmt::format(",{},{},{}", cell(mean), s.std_error, s.undefined);
  }
  return out;
}

}  // namespace qgrp::metrics
