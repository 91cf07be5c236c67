#pragma once

#include "qgrp/event_log.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qgrp::metrics {

/// Undefined values (no packets originated or delivered) are empty optionals.
struct RunMetrics {
  double throughput = 0.0;  // bit/s
  std::optional<double> pdr;
  std::optional<double> mean_delay;  // s
  double mean_residual_energy = 0.0;  // J
  std::optional<double> energy_efficiency;  // J per unique delivered packet
  double std_energy_deviation = 0.0;  // J
  std::uint64_t originated = 0;
  std::uint64_t delivered = 0;  // unique (flow, seq)
};

inline constexpr std::size_t kMetricCount = 6;

/// Column names in CSV order.
const std::array<std::string_view, kMetricCount>& metric_names();
std::array<std::optional<double>, kMetricCount> metric_values(const RunMetrics& m);

/// Throughput counts deliveries inside [warm_up, duration]; everything else
/// uses the whole log. Energy figures come from `residual` records.
RunMetrics compute_metrics(const EventLog& log, double warm_up, double duration);

struct MetricSummary {
  double mean = 0.0;
  double std_error = 0.0;
  int samples = 0;    // defined values averaged
  int undefined = 0;  // runs where the metric was undefined
};

using Aggregate = std::array<MetricSummary, kMetricCount>;

/// Arithmetic mean per metric over its defined values; standard error is the
/// sample deviation over sqrt(samples) (0 for a single sample).
Aggregate aggregate(const std::vector<RunMetrics>& runs);

/// `protocol,nodes,seed,<six metrics>`; undefined values print as NA.
std::string csv_header();
std::string csv_row(std::string_view protocol, int nodes, std::string_view seed,
                    const std::array<std::optional<double>, kMetricCount>& values);
/// Aggregate row with seed=avg.
std::string csv_avg_row(std::string_view protocol, int nodes, const Aggregate& agg);

/// `protocol,nodes,runs,<metric>_mean,<metric>_se,<metric>_na...`
std::string summary_header();
std::string summary_row(std::string_view protocol, int nodes, int runs, const Aggregate& agg);

}  // namespace qgrp::metrics
