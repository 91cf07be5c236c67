#include "qgrp/link_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qgrp::link {

double estimate_bandwidth(const ChannelObservation& obs, double p_c, double b_no,
                          double backoff_overhead) {
  if (!(obs.window > 0.0)) {
    throw std::invalid_argument("observation window must be > 0");
  }
  const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(obs.local_idle_fraction) || !in_unit(obs.peer_idle_fraction) || !in_unit(p_c) ||
      !in_unit(backoff_overhead)) {
    throw std::invalid_argument("idle fractions, p_c and overhead must lie in [0, 1]");
  }
  if (b_no < 0.0) {
    throw std::invalid_argument("nominal capacity must be >= 0");
  }
  const double b = b_no * obs.local_idle_fraction * obs.peer_idle_fraction * (1.0 - p_c) *
                   (1.0 - backoff_overhead);
  return std::clamp(b, 0.0, b_no);
}

double expected_backoff_slots(double p_c, const dcf::DcfParams& params) {
  if (!(p_c >= 0.0 && p_c < 1.0)) {
    throw std::invalid_argument("expected backoff needs 0 <= p_c < 1");
  }
  const int m = params.backoff_stages();
  double slots = 0.0;
  double weight = 1.0;
  double cw = params.cw_min;
  for (int i = 0; i <= m; ++i) {
    slots += weight * (std::min(cw, static_cast<double>(params.cw_max)) - 1.0) / 2.0;
    weight *= p_c;
    cw *= 2.0;
  }
  return slots;
}

double average_backoff_overhead(double p_c, const dcf::DcfParams& params) {
  const double backoff = expected_backoff_slots(p_c, params) * params.virtual_slot;
  return backoff / (params.payload_duration + backoff);
}

std::vector<LinkEstimate> refresh_estimates(std::span<const NeighborObservation> neighbors,
                                            double local_idle_fraction, const geo::Position& self,
                                            double now, const dcf::CollisionTable& table,
                                            double density_per_km2,
                                            const dcf::DcfParams& params,
                                            const EstimatorSettings& settings) {
  std::vector<LinkEstimate> out;
  out.reserve(neighbors.size());
  for (const auto& n : neighbors) {
    if (now - n.last_heard > settings.hello_expiry) {
      continue;
    }
    const double d = geo::distance(self, n.position);
    if (d > settings.tx_range) {
      continue;
    }
    const double p_c = table.lookup(density_per_km2, d);
    ChannelObservation obs;
    obs.window = settings.window;
    obs.local_idle_fraction = local_idle_fraction;
    obs.peer_idle_fraction = n.idle_fraction;
    LinkEstimate e;
    e.peer = n.peer;
    e.p_c_used = p_c;
    e.available_bandwidth =
        estimate_bandwidth(obs, p_c, settings.b_no, average_backoff_overhead(p_c, params));
    e.last_update = now;
    out.push_back(e);
  }
  return out;
}

void BusyTracker::add_busy(double now, double start, double end) {
  if (!(end > start)) {
    return;
  }
  while (!intervals_.empty() && intervals_.front().second <= now - window_) {
    intervals_.pop_front();
  }
  intervals_.emplace_back(start, end);
}

double BusyTracker::idle_fraction(double now) const {
  const double lo = std::max(0.0, now - window_);
  const double span = now - lo;
  if (!(span > 0.0)) {
    return 1.0;
  }
  std::vector<std::pair<double, double>> clipped;
  clipped.reserve(intervals_.size());
  for (const auto& [s, e] : intervals_) {
    const double a = std::max(s, lo);
    const double b = std::min(e, now);
    if (b > a) {
      clipped.emplace_back(a, b);
    }
  }
  std::sort(clipped.begin(), clipped.end());
  double busy = 0.0;
  double cur_start = 0.0;
  double cur_end = -1.0;
  for (const auto& [a, b] : clipped) {
    if (a > cur_end) {
      if (cur_end > cur_start) {
        busy += cur_end - cur_start;
      }
      cur_start = a;
      cur_end = b;
    } else {
      cur_end = std::max(cur_end, b);
    }
  }
  if (cur_end > cur_start) {
    busy += cur_end - cur_start;
  }
  return std::clamp(1.0 - busy / span, 0.0, 1.0);
}

}  // namespace qgrp::link
