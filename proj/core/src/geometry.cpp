#include "qgrp/geometry.hpp"

#include <cmath>
#include <numbers>

namespace qgrp::geo {

double distance(const Position& a, const Position& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double deviation_angle(const GeoContext& ctx) {
  if (ctx.self_pos == ctx.sink_pos) {
    throw DegenerateGeometry("deviation angle undefined: node sits on the sink");
  }
  if (ctx.self_pos == ctx.neighbor_pos) {
    throw DegenerateGeometry("deviation angle undefined: neighbor sits on the node");
  }
  const double ux = ctx.sink_pos.x - ctx.self_pos.x;
  const double uy = ctx.sink_pos.y - ctx.self_pos.y;
  const double vx = ctx.neighbor_pos.x - ctx.self_pos.x;
  const double vy = ctx.neighbor_pos.y - ctx.self_pos.y;
  // atan2 of |cross| and dot stays accurate near 0 and pi, unlike acos.
  return std::atan2(std::abs(ux * vy - uy * vx), ux * vx + uy * vy);
}

bool is_forward_progress(const GeoContext& ctx) {
  return deviation_angle(ctx) <= std::numbers::pi / 2.0;
}

}  // namespace qgrp::geo
