#pragma once

#include <stdexcept>

namespace qgrp::geo {

/// Planar position in meters.
struct Position {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

/// The three points a forwarding decision looks at.
struct GeoContext {
  Position self_pos;
  Position neighbor_pos;
  Position sink_pos;
};

class DegenerateGeometry : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

double distance(const Position& a, const Position& b);

/// Angle between (self -> sink) and (self -> neighbor), in [0, pi].
/// Throws DegenerateGeometry if the neighbor or the sink sits on self.
double deviation_angle(const GeoContext& ctx);

/// True iff the deviation angle is at most pi/2.
bool is_forward_progress(const GeoContext& ctx);

}  // namespace qgrp::geo
