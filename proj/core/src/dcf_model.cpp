#include "qgrp/dcf_model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace qgrp::dcf {

namespace {

constexpr double kDenominatorFloor = 1e-12;

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

// 1 - (1 - p)^n without cancellation for small p.
double one_minus_power(double p, double n) {
  if (n <= 0.0) {
    return 0.0;
  }
  if (p >= 1.0) {
    return 1.0;
  }
  return -std::expm1(n * std::log1p(-p));
}

void check_axis(const std::vector<double>& axis, const char* name) {
  if (axis.empty()) {
    throw std::invalid_argument(fmt::format("collision table: {} axis is empty", name));
  }
  for (std::size_t i = 1; i < axis.size(); ++i) {
    if (!(axis[i] > axis[i - 1])) {
      throw std::invalid_argument(
          fmt::format("collision table: {} axis not strictly increasing at index {}", name, i));
    }
  }
}

}  // namespace

int DcfParams::backoff_stages() const {
  int stages = 0;
  for (int cw = cw_min; cw < cw_max; cw *= 2) {
    ++stages;
  }
  return stages;
}

void DcfParams::validate() const {
  if (cw_min < 1) {
    throw std::invalid_argument("dcf.cw_min must be >= 1");
  }
  if (cw_max < cw_min) {
    throw std::invalid_argument("dcf.cw_max must be >= dcf.cw_min");
  }
  if (cw_max % cw_min != 0 || !is_power_of_two(cw_max / cw_min)) {
    throw std::invalid_argument("dcf.cw_max / dcf.cw_min must be a power of 2");
  }
  if (!(payload_duration > 0.0)) {
    throw std::invalid_argument("dcf.payload_duration must be > 0");
  }
  if (!(virtual_slot > 0.0)) {
    throw std::invalid_argument("dcf.virtual_slot must be > 0");
  }
  if (!(carrier_sense_radius > 0.0) || !(interference_radius > 0.0)) {
    throw std::invalid_argument("dcf radii must be > 0");
  }
}

DegenerateDenominator::DegenerateDenominator(double p_c)
    : DcfError(fmt::format("attempt probability denominator vanishes at p_c = {}", p_c)),
      p_c_(p_c) {}

NonConvergence::NonConvergence(double last_residual, int iterations)
    : DcfError(fmt::format("fixed point did not converge after {} iterations (residual {})",
                           iterations, last_residual)),
      last_residual_(last_residual),
      iterations_(iterations) {}

AttemptProbability attempt_probability(double p_c, const DcfParams& params) {
  if (!(p_c >= 0.0 && p_c <= 1.0)) {
    throw std::invalid_argument(fmt::format("p_c = {} outside [0, 1]", p_c));
  }
  const double m = params.backoff_stages();
  const double numerator = 2.0 - 4.0 * p_c;
  const double denominator = (1.0 - 2.0 * p_c) * (params.cw_max + 1.0) +
                             p_c * params.cw_min * (1.0 - std::pow(2.0 * p_c, m));
  if (std::abs(denominator) < kDenominatorFloor) {
    throw DegenerateDenominator(p_c);
  }
  const double raw = numerator / denominator;
  AttemptProbability out;
  out.value = std::clamp(raw, 0.0, 1.0);
  out.clamped = out.value != raw;
  return out;
}

double collision_probability(double p_a, const RegionCounts& counts, const DcfParams& params,
                             CollisionModel model) {
  if (!(p_a >= 0.0 && p_a <= 1.0)) {
    throw std::invalid_argument(fmt::format("p_a = {} outside [0, 1]", p_a));
  }
  if (counts.n_cs_and_in < 0.0 || counts.n_cs_minus_in < 0.0) {
    throw std::invalid_argument("region counts must be non-negative");
  }
  double exponent = counts.n_cs_and_in;
  if (model == CollisionModel::Full) {
    exponent += counts.n_cs_minus_in * params.payload_duration / params.virtual_slot;
  }
  return one_minus_power(p_a, exponent);
}

double collision_map(double p_c, const RegionCounts& counts, const DcfParams& params,
                     CollisionModel model) {
  return collision_probability(attempt_probability(p_c, params).value, counts, params, model);
}

FixedPointSolution solve_fixed_point(const RegionCounts& counts, const DcfParams& params,
                                     const SolverOptions& options) {
  if (!(options.tolerance > 0.0)) {
    throw std::invalid_argument("solver tolerance must be > 0");
  }
  if (options.max_iterations < 1) {
    throw std::invalid_argument("solver max_iterations must be >= 1");
  }
  params.validate();

  // P_a is 0/0 at exactly p = 1/2; evaluate one step off it.
  const auto residual_at = [&](double& p) {
    for (;;) {
      try {
        return collision_map(p, counts, params, options.model) - p;
      } catch (const DegenerateDenominator&) {
        p = p < 1.0 ? std::nextafter(p + 1e-9, 2.0) : p - 1e-9;
      }
    }
  };
  const auto finish = [&](double p, double h, int iterations, bool bisection) {
    FixedPointSolution s;
    s.p_c = p;
    s.p_a = attempt_probability(p, params).value;
    s.residual = std::abs(h);
    s.iterations = iterations;
    s.bisection = bisection;
    return s;
  };

  const int bisection_reserve = std::min(200, options.max_iterations / 2);
  const int damped_budget = options.max_iterations - bisection_reserve;

  double p = 0.0;
  double h = 0.0;
  int iterations = 0;
  while (iterations < damped_budget) {
    h = residual_at(p);
    ++iterations;
    if (std::abs(h) <= options.tolerance) {
      return finish(p, h, iterations, false);
    }
    p = std::clamp(p + options.damping * h, 0.0, 1.0);
  }

  // h(0) = g(0) >= 0 and h(1) = g(1) - 1 <= 0, so [0, 1] always brackets a root.
  double lo = 0.0;
  double hi = 1.0;
  double best_h = h;
  while (iterations < options.max_iterations) {
    double mid = 0.5 * (lo + hi);
    const double hm = residual_at(mid);
    ++iterations;
    if (std::abs(hm) < std::abs(best_h)) {
      best_h = hm;
    }
    if (std::abs(hm) <= options.tolerance) {
      return finish(mid, hm, iterations, true);
    }
    if (hm > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (!(hi - lo > std::numeric_limits<double>::epsilon() * 0.5)) {
      break;
    }
  }
  throw NonConvergence(std::abs(best_h), iterations);
}

double lens_area(double radius_a, double radius_b, double separation) {
  const double d = std::abs(separation);
  const double r1 = radius_a;
  const double r2 = radius_b;
  if (d >= r1 + r2) {
    return 0.0;
  }
  if (d <= std::abs(r1 - r2)) {
    const double r = std::min(r1, r2);
    return std::numbers::pi * r * r;
  }
  const double c1 = std::clamp((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1), -1.0, 1.0);
  const double c2 = std::clamp((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2), -1.0, 1.0);
  const double kite = 0.5 * std::sqrt(std::max(
                                0.0, (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)));
  return r1 * r1 * std::acos(c1) + r2 * r2 * std::acos(c2) - kite;
}

RegionCounts region_counts(double density, double distance, const DcfParams& params) {
  if (density < 0.0) {
    throw std::invalid_argument("density must be >= 0");
  }
  if (distance < 0.0) {
    throw std::invalid_argument("distance must be >= 0");
  }
  const double rcs = params.carrier_sense_radius;
  const double lens = lens_area(rcs, params.interference_radius, distance);
  RegionCounts counts;
  counts.n_cs_and_in = density * lens;
  counts.n_cs_minus_in = density * std::max(0.0, std::numbers::pi * rcs * rcs - lens);
  return counts;
}

CollisionTable::CollisionTable(std::vector<double> densities, std::vector<double> distances,
                               std::vector<std::vector<double>> p_c)
    : densities_(std::move(densities)), distances_(std::move(distances)), p_c_(std::move(p_c)) {
  check_axis(densities_, "density");
  check_axis(distances_, "distance");
  if (p_c_.size() != densities_.size()) {
    throw std::invalid_argument("collision table: grid rows do not match density axis");
  }
  for (const auto& row : p_c_) {
    if (row.size() != distances_.size()) {
      throw std::invalid_argument("collision table: grid columns do not match distance axis");
    }
    for (double v : row) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument(fmt::format("collision table: entry {} outside [0, 1]", v));
      }
    }
  }
}

double CollisionTable::at(std::size_t density_index, std::size_t distance_index) const {
  return p_c_.at(density_index).at(distance_index);
}

double CollisionTable::lookup(double density, double distance) const {
  if (empty()) {
    throw std::logic_error("lookup on an empty collision table");
  }
  std::size_t row = 0;
  for (std::size_t i = 1; i < densities_.size(); ++i) {
    if (std::abs(density - densities_[i]) < std::abs(density - densities_[row])) {
      row = i;
    }
  }
  const auto& values = p_c_[row];
  if (distance <= distances_.front()) {
    return values.front();
  }
  if (distance >= distances_.back()) {
    return values.back();
  }
  const auto upper = std::lower_bound(distances_.begin(), distances_.end(), distance);
  const auto hi = static_cast<std::size_t>(upper - distances_.begin());
  if (*upper == distance) {
    return values[hi];
  }
  const std::size_t lo = hi - 1;
  const double w_lo = 1.0 / (distance - distances_[lo]);
  const double w_hi = 1.0 / (distances_[hi] - distance);
  const double v = (w_lo * values[lo] + w_hi * values[hi]) / (w_lo + w_hi);
  return std::clamp(v, std::min(values[lo], values[hi]), std::max(values[lo], values[hi]));
}

void CollisionTable::write_csv(std::ostream& out) const {
  out << "density,distance_m,p_c\n";
  for (std::size_t i = 0; i < densities_.size(); ++i) {
    for (std::size_t j = 0; j < distances_.size(); ++j) {
      out << fmt::format("{},{},{:.6f}\n", densities_[i], distances_[j], p_c_[i][j]);
    }
  }
}

CollisionTable CollisionTable::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "density,distance_m,p_c") {
    throw std::runtime_error("collision table csv: missing header 'density,distance_m,p_c'");
  }
  std::vector<double> densities;
  std::vector<double> distances;
  std::vector<std::vector<double>> grid;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::istringstream fields(line);
    double density = 0.0;
    double distance = 0.0;
    double p = 0.0;
    char c1 = 0;
    char c2 = 0;
    if (!(fields >> density >> c1 >> distance >> c2 >> p) || c1 != ',' || c2 != ',') {
      throw std::runtime_error(fmt::format("collision table csv: malformed line {}", line_no));
    }
    if (densities.empty() || densities.back() != density) {
      densities.push_back(density);
      grid.emplace_back();
    }
    if (densities.size() == 1) {
      distances.push_back(distance);
    } else if (grid.back().size() >= distances.size() ||
               distances[grid.back().size()] != distance) {
      throw std::runtime_error(
          fmt::format("collision table csv: line {} breaks the grid layout", line_no));
    }
    grid.back().push_back(p);
  }
  return CollisionTable(std::move(densities), std::move(distances), std::move(grid));
}

CollisionTable build_table(const std::vector<double>& densities_per_km2,
                           const std::vector<double>& distances, const DcfParams& params,
                           const SolverOptions& options) {
  check_axis(densities_per_km2, "density");
  check_axis(distances, "distance");
  std::vector<std::vector<double>> grid(densities_per_km2.size(),
                                        std::vector<double>(distances.size()));
  for (std::size_t i = 0; i < densities_per_km2.size(); ++i) {
    for (std::size_t j = 0; j < distances.size(); ++j) {
      const auto counts = region_counts(densities_per_km2[i] * 1e-6, distances[j], params);
      try {
        grid[i][j] = solve_fixed_point(counts, params, options).p_c;
      } catch (const DcfError& e) {
        throw DcfError(fmt::format("cell (density {}, distance {} m): {}", densities_per_km2[i],
                                   distances[j], e.what()));
      }
    }
  }
  return CollisionTable(densities_per_km2, distances, std::move(grid));
}

std::vector<double> default_density_axis() { return {90.0, 100.0, 110.0, 120.0}; }

std::vector<double> default_distance_axis() { return {100.0, 150.0, 200.0, 250.0}; }

CollisionTable reference_table() {
  return CollisionTable(default_density_axis(), default_distance_axis(),
                        {{0.1444, 0.2535, 0.3319, 0.3910},
                         {0.1781, 0.2727, 0.3436, 0.4062},
                         {0.1781, 0.2727, 0.3544, 0.4198},
                         {0.1781, 0.2898, 0.3739, 0.4323}});
}

}  // namespace qgrp::dcf
