#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace qgrp::dcf {

/// Contention-window and geometry parameters of the 802.11 DCF collision model.
///
/// Radii are in meters, durations in seconds. The backoff stage count is
/// derived: cw_max / cw_min must be an exact power of two.
struct DcfParams {
  int cw_min = 32;
  int cw_max = 1024;
  double payload_duration = 4e-3;  // V: header + payload airtime
  double virtual_slot = 50e-6;     // T_v
  double carrier_sense_radius = 550.0;
  double interference_radius = 250.0;

  /// log2(cw_max / cw_min).
  int backoff_stages() const;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Which collision equation couples P_a back to P_c.
enum class CollisionModel {
  Reduced,  // interference region assumed inside the carrier-sense region
  Full,     // adds the hidden-area factor weighted by V / T_v
};

/// Expected node counts in the two regions that drive collisions.
struct RegionCounts {
  double n_cs_and_in = 0.0;
  double n_cs_minus_in = 0.0;
};

struct AttemptProbability {
  double value = 0.0;
  bool clamped = false;
};

struct FixedPointSolution {
  double p_a = 0.0;
  double p_c = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool bisection = false;  // damped iteration failed and the bracketing fallback ran
};

struct SolverOptions {
  double tolerance = 1e-9;
  int max_iterations = 10000;
  double damping = 0.5;
  CollisionModel model = CollisionModel::Reduced;
};

class DcfError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The attempt-probability denominator vanished (P_c at the removable 0/0 point).
class DegenerateDenominator : public DcfError {
 public:
  explicit DegenerateDenominator(double p_c);
  double p_c() const { return p_c_; }

 private:
  double p_c_;
};

class NonConvergence : public DcfError {
 public:
  NonConvergence(double last_residual, int iterations);
  double last_residual() const { return last_residual_; }
  int iterations() const { return iterations_; }

 private:
  double last_residual_;
  int iterations_;
};

/// P_a = (2 - 4 P_c) / [(1 - 2 P_c)(CW_max + 1) + P_c CW_min (1 - (2 P_c)^m)],
/// clamped to [0, 1].
AttemptProbability attempt_probability(double p_c, const DcfParams& params);

/// Conditional collision probability given an attempt probability. Node counts
/// are expected values and are used as real exponents.
double collision_probability(double p_a, const RegionCounts& counts, const DcfParams& params,
                             CollisionModel model);

/// g(P_c) = collision_probability(attempt_probability(P_c)); the fixed point
/// of this map is the solution of the coupled system.
double collision_map(double p_c, const RegionCounts& counts, const DcfParams& params,
                     CollisionModel model);

/// Damped iteration with a bisection fallback on h(p) = g(p) - p over [0, 1].
FixedPointSolution solve_fixed_point(const RegionCounts& counts, const DcfParams& params,
                                     const SolverOptions& options = {});

/// Area of the intersection of two disks whose centers are `separation` apart.
double lens_area(double radius_a, double radius_b, double separation);

/// Expected node counts for a sender/receiver pair. `density` is nodes per m².
RegionCounts region_counts(double density, double distance, const DcfParams& params);

/// Precomputed P_c over (density, distance). Densities are nodes per 10⁶ m².
class CollisionTable {
 public:
  CollisionTable() = default;
  CollisionTable(std::vector<double> densities, std::vector<double> distances,
                 std::vector<std::vector<double>> p_c);

  const std::vector<double>& densities() const { return densities_; }
  const std::vector<double>& distances() const { return distances_; }
  double at(std::size_t density_index, std::size_t distance_index) const;
  bool empty() const { return densities_.empty(); }

  /// Snaps density to the nearest row, then inverse-distance weights the two
  /// distance columns bracketing `distance`. Out-of-range queries clamp.
  double lookup(double density, double distance) const;

  /// `density,distance_m,p_c` with one row per cell, six decimals.
  void write_csv(std::ostream& out) const;
  static CollisionTable read_csv(std::istream& in);

 private:
  std::vector<double> densities_;
  std::vector<double> distances_;
  std::vector<std::vector<double>> p_c_;
};

/// Solves every (density, distance) cell. Solver failures are rethrown as
/// DcfError with the cell coordinates in the message.
CollisionTable build_table(const std::vector<double>& densities_per_km2,
                           const std::vector<double>& distances, const DcfParams& params,
                           const SolverOptions& options = {});

/// Default axes: densities 90..120 per 10⁶ m², distances 100..250 m.
std::vector<double> default_density_axis();
std::vector<double> default_distance_axis();

/// Measured-style reference grid over the default axes. The simulator uses it
/// unless asked to solve its own table.
CollisionTable reference_table();

}  // namespace qgrp::dcf
