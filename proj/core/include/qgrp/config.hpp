#pragma once

#include "qgrp/dcf_model.hpp"
#include "qgrp/packet.hpp"
#include "qgrp/qgrp_router.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qgrp {

enum class Protocol { Qgrp, Aodv };

std::string_view to_string(Protocol p);

/// Where the simulator's collision table comes from.
enum class TableSource {
  Reference,  // the built-in reference grid
  Solved,     // solved from the [dcf] parameters at run start
};

struct TopologyConfig {
  int nodes = 100;
  double field = 1000.0;  // square side, meters
  double tx_range = 250.0;
  std::uint64_t seed = 1;
};

struct FlowConfig {
  double rate = 0.5e6;  // bit/s
  double packet_bits = 2000.0;
  double start = 5.0;
  double stop = 100.0;
};

struct MacConfig {
  int retries = 4;
  std::size_t queue_capacity = 50;
  double sense_range = 250.0;
  bool lossless = false;  // no collision losses and no contention delay
};

struct RadioConfig {
  double b_no = 2e6;
  double e_elec = 50e-9;   // J/bit
  double e_amp = 100e-12;  // J/bit/m²
  double initial_energy = 40.0;
};

struct DcfConfig {
  dcf::DcfParams params;
  dcf::CollisionModel model = dcf::CollisionModel::Reduced;
  TableSource table = TableSource::Reference;
};

struct QgrpConfig {
  proto::MetricWeights weights;
  proto::SourcePolicy policy = proto::SourcePolicy::Retry;
  double hello_interval = 1.0;
  double hello_jitter = 0.1;
  int hello_expiry_intervals = 3;
  double observation_window = 1.0;
  double rrep_wait = 0.5;
  int max_retries = 3;
  double retry_backoff = 0.5;
  std::size_t buffer_capacity = 64;
  double reservation_timeout = 3.0;
  double route_lifetime = 10.0;
};

struct AodvConfig {
  double rrep_wait = 0.5;
  int max_retries = 3;
  std::size_t buffer_capacity = 64;
  double route_lifetime = 10.0;
};

struct ExperimentConfig {
  int repetitions = 10;
  std::vector<int> sizes{90, 100, 110, 120};  // used by `compare`
};

struct ScenarioConfig {
  Protocol protocol = Protocol::Qgrp;
  TopologyConfig topology;
  std::vector<FlowConfig> flows{{0.5e6, 2000.0, 5.0, 100.0},
                                {0.4e6, 2000.0, 7.0, 100.0},
                                {0.2e6, 2000.0, 9.0, 100.0}};
  MacConfig mac;
  RadioConfig radio;
  PacketSizes packets;
  DcfConfig dcf;
  QgrpConfig qgrp;
  AodvConfig aodv;
  double sim_duration = 100.0;
  double warm_up = 5.0;
  ExperimentConfig experiment;
};

/// Malformed text; carries the 1-based position.
class ConfigParseError : public std::runtime_error {
 public:
  ConfigParseError(int line, int column, const std::string& what);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// A well-formed document whose values break a constraint.
class ConfigValidationError : public std::runtime_error {
 public:
  ConfigValidationError(std::string key_path, const std::string& constraint);
  const std::string& key_path() const { return key_path_; }

 private:
  std::string key_path_;
};

/// Format:
///
///   # comment
///   [section]
///   key = value
///
/// Sections: sim, topology, mac, radio, pkt, dcf, qgrp, aodv, experiment
/// and any number of [flow] sections (the first [flow] replaces the default
/// flow list). Keys outside a section belong to `sim`. Lists are
/// comma-separated. If exactly one of qgrp.alpha / qgrp.beta is given the
/// other is set to 1 minus it.
ScenarioConfig parse_config(std::string_view text);

/// Inverse of parse_config; every key is written.
std::string emit_config(const ScenarioConfig& config);

/// Throws ConfigValidationError naming the offending key path.
void validate(const ScenarioConfig& config);

}  // namespace qgrp
