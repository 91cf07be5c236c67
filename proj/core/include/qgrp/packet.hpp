#pragma once

#include "qgrp/geometry.hpp"
#include "qgrp/types.hpp"

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

namespace qgrp {

struct Hello {
  NodeId sender = kNoNode;
  geo::Position position;
  double residual_energy = 0.0;
  double idle_fraction = 1.0;
  std::uint64_t seq = 0;
};

struct Rreq {
  FlowId flow_id = -1;
  NodeId source = kNoNode;
  NodeId destination = kNoNode;
  double required_bandwidth = 0.0;
  double path_bandwidth_so_far = 0.0;
  std::uint64_t dest_seq_known = 0;
  int retry_index = 0;
  std::vector<NodeId> hop_trace;
};

struct Rrep {
  FlowId flow_id = -1;
  NodeId source = kNoNode;
  NodeId destination = kNoNode;
  std::uint64_t dest_seq = 0;
  double path_bandwidth = 0.0;
  double required_bandwidth = 0.0;
  int retry_index = 0;
  std::vector<NodeId> hop_trace;
};

struct AdmissionNotify {
  FlowId flow_id = -1;
  double max_grantable_bandwidth = 0.0;
  NodeId rejecting_node = kNoNode;
  int retry_index = 0;
  std::vector<NodeId> hop_trace;  // source first; the notify walks it backwards
};

struct Data {
  FlowId flow_id = -1;
  NodeId source = kNoNode;
  double payload_size = 0.0;  // bits
  double origin_timestamp = 0.0;
  std::uint64_t sequence = 0;
  std::vector<NodeId> hop_trace;
};

struct AodvRreq {
  std::uint32_t rreq_id = 0;
  NodeId source = kNoNode;
  std::uint64_t source_seq = 0;
  NodeId destination = kNoNode;
  std::uint64_t dest_seq_known = 0;
  int hop_count = 0;
};

struct AodvRrep {
  NodeId source = kNoNode;
  NodeId destination = kNoNode;
  std::uint64_t dest_seq = 0;
  int hop_count = 0;
};

// Walks back toward the data source along `trace`.
struct AodvRerr {
  NodeId destination = kNoNode;
  std::vector<NodeId> trace;
};

using Packet = std::variant<Hello, Rreq, Rrep, AdmissionNotify, Data, AodvRreq, AodvRrep, AodvRerr>;

enum class PacketKind : std::uint8_t {
  Hello,
  Rreq,
  Rrep,
  Notify,
  Data,
  AodvRreq,
  AodvRrep,
  AodvRerr
};

/// Serialized sizes in bits, used for airtime and energy accounting.
struct PacketSizes {
  int hello_bits = 256;
  int rreq_bits = 320;
  int rrep_bits = 320;
  int notify_bits = 192;
  int data_header_bits = 160;
  int aodv_rreq_bits = 320;
  int aodv_rrep_bits = 320;
  int aodv_rerr_bits = 192;
};

PacketKind kind_of(const Packet& pkt);
std::string_view to_string(PacketKind kind);
bool parse_packet_kind(std::string_view text, PacketKind& out);
double size_bits(const Packet& pkt, const PacketSizes& sizes);

/// Flow the packet belongs to, or -1 for hellos and AODV control.
FlowId flow_of(const Packet& pkt);

}  // namespace qgrp
