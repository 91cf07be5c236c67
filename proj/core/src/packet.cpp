#include "qgrp/packet.hpp"

#include <array>

namespace qgrp {

namespace {

constexpr std::array<std::string_view, 8> kKindNames = {
    "hello", "rreq", "rrep", "notify", "data", "aodv_rreq", "aodv_rrep", "aodv_rerr"};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

PacketKind kind_of(const Packet& pkt) { return static_cast<PacketKind>(pkt.index()); }

std::string_view to_string(PacketKind kind) { return kKindNames.at(static_cast<std::size_t>(kind)); }

bool parse_packet_kind(std::string_view text, PacketKind& out) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == text) {
      out = static_cast<PacketKind>(i);
      return true;
    }
  }
  return false;
}

double size_bits(const Packet& pkt, const PacketSizes& sizes) {
  return std::visit(
      Overloaded{
          [&](const Hello&) { return static_cast<double>(sizes.hello_bits); },
          [&](const Rreq&) { return static_cast<double>(sizes.rreq_bits); },
          [&](const Rrep&) { return static_cast<double>(sizes.rrep_bits); },
          [&](const AdmissionNotify&) { return static_cast<double>(sizes.notify_bits); },
          [&](const Data& d) { return sizes.data_header_bits + d.payload_size; },
          [&](const AodvRreq&) { return static_cast<double>(sizes.aodv_rreq_bits); },
          [&](const AodvRrep&) { return static_cast<double>(sizes.aodv_rrep_bits); },
          [&](const AodvRerr&) { return static_cast<double>(sizes.aodv_rerr_bits); },
      },
      pkt);
}

FlowId flow_of(const Packet& pkt) {
  return std::visit(Overloaded{
                        [](const Rreq& p) { return p.flow_id; },
                        [](const Rrep& p) { return p.flow_id; },
                        [](const AdmissionNotify& p) { return p.flow_id; },
                        [](const Data& p) { return p.flow_id; },
                        [](const auto&) { return FlowId{-1}; },
                    },
                    pkt);
}

}  // namespace qgrp
