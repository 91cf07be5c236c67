#pragma once

#include "qgrp/packet.hpp"
#include "qgrp/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace qgrp {

/// Event log schema. Every line is
///
///   time,node,kind,peer,flow,seq,code,value,value2,value3,trace
///
/// with `trace` a ';'-separated node list (possibly empty) and `code` a
/// packet kind or drop reason name (or '-'). Doubles use the shortest
/// representation that round-trips. Field meaning per kind:
///
///   tx            peer=receiver (-1 broadcast) seq=attempt code=packet value=bits value2=joules
///   rx            peer=sender code=packet value=bits value2=joules
///   death         node ran out of energy
///   originate     flow seq value=payload bits                       (node = source)
///   deliver       flow seq value=origin time value2=payload bits trace=hop trace (node = sink)
///   drop          flow seq code=reason
///   rreq_hop      peer=next hop flow seq=retry value=link bandwidth value2=required trace
///   cache_reply   peer=route next hop flow seq=retry value=stored path bandwidth
///   rrep_install  peer=successor flow seq=dest seq value=path bandwidth code=fresher|stale
///   admit_link    peer=next hop flow seq=retry value=link estimate value2=admitted sum value3=rate
///   release       peer=next hop flow value=rate
///   admit         flow seq=retry value=path bandwidth value2=required trace=path (node = source)
///   notify        peer=rejecting node flow seq=retry value=max grantable
///   flow_failed   flow
///   loop_witness  flow code=packet trace
///   route         peer=next hop seq=dest seq value=hop count      (AODV route at a source)
///   forward       peer=next hop flow seq=data seq value=route hop count value2=dest seq
///   residual      value=final residual energy value2=initial energy
enum class EventKind : std::uint8_t {
  Tx,
  Rx,
  Death,
  Originate,
  Deliver,
  Drop,
  RreqHop,
  CacheReply,
  RrepInstall,
  AdmitLink,
  Release,
  Admit,
  Notify,
  FlowFailed,
  LoopWitness,
  Route,
  Forward,
  Residual,
};

std::string_view to_string(EventKind kind);
bool parse_event_kind(std::string_view text, EventKind& out);

/// Packet kind, drop reason or install outcome attached to a record.
enum class RecordCode : std::uint8_t {
  None,
  Hello,
  Rreq,
  Rrep,
  Notify,
  Data,
  AodvRreq,
  AodvRrep,
  AodvRerr,
  QueueFull,
  BufferOverflow,
  NoRoute,
  LinkBroken,
  MacRetries,
  FlowFailed,
  Loop,
  DeadNode,
  Fresher,
  Stale,
};

std::string_view to_string(RecordCode code);
bool parse_record_code(std::string_view text, RecordCode& out);
RecordCode code_of(PacketKind kind);

struct LogRecord {
  double time = 0.0;
  NodeId node = kNoNode;
  EventKind kind = EventKind::Tx;
  NodeId peer = kNoNode;
  FlowId flow = -1;
  std::int64_t seq = 0;
  RecordCode code = RecordCode::None;
  double value = 0.0;
  double value2 = 0.0;
  double value3 = 0.0;
  std::vector<NodeId> trace;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

using EventLog = std::vector<LogRecord>;

std::string format_record(const LogRecord& rec);
LogRecord parse_record(std::string_view line);

void write_log(std::ostream& out, const EventLog& log);
EventLog read_log(std::istream& in);

}  // namespace qgrp
