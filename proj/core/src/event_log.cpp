#include "qgrp/event_log.hpp"

#include <fmt/format.h>

#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace qgrp {

namespace {

constexpr std::array<std::string_view, 18> kNames = {
    "tx",          "rx",           "death",      "originate", "deliver", "drop",
    "rreq_hop",    "cache_reply",  "rrep_install", "admit_link", "release", "admit",
    "notify",      "flow_failed",  "loop_witness", "route",      "forward", "residual"};

template <class T>
T parse_number(std::string_view field, std::string_view line) {
  T value{};
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw std::runtime_error(fmt::format("event log: bad number '{}' in line '{}'", field, line));
  }
  return value;
}

constexpr std::array<std::string_view, 19> kCodeNames = {
    "-",        "hello",   "rreq",      "rrep",        "notify",      "data",
    "aodv_rreq", "aodv_rrep", "aodv_rerr", "queue_full", "buffer_overflow", "no_route", "link_broken",
    "mac_retries", "flow_failed", "loop", "dead_node", "fresher", "stale"};

}  // namespace

std::string_view to_string(RecordCode code) {
  return kCodeNames.at(static_cast<std::size_t>(code));
}

bool parse_record_code(std::string_view text, RecordCode& out) {
  for (std::size_t i = 0; i < kCodeNames.size(); ++i) {
    if (kCodeNames[i] == text) {
      out = static_cast<RecordCode>(i);
      return true;
    }
  }
  return false;
}

RecordCode code_of(PacketKind kind) {
  return static_cast<RecordCode>(static_cast<std::uint8_t>(kind) + 1);
}

std::string_view to_string(EventKind kind) { return kNames.at(static_cast<std::size_t>(kind)); }

bool parse_event_kind(std::string_view text, EventKind& out) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == text) {
      out = static_cast<EventKind>(i);
      return true;
    }
  }
  return false;
}

std::string format_record(const LogRecord& rec) {
  std::string out = fmt::format("{},{},{},{},{},{},{},{},{},{},", rec.time, rec.node,
                                to_string(rec.kind), rec.peer, rec.flow, rec.seq,
                                to_string(rec.code),
                                rec.value, rec.value2, rec.value3);
  for (std::size_t i = 0; i < rec.trace.size(); ++i) {
    if (i > 0) {
      out.push_back(';');
    }
    fmt::format_to(std::back_inserter(out), "{}", rec.trace[i]);
  }
  return out;
}

LogRecord parse_record(std::string_view line) {
  std::array<std::string_view, 11> f;
  std::size_t start = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const std::size_t comma = i + 1 < f.size() ? line.find(',', start) : line.size();
    if (comma == std::string_view::npos) {
      throw std::runtime_error(fmt::format("event log: expected 11 fields in '{}'", line));
    }
    f[i] = line.substr(start, comma - start);
    start = comma + 1;
  }
  LogRecord rec;
  rec.time = parse_number<double>(f[0], line);
  rec.node = parse_number<NodeId>(f[1], line);
  if (!parse_event_kind(f[2], rec.kind)) {
    throw std::runtime_error(fmt::format("event log: unknown kind '{}'", f[2]));
  }
  rec.peer = parse_number<NodeId>(f[3], line);
  rec.flow = parse_number<FlowId>(f[4], line);
  rec.seq = parse_number<std::int64_t>(f[5], line);
  if (!parse_record_code(f[6], rec.code)) {
    throw std::runtime_error(fmt::format("event log: unknown code '{}'", f[6]));
  }
  rec.value = parse_number<double>(f[7], line);
  rec.value2 = parse_number<double>(f[8], line);
  rec.value3 = parse_number<double>(f[9], line);
  std::string_view trace = f[10];
  while (!trace.empty()) {
    const std::size_t semi = trace.find(';');
    rec.trace.push_back(parse_number<NodeId>(trace.substr(0, semi), line));
    if (semi == std::string_view::npos) {
      break;
    }
    trace.remove_prefix(semi + 1);
  }
  return rec;
}

void write_log(std::ostream& out, const EventLog& log) {
  for (const auto& rec : log) {
    out << format_record(rec) << '\n';
  }
}

EventLog read_log(std::istream& in) {
  EventLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      log.push_back(parse_record(line));
    }
  }
  return log;
}

}  // namespace qgrp
