#include "taburpl/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

namespace taburpl {

const char* event_name(EventKind k) noexcept {
  switch (k) {
    case EventKind::Send: return "send";
    case EventKind::Recv: return "recv";
    case EventKind::Drop: return "drop";
    case EventKind::Ctrl: return "ctrl";
    case EventKind::Energy: return "energy";
  }
  return "?";
}

const char* drop_reason_name(DropReason r) noexcept {
  switch (r) {
    case DropReason::None: return "none";
    case DropReason::QueueOverflow: return "queue";
    case DropReason::RetryLimit: return "retry";
    case DropReason::NoRoute: return "noroute";
    case DropReason::NodeDead: return "dead";
  }
  return "?";
}

namespace {

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
bool parse_int(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_real(std::string_view s, double& out) {
  if (s.empty()) return false;
  std::string copy(s);
  char* end = nullptr;
  out = std::strtod(copy.c_str(), &end);
  return end == copy.c_str() + copy.size();
}

}  // namespace

std::string format_event(const TraceEvent& e) {
  std::string line = "t=" + real(e.t) + " ev=" + event_name(e.kind) + " node=" + std::to_string(e.node);
  if (e.pkt != kNoPacket) line += " pkt=" + std::to_string(e.pkt);
  if (e.kind == EventKind::Send || e.kind == EventKind::Recv || e.kind == EventKind::Drop)
    line += " hop=" + std::to_string(e.hop);
  if (e.bytes) line += " bytes=" + std::to_string(e.bytes);
  if (e.res >= 0.0) line += " res=" + real(e.res);
  if (e.attempts) line += " att=" + std::to_string(e.attempts);
  if (e.peer != kNoNode) line += " peer=" + std::to_string(e.peer);
  if (e.rx_bytes) line += " rx=" + std::to_string(e.rx_bytes);
  if (e.why != DropReason::None) line += std::string(" why=") + drop_reason_name(e.why);
  return line;
}

std::string format_header(const TraceHeader& h) {
  return "# nodes=" + std::to_string(h.nodes) + " sink=" + std::to_string(h.sink) + " seed=" + std::to_string(h.seed) +
         " duration=" + real(h.duration) + " t_snap=" + real(h.snapshot_period) +
         " payload=" + std::to_string(h.payload_bytes) + " e0=" + real(h.initial_energy) +
         " e_tx_bit=" + real(h.e_tx_per_bit) + " e_rx_bit=" + real(h.e_rx_per_bit) +
         " ctrl=" + (h.control_energy == ControlEnergy::Inline ? "inline" : "deferred");
}

void write_trace(std::ostream& out, const TraceLog& trace) {
  out << format_header(trace.header) << '\n';
  for (const auto& e : trace.events) out << format_event(e) << '\n';
}

void TraceRecorder::event(const TraceEvent& e) {
  if (kinds_.empty() || std::find(kinds_.begin(), kinds_.end(), e.kind) != kinds_.end()) log_.events.push_back(e);
}

void TraceWriter::header(const TraceHeader& h) { out_ << format_header(h) << '\n'; }

void TraceWriter::event(const TraceEvent& e) { out_ << format_event(e) << '\n'; }

TraceLog read_trace(std::istream& in) {
  TraceLog log;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream tokens(line[0] == '#' ? line.substr(1) : line);
    std::string token;
    if (line[0] == '#') {
      if (have_header) continue;
      have_header = true;
      TraceHeader& h = log.header;
      while (tokens >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "malformed header token '" + token + "'");
        const std::string_view key(token.data(), eq);
        const std::string_view value(token.data() + eq + 1, token.size() - eq - 1);
        bool ok = true;
        if (key == "nodes") ok = parse_int(value, h.nodes);
        else if (key == "sink") ok = parse_int(value, h.sink);
        else if (key == "seed") ok = parse_int(value, h.seed);
        else if (key == "duration") ok = parse_real(value, h.duration);
        else if (key == "t_snap") ok = parse_real(value, h.snapshot_period);
        else if (key == "payload") ok = parse_int(value, h.payload_bytes);
        else if (key == "e0") ok = parse_real(value, h.initial_energy);
        else if (key == "e_tx_bit") ok = parse_real(value, h.e_tx_per_bit);
        else if (key == "e_rx_bit") ok = parse_real(value, h.e_rx_per_bit);
        else if (key == "ctrl") {
          if (value == "inline") h.control_energy = ControlEnergy::Inline;
          else if (value == "deferred") h.control_energy = ControlEnergy::Deferred;
          else ok = false;
        }
        if (!ok) throw ParseError(line_no, "bad header value for '" + std::string(key) + "'");
      }
      continue;
    }
    if (!have_header) throw ParseError(line_no, "event before the trace header");

    TraceEvent e;
    bool has_t = false, has_ev = false, has_node = false;
    while (tokens >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos || eq == 0) throw ParseError(line_no, "malformed field '" + token + "'");
      const std::string_view key(token.data(), eq);
      const std::string_view value(token.data() + eq + 1, token.size() - eq - 1);
      bool ok = true;
      if (key == "t") ok = has_t = parse_real(value, e.t);
      else if (key == "ev") {
        has_ev = true;
        if (value == "send") e.kind = EventKind::Send;
        else if (value == "recv") e.kind = EventKind::Recv;
        else if (value == "drop") e.kind = EventKind::Drop;
        else if (value == "ctrl") e.kind = EventKind::Ctrl;
        else if (value == "energy") e.kind = EventKind::Energy;
        else ok = false;
      } else if (key == "node") ok = has_node = parse_int(value, e.node);
      else if (key == "pkt") ok = parse_int(value, e.pkt);
      else if (key == "hop") ok = parse_int(value, e.hop);
      else if (key == "bytes") ok = parse_int(value, e.bytes);
      else if (key == "res") ok = parse_real(value, e.res) && e.res >= 0.0;
      else if (key == "att") ok = parse_int(value, e.attempts);
      else if (key == "peer") ok = parse_int(value, e.peer);
      else if (key == "rx") ok = parse_int(value, e.rx_bytes);
      else if (key == "why") {
        if (value == "queue") e.why = DropReason::QueueOverflow;
        else if (value == "retry") e.why = DropReason::RetryLimit;
        else if (value == "noroute") e.why = DropReason::NoRoute;
        else if (value == "dead") e.why = DropReason::NodeDead;
        else ok = false;
      } else {
        throw ParseError(line_no, "unknown field '" + std::string(key) + "'");
      }
      if (!ok) throw ParseError(line_no, "bad value for '" + std::string(key) + "'");
    }
    if (!has_t || !has_ev || !has_node) throw ParseError(line_no, "event needs t=, ev= and node=");
    if (e.kind == EventKind::Energy && e.res < 0.0) throw ParseError(line_no, "energy event without res=");
    if (!log.events.empty() && e.t < log.events.back().t)
      throw ParseError(line_no, "timestamps must be non-decreasing");
    log.events.push_back(e);
  }
  if (!have_header) throw ParseError(line_no, "missing trace header");
  return log;
}

double control_event_energy(const TraceEvent& e, const TraceHeader& header) noexcept {
  return 8.0 * e.bytes * header.e_tx_per_bit + 8.0 * e.rx_bytes * header.e_rx_per_bit;
}

TraceLog correct_trace_energy(const TraceLog& trace) {
  if (trace.header.control_energy == ControlEnergy::Inline) return trace;
  TraceLog out = trace;
  out.header.control_energy = ControlEnergy::Inline;
  std::vector<double> spent(std::max<std::size_t>(trace.header.nodes, 1), 0.0);
  auto slot = [&](NodeId v) -> double& {
    if (v >= spent.size()) spent.resize(v + 1, 0.0);
    return spent[v];
  };
  for (auto& e : out.events) {
    if (e.kind == EventKind::Ctrl) slot(e.node) += control_event_energy(e, trace.header);
    else if (e.kind == EventKind::Energy) e.res = std::max(0.0, e.res - slot(e.node));
  }
  return out;
}

}  // namespace taburpl
