#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "taburpl/error.hpp"

namespace taburpl {

enum class EventKind : std::uint8_t { Send, Recv, Drop, Ctrl, Energy };

enum class DropReason : std::uint8_t { None, QueueOverflow, RetryLimit, NoRoute, NodeDead };

const char* event_name(EventKind k) noexcept;
const char* drop_reason_name(DropReason r) noexcept;

inline constexpr std::uint64_t kNoPacket = std::numeric_limits<std::uint64_t>::max();
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

/// One trace line. Fields that do not apply to an event kind keep their
/// defaults and are not printed.
struct TraceEvent {
  double t = 0.0;
  EventKind kind = EventKind::Send;
  NodeId node = 0;
  std::uint64_t pkt = kNoPacket;
  std::uint32_t hop = 0;
  std::uint32_t bytes = 0;
  double res = -1.0;            // residual joules; negative when absent
  std::uint32_t attempts = 0;   // MAC attempts on the hop (recv, drop)
  NodeId peer = kNoNode;        // other end of the hop (recv: sender, drop: intended receiver)
  std::uint32_t rx_bytes = 0;   // control bytes heard (ctrl)
  DropReason why = DropReason::None;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

enum class ControlEnergy { Inline, Deferred };

struct TraceHeader {
  std::size_t nodes = 0;
  NodeId sink = 0;
  std::uint64_t seed = 0;
  double duration = 0.0;
  double snapshot_period = 0.0;
  std::uint32_t payload_bytes = 0;
  double initial_energy = 0.0;
  double e_tx_per_bit = 0.0;
  double e_rx_per_bit = 0.0;
  ControlEnergy control_energy = ControlEnergy::Inline;

  friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

struct TraceLog {
  TraceHeader header;
  std::vector<TraceEvent> events;

  friend bool operator==(const TraceLog&, const TraceLog&) = default;
};

/// Receives events as the engine produces them.
class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void header(const TraceHeader&) {}
  virtual void event(const TraceEvent& e) = 0;
};

/// Keeps events in memory, optionally only some kinds.
class TraceRecorder : public TraceSink {
 public:
  TraceRecorder() = default;
  explicit TraceRecorder(std::vector<EventKind> kinds) : kinds_(std::move(kinds)) {}
  void header(const TraceHeader& h) override { log_.header = h; }
  void event(const TraceEvent& e) override;
  const TraceLog& log() const noexcept { return log_; }
  TraceLog take() { return std::move(log_); }

 private:
  std::vector<EventKind> kinds_;
  TraceLog log_;
};

/// Writes the text form straight to a stream.
class TraceWriter : public TraceSink {
 public:
  explicit TraceWriter(std::ostream& out) : out_(out) {}
  void header(const TraceHeader& h) override;
  void event(const TraceEvent& e) override;

 private:
  std::ostream& out_;
};

/// Forwards to several sinks.
class TraceTee : public TraceSink {
 public:
  explicit TraceTee(std::vector<TraceSink*> sinks) : sinks_(std::move(sinks)) {}
  void header(const TraceHeader& h) override {
    for (auto* s : sinks_) s->header(h);
  }
  void event(const TraceEvent& e) override {
    for (auto* s : sinks_) s->event(e);
  }

 private:
  std::vector<TraceSink*> sinks_;
};

std::string format_header(const TraceHeader& h);

/// Text form: a `# key=value ...` header line, then one
/// `t=<s> ev=<kind> node=<id> [pkt= hop= bytes= res= att= peer= rx= why=]`
/// line per event. Reals are printed with 17 significant digits.
void write_trace(std::ostream& out, const TraceLog& trace);
std::string format_event(const TraceEvent& e);

/// Throws ParseError carrying the offending line number.
TraceLog read_trace(std::istream& in);

/// Control energy of one ctrl event under the header's radio constants.
double control_event_energy(const TraceEvent& e, const TraceHeader& header) noexcept;

/// For traces recorded with deferred control accounting: subtracts each
/// node's cumulative control energy from every later residual sample and
/// marks the trace inline. Inline traces come back unchanged.
TraceLog correct_trace_energy(const TraceLog& trace);

}  // namespace taburpl
