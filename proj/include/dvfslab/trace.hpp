#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dvfslab/simulator.hpp"

namespace dvfs {

/// One inference-time sample. Serialized as exactly 42 little-endian bytes:
///
///   offset size field
///        0    8 timestamp_us          end of the sampling period
///        8    4 freq_khz              frequency the period ran at
///       12    2 util_max_millis
///       14    2 util_avg_millis
///       16    8 core_util_millis[4]
///       24   12 state_q[6]            compact encoded state, value * 65535
///       36    1 action                level index chosen for the next period
///       37    2 reward_millis
///       39    1 flags                 see TraceFlags
///       40    2 seq                   increments by one, wraps at 2^16
struct TraceRecord {
  std::uint64_t timestamp_us = 0;
  std::uint32_t freq_khz = 0;
  std::uint16_t util_max_millis = 0;
  std::uint16_t util_avg_millis = 0;
  std::array<std::uint16_t, 4> core_util_millis{};
  std::array<std::uint16_t, 6> state_q{};
  std::uint8_t action = 0;
  std::uint16_t reward_millis = 0;
  std::uint8_t flags = 0;
  std::uint16_t seq = 0;

  bool operator==(const TraceRecord&) const = default;
};

inline constexpr std::size_t kTraceRecordBytes = 42;
inline constexpr std::size_t kTraceHeaderBytes = 16;
inline constexpr std::size_t kTraceCoreSlots = 4;

namespace TraceFlags {
inline constexpr std::uint8_t kTaskDone = 1u << 0;      // task finished by the end of this period
inline constexpr std::uint8_t kPastDeadline = 1u << 1;  // period ended after the deadline
inline constexpr std::uint8_t kCoreSpill = 1u << 2;     // more cores than slots; only max/avg are exact
inline constexpr std::uint8_t kHasState = 1u << 3;      // state_q carries an encoded state
inline constexpr std::uint8_t kTerminal = 1u << 4;      // last record of the episode
}  // namespace TraceFlags

void encode_record(const TraceRecord& r, std::span<std::uint8_t, kTraceRecordBytes> out);
TraceRecord decode_record(std::span<const std::uint8_t, kTraceRecordBytes> in);

/// Fixed-capacity ring of records. All storage is allocated up front;
/// record() never allocates and drops the oldest record when full.
class TraceBuffer {
 public:
  explicit TraceBuffer(std::size_t capacity, std::uint16_t cores = kTraceCoreSlots);

  /// Stores `r`, assigning its sequence number.
  void record(const TraceRecord& r) noexcept;

  std::size_t capacity() const { return slots_.size(); }
  std::size_t size() const { return size_; }
  std::uint32_t dropped() const { return dropped_; }
  std::uint16_t cores() const { return cores_; }
  void clear() noexcept;

  /// Records oldest first.
  std::vector<TraceRecord> records() const;

  /// i-th stored record counting from the oldest.
  TraceRecord& at(std::size_t i);

  /// Raw bytes needed to hold `seconds` of records at `hz` samples per second.
  static std::size_t bytes_for(double seconds, double hz);

 private:
  std::vector<TraceRecord> slots_;
  std::size_t head_ = 0;  // next write position
  std::size_t size_ = 0;
  std::uint32_t dropped_ = 0;
  std::uint16_t next_seq_ = 0;
  std::uint16_t cores_;
};

/// Thrown for unreadable trace files; the message names the byte offset.
class TraceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraceFile {
  std::uint16_t version = 1;
  std::uint16_t cores = kTraceCoreSlots;
  std::uint32_t dropped = 0;
  std::vector<TraceRecord> records;
};

inline constexpr std::uint16_t kTraceVersion = 1;

/// Header: "DVTR" | u16 version | u16 cores | u32 record count | u32 dropped.
std::vector<std::uint8_t> encode_trace(const TraceFile& file);
TraceFile decode_trace(std::span<const std::uint8_t> bytes);

void export_trace(const TraceBuffer& buffer, const std::string& path);
TraceFile load_trace(const std::string& path);

/// CSV with header
/// seq,time_s,freq_ghz,util_max,util_avg,core0..core3,s0..s5,action,reward,flags
std::string trace_to_csv(std::span<const TraceRecord> records);

/// Builds a record from a simulated step. `state` holds up to six encoded
/// values in [0, 1]; pass empty when the governor has none.
TraceRecord make_record(const StepRecord& step, std::span<const double> state, double reward, bool past_deadline,
                        bool task_done, bool terminal);

/// Power segments reconstructed from a trace (period lengths from timestamp
/// deltas, levels looked up by frequency).
std::vector<PowerSegment> segments_from_trace(std::span<const TraceRecord> records, const FrequencyTable& table);

}  // namespace dvfs
