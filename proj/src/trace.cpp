#include "dvfslab/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dvfslab/text_util.hpp"

namespace dvfs {

namespace {

constexpr char kMagic[4] = {'D', 'V', 'T', 'R'};

template <typename T>
void put_le(std::uint8_t* p, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) p[i] = static_cast<std::uint8_t>(std::uint64_t(v) >> (8 * i));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t(p[i]) << (8 * i);
  return static_cast<T>(v);
}

std::uint16_t millis(double fraction) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(fraction, 0.0, 1.0) * 1000.0));
}

}  // namespace

void encode_record(const TraceRecord& r, std::span<std::uint8_t, kTraceRecordBytes> out) {
  std::uint8_t* p = out.data();
  put_le(p + 0, r.timestamp_us);
  put_le(p + 8, r.freq_khz);
  put_le(p + 12, r.util_max_millis);
  put_le(p + 14, r.util_avg_millis);
  for (std::size_t i = 0; i < 4; ++i) put_le(p + 16 + 2 * i, r.core_util_millis[i]);
  for (std::size_t i = 0; i < 6; ++i) put_le(p + 24 + 2 * i, r.state_q[i]);
  p[36] = r.action;
  put_le(p + 37, r.reward_millis);
  p[39] = r.flags;
  put_le(p + 40, r.seq);
}

TraceRecord decode_record(std::span<const std::uint8_t, kTraceRecordBytes> in) {
  const std::uint8_t* p = in.data();
  TraceRecord r;
  r.timestamp_us = get_le<std::uint64_t>(p + 0);
  r.freq_khz = get_le<std::uint32_t>(p + 8);
  r.util_max_millis = get_le<std::uint16_t>(p + 12);
  r.util_avg_millis = get_le<std::uint16_t>(p + 14);
  for (std::size_t i = 0; i < 4; ++i) r.core_util_millis[i] = get_le<std::uint16_t>(p + 16 + 2 * i);
  for (std::size_t i = 0; i < 6; ++i) r.state_q[i] = get_le<std::uint16_t>(p + 24 + 2 * i);
  r.action = p[36];
  r.reward_millis = get_le<std::uint16_t>(p + 37);
  r.flags = p[39];
  r.seq = get_le<std::uint16_t>(p + 40);
  return r;
}

TraceBuffer::TraceBuffer(std::size_t capacity, std::uint16_t cores) : slots_(capacity), cores_(cores) {
  if (capacity == 0) throw std::invalid_argument("trace buffer capacity must be positive");
}

void TraceBuffer::record(const TraceRecord& r) noexcept {
  TraceRecord& slot = slots_[head_];
  slot = r;
  slot.seq = next_seq_++;
  head_ = head_ + 1 == slots_.size() ? 0 : head_ + 1;
  if (size_ < slots_.size())
    ++size_;
  else
    ++dropped_;
}

void TraceBuffer::clear() noexcept {
  head_ = 0;
  size_ = 0;
  dropped_ = 0;
  next_seq_ = 0;
}

std::vector<TraceRecord> TraceBuffer::records() const {
  std::vector<TraceRecord> out;
  out.reserve(size_);
  const std::size_t start = (head_ + slots_.size() - size_) % slots_.size();
  for (std::size_t i = 0; i < size_; ++i) out.push_back(slots_[(start + i) % slots_.size()]);
  return out;
}

TraceRecord& TraceBuffer::at(std::size_t i) {
  if (i >= size_) throw std::out_of_range("trace record index out of range");
  return slots_[(head_ + slots_.size() - size_ + i) % slots_.size()];
}

std::size_t TraceBuffer::bytes_for(double seconds, double hz) {
  return static_cast<std::size_t>(std::llround(seconds * hz)) * kTraceRecordBytes;
}

std::vector<std::uint8_t> encode_trace(const TraceFile& file) {
  std::vector<std::uint8_t> out(kTraceHeaderBytes + file.records.size() * kTraceRecordBytes);
  std::copy(kMagic, kMagic + 4, out.begin());
  put_le(out.data() + 4, file.version);
  put_le(out.data() + 6, file.cores);
  put_le(out.data() + 8, static_cast<std::uint32_t>(file.records.size()));
  put_le(out.data() + 12, file.dropped);
  for (std::size_t i = 0; i < file.records.size(); ++i)
    encode_record(file.records[i],
                  std::span<std::uint8_t, kTraceRecordBytes>(out.data() + kTraceHeaderBytes + i * kTraceRecordBytes,
                                                             kTraceRecordBytes));
  return out;
}

TraceFile decode_trace(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kTraceHeaderBytes)
    throw TraceFormatError("trace truncated at byte offset " + std::to_string(bytes.size()) + " (header needs 16)");
  if (!std::equal(kMagic, kMagic + 4, bytes.begin())) throw TraceFormatError("bad trace magic at byte offset 0");
  TraceFile f;
  f.version = get_le<std::uint16_t>(bytes.data() + 4);
  if (f.version != kTraceVersion)
    throw TraceFormatError("unsupported trace version " + std::to_string(f.version) + " at byte offset 4");
  f.cores = get_le<std::uint16_t>(bytes.data() + 6);
  const auto count = get_le<std::uint32_t>(bytes.data() + 8);
  f.dropped = get_le<std::uint32_t>(bytes.data() + 12);
  const std::size_t need = kTraceHeaderBytes + std::size_t(count) * kTraceRecordBytes;
  if (bytes.size() < need) {
    const std::size_t whole = (bytes.size() - kTraceHeaderBytes) / kTraceRecordBytes;
    throw TraceFormatError("trace truncated at byte offset " + std::to_string(bytes.size()) + ": record " +
                           std::to_string(whole) + " starts at " +
                           std::to_string(kTraceHeaderBytes + whole * kTraceRecordBytes) + " and needs " +
                           std::to_string(kTraceRecordBytes) + " bytes");
  }
  if (bytes.size() > need)
    throw TraceFormatError("unexpected trailing data at byte offset " + std::to_string(need));
  f.records.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    f.records.push_back(decode_record(std::span<const std::uint8_t, kTraceRecordBytes>(
        bytes.data() + kTraceHeaderBytes + i * kTraceRecordBytes, kTraceRecordBytes)));
  return f;
}

void export_trace(const TraceBuffer& buffer, const std::string& path) {
  TraceFile f;
  f.cores = buffer.cores();
  f.dropped = buffer.dropped();
  f.records = buffer.records();
  const auto bytes = encode_trace(f);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

TraceFile load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceFormatError("cannot open trace '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_trace(bytes);
}

std::string trace_to_csv(std::span<const TraceRecord> records) {
  std::ostringstream out;
  out << "seq,time_s,freq_ghz,util_max,util_avg,core0,core1,core2,core3,s0,s1,s2,s3,s4,s5,action,reward,flags\n";
  for (const auto& r : records) {
    out << r.seq << ',' << format_fixed(double(r.timestamp_us) * 1e-6, 6) << ','
        << format_fixed(double(r.freq_khz) * 1e-6, 6) << ',' << format_fixed(r.util_max_millis / 1000.0, 3) << ','
        << format_fixed(r.util_avg_millis / 1000.0, 3);
    for (auto c : r.core_util_millis) out << ',' << format_fixed(c / 1000.0, 3);
    for (auto s : r.state_q) out << ',' << format_fixed(s / 65535.0, 5);
    out << ',' << unsigned(r.action) << ',' << format_fixed(r.reward_millis / 1000.0, 3) << ',' << unsigned(r.flags)
        << '\n';
  }
  return out.str();
}

TraceRecord make_record(const StepRecord& step, std::span<const double> state, double reward, bool past_deadline,
                        bool task_done, bool terminal) {
  TraceRecord r;
  r.timestamp_us = static_cast<std::uint64_t>(std::llround((step.start_s + step.obs.elapsed_s) * 1e6));
  r.freq_khz = static_cast<std::uint32_t>(std::lround(step.obs.freq_ghz * 1e6));
  r.util_max_millis = millis(step.obs.util_max);
  r.util_avg_millis = millis(step.obs.util_avg);
  for (std::size_t i = 0; i < kTraceCoreSlots && i < step.core_util.size(); ++i)
    r.core_util_millis[i] = millis(step.core_util[i]);
  for (std::size_t i = 0; i < r.state_q.size() && i < state.size(); ++i)
    r.state_q[i] = static_cast<std::uint16_t>(std::lround(std::clamp(state[i], 0.0, 1.0) * 65535.0));
  r.action = static_cast<std::uint8_t>(step.next_level);
  r.reward_millis = millis(reward);
  if (task_done) r.flags |= TraceFlags::kTaskDone;
  if (past_deadline) r.flags |= TraceFlags::kPastDeadline;
  if (step.core_util.size() > kTraceCoreSlots) r.flags |= TraceFlags::kCoreSpill;
  if (!state.empty()) r.flags |= TraceFlags::kHasState;
  if (terminal) r.flags |= TraceFlags::kTerminal;
  return r;
}

std::vector<PowerSegment> segments_from_trace(std::span<const TraceRecord> records, const FrequencyTable& table) {
  std::vector<PowerSegment> out;
  std::uint64_t prev = 0;
  for (const auto& r : records) {
    const auto level = table.index_of(double(r.freq_khz) * 1e-6);
    if (!level) throw TraceFormatError("trace frequency " + std::to_string(r.freq_khz) + " kHz is not in the table");
    out.push_back({*level, r.util_avg_millis / 1000.0, double(r.timestamp_us - prev) * 1e-6});
    prev = r.timestamp_us;
  }
  return out;
}

}  // namespace dvfs
