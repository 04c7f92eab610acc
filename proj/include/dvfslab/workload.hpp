#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace dvfs {

enum class PhaseKind { Compute, IoWait };

/// A segment of a task.
///
/// Compute phases hold per-core giga-cycles and finish when every core has
/// drained its share. IoWait phases block for `wall_s` seconds. An IoWait
/// phase may carry `concurrent_gcycles`: per-core work that runs while the IO
/// is outstanding (the photo analysis that overlaps a microphone recording).
/// Such a phase finishes when both the IO and the concurrent work are done.
struct Phase {
  PhaseKind kind = PhaseKind::Compute;
  std::vector<double> per_core_gcycles;
  double wall_s = 0.0;
  std::vector<double> concurrent_gcycles;

  static Phase compute(std::vector<double> per_core) { return {PhaseKind::Compute, std::move(per_core), 0.0, {}}; }
  static Phase io(double wall, std::vector<double> concurrent = {}) {
    return {PhaseKind::IoWait, {}, wall, std::move(concurrent)};
  }
};

/// A periodic task: the phases run once every `period_s`, which is also the
/// deadline.
struct Workload {
  std::vector<Phase> phases;
  double period_s = 1.0;
  std::size_t cores = 1;

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;

  double total_gcycles() const;
  double total_io_s() const;
};

/// Parameters for the scenario generators. Runtimes are measured at `fmax_ghz`.
struct ScenarioDims {
  std::size_t cores = 4;
  double deadline_s = 0.6;
  double runtime_s = 0.35;         // face_recog_like / mibench_like total at f_max
  double io_s = 0.6;               // audio_recog_like recording length
  double concurrent_s = 0.32;      // audio_recog_like: photo analysis overlapping the recording
  double post_io_s = 0.28;         // audio_recog_like: audio analysis after the recording
  std::size_t segments = 6;        // unbalanced
  double segment_s = 0.05;         // unbalanced, per segment at f_max
  double fmax_ghz = 1.479;
};

/// Named workload generators: face_recog_like, audio_recog_like, unbalanced,
/// mibench_like. Unknown names throw std::invalid_argument.
Workload scenario(const std::string& name, const ScenarioDims& dims);
std::vector<std::string> scenario_names();

/// Plain-text form:
///   cores = 4
///   period_s = 0.6
///   phase = compute 0.1 0.2 0.3 0.4
///   phase = io 0.6 | 0.1 0.1 0.1 0.1
std::string workload_to_text(const Workload& w);
Workload workload_from_text(const std::string& text);

}  // namespace dvfs
