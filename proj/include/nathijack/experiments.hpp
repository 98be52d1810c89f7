#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nathijack/attacker.hpp"
#include "nathijack/router.hpp"
#include "nathijack/scenario.hpp"

namespace nathijack {

class IoFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProfileParseError : public std::runtime_error {
 public:
  ProfileParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct ProfileEntry {
  RouterProfile profile;
  bool expected_vulnerable = false;
};

struct ProfileSet {
  std::vector<ProfileEntry> profiles;

  const ProfileEntry* find(std::string_view name) const;
  std::size_t vulnerable_count() const;
};

/// `[profile]` blocks of `key = value` lines; `#` starts a comment.
ProfileSet parse_profiles(std::istream& in);
ProfileSet load_profiles(const std::string& path);
void write_profiles(std::ostream& out, const ProfileSet& set);

enum class ReportFormat { Csv, Jsonl };
ReportFormat parse_format(std::string_view text);

struct MatrixRow {
  std::string profile;
  std::string vendor;
  std::string strategy;
  std::string rp_filter;
  std::string window_mode;
  TimeMs timeout_ms = 0;
  bool predicted = false;
  bool simulated = false;
  bool agreement = false;
  friend bool operator==(const MatrixRow&, const MatrixRow&) = default;
};

struct MatrixRun {
  MatrixRow row;
  ScenarioResult result;
};

/// One end-to-end attack per profile against a victim idle for 4x its close timeout.
std::vector<MatrixRun> run_matrix(const ProfileSet& set, PayloadKind payload = PayloadKind::Dos,
                                  std::uint64_t seed = 1, int threads = 1);

void emit_matrix(std::ostream& out, const std::vector<MatrixRow>& rows, ReportFormat format);
std::vector<MatrixRow> parse_matrix(std::istream& in, ReportFormat format);

struct SweepSpec {
  std::vector<TimeMs> intervals_ms;
  std::vector<TimeMs> close_timeouts_ms;
  PayloadKind payload = PayloadKind::Dos;
  int repetitions = 1;
  std::uint64_t base_seed = 0;
  std::optional<RouterProfile> profile;  // base profile; its close timeout is overridden
  ReportFormat format = ReportFormat::Csv;
  int threads = 0;  // 0: one per hardware thread
};

/// JSON object with the SweepSpec field names. `profile` names an entry of
/// `profiles` (a profile file path, relative to the spec file's directory).
SweepSpec parse_sweep_spec(std::istream& in, const std::string& base_dir = ".");
SweepSpec load_sweep_spec(const std::string& path);

struct RunStats {
  TimeMs interval_ms = 0;
  TimeMs timeout_ms = 0;
  std::string payload;
  int repetitions = 0;
  int successes = 0;
  double success_rate = 0.0;
  // Means over successful runs; 0 when none succeeded.
  double mean_infer_ms = 0.0;
  double mean_steal_ms = 0.0;
  double mean_total_ms = 0.0;
  std::map<std::string, int> failures;
  friend bool operator==(const RunStats&, const RunStats&) = default;
};

RouterProfile default_sweep_profile();
/// The scenario a sweep cell runs for one repetition.
ScenarioConfig sweep_scenario(const SweepSpec& spec, TimeMs interval_ms, TimeMs timeout_ms, int rep);

/// Cells ordered timeout-major, then interval, as given in the spec.
std::vector<RunStats> run_sweep(const SweepSpec& spec);

void emit_sweep(std::ostream& out, const std::vector<RunStats>& rows, ReportFormat format);
std::vector<RunStats> parse_sweep(std::istream& in, ReportFormat format);

std::string format_double(double v);

}  // namespace nathijack
