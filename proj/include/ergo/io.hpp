#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ergo/dataset.hpp"
#include "ergo/design.hpp"

namespace ergo {

inline constexpr std::string_view kVersion = "0.3.0";

/// One active-session decision as stored on disk.
struct TrialRecord {
  std::string subject;
  Dynamic condition = Dynamic::Additive;
  int index = 0;
  std::array<int, 4> ids{};  // left first, left second, right first, right second
  PairTag tag = PairTag::Core;
  Choice choice = Choice::Timeout;
  double rt_ms = 0.0;
  std::int64_t shown_ms = 0;      // wall clock, ms since epoch
  std::int64_t responded_ms = 0;  // 0 when timed out
  double wealth = kEndowment;     // frozen session wealth
  /// Stimulus applied on a timeout: the worst one on screen.
  std::optional<int> assigned_stimulus;
};

struct DaySeeds {
  std::uint64_t passive = 0;
  std::uint64_t schedule = 0;
  std::uint64_t no_brainers = 0;
};

inline constexpr int kPayoutTrials = 10;
inline constexpr double kPayoutMin = 0.0;
inline constexpr double kPayoutMax = 2000.0;

struct SessionManifest {
  std::string subject;
  Dynamic first_day = Dynamic::Additive;
  std::array<DaySeeds, 2> seeds{};  // indexed by index_of(Dynamic)
  double endowment = kEndowment;
  int payout_trials = kPayoutTrials;
  double payout_min = kPayoutMin;
  double payout_max = kPayoutMax;
  /// Per-subject stimulus-to-shape association for the task UI, by stimulus
  /// slot 0..8 within each day's set.
  std::array<std::array<int, kStimuliPerSet>, 2> shapes{};

  Dynamic day(int k) const { return k == 0 ? first_day : other(first_day); }
  static Dynamic other(Dynamic d) {
    return d == Dynamic::Additive ? Dynamic::Multiplicative : Dynamic::Additive;
  }
};

/// Seeds and shape permutations derived deterministically from `seed`.
SessionManifest make_manifest(std::string subject, std::uint64_t seed,
                              Dynamic first_day = Dynamic::Additive);

/// First line of every file the CLI writes.
struct Provenance {
  std::string tool = "ergo";
  std::string version{kVersion};
  std::string command;
  std::map<std::string, std::uint64_t> seeds;
  std::string config_hash;  // 16 hex digits
  std::string config;       // canonical JSON of the effective options
};

/// CRC-64 of `text` as 16 lowercase hex digits.
std::string config_hash(std::string_view text);

// Single-line JSON encodings. serialize(parse(s)) == s for any s produced by
// serialize.
std::string serialize(const TrialRecord& r);
std::string serialize(const SessionManifest& m);
std::string serialize(const Provenance& p);
TrialRecord parse_trial(std::string_view line);
SessionManifest parse_manifest(std::string_view line);
Provenance parse_provenance(std::string_view line);

struct ParseError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct RecordFile {
  std::optional<Provenance> header;
  std::vector<SessionManifest> manifests;
  std::vector<TrialRecord> trials;
  std::vector<ParseError> errors;
};

/// Lines are tagged by a leading "record" field: header, manifest or trial.
RecordFile parse_records(std::istream& in);
RecordFile read_records(const std::filesystem::path& path);
void write_records(std::ostream& out, const RecordFile& file);
void write_records(const std::filesystem::path& path, const RecordFile& file);

// ---- conversion to and from the in-memory model ---------------------------

std::vector<TrialRecord> to_records(const SubjectDataset& data);

/// Groups records by subject and condition, resolving stimulus ids against
/// each dynamic's stimulus set. Trials are ordered by index.
std::vector<SubjectDataset> to_datasets(std::span<const TrialRecord> records);

// ---- validation -------------------------------------------------------------

struct ValidationIssue {
  std::string subject;
  std::optional<Dynamic> condition;
  std::string message;
};

struct ConditionCheck {
  Dynamic condition = Dynamic::Additive;
  int trials = 0;
  int timeouts = 0;
  int no_brainers = 0;
  int no_brainers_correct = 0;
  std::optional<double> no_brainer_accuracy;  // over answered no-brainers
};

struct SubjectCheck {
  std::string subject;
  std::vector<ConditionCheck> conditions;
  /// No-brainer accuracy <= 0.5 in any condition.
  bool exclude = false;
};

struct ValidationReport {
  std::vector<ValidationIssue> errors;
  std::vector<ValidationIssue> warnings;
  std::vector<SubjectCheck> subjects;

  bool ok() const { return errors.empty(); }
  std::vector<std::string> excluded() const;
};

inline constexpr double kExclusionAccuracy = 0.5;

/// Structural checks per subject and condition: 312 trials with indices
/// 0..311, ids resolving against the condition's stimulus set, every core
/// pair exactly twice, 24 dominated no-brainers, constant session wealth,
/// and timeouts carrying the worst stimulus.
ValidationReport validate_dataset(std::span<const TrialRecord> records);

// ---- payout -----------------------------------------------------------------

struct PayoutDraw {
  int index = 0;       // trial index
  int stimulus = 0;    // applied outcome
  double wealth = 0;   // after applying it
};

struct Payout {
  std::vector<PayoutDraw> draws;
  double wealth = 0.0;  // unclamped end wealth
  double payout = 0.0;  // clamped to [payout_min, payout_max]
};

/// Picks `count` trials of one session uniformly without replacement and
/// applies a fair coin flip of each chosen gamble (the worst stimulus for
/// timeouts) in turn, starting from the session wealth.
Payout realize_payout(std::span<const TrialRecord> session, std::uint64_t seed,
                      int count = kPayoutTrials, double lo = kPayoutMin, double hi = kPayoutMax);

// ---- importer and exports ----------------------------------------------------

/// Column names recognised by the CSV importer, matched case-insensitively
/// after stripping non-alphanumerics.
struct ImportReport {
  std::vector<TrialRecord> records;
  std::map<std::string, std::string> columns;  // field -> source column
  std::vector<ParseError> errors;
  std::vector<std::string> missing;  // required fields without a column
};

/// Best-effort import of a trial-level CSV export (one row per decision).
ImportReport import_trials_csv(std::istream& in);
ImportReport import_trials_csv(const std::filesystem::path& path);

/// Minimal CSV writer: quotes fields containing separators or quotes.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  void comment(std::string_view text);  // "# text"
  void row(std::span<const std::string> fields);
  void row(std::initializer_list<std::string> fields) {
    row(std::span<const std::string>(fields.begin(), fields.size()));
  }

 private:
  std::ostream& out_;
};

std::string format_number(double v);

}  // namespace ergo
