#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "hwbo/config.hpp"
#include "hwbo/solvers.hpp"

namespace hwbo {

/// Journal files are JSON lines: one header, one line per trial, and an
/// end marker once the run has finished.
inline constexpr int kJournalSchema = 1;

struct JournalHeader {
  int schema = kJournalSchema;
  std::string digest;
  std::string scenario;
  Method method = Method::Rand;
  Variant variant = Variant::Aware;
  std::uint64_t seed = 0;
  Budget budget;
  RunMode mode = RunMode::FixedEvals;
  std::optional<std::size_t> max_evals;
  std::optional<double> time_budget;

  bool operator==(const JournalHeader&) const = default;
};

struct RunJournal {
  JournalHeader header;
  std::vector<TrialRecord> trials;
  bool complete = false;
};

Json to_json(const JournalHeader& h);
JournalHeader header_from_json(const Json& j);
Json to_json(const TrialRecord& r);
TrialRecord trial_from_json(const Json& j);

/// Reads a journal. A torn or unparsable final line is ignored and its byte
/// offset reported through `valid_bytes`. Unknown schema versions throw.
RunJournal load_journal(const std::string& path, std::size_t* valid_bytes = nullptr);

/// Truncates a torn final line so the file can be appended to again.
void repair_journal(const std::string& path);

/// Append-only writer; every line is flushed as soon as it is written.
class JournalWriter {
 public:
  /// Starts a fresh journal (truncating any existing file).
  static JournalWriter create(const std::string& path, const JournalHeader& header);
  /// Reopens an existing, repaired journal for appending.
  static JournalWriter append_to(const std::string& path);

  void write(const TrialRecord& r);
  void finish(std::size_t trials, double clock);

 private:
  explicit JournalWriter(std::ofstream out) : out_(std::move(out)) {}
  void line(const Json& j);

  std::ofstream out_;
};

std::string journal_file_name(Method m, Variant v, std::uint64_t seed);

}  // namespace hwbo
