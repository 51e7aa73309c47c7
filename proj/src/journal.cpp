#include "hwbo/journal.hpp"

#include <filesystem>
#include <sstream>

#include "hwbo/error.hpp"

namespace hwbo {

namespace {

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> get_opt(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

Json to_json(const JournalHeader& h) {
  return Json{{"type", "header"},
              {"schema", h.schema},
              {"digest", h.digest},
              {"scenario", h.scenario},
              {"method", to_string(h.method)},
              {"variant", to_string(h.variant)},
              {"seed", h.seed},
              {"budget", {{"power", opt(h.budget.power)}, {"memory", opt(h.budget.memory)}}},
              {"mode", to_string(h.mode)},
              {"max_evals", h.max_evals ? Json(*h.max_evals) : Json(nullptr)},
              {"time_budget", opt(h.time_budget)}};
}

JournalHeader header_from_json(const Json& j) {
  if (j.value("type", std::string()) != "header") throw DataError("journal: first line is not a header");
  JournalHeader h;
  h.schema = j.at("schema").get<int>();
  if (h.schema != kJournalSchema) {
    throw DataError("journal: unsupported schema version " + std::to_string(h.schema) + " (expected " +
                    std::to_string(kJournalSchema) + ")");
  }
  h.digest = j.at("digest").get<std::string>();
  h.scenario = j.at("scenario").get<std::string>();
  h.method = method_from_string(j.at("method").get<std::string>());
  h.variant = variant_from_string(j.at("variant").get<std::string>());
  h.seed = j.at("seed").get<std::uint64_t>();
  h.budget.power = get_opt(j.at("budget"), "power");
  h.budget.memory = get_opt(j.at("budget"), "memory");
  h.mode = j.at("mode").get<std::string>() == "fixed-time" ? RunMode::FixedTime : RunMode::FixedEvals;
  if (!j.at("max_evals").is_null()) h.max_evals = j.at("max_evals").get<std::size_t>();
  h.time_budget = get_opt(j, "time_budget");
  return h;
}

Json to_json(const TrialRecord& r) {
  return Json{{"type", "trial"},
              {"index", r.index},
              {"x", r.x.values},
              {"z", r.z.values},
              {"objective", opt(r.objective)},
              {"status", to_string(r.status)},
              {"epochs_run", r.epochs_run},
              {"predicted_power", opt(r.predicted_power)},
              {"predicted_memory", opt(r.predicted_memory)},
              {"true_power", opt(r.true_power)},
              {"true_memory", opt(r.true_memory)},
              {"sim_time_start", r.sim_time_start},
              {"sim_time_end", r.sim_time_end},
              {"note", r.note}};
}

TrialRecord trial_from_json(const Json& j) {
  TrialRecord r;
  r.index = j.at("index").get<std::size_t>();
  r.x.values = j.at("x").get<std::vector<double>>();
  r.z.values = j.at("z").get<std::vector<std::int64_t>>();
  r.objective = get_opt(j, "objective");
  r.status = trial_status_from_string(j.at("status").get<std::string>());
  r.epochs_run = j.at("epochs_run").get<int>();
  r.predicted_power = get_opt(j, "predicted_power");
  r.predicted_memory = get_opt(j, "predicted_memory");
  r.true_power = get_opt(j, "true_power");
  r.true_memory = get_opt(j, "true_memory");
  r.sim_time_start = j.at("sim_time_start").get<double>();
  r.sim_time_end = j.at("sim_time_end").get<double>();
  r.note = j.value("note", std::string());
  return r;
}

RunJournal load_journal(const std::string& path, std::size_t* valid_bytes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("journal: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();

  RunJournal journal;
  std::size_t pos = 0, good = 0, line_no = 0;
  bool have_header = false;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    ++line_no;
    if (nl == std::string::npos) break;  // torn final line
    const std::string line = text.substr(pos, nl - pos);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error&) {
      if (text.find('\n', nl + 1) == std::string::npos) break;  // torn final line
      throw DataError("journal '" + path + "' line " + std::to_string(line_no) + ": malformed record");
    }
    try {
      const std::string type = j.value("type", std::string());
      if (!have_header) {
        journal.header = header_from_json(j);
        have_header = true;
      } else if (type == "trial") {
        if (journal.complete) throw DataError("trial after end marker");
        journal.trials.push_back(trial_from_json(j));
      } else if (type == "end") {
        journal.complete = true;
      } else {
        throw DataError("unknown record type '" + type + "'");
      }
    } catch (const DataError& e) {
      throw DataError("journal '" + path + "' line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::exception& e) {
      throw DataError("journal '" + path + "' line " + std::to_string(line_no) + ": " + e.what());
    }
    pos = nl + 1;
    good = pos;
  }
  if (!have_header) throw DataError("journal '" + path + "': missing header");
  if (valid_bytes != nullptr) *valid_bytes = good;
  return journal;
}

void repair_journal(const std::string& path) {
  std::size_t good = 0;
  load_journal(path, &good);
  if (std::filesystem::file_size(path) != good) std::filesystem::resize_file(path, good);
}

JournalWriter JournalWriter::create(const std::string& path, const JournalHeader& header) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("journal: cannot create '" + path + "'");
  JournalWriter w(std::move(out));
  w.line(to_json(header));
  return w;
}

JournalWriter JournalWriter::append_to(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw DataError("journal: cannot append to '" + path + "'");
  return JournalWriter(std::move(out));
}

void JournalWriter::write(const TrialRecord& r) { line(to_json(r)); }

void JournalWriter::finish(std::size_t trials, double clock) {
  line(Json{{"type", "end"}, {"trials", trials}, {"clock", clock}});
}

void JournalWriter::line(const Json& j) {
  out_ << j.dump() << '\n';
  out_.flush();
  if (!out_) throw DataError("journal: write failed");
}

std::string journal_file_name(Method m, Variant v, std::uint64_t seed) {
  return std::string(to_string(m)) + "-" + to_string(v) + "-seed" + std::to_string(seed) + ".jsonl";
}

}  // namespace hwbo
