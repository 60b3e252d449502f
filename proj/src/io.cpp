#include "ergo/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/crc.hpp>
#include <boost/tokenizer.hpp>
#include <json.hpp>

#include "ergo/parallel.hpp"

namespace ergo {

using Json = nlohmann::ordered_json;

namespace {

std::string to_string(PairTag t) { return t == PairTag::Core ? "core" : "no-brainer"; }

PairTag tag_from_string(const std::string& s) {
  if (s == "core") return PairTag::Core;
  if (s == "no-brainer") return PairTag::NoBrainer;
  throw std::invalid_argument("unknown pair tag '" + s + "'");
}

Json days_to_json(const std::array<DaySeeds, 2>& seeds) {
  Json out = Json::object();
  for (Dynamic d : {Dynamic::Additive, Dynamic::Multiplicative}) {
    const auto& s = seeds[index_of(d)];
    out[std::string(to_string(d))] = Json{
        {"passive", s.passive}, {"schedule", s.schedule}, {"no_brainers", s.no_brainers}};
  }
  return out;
}

Json parse_object(std::string_view line) {
  Json j = Json::parse(line);
  if (!j.is_object()) throw std::invalid_argument("record is not a JSON object");
  return j;
}

void expect_kind(const Json& j, std::string_view kind) {
  if (j.at("record").get<std::string>() != kind) {
    throw std::invalid_argument("expected a " + std::string(kind) + " record");
  }
}

}  // namespace

SessionManifest make_manifest(std::string subject, std::uint64_t seed, Dynamic first_day) {
  SessionManifest m;
  m.subject = std::move(subject);
  m.first_day = first_day;
  std::uint64_t k = 0;
  for (auto& s : m.seeds) {
    s.passive = mix_seed(seed, k++);
    s.schedule = mix_seed(seed, k++);
    s.no_brainers = mix_seed(seed, k++);
  }
  std::mt19937_64 rng(mix_seed(seed, k));
  for (auto& perm : m.shapes) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
  }
  return m;
}

std::string config_hash(std::string_view text) {
  boost::crc_optimal<64, 0x42F0E1EBA9EA3693ULL, ~0ULL, ~0ULL, true, true> crc;
  crc.process_bytes(text.data(), text.size());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(crc.checksum()));
  return buf;
}

std::string serialize(const TrialRecord& r) {
  Json j{{"record", "trial"},
         {"subject", r.subject},
         {"condition", to_string(r.condition)},
         {"index", r.index},
         {"ids", r.ids},
         {"tag", to_string(r.tag)},
         {"choice", to_string(r.choice)},
         {"rt_ms", r.rt_ms},
         {"shown_ms", r.shown_ms},
         {"responded_ms", r.responded_ms},
         {"wealth", r.wealth}};
  if (r.assigned_stimulus) j["assigned_stimulus"] = *r.assigned_stimulus;
  return j.dump();
}

TrialRecord parse_trial(std::string_view line) {
  const Json j = parse_object(line);
  expect_kind(j, "trial");
  TrialRecord r;
  r.subject = j.at("subject").get<std::string>();
  r.condition = dynamic_from_string(j.at("condition").get<std::string>());
  r.index = j.at("index").get<int>();
  r.ids = j.at("ids").get<std::array<int, 4>>();
  r.tag = tag_from_string(j.at("tag").get<std::string>());
  r.choice = choice_from_string(j.at("choice").get<std::string>());
  r.rt_ms = j.at("rt_ms").get<double>();
  r.shown_ms = j.at("shown_ms").get<std::int64_t>();
  r.responded_ms = j.at("responded_ms").get<std::int64_t>();
  r.wealth = j.at("wealth").get<double>();
  if (j.contains("assigned_stimulus")) r.assigned_stimulus = j["assigned_stimulus"].get<int>();
  return r;
}

std::string serialize(const SessionManifest& m) {
  Json shapes = Json::object();
  for (Dynamic d : {Dynamic::Additive, Dynamic::Multiplicative}) {
    shapes[std::string(to_string(d))] = m.shapes[index_of(d)];
  }
  const Json j{{"record", "manifest"},
               {"subject", m.subject},
               {"first_day", to_string(m.first_day)},
               {"seeds", days_to_json(m.seeds)},
               {"endowment", m.endowment},
               {"payout_trials", m.payout_trials},
               {"payout_min", m.payout_min},
               {"payout_max", m.payout_max},
               {"shapes", shapes}};
  return j.dump();
}

SessionManifest parse_manifest(std::string_view line) {
  const Json j = parse_object(line);
  expect_kind(j, "manifest");
  SessionManifest m;
  m.subject = j.at("subject").get<std::string>();
  m.first_day = dynamic_from_string(j.at("first_day").get<std::string>());
  for (Dynamic d : {Dynamic::Additive, Dynamic::Multiplicative}) {
    const Json& s = j.at("seeds").at(std::string(to_string(d)));
    auto& out = m.seeds[index_of(d)];
    out.passive = s.at("passive").get<std::uint64_t>();
    out.schedule = s.at("schedule").get<std::uint64_t>();
    out.no_brainers = s.at("no_brainers").get<std::uint64_t>();
    m.shapes[index_of(d)] =
        j.at("shapes").at(std::string(to_string(d))).get<std::array<int, kStimuliPerSet>>();
  }
  m.endowment = j.at("endowment").get<double>();
  m.payout_trials = j.at("payout_trials").get<int>();
  m.payout_min = j.at("payout_min").get<double>();
  m.payout_max = j.at("payout_max").get<double>();
  return m;
}

std::string serialize(const Provenance& p) {
  const Json j{{"record", "header"},   {"tool", p.tool},
               {"version", p.version}, {"command", p.command},
               {"seeds", p.seeds},     {"config_hash", p.config_hash},
               {"config", p.config}};
  return j.dump();
}

Provenance parse_provenance(std::string_view line) {
  const Json j = parse_object(line);
  expect_kind(j, "header");
  Provenance p;
  p.tool = j.at("tool").get<std::string>();
  p.version = j.at("version").get<std::string>();
  p.command = j.at("command").get<std::string>();
  p.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
  p.config_hash = j.at("config_hash").get<std::string>();
  p.config = j.at("config").get<std::string>();
  return p;
}

RecordFile parse_records(std::istream& in) {
  RecordFile out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    try {
      const Json j = parse_object(line);
      const std::string kind = j.at("record").get<std::string>();
      if (kind == "trial") {
        out.trials.push_back(parse_trial(line));
      } else if (kind == "manifest") {
        out.manifests.push_back(parse_manifest(line));
      } else if (kind == "header") {
        if (out.header) throw std::invalid_argument("second header record");
        out.header = parse_provenance(line);
      } else {
        throw std::invalid_argument("unknown record kind '" + kind + "'");
      }
    } catch (const std::exception& e) {
      out.errors.push_back({no, e.what()});
    }
  }
  return out;
}

RecordFile read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_records(in);
}

void write_records(std::ostream& out, const RecordFile& file) {
  if (file.header) out << serialize(*file.header) << '\n';
  for (const auto& m : file.manifests) out << serialize(m) << '\n';
  for (const auto& t : file.trials) out << serialize(t) << '\n';
}

void write_records(const std::filesystem::path& path, const RecordFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_records(out, file);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<TrialRecord> to_records(const SubjectDataset& data) {
  std::vector<TrialRecord> out;
  for (const auto& cond : data.conditions) {
    if (!cond) continue;
    int index = 0;
    for (const auto& t : cond->trials) {
      TrialRecord r;
      r.subject = data.id;
      r.condition = cond->dynamic;
      r.index = index++;
      r.ids = t.pair.ids();
      r.tag = t.pair.tag;
      r.choice = t.choice;
      r.rt_ms = t.rt_ms;
      r.wealth = cond->wealth.amount;
      if (t.choice == Choice::Timeout) r.assigned_stimulus = worst_stimulus(t.pair).id;
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<SubjectDataset> to_datasets(std::span<const TrialRecord> records) {
  const std::array<StimulusSet, 2> sets{build_stimulus_set(Dynamic::Additive),
                                        build_stimulus_set(Dynamic::Multiplicative)};
  std::vector<SubjectDataset> out;
  std::map<std::string, std::size_t> where;
  std::vector<const TrialRecord*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const TrialRecord* a, const TrialRecord* b) { return a->index < b->index; });
  for (const TrialRecord* r : sorted) {
    auto [it, fresh] = where.emplace(r->subject, out.size());
    if (fresh) out.push_back(SubjectDataset{r->subject, {}});
    auto& slot = out[it->second].conditions[index_of(r->condition)];
    if (!slot) slot = ConditionData{r->condition, WealthState{r->wealth}, {}};
    Trial t{pair_from_ids(sets[index_of(r->condition)], r->ids, r->tag), r->choice, r->rt_ms};
    slot->trials.push_back(std::move(t));
  }
  return out;
}

std::vector<std::string> ValidationReport::excluded() const {
  std::vector<std::string> out;
  for (const auto& s : subjects) {
    if (s.exclude) out.push_back(s.subject);
  }
  return out;
}

ValidationReport validate_dataset(std::span<const TrialRecord> records) {
  ValidationReport report;
  const std::array<StimulusSet, 2> sets{build_stimulus_set(Dynamic::Additive),
                                        build_stimulus_set(Dynamic::Multiplicative)};
  std::array<std::multiset<std::array<int, 4>>, 2> core_pairs;
  for (Dynamic d : {Dynamic::Additive, Dynamic::Multiplicative}) {
    for (const auto& p : build_gamble_space(sets[index_of(d)]).core) {
      core_pairs[index_of(d)].insert(p.ids());
      core_pairs[index_of(d)].insert(p.ids());
    }
  }

  std::map<std::string, std::array<std::vector<const TrialRecord*>, 2>> grouped;
  std::vector<std::string> order;
  for (const auto& r : records) {
    auto [it, fresh] = grouped.try_emplace(r.subject);
    if (fresh) order.push_back(r.subject);
    it->second[index_of(r.condition)].push_back(&r);
  }

  for (const auto& subject : order) {
    SubjectCheck check{subject, {}, false};
    for (Dynamic d : {Dynamic::Additive, Dynamic::Multiplicative}) {
      const auto& rows = grouped[subject][index_of(d)];
      auto error = [&](std::string msg) { report.errors.push_back({subject, d, std::move(msg)}); };
      if (rows.empty()) {
        report.warnings.push_back({subject, d, "condition missing"});
        continue;
      }
      ConditionCheck cc;
      cc.condition = d;
      cc.trials = static_cast<int>(rows.size());

      std::vector<int> seen(kScheduleLength, 0);
      std::multiset<std::array<int, 4>> cores;
      const StimulusSet& set = sets[index_of(d)];
      for (const TrialRecord* r : rows) {
        const std::string at = "trial " + std::to_string(r->index) + ": ";
        if (r->index < 0 || r->index >= kScheduleLength) {
          error(at + "index out of range");
        } else if (++seen[static_cast<std::size_t>(r->index)] == 2) {
          error(at + "duplicate index");
        }
        if (r->wealth != rows.front()->wealth) error(at + "session wealth changes within session");
        if (!std::all_of(r->ids.begin(), r->ids.end(), [&](int id) { return set.contains(id); })) {
          error(at + "stimulus id not in the " + std::string(to_string(d)) + " set");
          continue;
        }
        const GamblePair pair = pair_from_ids(set, r->ids, r->tag);
        if (r->choice == Choice::Timeout) {
          ++cc.timeouts;
          const int worst = worst_stimulus(pair).id;
          if (!r->assigned_stimulus) {
            error(at + "timeout without an assigned stimulus");
          } else if (*r->assigned_stimulus != worst) {
            error(at + "timeout assigned stimulus " + std::to_string(*r->assigned_stimulus) +
                  ", worst shown is " + std::to_string(worst));
          }
        }
        if (r->tag == PairTag::Core) {
          cores.insert(r->ids);
          continue;
        }
        ++cc.no_brainers;
        const auto dominant = dominant_choice(pair);
        if (!dominant) {
          error(at + "no-brainer pair is not statewise dominated");
        } else if (r->choice != Choice::Timeout) {
          const Side chosen = r->choice == Choice::Left ? Side::Left : Side::Right;
          if (chosen == *dominant) ++cc.no_brainers_correct;
        }
      }
      for (int k = 0; k < kScheduleLength; ++k) {
        if (seen[static_cast<std::size_t>(k)] == 0) error("missing trial index " + std::to_string(k));
      }
      if (cc.trials != kScheduleLength) {
        error("expected " + std::to_string(kScheduleLength) + " trials, found " +
              std::to_string(cc.trials));
      }
      if (cores != core_pairs[index_of(d)]) {
        error("core pairs do not match the schedule (each of the 144 pairs exactly twice)");
      }
      if (cc.no_brainers != kNoBrainers) {
        error("expected " + std::to_string(kNoBrainers) + " no-brainers, found " +
              std::to_string(cc.no_brainers));
      }
      const int answered = cc.no_brainers - static_cast<int>(std::count_if(
                                                rows.begin(), rows.end(), [](const TrialRecord* r) {
                                                  return r->tag == PairTag::NoBrainer &&
                                                         r->choice == Choice::Timeout;
                                                }));
      if (answered > 0) {
        cc.no_brainer_accuracy = static_cast<double>(cc.no_brainers_correct) / answered;
        if (*cc.no_brainer_accuracy <= kExclusionAccuracy) check.exclude = true;
      }
      check.conditions.push_back(cc);
    }
    report.subjects.push_back(std::move(check));
  }
  return report;
}

Payout realize_payout(std::span<const TrialRecord> session, std::uint64_t seed, int count,
                      double lo, double hi) {
  if (count < 0 || session.size() < static_cast<std::size_t>(count)) {
    throw std::invalid_argument("payout needs at least " + std::to_string(count) + " trials");
  }
  if (session.empty()) return Payout{{}, 0.0, std::clamp(0.0, lo, hi)};
  const Dynamic d = session.front().condition;
  for (const auto& r : session) {
    if (r.condition != d || r.subject != session.front().subject) {
      throw std::invalid_argument("payout records must come from one session");
    }
  }
  const StimulusSet set = build_stimulus_set(d);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> picks;
  std::vector<std::size_t> all(session.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::sample(all.begin(), all.end(), std::back_inserter(picks), count, rng);

  Payout out;
  WealthState w{session.front().wealth};
  for (std::size_t k : picks) {
    const TrialRecord& r = session[k];
    const GamblePair pair = pair_from_ids(set, r.ids, r.tag);
    StimulusOutcome s;
    if (r.choice == Choice::Timeout) {
      s = worst_stimulus(pair);
    } else {
      const Gamble& g = r.choice == Choice::Left ? pair.left : pair.right;
      s = (rng() & 1U) ? g.second() : g.first();
    }
    w = apply_outcome(w, s);
    out.draws.push_back({r.index, s.id, w.amount});
  }
  out.wealth = w.amount;
  out.payout = std::clamp(w.amount, lo, hi);
  return out;
}

namespace {

std::string normalize(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

const std::vector<std::pair<std::string, std::vector<std::string>>>& aliases() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> table{
      {"subject", {"subject", "subjectid", "subj", "participant", "sub", "id"}},
      {"condition", {"condition", "dynamic", "dynamics", "eta", "session", "day"}},
      {"index", {"trial", "trialindex", "trialno", "trialnumber", "index"}},
      {"left1", {"left1", "l1", "lefttop", "leftstim1", "gl1", "leftfirst", "img1"}},
      {"left2", {"left2", "l2", "leftbottom", "leftstim2", "gl2", "leftsecond", "img2"}},
      {"right1", {"right1", "r1", "righttop", "rightstim1", "gr1", "rightfirst", "img3"}},
      {"right2", {"right2", "r2", "rightbottom", "rightstim2", "gr2", "rightsecond", "img4"}},
      {"choice", {"choice", "response", "chosen", "resp", "keypress"}},
      {"rt", {"rt", "rtms", "reactiontime", "responsetime"}},
      {"wealth", {"wealth", "sessionwealth", "w", "endowment"}},
      {"tag", {"tag", "trialtype", "type", "nobrainer"}},
  };
  return table;
}

std::optional<Dynamic> parse_condition(const std::string& raw) {
  const std::string v = normalize(raw);
  if (v == "additive" || v == "add" || v == "0" || v == "00" || v == "a") return Dynamic::Additive;
  if (v == "multiplicative" || v == "mult" || v == "mul" || v == "1" || v == "10" || v == "m") {
    return Dynamic::Multiplicative;
  }
  return std::nullopt;
}

std::optional<Choice> parse_choice(const std::string& raw) {
  const std::string v = normalize(raw);
  if (v == "left" || v == "l" || v == "0") return Choice::Left;
  if (v == "right" || v == "r" || v == "1") return Choice::Right;
  if (v.empty() || v == "timeout" || v == "nan" || v == "na" || v == "none") return Choice::Timeout;
  return std::nullopt;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used == 0) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

}  // namespace

ImportReport import_trials_csv(std::istream& in) {
  ImportReport rep;
  using Tok = boost::tokenizer<boost::escaped_list_separator<char>>;
  std::string line;
  std::vector<std::string> header;
  std::size_t no = 0;
  while (header.empty() && std::getline(in, line)) {
    ++no;
    if (line.empty() || line[0] == '#') continue;
    for (const auto& f : Tok(line)) header.push_back(f);
  }
  std::map<std::string, std::size_t> col;
  for (const auto& [field, names] : aliases()) {
    for (const auto& name : names) {
      auto it = std::find_if(header.begin(), header.end(),
                             [&](const std::string& h) { return normalize(h) == name; });
      if (it != header.end()) {
        col[field] = static_cast<std::size_t>(it - header.begin());
        rep.columns[field] = *it;
        break;
      }
    }
  }
  for (const char* required : {"subject", "condition", "left1", "left2", "right1", "right2", "choice"}) {
    if (!col.count(required)) rep.missing.emplace_back(required);
  }
  if (!rep.missing.empty()) return rep;

  const std::array<StimulusSet, 2> sets{build_stimulus_set(Dynamic::Additive),
                                        build_stimulus_set(Dynamic::Multiplicative)};
  std::map<std::pair<std::string, int>, int> next_index;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty() || line[0] == '#') continue;
    try {
      std::vector<std::string> f;
      for (const auto& x : Tok(line)) f.push_back(x);
      auto get = [&](const std::string& field) -> const std::string& {
        const std::size_t k = col.at(field);
        if (k >= f.size()) throw std::invalid_argument("row has no '" + rep.columns[field] + "'");
        return f[k];
      };
      TrialRecord r;
      r.subject = get("subject");
      const auto cond = parse_condition(get("condition"));
      if (!cond) throw std::invalid_argument("unrecognised condition '" + get("condition") + "'");
      r.condition = *cond;
      const auto choice = parse_choice(get("choice"));
      if (!choice) throw std::invalid_argument("unrecognised choice '" + get("choice") + "'");
      r.choice = *choice;
      const char* sides[] = {"left1", "left2", "right1", "right2"};
      for (int k = 0; k < 4; ++k) r.ids[k] = static_cast<int>(parse_double(get(sides[k])));
      auto& counter = next_index[{r.subject, static_cast<int>(index_of(r.condition))}];
      r.index = col.count("index") ? static_cast<int>(parse_double(get("index"))) : counter;
      ++counter;
      if (col.count("rt")) {
        const std::string& rt = get("rt");
        r.rt_ms = rt.empty() || normalize(rt) == "nan" ? 0.0 : parse_double(rt);
      }
      if (col.count("wealth")) r.wealth = parse_double(get("wealth"));
      const StimulusSet& set = sets[index_of(r.condition)];
      const GamblePair probe = pair_from_ids(set, r.ids, PairTag::Core);
      r.tag = dominant_choice(probe) ? PairTag::NoBrainer : PairTag::Core;
      if (r.choice == Choice::Timeout) r.assigned_stimulus = worst_stimulus(probe).id;
      rep.records.push_back(std::move(r));
    } catch (const std::exception& e) {
      rep.errors.push_back({no, e.what()});
    }
  }
  return rep;
}

ImportReport import_trials_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return import_trials_csv(in);
}

void CsvWriter::comment(std::string_view text) {
  std::istringstream lines{std::string(text)};
  std::string line;
  while (std::getline(lines, line)) out_ << "# " << line << '\n';
}

void CsvWriter::row(std::span<const std::string> fields) {
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) out_ << ',';
    const std::string& f = fields[k];
    if (f.find_first_of(",\"\n") == std::string::npos) {
      out_ << f;
      continue;
    }
    out_ << '"';
    for (char c : f) {
      if (c == '"') out_ << '"';
      out_ << c;
    }
    out_ << '"';
  }
  out_ << '\n';
}

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace ergo
