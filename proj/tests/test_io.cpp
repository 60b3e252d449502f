#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include <catch_amalgamated.hpp>

#include "ergo/agents.hpp"
#include "ergo/io.hpp"

using namespace ergo;
using Catch::Approx;

namespace {

SubjectDataset subject(const std::string& id, double beta, std::uint64_t seed) {
  const auto a = uniform_agent(id, IsoelasticParams{0.5}, beta, {1000.0});
  const auto s = [&](Dynamic d) {
    return make_schedule(build_gamble_space(build_stimulus_set(d), seed), seed);
  };
  return simulate_subject(a, s(Dynamic::Additive), s(Dynamic::Multiplicative), seed);
}

TrialRecord random_record(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> id(1, 9), idx(0, 311), ch(0, 2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TrialRecord r;
  r.subject = "s" + std::to_string(rng() % 1000) + (rng() % 2 ? "\"qé" : "");
  r.condition = rng() % 2 ? Dynamic::Additive : Dynamic::Multiplicative;
  r.index = idx(rng);
  for (int& x : r.ids) x = id(rng) + (r.condition == Dynamic::Additive ? 9 : 0);
  r.tag = rng() % 2 ? PairTag::Core : PairTag::NoBrainer;
  r.choice = static_cast<Choice>(ch(rng));
  r.rt_ms = u(rng) * 3000.0;
  r.shown_ms = static_cast<std::int64_t>(rng() >> 20);
  r.responded_ms = r.choice == Choice::Timeout ? 0 : r.shown_ms + 700;
  r.wealth = 100.0 + u(rng) * 4000.0;
  if (r.choice == Choice::Timeout) r.assigned_stimulus = r.ids[1];
  return r;
}

}  // namespace

TEST_CASE("property: records round-trip byte for byte", "[io]") {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 500; ++i) {
    const std::string s = serialize(random_record(rng));
    CHECK(serialize(parse_trial(s)) == s);
    const SessionManifest m = make_manifest("m" + std::to_string(i), rng(),
                                            i % 2 ? Dynamic::Additive : Dynamic::Multiplicative);
    const std::string ms = serialize(m);
    CHECK(serialize(parse_manifest(ms)) == ms);
    Provenance p;
    p.command = "infer";
    p.seeds = {{"seed", rng()}, {"schedule", rng()}};
    p.config = "{\"chains\":" + std::to_string(i) + "}";
    p.config_hash = config_hash(p.config);
    const std::string ps = serialize(p);
    CHECK(serialize(parse_provenance(ps)) == ps);
  }
}

TEST_CASE("record fields survive parsing", "[io]") {
  std::mt19937_64 rng(32);
  for (int i = 0; i < 100; ++i) {
    const TrialRecord r = random_record(rng);
    const TrialRecord q = parse_trial(serialize(r));
    CHECK(q.subject == r.subject);
    CHECK(q.condition == r.condition);
    CHECK(q.ids == r.ids);
    CHECK(q.choice == r.choice);
    CHECK(q.rt_ms == r.rt_ms);  // shortest round-trip formatting
    CHECK(q.wealth == r.wealth);
    CHECK(q.shown_ms == r.shown_ms);
    CHECK(q.assigned_stimulus == r.assigned_stimulus);
  }
  const auto m = make_manifest("x", 5, Dynamic::Multiplicative);
  const auto n = parse_manifest(serialize(m));
  CHECK(n.day(0) == Dynamic::Multiplicative);
  CHECK(n.day(1) == Dynamic::Additive);
  CHECK(n.seeds[1].schedule == m.seeds[1].schedule);
  for (const auto& perm : n.shapes) CHECK(std::is_permutation(perm.begin(), perm.end(),
                                                               std::array{0, 1, 2, 3, 4, 5, 6, 7, 8}.begin()));
}

TEST_CASE("record files", "[io]") {
  const auto data = subject("s01", 1.0, 3);
  RecordFile f;
  f.header = Provenance{};
  f.header->command = "simulate";
  f.manifests.push_back(make_manifest("s01", 3));
  f.trials = to_records(data);
  std::ostringstream a;
  write_records(a, f);
  std::istringstream in(a.str());
  const RecordFile g = parse_records(in);
  CHECK(g.errors.empty());
  CHECK(g.trials.size() == 624);
  std::ostringstream b;
  write_records(b, g);
  CHECK(a.str() == b.str());

  const auto path = std::filesystem::temp_directory_path() / "ergo_io_test.jsonl";
  write_records(path, f);
  CHECK(read_records(path).trials.size() == 624);
  std::filesystem::remove(path);
  CHECK_THROWS(read_records(path));

  std::istringstream bad(a.str().substr(0, a.str().find('\n') + 1) + "{\"record\":\"trial\"}\nnot json\n" +
                         "{\"record\":\"mystery\"}\n" + serialize(f.trials[0]) + "\n");
  const RecordFile h = parse_records(bad);
  REQUIRE(h.errors.size() == 3);
  CHECK(h.errors[0].line == 2);
  CHECK(h.errors[1].line == 3);
  CHECK(h.errors[2].line == 4);
  CHECK(h.errors[2].message.find("mystery") != std::string::npos);
  CHECK(h.trials.size() == 1);
}

TEST_CASE("datasets convert to records and back", "[io]") {
  const auto data = subject("s02", 0.7, 4);
  const auto records = to_records(data);
  auto shuffled = records;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(1));
  const auto back = to_datasets(shuffled);
  REQUIRE(back.size() == 1);
  CHECK(back[0].id == "s02");
  for (Dynamic d : kDynamics) {
    const auto& x = data.condition(d)->trials;
    const auto& y = back[0].condition(d)->trials;
    REQUIRE(x.size() == y.size());
    CHECK(back[0].condition(d)->wealth.amount == data.condition(d)->wealth.amount);
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(x[i].pair.ids() == y[i].pair.ids());
      CHECK(x[i].choice == y[i].choice);
    }
  }
}

TEST_CASE("validation", "[io]") {
  const auto good = to_records(subject("s03", 1e3, 5));
  const auto ok = validate_dataset(good);
  CHECK(ok.ok());
  REQUIRE(ok.subjects.size() == 1);
  for (const auto& c : ok.subjects[0].conditions) {
    CHECK(c.trials == 312);
    CHECK(c.no_brainer_accuracy == 1.0);
  }
  CHECK(ok.excluded().empty());

  SECTION("missing trial") {
    auto r = good;
    r.erase(std::find_if(r.begin(), r.end(), [](const TrialRecord& t) {
      return t.condition == Dynamic::Multiplicative && t.index == 311;
    }));
    const auto rep = validate_dataset(r);
    CHECK_FALSE(rep.ok());
    bool named = false;
    for (const auto& e : rep.errors) {
      named = named || (e.message == "missing trial index 311" && e.condition == Dynamic::Multiplicative);
    }
    CHECK(named);
  }
  SECTION("timeout carries the worst stimulus") {
    auto r = good;
    r[7].choice = Choice::Timeout;
    CHECK_FALSE(validate_dataset(r).ok());
    const StimulusSet set = build_stimulus_set(r[7].condition);
    r[7].assigned_stimulus = worst_stimulus(pair_from_ids(set, r[7].ids, r[7].tag)).id;
    CHECK(validate_dataset(r).ok());
  }
  SECTION("foreign stimulus id and changing wealth") {
    auto r = good;
    r[0].ids[0] = r[0].condition == Dynamic::Additive ? 1 : 10;
    r[1].wealth += 1.0;
    const auto rep = validate_dataset(r);
    CHECK(rep.errors.size() >= 2);
  }
  SECTION("duplicate index") {
    auto r = good;
    r[3].index = r[2].index;
    CHECK_FALSE(validate_dataset(r).ok());
  }
}

TEST_CASE("no-brainer exclusion", "[io]") {
  // Flags exactly the subjects at or below chance; with beta = 0 that is
  // P(Bin(24, 1/2) <= 12) = 0.5806 of subjects per condition.
  int flagged = 0, n = 0;
  double acc = 0.0;
  for (std::uint64_t s = 1; s <= 150; ++s) {
    const auto rep = validate_dataset(to_records(subject("z" + std::to_string(s), 0.0, s)));
    REQUIRE(rep.ok());
    const auto& check = rep.subjects.at(0);
    bool any = false;
    for (const auto& c : check.conditions) {
      any = any || *c.no_brainer_accuracy <= 0.5;
      acc += *c.no_brainer_accuracy;
      ++n;
    }
    CHECK(check.exclude == any);
    flagged += check.exclude;
  }
  CHECK(acc / n == Approx(0.5).margin(4 * std::sqrt(0.25 / 24 / n)));
  const double p_any = 1.0 - (1.0 - 0.5806) * (1.0 - 0.5806);
  CHECK(flagged / 150.0 == Approx(p_any).margin(4 * std::sqrt(p_any * (1 - p_any) / 150)));
}

TEST_CASE("payout", "[io]") {
  const auto data = to_records(subject("s04", 1.0, 6));
  std::vector<TrialRecord> add;
  std::copy_if(data.begin(), data.end(), std::back_inserter(add),
               [](const TrialRecord& r) { return r.condition == Dynamic::Additive; });
  const Payout a = realize_payout(add, 9), b = realize_payout(add, 9);
  CHECK(a.payout == b.payout);
  CHECK(a.draws.size() == 10);
  std::vector<int> idx;
  for (const auto& d : a.draws) idx.push_back(d.index);
  std::sort(idx.begin(), idx.end());
  CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
  CHECK((a.payout >= 0.0 && a.payout <= 2000.0));

  // neutral outcomes keep the session wealth
  for (double w : {900.0, 2500.0}) {
    std::vector<TrialRecord> neutral(12, add.front());
    for (auto& r : neutral) {
      r.ids = {14, 14, 14, 14};
      r.wealth = w;
    }
    CHECK(realize_payout(neutral, 1).payout == std::min(2000.0, w));
  }
  // ten worst additive draws from 1000
  std::vector<TrialRecord> worst(10, add.front());
  for (auto& r : worst) {
    r.ids = {10, 18, 10, 17};
    r.choice = Choice::Timeout;
    r.wealth = 1000.0;
  }
  const Payout w = realize_payout(worst, 2);
  CHECK(w.wealth == 1000.0 - 4280.0);
  CHECK(w.payout == 0.0);
  CHECK_THROWS_AS(realize_payout(std::span(worst).first(9), 2), std::invalid_argument);
}

TEST_CASE("CSV importer", "[io]") {
  std::istringstream in(
      "# exported\n"
      "Subject ID,Dynamic,Trial No,Left-1,Left-2,Right-1,Right-2,Response,RT (ms)\n"
      "p1,additive,0,16,12,17,11,left,812\n"
      "p1,additive,1,14,10,14,12,,\n"
      "p1,mult,0,7,6,7,8,R,455.5\n"
      "p1,sideways,2,16,12,17,11,left,1\n");
  const auto rep = import_trials_csv(in);
  CHECK(rep.missing.empty());
  CHECK(rep.columns.at("subject") == "Subject ID");
  REQUIRE(rep.records.size() == 3);
  CHECK(rep.records[0].tag == PairTag::Core);
  CHECK(rep.records[1].tag == PairTag::NoBrainer);
  CHECK(rep.records[1].choice == Choice::Timeout);
  CHECK(rep.records[1].assigned_stimulus == 10);
  CHECK(rep.records[2].condition == Dynamic::Multiplicative);
  CHECK(rep.records[2].rt_ms == 455.5);
  REQUIRE(rep.errors.size() == 1);
  CHECK(rep.errors[0].line == 6);

  std::istringstream partial("subject,choice\na,left\n");
  const auto p = import_trials_csv(partial);
  CHECK(p.records.empty());
  CHECK(std::find(p.missing.begin(), p.missing.end(), "left1") != p.missing.end());
}

TEST_CASE("csv writer and number formatting", "[io]") {
  std::ostringstream out;
  CsvWriter w(out);
  w.comment("a\nb");
  w.row({"x", "y,z", "q\"r"});
  CHECK(out.str() == "# a\n# b\nx,\"y,z\",\"q\"\"r\"\n");
  CHECK(format_number(0.1) == "0.1");
  CHECK(std::stod(format_number(1.0 / 3)) == 1.0 / 3);
}

TEST_CASE("config hash", "[io]") {
  CHECK(config_hash("123456789") == "995dc9bbdf1939fa");  // CRC-64/XZ check value
  CHECK(config_hash("") == "0000000000000000");
  CHECK(config_hash("{\"a\":1}") != config_hash("{\"a\":2}"));
}
