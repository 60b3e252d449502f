#include "ergo/server.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <random>
#include <regex>
#include <stdexcept>

#include <httplib.h>
#include <json.hpp>

#include "ergo/parallel.hpp"

namespace ergo {

using Json = nlohmann::ordered_json;

ServerConfig server_config_from_env(ServerConfig base) {
  if (const char* port = std::getenv("ERGO_PORT"); port && *port) base.port = std::stoi(port);
  if (const char* dir = std::getenv("ERGO_DATA_DIR"); dir && *dir) base.data_dir = dir;
  return base;
}

namespace {

enum class Phase { Passive, Active, Complete };

const char* to_string(Phase p) {
  switch (p) {
    case Phase::Passive: return "passive";
    case Phase::Active: return "active";
    default: return "complete";
  }
}

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

Reply json_reply(int status, const Json& j) { return {status, j.dump()}; }

Reply error_reply(int status, const std::string& message) {
  return json_reply(status, Json{{"error", message}});
}

bool valid_id(const std::string& id) {
  static const std::regex pattern("[A-Za-z0-9_-]{1,64}");
  return std::regex_match(id, pattern);
}

struct Day {
  Dynamic dynamic = Dynamic::Additive;
  StimulusSet set;
  std::vector<int> passive;         // stimulus ids
  std::vector<double> passive_path;  // wealth after each passive trial
  Schedule schedule;
  std::uint64_t jitter_seed = 0;
};

}  // namespace

class Session {
 public:
  Session(const ServerConfig& cfg, std::string id) : cfg_(cfg), id_(std::move(id)) {
    std::filesystem::create_directories(cfg_.data_dir);
    load_manifest();
    for (int k = 0; k < 2; ++k) days_[k] = build_day(manifest_.day(k));
    replay();
  }

  std::mutex mutex;

  Reply next_trial() {
    Json j{{"session", id_}, {"phase", to_string(phase_)}};
    if (phase_ == Phase::Complete) return json_reply(200, j);
    const Day& d = days_[day_];
    j["day"] = day_ + 1;
    j["dynamic"] = to_string(d.dynamic);
    j["trial"] = cursor_;
    if (phase_ == Phase::Passive) {
      const int id = d.passive[static_cast<std::size_t>(cursor_)];
      j["of"] = d.passive.size();
      j["wealth"] = wealth_;
      j["stimulus"] = stimulus_json(d, id);
      j["timing"] = Json{{"response_window_ms", cfg_.passive_window_ms}};
      return json_reply(200, j);
    }
    const GamblePair& p = d.schedule.trials[static_cast<std::size_t>(cursor_)];
    const auto ids = p.ids();
    j["of"] = d.schedule.trials.size();
    j["left"] = Json::array({stimulus_json(d, ids[0]), stimulus_json(d, ids[1])});
    j["right"] = Json::array({stimulus_json(d, ids[2]), stimulus_json(d, ids[3])});
    j["timing"] = Json{{"right_delay_ms", jitter(d, cursor_)},
                       {"choice_window_ms", cfg_.choice_window_ms}};
    shown_ms_ = now_ms();
    return json_reply(200, j);
  }

  Reply respond(const std::string& body) {
    Json req;
    try {
      req = Json::parse(body);
    } catch (const std::exception&) {
      return error_reply(400, "body is not valid JSON");
    }
    if (!req.is_object() || !req.contains("trial") || !req.contains("choice")) {
      return error_reply(400, "expected {trial, choice, rt_ms}");
    }
    if (phase_ == Phase::Complete) return error_reply(409, "session complete");
    if (!req["trial"].is_number_integer() || req["trial"].get<int>() != cursor_) {
      return json_reply(409, Json{{"error", "unexpected trial"}, {"expected", cursor_}});
    }
    if (!req["choice"].is_string()) return error_reply(400, "choice must be a string");
    const std::string choice = req["choice"].get<std::string>();
    double rt = 0.0;
    if (req.contains("rt_ms")) {
      if (!req["rt_ms"].is_number()) return error_reply(400, "rt_ms must be a number");
      rt = req["rt_ms"].get<double>();
    }
    return phase_ == Phase::Passive ? passive_response(choice, rt) : active_response(choice, rt);
  }

  Reply summary() {
    Json days = Json::array();
    double total = 0.0;
    bool all_paid = true;
    for (int k = 0; k < 2; ++k) {
      const Day& d = days_[k];
      const auto& recs = records_[index_of(d.dynamic)];
      const bool passive_done =
          k < day_ || (k == day_ && phase_ != Phase::Passive) || phase_ == Phase::Complete;
      Json day{{"day", k + 1},
               {"dynamic", to_string(d.dynamic)},
               {"passive_complete", passive_done},
               {"active_trials", recs.size()}};
      if (passive_done) day["session_wealth"] = d.passive_path.back();
      if (static_cast<int>(recs.size()) >= manifest_.payout_trials) {
        const auto pay = realize_payout(recs, payout_seed(d.dynamic), manifest_.payout_trials,
                                        manifest_.payout_min, manifest_.payout_max);
        day["payout_preview"] = pay.payout;
        total += pay.payout;
      } else {
        day["payout_preview"] = nullptr;
        all_paid = false;
      }
      days.push_back(day);
    }
    Json j{{"session", id_},
           {"phase", to_string(phase_)},
           {"day", phase_ == Phase::Complete ? 2 : day_ + 1},
           {"wealth", wealth_},
           {"days", days}};
    j["payout_total"] = all_paid ? Json(total) : Json(nullptr);
    return json_reply(200, j);
  }

 private:
  std::filesystem::path trials_path() const { return cfg_.data_dir / (id_ + ".jsonl"); }
  std::filesystem::path manifest_path() const { return cfg_.data_dir / (id_ + ".manifest.jsonl"); }

  void load_manifest() {
    if (std::filesystem::exists(manifest_path())) {
      const RecordFile f = read_records(manifest_path());
      if (f.manifests.size() != 1 || !f.errors.empty()) {
        throw std::runtime_error("unreadable manifest for " + id_);
      }
      manifest_ = f.manifests.front();
      return;
    }
    manifest_ = make_manifest(id_, mix_seed(cfg_.seed, std::stoull(config_hash(id_), nullptr, 16)));
    RecordFile f;
    f.manifests.push_back(manifest_);
    write_records(manifest_path(), f);
  }

  Day build_day(Dynamic dyn) const {
    const DaySeeds& s = manifest_.seeds[index_of(dyn)];
    Day d;
    d.dynamic = dyn;
    d.set = build_stimulus_set(dyn);
    d.passive = generate_passive_sequence(d.set, s.passive).order;
    d.passive_path = passive_wealth_path(d.set, d.passive, WealthState{manifest_.endowment});
    d.schedule = make_schedule(build_gamble_space(d.set, s.no_brainers), s.schedule);
    d.jitter_seed = mix_seed(s.schedule, 0x6a);
    return d;
  }

  // Progress is implied by the stored active records: a day with any records
  // has finished its passive session.
  void replay() {
    if (std::filesystem::exists(trials_path())) {
      const RecordFile f = read_records(trials_path());
      if (!f.errors.empty()) throw std::runtime_error("corrupt trial file for " + id_);
      for (const auto& r : f.trials) records_[index_of(r.condition)].push_back(r);
    }
    day_ = 0;
    phase_ = Phase::Passive;
    cursor_ = 0;
    wealth_ = manifest_.endowment;
    for (int k = 0; k < 2; ++k) {
      const auto n = static_cast<int>(records_[index_of(days_[k].dynamic)].size());
      if (n == 0) break;
      day_ = k;
      phase_ = Phase::Active;
      cursor_ = n;
      wealth_ = days_[k].passive_path.back();
      if (n >= kScheduleLength) finish_active();
      if (phase_ != Phase::Passive || k == 1) break;
    }
  }

  Json stimulus_json(const Day& d, int id) const {
    const auto slot = static_cast<std::size_t>(id - d.set.first_id());
    return Json{{"id", id}, {"shape", manifest_.shapes[index_of(d.dynamic)][slot]}};
  }

  int jitter(const Day& d, int trial) const {
    std::mt19937_64 rng(mix_seed(d.jitter_seed, static_cast<std::uint64_t>(trial)));
    return std::uniform_int_distribution<int>(cfg_.jitter_lo_ms, cfg_.jitter_hi_ms)(rng);
  }

  std::uint64_t payout_seed(Dynamic d) const { return mix_seed(manifest_.seeds[index_of(d)].schedule, 0x70); }

  Reply passive_response(const std::string& choice, double rt) {
    Day& d = days_[day_];
    if (choice != "press" && choice != "timeout") {
      return error_reply(400, "passive trials accept 'press' or 'timeout'");
    }
    if (choice == "timeout" || rt > cfg_.passive_window_ms) {
      return json_reply(200, Json{{"ok", true},
                                  {"feedback", "press button earlier"},
                                  {"requeued", true},
                                  {"next", "passive"}});
    }
    const int id = d.passive[static_cast<std::size_t>(cursor_)];
    wealth_ = d.passive_path[static_cast<std::size_t>(cursor_)];
    ++cursor_;
    if (cursor_ == static_cast<int>(d.passive.size())) {
      phase_ = Phase::Active;
      cursor_ = 0;
    }
    return json_reply(200, Json{{"ok", true},
                                {"stimulus", id},
                                {"wealth", wealth_},
                                {"next", to_string(phase_)}});
  }

  Reply active_response(const std::string& choice, double rt) {
    Day& d = days_[day_];
    Choice c;
    if (choice == "left") {
      c = Choice::Left;
    } else if (choice == "right") {
      c = Choice::Right;
    } else if (choice == "timeout") {
      c = Choice::Timeout;
    } else {
      return error_reply(400, "active trials accept 'left', 'right' or 'timeout'");
    }
    if (c != Choice::Timeout && rt > cfg_.choice_window_ms) c = Choice::Timeout;

    const GamblePair& p = d.schedule.trials[static_cast<std::size_t>(cursor_)];
    const std::int64_t now = now_ms();
    TrialRecord r;
    r.subject = id_;
    r.condition = d.dynamic;
    r.index = cursor_;
    r.ids = p.ids();
    r.tag = p.tag;
    r.choice = c;
    r.rt_ms = c == Choice::Timeout ? 0.0 : rt;
    r.shown_ms = shown_ms_ ? shown_ms_ : now - static_cast<std::int64_t>(rt);
    r.responded_ms = c == Choice::Timeout ? 0 : now;
    r.wealth = wealth_;
    if (c == Choice::Timeout) r.assigned_stimulus = worst_stimulus(p).id;
    {
      std::ofstream out(trials_path(), std::ios::app | std::ios::binary);
      out << serialize(r) << '\n';
      if (!out) return error_reply(500, "could not persist trial");
    }
    records_[index_of(d.dynamic)].push_back(r);
    shown_ms_ = 0;
    ++cursor_;
    if (cursor_ == kScheduleLength) finish_active();
    Json j{{"ok", true}, {"recorded", r.index}, {"choice", to_string(c)}, {"next", to_string(phase_)}};
    if (c == Choice::Timeout) j["assigned_stimulus"] = *r.assigned_stimulus;
    return json_reply(200, j);
  }

  void finish_active() {
    if (day_ == 1) {
      phase_ = Phase::Complete;
      return;
    }
    day_ = 1;
    phase_ = Phase::Passive;
    cursor_ = 0;
    wealth_ = manifest_.endowment;
  }

  const ServerConfig& cfg_;
  std::string id_;
  SessionManifest manifest_;
  std::array<Day, 2> days_;
  std::array<std::vector<TrialRecord>, 2> records_;  // by index_of(Dynamic)
  int day_ = 0;
  Phase phase_ = Phase::Passive;
  int cursor_ = 0;
  double wealth_ = kEndowment;
  std::int64_t shown_ms_ = 0;
};

SessionServer::SessionServer(ServerConfig cfg) : cfg_(std::move(cfg)) {}
SessionServer::~SessionServer() = default;

std::shared_ptr<Session> SessionServer::session(const std::string& id) {
  std::lock_guard<std::mutex> lock(registry_mutex_);
  auto it = sessions_.find(id);
  if (it != sessions_.end()) return it->second;
  auto s = std::make_shared<Session>(cfg_, id);
  sessions_.emplace(id, s);
  return s;
}

namespace {

template <class F>
Reply guarded(const std::string& id, F&& f) {
  if (!valid_id(id)) return error_reply(400, "session id must match [A-Za-z0-9_-]{1,64}");
  try {
    return f();
  } catch (const std::exception& e) {
    return error_reply(500, e.what());
  }
}

}  // namespace

Reply SessionServer::next_trial(const std::string& id) {
  return guarded(id, [&] {
    auto s = session(id);
    std::lock_guard<std::mutex> lock(s->mutex);
    return s->next_trial();
  });
}

Reply SessionServer::respond(const std::string& id, const std::string& body) {
  return guarded(id, [&] {
    auto s = session(id);
    std::lock_guard<std::mutex> lock(s->mutex);
    return s->respond(body);
  });
}

Reply SessionServer::summary(const std::string& id) {
  return guarded(id, [&] {
    auto s = session(id);
    std::lock_guard<std::mutex> lock(s->mutex);
    return s->summary();
  });
}

void SessionServer::mount(httplib::Server& http) {
  auto send = [](httplib::Response& res, const Reply& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  http.Get(R"(/api/session/([^/]+)/next-trial)", [this, send](const httplib::Request& req,
                                                             httplib::Response& res) {
    send(res, next_trial(req.matches[1]));
  });
  http.Post(R"(/api/session/([^/]+)/response)", [this, send](const httplib::Request& req,
                                                            httplib::Response& res) {
    send(res, respond(req.matches[1], req.body));
  });
  http.Get(R"(/api/session/([^/]+)/summary)", [this, send](const httplib::Request& req,
                                                          httplib::Response& res) {
    send(res, summary(req.matches[1]));
  });
  if (cfg_.static_dir) http.set_mount_point("/", cfg_.static_dir->string());
}

int run_server(const ServerConfig& cfg) {
  SessionServer app(cfg);
  httplib::Server http;
  app.mount(http);
  if (!http.listen(cfg.host, cfg.port)) return 1;
  return 0;
}

}  // namespace ergo
