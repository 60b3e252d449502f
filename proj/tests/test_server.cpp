#include <algorithm>
#include <cmath>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include <catch_amalgamated.hpp>

#include "ergo/server.hpp"

using namespace ergo;
using Json = nlohmann::json;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ergo_server_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

// HTTP server on an ephemeral port for the lifetime of the object.
class Running {
 public:
  explicit Running(const ServerConfig& cfg) : app_(cfg) {
    app_.mount(http_);
    port_ = http_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { http_.listen_after_bind(); });
    http_.wait_until_ready();
  }
  ~Running() {
    http_.stop();
    thread_.join();
  }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port_); }

 private:
  SessionServer app_;
  httplib::Server http_;
  int port_ = 0;
  std::thread thread_;
};

Json get(httplib::Client& c, const std::string& path, int expect = 200) {
  const auto res = c.Get(path.c_str());
  REQUIRE(res);
  REQUIRE(res->status == expect);
  return Json::parse(res->body);
}

Json post(httplib::Client& c, const std::string& path, const Json& body, int expect = 200) {
  const auto res = c.Post(path.c_str(), body.dump(), "application/json");
  REQUIRE(res);
  INFO(res->body);
  REQUIRE(res->status == expect);
  return Json::parse(res->body);
}

// Asymptotic Kolmogorov tail P(K > x).
double kolmogorov_tail(double x) {
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) s += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * x * x);
  return std::clamp(s, 0.0, 1.0);
}

// Plays one phase to its end; returns the active right-gamble delays seen.
std::vector<int> play_phase(httplib::Client& c, const std::string& id, int& miss_budget) {
  std::vector<int> delays;
  const std::string base = "/api/session/" + id;
  Json t = get(c, base + "/next-trial");
  const std::string phase = t["phase"];
  while (t["phase"] == phase) {
    const int trial = t["trial"];
    if (phase == "passive") {
      if (miss_budget > 0 && trial == 5) {
        --miss_budget;
        const Json late = post(c, base + "/response", {{"trial", trial}, {"choice", "press"}, {"rt_ms", 1050}});
        CHECK(late["feedback"] == "press button earlier");
        CHECK(late["requeued"] == true);
        const Json again = get(c, base + "/next-trial");
        CHECK(again["trial"] == trial);
        CHECK(again["stimulus"] == t["stimulus"]);
      }
      post(c, base + "/response", {{"trial", trial}, {"choice", "press"}, {"rt_ms", 950}});
    } else {
      delays.push_back(t["timing"]["right_delay_ms"]);
      CHECK(t["left"].size() == 2);
      const std::string choice = trial % 50 == 7 ? "timeout" : (trial % 2 ? "left" : "right");
      const Json ack = post(c, base + "/response", {{"trial", trial}, {"choice", choice}, {"rt_ms", 800}});
      CHECK(ack["recorded"] == trial);
      if (choice == "timeout") CHECK(ack.contains("assigned_stimulus"));
    }
    t = get(c, base + "/next-trial");
  }
  return delays;
}

}  // namespace

TEST_CASE("full session over HTTP", "[server]") {
  ServerConfig cfg;
  cfg.data_dir = fresh_dir("full");
  cfg.seed = 4;
  std::vector<int> delays;
  {
    Running srv(cfg);
    auto c = srv.client();
    const std::string base = "/api/session/p01";
    Json first = get(c, base + "/next-trial");
    CHECK(first["phase"] == "passive");
    CHECK(first["of"] == 334);
    CHECK(first["timing"]["response_window_ms"] == 1000);
    CHECK(first["wealth"] == 1000.0);

    int misses = 1;
    for (int step = 0; step < 4; ++step) {
      auto d = play_phase(c, "p01", misses);
      delays.insert(delays.end(), d.begin(), d.end());
      if (step == 1) {
        const Json s = get(c, base + "/summary");
        CHECK(s["days"][0]["active_trials"] == 312);
        CHECK(s["days"][0]["payout_preview"].is_number());
        CHECK(s["payout_total"].is_null());
      }
    }
    CHECK(misses == 0);
    CHECK(get(c, base + "/next-trial")["phase"] == "complete");
    post(c, base + "/response", {{"trial", 0}, {"choice", "left"}}, 409);
    const Json s = get(c, base + "/summary");
    CHECK(s["phase"] == "complete");
    const double total = s["payout_total"];
    CHECK((total >= 0.0 && total <= 4000.0));
    for (const auto& day : s["days"]) {
      const double p = day["payout_preview"];
      CHECK((p >= 0.0 && p <= 2000.0));
    }
  }
  CHECK(delays.size() == 624);

  const RecordFile f = read_records(cfg.data_dir / "p01.jsonl");
  CHECK(f.errors.empty());
  CHECK(f.trials.size() == 624);
  const ValidationReport rep = validate_dataset(f.trials);
  CHECK(rep.ok());
  for (const auto& e : rep.errors) WARN(e.message);
  for (Dynamic d : kDynamics) {
    CHECK(std::count_if(f.trials.begin(), f.trials.end(),
                        [&](const TrialRecord& r) { return r.condition == d; }) == 312);
  }

  // right-gamble delay: uniform on [1500, 3000] ms
  std::sort(delays.begin(), delays.end());
  const double n = static_cast<double>(delays.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < delays.size(); ++i) {
    const double cdf = (delays[i] - 1500.0) / 1500.0;
    dmax = std::max({dmax, (i + 1) / n - cdf, cdf - i / n});
  }
  CHECK(delays.front() >= 1500);
  CHECK(delays.back() <= 3000);
  CHECK(kolmogorov_tail(std::sqrt(n) * dmax) > 0.001);

  // restart resumes from disk: same state, stale request refused
  {
    Running srv(cfg);
    auto c = srv.client();
    CHECK(get(c, "/api/session/p01/next-trial")["phase"] == "complete");
    CHECK(get(c, "/api/session/p01/summary")["payout_total"].get<double>() ==
          get(c, "/api/session/p01/summary")["payout_total"].get<double>());
  }
  std::filesystem::remove_all(cfg.data_dir);
}

TEST_CASE("server resumes mid-session", "[server]") {
  ServerConfig cfg;
  cfg.data_dir = fresh_dir("resume");
  Json before;
  {
    Running srv(cfg);
    auto c = srv.client();
    int misses = 0;
    play_phase(c, "p02", misses);  // passive day 1
    for (int t = 0; t < 40; ++t) {
      post(c, "/api/session/p02/response", {{"trial", t}, {"choice", "left"}, {"rt_ms", 500}});
    }
    before = get(c, "/api/session/p02/next-trial");
  }
  Running srv(cfg);
  auto c = srv.client();
  const Json after = get(c, "/api/session/p02/next-trial");
  CHECK(after["phase"] == "active");
  CHECK(after["trial"] == 40);
  CHECK(after["left"] == before["left"]);
  CHECK(after["right"] == before["right"]);
  CHECK(after["timing"] == before["timing"]);
  std::filesystem::remove_all(cfg.data_dir);
}

TEST_CASE("server rejects bad requests", "[server]") {
  ServerConfig cfg;
  cfg.data_dir = fresh_dir("errors");
  SessionServer app(cfg);
  CHECK(app.next_trial("bad id!").status == 400);
  CHECK(app.next_trial(std::string(65, 'a')).status == 400);
  CHECK(app.respond("p03", "not json").status == 400);
  CHECK(app.respond("p03", R"({"trial":0})").status == 400);
  CHECK(app.respond("p03", R"({"trial":1,"choice":"press"})").status == 409);
  CHECK(app.respond("p03", R"({"trial":0,"choice":"left"})").status == 400);  // passive phase
  CHECK(app.respond("p03", R"({"trial":0,"choice":"press","rt_ms":"fast"})").status == 400);
  CHECK(app.respond("p03", R"({"trial":0,"choice":"press","rt_ms":990})").status == 200);
  const Json s = Json::parse(app.summary("p03").body);
  CHECK(s["phase"] == "passive");
  CHECK(s["days"][0]["passive_complete"] == false);

  // late active answers become timeouts
  for (int t = 1; t < 334; ++t) {
    REQUIRE(app.respond("p03", Json{{"trial", t}, {"choice", "press"}, {"rt_ms", 10}}.dump()).status == 200);
  }
  const Json late = Json::parse(app.respond("p03", R"({"trial":0,"choice":"left","rt_ms":2600})").body);
  CHECK(late["choice"] == "timeout");
  CHECK(app.respond("p03", R"({"trial":1,"choice":"up"})").status == 400);
  std::filesystem::remove_all(cfg.data_dir);
}

TEST_CASE("server config from environment", "[server]") {
  ::setenv("ERGO_PORT", "9123", 1);
  ::setenv("ERGO_DATA_DIR", "/tmp/ergo_env", 1);
  const auto cfg = server_config_from_env();
  CHECK(cfg.port == 9123);
  CHECK(cfg.data_dir == "/tmp/ergo_env");
  ::unsetenv("ERGO_PORT");
  ::unsetenv("ERGO_DATA_DIR");
  CHECK(server_config_from_env().port == 8080);
}
