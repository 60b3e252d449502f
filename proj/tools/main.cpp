// ergo: command-line entry point.
//
// Precedence for option values: built-in default < environment (serve only:
// ERGO_PORT, ERGO_DATA_DIR) < command-line flag < --config file.

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "ergo/server.hpp"

namespace {

using Json = nlohmann::ordered_json;
using namespace ergo;
using namespace ergo::cli;

std::string option_key(const CLI::Option* opt) {
  const auto& names = opt->get_lnames();
  return names.empty() ? std::string() : names.front();
}

// Config keys are long flag names without dashes, either at the top level or
// under an object named after the subcommand.
void apply_config(CLI::App* sub, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  Json cfg;
  try {
    cfg = Json::parse(in);
  } catch (const std::exception& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  }
  if (!cfg.is_object()) throw UsageError("config must be a JSON object");
  if (cfg.contains(sub->get_name()) && cfg[sub->get_name()].is_object()) cfg = cfg[sub->get_name()];
  for (const auto& [key, value] : cfg.items()) {
    if (value.is_object()) continue;  // another subcommand's section
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (!opt || key == "config") throw UsageError("unknown config key '" + key + "'");
    opt->clear();
    auto add = [&](const Json& v) {
      opt->add_result(v.is_string() ? v.get<std::string>() : v.dump());
    };
    if (value.is_array()) {
      for (const auto& v : value) add(v);
    } else {
      add(value);
    }
    opt->run_callback();
  }
}

Provenance provenance(CLI::App* sub) {
  Provenance p;
  p.command = sub->get_name();
  Json cfg = Json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string key = option_key(opt);
    if (key.empty() || key == "help" || key == "config") continue;
    const auto& res = opt->results();
    if (!res.empty()) {
      cfg[key] = res.size() == 1 ? Json(res.front()) : Json(res);
    } else {
      cfg[key] = opt->get_default_str();
    }
    if (key.find("seed") != std::string::npos) {
      const std::string v = res.empty() ? opt->get_default_str() : res.front();
      if (!v.empty()) p.seeds[key] = std::stoull(v);
    }
  }
  p.config = cfg.dump();
  p.config_hash = config_hash(p.config);
  return p;
}

std::string doubles_default(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ",") + format_number(x);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation, inference and analysis for additive vs multiplicative gamble experiments",
               "ergo"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  app.option_defaults()->always_capture_default();

  std::filesystem::path config;
  std::function<int(const Provenance&)> action;
  auto with_config = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON file whose keys override flags")->check(CLI::ExistingFile);
  };

  DesignOptions design;
  auto* s_design = app.add_subcommand("design", "stimulus sets, passive sequences, gamble space, schedules");
  s_design->add_option("--dynamic", design.dynamic, "additive, multiplicative or both");
  s_design->add_option("--seed", design.seed);
  s_design->add_option("--out", design.out, "output directory");
  with_config(s_design);
  s_design->callback([&] { action = [&](const Provenance& p) { return run_design(design, p); }; });

  SimulateOptions sim;
  auto* s_sim = app.add_subcommand("simulate", "agent wealth trajectories or synthetic choice datasets");
  s_sim->add_option("--agents", sim.agents,
                    "e.g. timeoptimal,iso:0,iso:1,pt:0.5,0.5,2 (default: the 12-agent roster)");
  s_sim->add_option("--dynamic", sim.dynamic);
  s_sim->add_option("--horizon", sim.horizon, "trials per trajectory");
  s_sim->add_flag("--horizon-week", sim.horizon_week, "one week of 9.5 s trials");
  s_sim->add_option("--replicates", sim.replicates);
  s_sim->add_option("--stride", sim.stride, "write every n-th trajectory point");
  s_sim->add_option("--beta", sim.beta, "choice sensitivity; 0 calibrates per model in dataset mode");
  s_sim->add_option("--seed", sim.seed);
  s_sim->add_option("--out", sim.out, "output directory for trajectories");
  s_sim->add_option("--dataset", sim.dataset, "write simulated choices to this JSONL file instead");
  s_sim->add_option("--subjects", sim.subjects, "subjects per agent in dataset mode");
  with_config(s_sim);
  s_sim->callback([&] { action = [&](const Provenance& p) { return run_simulate(sim, p); }; });

  InferOptions inf;
  auto* s_inf = app.add_subcommand("infer", "hierarchical isoelastic parameter estimation");
  s_inf->add_option("--data", inf.data, "trial records (JSONL)")->required();
  s_inf->add_option("--chains", inf.chains);
  s_inf->add_option("--samples", inf.samples, "retained draws per chain");
  s_inf->add_option("--burnin", inf.burnin);
  s_inf->add_option("--seed", inf.seed);
  s_inf->add_option("--form", inf.form, "exact or marginal isoelastic utility change");
  s_inf->add_flag("--serial", inf.serial, "run chains on one thread");
  s_inf->add_flag("--keep-excluded", inf.keep_excluded, "keep subjects failing the no-brainer check");
  s_inf->add_flag("--draws", inf.draws, "also write every draw");
  s_inf->add_option("--out", inf.out);
  with_config(s_inf);
  s_inf->callback([&] { action = [&](const Provenance& p) { return run_infer(inf, p); }; });

  SelectOptions sel;
  auto* s_sel = app.add_subcommand("select", "latent-mixture model selection and protected exceedance");
  s_sel->add_option("--data", sel.data)->required();
  s_sel->add_option("--chains", sel.chains);
  s_sel->add_option("--samples", sel.samples);
  s_sel->add_option("--burnin", sel.burnin);
  s_sel->add_option("--seed", sel.seed);
  s_sel->add_option("--pseudo-prior", sel.pseudo_prior, "group or pilot");
  s_sel->add_flag("--serial", sel.serial);
  s_sel->add_flag("--keep-excluded", sel.keep_excluded);
  s_sel->add_option("--out", sel.out);
  with_config(s_sel);
  s_sel->callback([&] { action = [&](const Provenance& p) { return run_select(sel, p); }; });

  AnalyzeOptions ana;
  auto* s_ana = app.add_subcommand("analyze", "choice proportions, Bayes factors, distances, growth");
  s_ana->add_option("--data", ana.data)->required();
  s_ana->add_option("--estimates", ana.estimates, "subjects.csv written by infer");
  s_ana->add_option("--scales", ana.scales, "Cauchy prior scales")->delimiter(',')->default_str(
      doubles_default(ana.scales));
  s_ana->add_flag("--keep-excluded", ana.keep_excluded);
  s_ana->add_option("--out", ana.out);
  with_config(s_ana);
  s_ana->callback([&] { action = [&](const Provenance& p) { return run_analyze(ana, p); }; });

  RecoverOptions rec;
  auto* s_rec = app.add_subcommand("recover", "parameter or model recovery on synthetic cohorts");
  s_rec->add_option("--mode", rec.mode, "parameters or models");
  s_rec->add_option("--grid-eta", rec.grid_eta)->delimiter(',')->default_str(doubles_default(rec.grid_eta));
  s_rec->add_option("--subjects-per-cell", rec.subjects_per_cell);
  s_rec->add_option("--chains", rec.chains);
  s_rec->add_option("--samples", rec.samples);
  s_rec->add_option("--burnin", rec.burnin);
  s_rec->add_option("--tolerance", rec.tolerance);
  s_rec->add_option("--seed", rec.seed);
  s_rec->add_flag("--serial", rec.serial);
  s_rec->add_option("--out", rec.out);
  with_config(s_rec);
  s_rec->callback([&] { action = [&](const Provenance& p) { return run_recover(rec, p); }; });

  ServeOptions srv;
  {
    const ServerConfig env = server_config_from_env();
    srv.port = env.port;
    srv.data_dir = env.data_dir;
  }
  auto* s_srv = app.add_subcommand("serve", "HTTP API for the task UI");
  s_srv->add_option("--host", srv.host);
  s_srv->add_option("--port", srv.port, "default from ERGO_PORT");
  s_srv->add_option("--data-dir", srv.data_dir, "default from ERGO_DATA_DIR");
  s_srv->add_option("--static", srv.static_dir, "directory of UI assets served at /");
  s_srv->add_option("--seed", srv.seed, "base seed for new subjects' manifests");
  s_srv->add_option("--choice-window-ms", srv.choice_window_ms);
  with_config(s_srv);
  s_srv->callback([&] { action = [&](const Provenance& p) { return run_serve(srv, p); }; });

  ExportOptions exp;
  auto* s_exp = app.add_subcommand("export", "CSV plot data, or --import a CSV into trial records");
  s_exp->add_option("--data", exp.data);
  s_exp->add_option("--what", exp.what, "trials or growth-table");
  s_exp->add_option("--out", exp.out);
  s_exp->add_flag("--import", exp.import, "read --data as CSV and write JSONL records to --out");
  with_config(s_exp);
  s_exp->callback([&] { action = [&](const Provenance& p) { return run_export(exp, p); }; });

  try {
    app.parse(argc, argv);
    CLI::App* sub = app.get_subcommands().front();
    if (!config.empty()) apply_config(sub, config);
    return action(provenance(sub));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
