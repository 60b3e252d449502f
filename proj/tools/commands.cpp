#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "ergo/agents.hpp"
#include "ergo/mcmc.hpp"
#include "ergo/mixture.hpp"
#include "ergo/recovery.hpp"
#include "ergo/server.hpp"
#include "ergo/stats.hpp"

namespace ergo::cli {

namespace {

std::vector<Dynamic> dynamics_from(const std::string& s) {
  if (s == "both") return {Dynamic::Additive, Dynamic::Multiplicative};
  try {
    return {dynamic_from_string(s)};
  } catch (const std::exception&) {
    throw UsageError("--dynamic must be additive, multiplicative or both");
  }
}

std::string dname(Dynamic d) { return std::string(to_string(d)); }

std::string num(double v) { return format_number(v); }

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, const Provenance& prov) : out_(path), csv_(out_) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    csv_.comment(serialize(prov));
  }
  CsvWriter& operator*() { return csv_; }
  CsvWriter* operator->() { return &csv_; }

 private:
  std::ofstream out_;
  CsvWriter csv_;
};

void make_dir(const std::filesystem::path& dir) { std::filesystem::create_directories(dir); }

SamplerConfig sampler(int chains, int samples, int burnin, std::uint64_t seed, bool serial) {
  if (chains < 1 || samples < 1 || burnin < 0) {
    throw UsageError("chains and samples must be positive, burn-in non-negative");
  }
  SamplerConfig cfg;
  cfg.chains = chains;
  cfg.samples_per_chain = samples;
  cfg.burn_in = burnin;
  cfg.seed = seed;
  cfg.exec = serial ? Execution::Serial : Execution::Parallel;
  return cfg;
}

// Reads, validates and converts a record file. Parse errors and structural
// errors are itemized on stderr and abort the command.
std::optional<std::vector<SubjectDataset>> load_datasets(const std::filesystem::path& path,
                                                         bool keep_excluded) {
  if (path.empty()) throw UsageError("--data is required");
  if (!std::filesystem::exists(path)) throw UsageError("no such file: " + path.string());
  const RecordFile file = read_records(path);
  for (const auto& e : file.errors) {
    std::cerr << path.string() << ":" << e.line << ": " << e.message << "\n";
  }
  if (!file.errors.empty()) return std::nullopt;
  const ValidationReport rep = validate_dataset(file.trials);
  for (const auto& w : rep.warnings) {
    std::cerr << "warning: " << w.subject
              << (w.condition ? " [" + dname(*w.condition) + "]" : std::string()) << ": "
              << w.message << "\n";
  }
  for (const auto& e : rep.errors) {
    std::cerr << "error: " << e.subject
              << (e.condition ? " [" + dname(*e.condition) + "]" : std::string()) << ": "
              << e.message << "\n";
  }
  if (!rep.ok()) return std::nullopt;
  std::vector<std::string> dropped;
  std::vector<TrialRecord> kept;
  const auto excluded = rep.excluded();
  for (const auto& r : file.trials) {
    if (keep_excluded || std::find(excluded.begin(), excluded.end(), r.subject) == excluded.end()) {
      kept.push_back(r);
    }
  }
  for (const auto& s : excluded) {
    std::cerr << (keep_excluded ? "kept" : "excluded") << " " << s
              << ": no-brainer accuracy <= 0.5\n";
  }
  auto data = to_datasets(kept);
  if (data.empty()) throw UsageError("no subjects left after exclusion");
  return data;
}

// "timeoptimal,iso:0,iso:1,pt:0.5,0.5,2": a token starting with a letter opens
// a new agent; bare numbers extend the previous agent's parameter list.
std::vector<NamedAgent> parse_agents(const std::string& spec, double beta) {
  std::vector<std::pair<std::string, std::vector<double>>> raw;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    if (std::isalpha(static_cast<unsigned char>(tok[0]))) {
      const auto colon = tok.find(':');
      raw.push_back({tok.substr(0, colon), {}});
      if (colon != std::string::npos) raw.back().second.push_back(std::stod(tok.substr(colon + 1)));
    } else {
      if (raw.empty()) throw UsageError("agent list must start with a model name");
      raw.back().second.push_back(std::stod(tok));
    }
  }
  std::vector<NamedAgent> out;
  for (const auto& [kind, p] : raw) {
    UtilityModelSpec m;
    std::string name;
    if (kind == "timeoptimal" || kind == "to") {
      if (!p.empty()) throw UsageError("timeoptimal takes no parameters");
      m = TimeOptimalParams{};
      name = "timeoptimal";
    } else if (kind == "iso") {
      if (p.size() != 1) throw UsageError("iso takes one parameter: iso:eta");
      m = IsoelasticParams{p[0]};
      name = "iso:" + num(p[0]);
    } else if (kind == "pt") {
      if (p.size() == 2) {
        m = ProspectTheoryParams{p[0], p[0], p[1]};
      } else if (p.size() == 3) {
        m = ProspectTheoryParams{p[0], p[1], p[2]};
      } else {
        throw UsageError("pt takes alpha,lambda or alpha_gain,alpha_loss,lambda");
      }
      name = "pt:" + num(p[0]) + "," + num(p[1]) + (p.size() == 3 ? "," + num(p[2]) : "");
    } else {
      throw UsageError("unknown agent kind '" + kind + "'");
    }
    out.push_back({name, uniform_agent(name, m, beta)});
  }
  if (out.empty()) throw UsageError("--agents is empty");
  return out;
}

}  // namespace

int run_design(const DesignOptions& o, const Provenance& prov) {
  make_dir(o.out);
  for (Dynamic d : dynamics_from(o.dynamic)) {
    const std::uint64_t base = mix_seed(o.seed, index_of(d));
    const StimulusSet set = build_stimulus_set(d);
    const PassiveSequence passive = generate_passive_sequence(set, mix_seed(base, 0));
    const GambleSpace space = build_gamble_space(set, mix_seed(base, 1));
    const Schedule sched = make_schedule(space, mix_seed(base, 2));
    const std::string tag = dname(d);

    {
      CsvFile f(o.out / ("stimuli_" + tag + ".csv"), prov);
      f->row({"id", "value", "growth"});
      for (const auto& s : set.outcomes) {
        f->row({std::to_string(s.id), num(s.value), num(s.growth_contribution())});
      }
    }
    {
      CsvFile f(o.out / ("passive_" + tag + ".csv"), prov);
      f->row({"position", "stimulus", "wealth"});
      const auto path = passive_wealth_path(set, passive.order);
      for (std::size_t k = 0; k < passive.order.size(); ++k) {
        f->row({std::to_string(k), std::to_string(passive.order[k]), num(path[k])});
      }
    }
    {
      // 9 x 9 time-average growth of every two-stimulus gamble.
      CsvFile f(o.out / ("growth_table_" + tag + ".csv"), prov);
      std::vector<std::string> head{"first\\second"};
      for (const auto& s : set.outcomes) head.push_back(std::to_string(s.id));
      f->row(head);
      for (const auto& a : set.outcomes) {
        std::vector<std::string> row{std::to_string(a.id)};
        for (const auto& b : set.outcomes) row.push_back(num(gamble_growth_rate(Gamble(a, b))));
        f->row(row);
      }
    }
    int discrepant = 0;
    {
      CsvFile f(o.out / ("schedule_" + tag + ".csv"), prov);
      f->row({"trial", "tag", "left1", "left2", "right1", "right2", "growth_left", "growth_right",
              "discrepant"});
      for (std::size_t k = 0; k < sched.trials.size(); ++k) {
        const auto& p = sched.trials[k];
        const auto ids = p.ids();
        const bool disc = classify_discrepant(p, passive.terminal_wealth);
        discrepant += disc;
        f->row({std::to_string(k), p.tag == PairTag::Core ? "core" : "no-brainer",
                std::to_string(ids[0]), std::to_string(ids[1]), std::to_string(ids[2]),
                std::to_string(ids[3]), num(gamble_growth_rate(p.left)),
                num(gamble_growth_rate(p.right)), disc ? "1" : "0"});
      }
    }
    int disc_1000 = 0;
    for (const auto& p : sched.trials) disc_1000 += classify_discrepant(p, {kEndowment});
    std::printf("%s: %zu mixed gambles, %zu core pairs, %zu no-brainers, %zu trials; "
                "passive wealth %.4f after %llu draws; discrepant trials %d at 1000 DKK, %d at "
                "session wealth\n",
                tag.c_str(), space.mixed.size(), space.core.size(), space.no_brainers.size(),
                sched.trials.size(), passive.terminal_wealth.amount,
                static_cast<unsigned long long>(passive.attempts), disc_1000, discrepant);
  }
  return 0;
}

int run_simulate(const SimulateOptions& o, const Provenance& prov) {
  if (o.replicates < 1 || o.stride < 1 || o.subjects < 1) {
    throw UsageError("replicates, stride and subjects must be positive");
  }
  if (o.dataset) {
    const double beta = o.beta;  // 0: calibrated per model and dynamic
    const auto agents = parse_agents(o.agents.empty() ? "timeoptimal" : o.agents, 1.0);
    RecordFile file;
    file.header = prov;
    int k = 0;
    for (const auto& a : agents) {
      for (int s = 0; s < o.subjects; ++s, ++k) {
        char id[32];
        std::snprintf(id, sizeof id, "sim%03d", k);
        const SessionManifest m = make_manifest(id, mix_seed(o.seed, static_cast<std::uint64_t>(k)));
        AgentConfig cfg = a.config;
        cfg.id = id;
        std::array<Schedule, 2> sched;
        for (Dynamic d : kDynamics) {
          const auto& seeds = m.seeds[index_of(d)];
          const StimulusSet set = build_stimulus_set(d);
          sched[index_of(d)] = make_schedule(build_gamble_space(set, seeds.no_brainers), seeds.schedule);
          const WealthState w = generate_passive_sequence(set, seeds.passive).terminal_wealth;
          cfg[d].wealth = w;
          cfg[d].beta = beta > 0 ? beta : calibrated_sensitivity(cfg[d].model, d, w);
        }
        const SubjectDataset data =
            simulate_subject(cfg, sched[0], sched[1], mix_seed(m.seeds[0].schedule, 0x51));
        file.manifests.push_back(m);
        for (auto& r : to_records(data)) file.trials.push_back(std::move(r));
        std::printf("%s <- %s (beta add %.4g, mult %.4g)\n", id, a.name.c_str(),
                    cfg[Dynamic::Additive].beta, cfg[Dynamic::Multiplicative].beta);
      }
    }
    if (o.dataset->has_parent_path()) make_dir(o.dataset->parent_path());
    write_records(*o.dataset, file);
    std::printf("wrote %zu trial records to %s\n", file.trials.size(), o.dataset->string().c_str());
    return 0;
  }

  const auto agents = o.agents.empty() ? synthetic_agent_roster(o.beta) : parse_agents(o.agents, o.beta);
  const std::int64_t horizon = o.horizon_week ? kTrialsPerWeek : o.horizon;
  if (horizon < 1) throw UsageError("--horizon must be positive");
  make_dir(o.out);
  for (Dynamic d : dynamics_from(o.dynamic)) {
    const std::string tag = dname(d);
    CsvFile traj(o.out / ("trajectories_" + tag + ".csv"), prov);
    CsvFile growth(o.out / ("growth_" + tag + ".csv"), prov);
    std::vector<std::string> head{"replicate", "trial", "seconds"};
    for (const auto& a : agents) head.push_back(a.name);
    traj->row(head);
    growth->row({"replicate", "agent", "growth_rate", "went_negative", "rank"});
    std::vector<int> wins(agents.size(), 0);
    for (int r = 0; r < o.replicates; ++r) {
      const auto paths = simulate_roster(agents, d, horizon, mix_seed(o.seed, static_cast<std::uint64_t>(r)));
      std::vector<double> g;
      for (const auto& p : paths) g.push_back(p.growth_rate());
      std::vector<std::size_t> order(g.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return g[a] > g[b]; });
      ++wins[order.front()];
      for (std::size_t k = 0; k < agents.size(); ++k) {
        const auto rank = std::find(order.begin(), order.end(), k) - order.begin() + 1;
        growth->row({std::to_string(r), agents[k].name, num(g[k]), paths[k].went_negative ? "1" : "0",
                     std::to_string(rank)});
      }
      for (std::size_t t = 0; t <= static_cast<std::size_t>(horizon); t += static_cast<std::size_t>(o.stride)) {
        std::vector<std::string> row{std::to_string(r), std::to_string(t), num(paths[0].time_seconds(t))};
        for (const auto& p : paths) row.push_back(num(p.level[t]));
        traj->row(row);
      }
    }
    std::printf("%s, %lld trials x %d replicates; highest growth:", tag.c_str(),
                static_cast<long long>(horizon), o.replicates);
    for (std::size_t k = 0; k < agents.size(); ++k) {
      if (wins[k]) std::printf(" %s %d", agents[k].name.c_str(), wins[k]);
    }
    std::printf("\n");
  }
  return 0;
}

int run_infer(const InferOptions& o, const Provenance& prov) {
  const auto data = load_datasets(o.data, o.keep_excluded);
  if (!data) return 2;
  HierarchicalIsoelasticSpec spec;
  if (o.form == "marginal") {
    spec.form = IsoelasticForm::Marginal;
  } else if (o.form != "exact") {
    throw UsageError("--form must be exact or marginal");
  }
  const PosteriorChains post =
      sample_posterior(*data, spec, sampler(o.chains, o.samples, o.burnin, o.seed, o.serial));
  make_dir(o.out);
  const auto summary = summarize(post);
  {
    CsvFile f(o.out / "summary.csv", prov);
    f->row({"parameter", "mean", "sd", "map", "lo95", "hi95", "rhat"});
    for (const auto& s : summary) {
      f->row({s.name, num(s.mean), num(s.sd), num(s.map), num(s.lo95), num(s.hi95), num(s.rhat)});
    }
  }
  {
    CsvFile f(o.out / "subjects.csv", prov);
    f->row({"subject", "condition", "eta_map", "eta_mean", "eta_lo95", "eta_hi95", "beta_map"});
    for (const auto& s : *data) {
      for (Dynamic d : kDynamics) {
        if (!s.condition(d)) continue;
        const auto e = summarize(post, post.index(subject_param("eta", s.id, d)));
        const auto b = summarize(post, post.index(subject_param("beta", s.id, d)));
        f->row({s.id, dname(d), num(e.map), num(e.mean), num(e.lo95), num(e.hi95), num(b.map)});
      }
    }
  }
  {
    CsvFile f(o.out / "group.csv", prov);
    f->row({"condition", "map_eta", "mu_eta_mean", "mu_eta_lo95", "mu_eta_hi95"});
    for (Dynamic d : kDynamics) {
      const double map = map_estimate(pooled_subject_draws(post, "eta", d));
      const auto mu = summarize(post, post.index(population_param("mu_eta", d)));
      f->row({dname(d), num(map), num(mu.mean), num(mu.lo95), num(mu.hi95)});
      std::printf("%s: MAP eta %.4f, mu_eta %.4f [%.4f, %.4f]\n", dname(d).c_str(), map, mu.mean,
                  mu.lo95, mu.hi95);
    }
  }
  if (o.draws) {
    CsvFile f(o.out / "draws.csv", prov);
    std::vector<std::string> head{"chain", "draw"};
    head.insert(head.end(), post.names.begin(), post.names.end());
    f->row(head);
    for (int c = 0; c < post.chains; ++c) {
      for (int k = 0; k < post.samples; ++k) {
        std::vector<std::string> row{std::to_string(c), std::to_string(k)};
        for (std::size_t p = 0; p < post.size(); ++p) row.push_back(num(post.chain(p, c)[static_cast<std::size_t>(k)]));
        f->row(row);
      }
    }
  }
  double worst = 0.0;
  for (const auto& s : summary) worst = std::max(worst, s.rhat);
  std::printf("max R-hat: population %.4f, all parameters %.4f\n", max_population_rhat(post), worst);
  return 0;
}

int run_select(const SelectOptions& o, const Provenance& prov) {
  const auto data = load_datasets(o.data, o.keep_excluded);
  if (!data) return 2;
  LatentMixtureSpec spec;
  if (o.pseudo_prior == "group") {
    spec.pseudo_prior = PseudoPrior::GroupPrior;
  } else if (o.pseudo_prior != "pilot") {
    throw UsageError("--pseudo-prior must be group or pilot");
  }
  const auto mix =
      run_latent_mixture(*data, spec, sampler(o.chains, o.samples, o.burnin, o.seed, o.serial));
  const auto cmp = protected_exceedance(mix.probabilities, mix_seed(o.seed, 0xe9));
  make_dir(o.out);
  const std::array<ModelFamily, 3> models{ModelFamily::ProspectTheory, ModelFamily::Isoelastic,
                                          ModelFamily::TimeOptimal};
  {
    CsvFile f(o.out / "model_probabilities.csv", prov);
    f->row({"subject", to_string(models[0]), to_string(models[1]), to_string(models[2]), "modal"});
    for (std::size_t i = 0; i < mix.subjects.size(); ++i) {
      const auto& p = mix.probabilities[i];
      f->row({mix.subjects[i], num(p[0]), num(p[1]), num(p[2]), to_string(mix.modal(i))});
    }
  }
  {
    CsvFile f(o.out / "group.csv", prov);
    f->row({"model", "alpha", "frequency", "frequency_sd", "exceedance", "protected_exceedance"});
    for (std::size_t k = 0; k < 3; ++k) {
      f->row({to_string(models[k]), num(cmp.alpha[k]), num(cmp.frequency[k]), num(cmp.frequency_sd[k]),
              num(cmp.exceedance[k]), num(cmp.protected_exceedance[k])});
      std::printf("%-16s frequency %.3f (sd %.3f)  XP %.3f  PXP %.3f\n", to_string(models[k]).c_str(),
                  cmp.frequency[k], cmp.frequency_sd[k], cmp.exceedance[k], cmp.protected_exceedance[k]);
    }
    f->comment("bor=" + num(cmp.bor));
  }
  std::printf("BOR %.4g\n", cmp.bor);
  return 0;
}

namespace {

struct Estimates {
  std::map<std::string, std::array<std::optional<double>, 2>> eta;
};

Estimates read_estimates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  Estimates est;
  std::string line;
  std::vector<std::string> head;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (head.empty()) {
      head = f;
      continue;
    }
    auto col = [&](const std::string& name) {
      const auto it = std::find(head.begin(), head.end(), name);
      if (it == head.end()) throw UsageError(path.string() + " lacks column " + name);
      return f.at(static_cast<std::size_t>(it - head.begin()));
    };
    est.eta[col("subject")][index_of(dynamic_from_string(col("condition")))] = std::stod(col("eta_map"));
  }
  return est;
}

void bf_rows(CsvWriter& f, const std::string& test, std::span<const double> x, double null_value,
             Alternative side, std::span<const double> scales) {
  for (double r : scales) {
    try {
      const auto b = jzs_bf_ttest(x, null_value, side, r);
      f.row({test, to_string(side), num(r), std::to_string(b.n), num(b.t), num(b.bf), num(b.bf01()),
             num(b.posterior_median), num(b.lo95), num(b.hi95)});
      std::printf("%-28s %-9s r=%.3f  n=%d  t=%.3f  BF=%.4g  BF01=%.4g  delta=%.3f [%.3f, %.3f]\n",
                  test.c_str(), to_string(side).c_str(), r, b.n, b.t, b.bf, b.bf01(),
                  b.posterior_median, b.lo95, b.hi95);
    } catch (const std::exception& e) {
      std::printf("%-28s skipped: %s\n", test.c_str(), e.what());
    }
  }
}

}  // namespace

int run_analyze(const AnalyzeOptions& o, const Provenance& prov) {
  const auto data = load_datasets(o.data, o.keep_excluded);
  if (!data) return 2;
  make_dir(o.out);

  std::vector<double> cp_add, cp_mult, cp_delta;
  {
    CsvFile f(o.out / "choice_proportions.csv", prov);
    f->row({"subject", "condition", "cp_log", "n_discrepant", "n_answered"});
    for (const auto& s : *data) {
      std::array<std::optional<double>, 2> cp;
      for (Dynamic d : kDynamics) {
        if (!s.condition(d)) continue;
        const auto c = choice_proportion_log(s, d);
        cp[index_of(d)] = c.cp_log;
        f->row({s.id, dname(d), c.cp_log ? num(*c.cp_log) : "", std::to_string(c.n_discrepant),
                std::to_string(c.n_answered)});
      }
      if (cp[0]) cp_add.push_back(*cp[0]);
      if (cp[1]) cp_mult.push_back(*cp[1]);
      if (cp[0] && cp[1]) cp_delta.push_back(*cp[1] - *cp[0]);
    }
  }
  auto mean = [](const std::vector<double>& v) {
    return v.empty() ? std::nan("") : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  std::printf("mean CP_log: additive %.4f (n=%zu), multiplicative %.4f (n=%zu)\n", mean(cp_add),
              cp_add.size(), mean(cp_mult), cp_mult.size());

  CsvFile bf(o.out / "bayes_factors.csv", prov);
  bf->row({"test", "side", "scale", "n", "t", "bf", "bf01", "delta_median", "delta_lo95", "delta_hi95"});
  bf_rows(*bf, "cp_log additive < 0.5", cp_add, 0.5, Alternative::Less, o.scales);
  bf_rows(*bf, "cp_log multiplicative > 0.5", cp_mult, 0.5, Alternative::Greater, o.scales);
  bf_rows(*bf, "delta cp_log > 0", cp_delta, 0.0, Alternative::Greater, o.scales);

  if (!o.estimates) return 0;
  const Estimates est = read_estimates(*o.estimates);
  std::vector<double> d_eta, dist_diff;
  {
    CsvFile f(o.out / "distances.csv", prov);
    f->row({"subject", "eta_additive", "eta_multiplicative", "d_time", "d_invariant", "difference"});
    for (const auto& [subject, eta] : est.eta) {
      if (!eta[0] || !eta[1]) continue;
      const auto dist = distance_to_models(*eta[0], *eta[1]);
      d_eta.push_back(*eta[1] - *eta[0]);
      dist_diff.push_back(dist.d_invariant - dist.d_time);
      f->row({subject, num(*eta[0]), num(*eta[1]), num(dist.d_time), num(dist.d_invariant),
              num(dist.d_invariant - dist.d_time)});
    }
  }
  std::printf("mean eta difference %.4f, mean d_invariant - d_time %.4f (n=%zu)\n", mean(d_eta),
              mean(dist_diff), d_eta.size());
  bf_rows(*bf, "delta eta > 0", d_eta, 0.0, Alternative::Greater, o.scales);
  if (dist_diff.size() >= 2) {
    try {
      const auto w = wilcoxon_signed_rank(dist_diff);
      std::printf("signed-rank on d_invariant - d_time: V = %g, p = %.4g (%s, n=%d)\n", w.v, w.p,
                  w.exact ? "exact" : "normal approximation", w.n);
    } catch (const std::exception& e) {
      std::printf("signed-rank skipped: %s\n", e.what());
    }
  }

  CsvFile g(o.out / "growth_vs_deviation.csv", prov);
  g->row({"condition", "subject", "deviation", "growth"});
  for (Dynamic d : kDynamics) {
    std::vector<SubjectDataset> subset;
    std::vector<double> eta;
    for (const auto& s : *data) {
      const auto it = est.eta.find(s.id);
      if (it == est.eta.end() || !it->second[index_of(d)]) continue;
      subset.push_back(s);
      eta.push_back(*it->second[index_of(d)]);
    }
    const auto gd = growth_vs_deviation(subset, eta, d);
    for (std::size_t k = 0; k < gd.subjects.size(); ++k) {
      g->row({dname(d), gd.subjects[k], num(gd.deviation[k]), num(gd.growth[k])});
    }
    if (gd.tau) {
      std::printf("%s: Kendall tau(deviation, growth) = %.4f (n=%zu)\n", dname(d).c_str(), *gd.tau,
                  gd.subjects.size());
    }
  }
  return 0;
}

int run_recover(const RecoverOptions& o, const Provenance& prov) {
  const SamplerConfig cfg = sampler(o.chains, o.samples, o.burnin, o.seed, o.serial);
  make_dir(o.out);
  if (o.mode == "parameters") {
    if (o.grid_eta.empty() || o.subjects_per_cell < 2) throw UsageError("need a grid and >= 2 subjects");
    CsvFile f(o.out / "parameter_recovery.csv", prov);
    f->row({"eta_additive", "eta_multiplicative", "map_additive", "map_multiplicative",
            "max_rhat", "recovered", "seconds"});
    int ok = 0, cells = 0;
    for (double a : o.grid_eta) {
      for (double m : o.grid_eta) {
        const auto c = recover_parameters(a, m, o.subjects_per_cell, cfg,
                                          CohortOptions{mix_seed(o.seed, static_cast<std::uint64_t>(cells))});
        ++cells;
        ok += c.recovered(o.tolerance);
        f->row({num(a), num(m), num(c.map_add), num(c.map_mult), num(c.max_rhat),
                c.recovered(o.tolerance) ? "1" : "0", num(c.seconds)});
        std::printf("(%5.2f, %5.2f) -> (%6.3f, %6.3f)  R-hat %.4f  %s  %.1fs\n", a, m, c.map_add,
                    c.map_mult, c.max_rhat, c.recovered(o.tolerance) ? "ok" : "miss", c.seconds);
        std::fflush(stdout);
      }
    }
    std::printf("recovered %d/%d cells within %.2f\n", ok, cells, o.tolerance);
    return 0;
  }
  if (o.mode == "models") {
    const auto rep = recover_models(model_recovery_cohort({o.seed}), LatentMixtureSpec{}, cfg);
    CsvFile f(o.out / "model_recovery.csv", prov);
    f->row({"subject", "truth", "prospect_theory", "isoelastic", "time_optimal", "modal"});
    for (std::size_t i = 0; i < rep.cohort.data.size(); ++i) {
      const auto& p = rep.mixture.probabilities[i];
      f->row({rep.cohort.data[i].id, to_string(rep.cohort.truth[i]), num(p[0]), num(p[1]), num(p[2]),
              to_string(rep.mixture.modal(i))});
    }
    std::printf("modal model correct for %d/%zu agents (%.1fs)\n", rep.correct, rep.cohort.data.size(),
                rep.seconds);
    return 0;
  }
  throw UsageError("--mode must be parameters or models");
}

int run_serve(const ServeOptions& o, const Provenance&) {
  ServerConfig cfg;
  cfg.host = o.host;
  cfg.port = o.port;
  cfg.data_dir = o.data_dir;
  cfg.static_dir = o.static_dir;
  cfg.seed = o.seed;
  cfg.choice_window_ms = o.choice_window_ms;
  std::printf("serving on http://%s:%d (data in %s)\n", cfg.host.c_str(), cfg.port,
              cfg.data_dir.string().c_str());
  std::fflush(stdout);
  return run_server(cfg) == 0 ? 0 : 1;
}

int run_export(const ExportOptions& o, const Provenance& prov) {
  if (o.import) {
    if (o.data.empty()) throw UsageError("--data is required");
    const ImportReport rep = import_trials_csv(o.data);
    for (const auto& [field, column] : rep.columns) std::printf("%-10s <- %s\n", field.c_str(), column.c_str());
    for (const auto& m : rep.missing) std::fprintf(stderr, "missing column for %s\n", m.c_str());
    for (const auto& e : rep.errors) std::fprintf(stderr, "%s:%zu: %s\n", o.data.string().c_str(), e.line, e.message.c_str());
    if (!rep.missing.empty()) return 2;
    RecordFile file;
    file.header = prov;
    file.trials = rep.records;
    write_records(o.out, file);
    const auto val = validate_dataset(rep.records);
    std::printf("imported %zu records (%zu row errors); validation %s with %zu errors\n",
                rep.records.size(), rep.errors.size(), val.ok() ? "passed" : "failed", val.errors.size());
    return rep.errors.empty() ? 0 : 2;
  }
  if (o.what == "growth-table") {
    CsvFile f(o.out, prov);
    f->row({"dynamic", "first", "second", "growth"});
    for (Dynamic d : kDynamics) {
      const StimulusSet set = build_stimulus_set(d);
      for (const auto& a : set.outcomes) {
        for (const auto& b : set.outcomes) {
          f->row({dname(d), std::to_string(a.id), std::to_string(b.id), num(gamble_growth_rate(Gamble(a, b)))});
        }
      }
    }
    return 0;
  }
  if (o.what != "trials") throw UsageError("--what must be trials or growth-table");
  if (o.data.empty()) throw UsageError("--data is required");
  const RecordFile file = read_records(o.data);
  for (const auto& e : file.errors) std::fprintf(stderr, "%s:%zu: %s\n", o.data.string().c_str(), e.line, e.message.c_str());
  if (!file.errors.empty()) return 2;
  CsvFile f(o.out, prov);
  f->row({"subject", "condition", "trial", "left1", "left2", "right1", "right2", "tag", "choice",
          "rt_ms", "wealth"});
  for (const auto& r : file.trials) {
    f->row({r.subject, dname(r.condition), std::to_string(r.index), std::to_string(r.ids[0]),
            std::to_string(r.ids[1]), std::to_string(r.ids[2]), std::to_string(r.ids[3]),
            r.tag == PairTag::Core ? "core" : "no-brainer", to_string(r.choice), num(r.rt_ms),
            num(r.wealth)});
  }
  return 0;
}

}  // namespace ergo::cli
