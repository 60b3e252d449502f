#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ergo/io.hpp"

namespace ergo::cli {

/// Usage problems detected after parsing (bad values, missing inputs).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DesignOptions {
  std::string dynamic = "both";
  std::uint64_t seed = 1;
  std::filesystem::path out = "design";
};

struct SimulateOptions {
  std::string agents;  // empty: the 12-agent roster
  std::string dynamic = "both";
  std::int64_t horizon = 1000;
  bool horizon_week = false;
  int replicates = 1;
  int stride = 1;
  double beta = 1e3;
  std::uint64_t seed = 1;
  std::filesystem::path out = "simulation";
  /// When set, simulate choice datasets for the agents instead of trajectories.
  std::optional<std::filesystem::path> dataset;
  int subjects = 1;  // per agent, dataset mode
};

struct InferOptions {
  std::filesystem::path data;
  int chains = 10;
  int samples = 10000;
  int burnin = 1000;
  std::uint64_t seed = 1;
  std::string form = "exact";
  bool serial = false;
  bool keep_excluded = false;
  std::filesystem::path out = "inference";
  bool draws = false;
};

struct SelectOptions {
  std::filesystem::path data;
  int chains = 4;
  int samples = 10000;
  int burnin = 1000;
  std::uint64_t seed = 1;
  std::string pseudo_prior = "pilot";
  bool serial = false;
  bool keep_excluded = false;
  std::filesystem::path out = "selection";
};

struct AnalyzeOptions {
  std::filesystem::path data;
  std::optional<std::filesystem::path> estimates;  // subjects.csv from infer
  std::vector<double> scales{0.70710678118654752440, 1.0, 1.41421356237309504880};
  bool keep_excluded = false;
  std::filesystem::path out = "analysis";
};

struct RecoverOptions {
  std::string mode = "parameters";
  std::vector<double> grid_eta{-0.5, 0.0, 0.5, 1.0, 1.5};
  int subjects_per_cell = 20;
  int chains = 4;
  int samples = 10000;
  int burnin = 1000;
  double tolerance = 0.2;
  std::uint64_t seed = 1;
  bool serial = false;
  std::filesystem::path out = "recovery";
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "data";
  std::optional<std::filesystem::path> static_dir;
  std::uint64_t seed = 1;
  int choice_window_ms = 2500;
};

struct ExportOptions {
  std::filesystem::path data;
  std::string what = "trials";
  std::filesystem::path out = "export.csv";
  bool import = false;  // treat --data as a CSV to import into JSONL
};

// Each returns the process exit code. `prov` is written at the top of every
// output file.
int run_design(const DesignOptions& o, const Provenance& prov);
int run_simulate(const SimulateOptions& o, const Provenance& prov);
int run_infer(const InferOptions& o, const Provenance& prov);
int run_select(const SelectOptions& o, const Provenance& prov);
int run_analyze(const AnalyzeOptions& o, const Provenance& prov);
int run_recover(const RecoverOptions& o, const Provenance& prov);
int run_serve(const ServeOptions& o, const Provenance& prov);
int run_export(const ExportOptions& o, const Provenance& prov);

}  // namespace ergo::cli
