#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cate/inference.hpp"
#include "cate/metalearners.hpp"
#include "cate/simulation.hpp"

namespace cate::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kEstimation = 3 };

struct DataSource {
  std::string path;
  std::string outcome = "y";
  std::string treatment = "d";
  std::vector<std::string> one_hot;
};

struct SimulateOptions {
  DgpConfig dgp;
  std::string out_dir = ".";
};

struct FitOptions {
  DataSource data;
  std::string truth_path;  // optional; adds per-method MSE to the report
  std::string out_dir = ".";
  std::vector<Method> methods;
  MetaConfig config;
  bool save_forest = false;
};

struct FitSummary {
  std::vector<std::string> succeeded;
  std::vector<std::string> failed;
};

struct BootstrapCmdOptions {
  DataSource data;
  std::string out_dir = ".";
  Method method = Method::T;
  MetaConfig config;
  BootstrapOptions bootstrap;
};

struct AnalyzeOptions {
  DataSource data;
  std::string dir = ".";        // holds cate_<METHOD>.csv and nuisances.csv
  std::vector<Method> methods;  // empty: every cate file found
  double q = 0.2;
  double gamma = 0.95;
};

struct Figure3CmdOptions {
  int replications = 50;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  Figure3Options experiment = default_figure3_options();
};

// Each command throws cate::Error subclasses on failure.
void cmd_simulate(const SimulateOptions& options);
FitSummary cmd_fit(const FitOptions& options, std::ostream& log);
void cmd_bootstrap(const BootstrapCmdOptions& options, std::ostream& log);
void cmd_analyze(const AnalyzeOptions& options, std::ostream& log);
std::vector<Figure3Pair> cmd_figure3(const Figure3CmdOptions& options, std::ostream& log);

/// Parses argv, runs one subcommand and maps errors to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cate::cli
