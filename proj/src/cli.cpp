#include "cate/cli.hpp"

#include <chrono>
#include <filesystem>
#include <mutex>
#include <ostream>

#include "CLI11.hpp"
#include "cate/config.hpp"
#include "cate/csv.hpp"
#include "cate/error.hpp"
#include "cate/parallel.hpp"
#include "cate/report.hpp"

namespace cate::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string in_dir(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
}

Dataset load(const DataSource& src) {
  if (src.path.empty()) throw ArgumentError("no input data given (--data)");
  return load_csv(src.path, src.outcome, src.treatment, src.one_hot);
}

std::string cate_file(Method m) { return "cate_" + method_name(m) + ".csv"; }

Json dgp_to_json(const DgpConfig& c) {
  return Json{{"n", c.n},
              {"p", c.p},
              {"propensity_setting", c.propensity_setting},
              {"effect_setting", c.effect_setting},
              {"u_sd", c.u_sd},
              {"w_sd", c.w_sd},
              {"seed", c.seed}};
}

DgpConfig dgp_from_json(const Json& j, DgpConfig c) {
  try {
    if (j.contains("n")) c.n = j.at("n").get<Eigen::Index>();
    if (j.contains("p")) c.p = j.at("p").get<Eigen::Index>();
    if (j.contains("propensity_setting")) c.propensity_setting = j.at("propensity_setting").get<int>();
    if (j.contains("effect_setting")) c.effect_setting = j.at("effect_setting").get<int>();
    if (j.contains("u_sd")) c.u_sd = j.at("u_sd").get<double>();
    if (j.contains("w_sd")) c.w_sd = j.at("w_sd").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const Json::exception& e) {
    throw ArgumentError(std::string("bad simulation configuration: ") + e.what());
  }
  return c;
}

// Mean stack weight of each member over folds (the layout of a stack-weight table).
Json weight_table(const StackSpec& spec, const std::vector<Vector>& per_fold) {
  if (per_fold.empty() || per_fold.front().size() == 0) return nullptr;
  Vector mean = Vector::Zero(per_fold.front().size());
  for (const auto& w : per_fold) mean += w;
  mean /= static_cast<double>(per_fold.size());
  Json t = Json::array();
  for (std::size_t m = 0; m < spec.members.size(); ++m) {
    t.push_back({{"learner", spec.members[m].name()}, {"weight", mean[static_cast<Eigen::Index>(m)]}});
  }
  return t;
}

Json overlap_json(const OverlapReport& r) {
  return Json{{"epsilon", r.epsilon},
              {"clipped_low", r.clipped_low.size()},
              {"clipped_high", r.clipped_high.size()},
              {"min", r.min},
              {"max", r.max},
              {"deciles", r.deciles}};
}

NuisanceOptions union_needs(const std::vector<Method>& methods, double clip) {
  NuisanceOptions u;
  u.clip_epsilon = clip;
  u.fit_mu = u.fit_arm_means = u.fit_propensity = false;
  for (Method m : methods) {
    if (m == Method::S) continue;
    auto n = nuisance_needs(m, clip);
    u.fit_mu = u.fit_mu || n.fit_mu;
    u.fit_arm_means = u.fit_arm_means || n.fit_arm_means;
    u.fit_propensity = u.fit_propensity || n.fit_propensity;
  }
  return u;
}

}  // namespace

void cmd_simulate(const SimulateOptions& options) {
  auto sim = gen_dgp(options.dgp);
  ensure_dir(options.out_dir);
  write_csv(in_dir(options.out_dir, "data.csv"), sim.data);
  write_truth_csv(in_dir(options.out_dir, "truth.csv"), sim);
  write_json_file(in_dir(options.out_dir, "config.json"), Json{{"simulation", dgp_to_json(options.dgp)}});
}

FitSummary cmd_fit(const FitOptions& options, std::ostream& log) {
  if (options.methods.empty()) throw ArgumentError("no methods requested");
  const auto start = Clock::now();
  Dataset data = load(options.data);
  std::optional<Vector> truth;
  if (!options.truth_path.empty()) {
    truth = read_truth_tau(options.truth_path);
    if (truth->size() != data.n()) throw DataError("truth file length does not match the data");
  }
  const MetaConfig& cfg = options.config;
  if (cfg.folds < 2 || cfg.folds > data.n()) throw ArgumentError("folds must be in [2, n]");
  FoldPlan plan = make_folds(data.n(), cfg.folds, cfg.seed);
  ensure_dir(options.out_dir);

  Json report;
  report["command"] = "fit";
  report["n"] = data.n();
  report["p"] = data.p();
  report["features"] = data.feature_names;
  report["config"] = meta_config_to_json(cfg);
  Json timing;

  NuisanceOptions needs = union_needs(options.methods, cfg.clip_epsilon);
  NuisanceEstimates nuis;
  const bool any_nuisance = needs.fit_mu || needs.fit_arm_means || needs.fit_propensity;
  if (any_nuisance) {
    auto t0 = Clock::now();
    nuis = crossfit_nuisances(data, plan, cfg.e_spec, cfg.mu_spec, needs);
    timing["nuisances"] = seconds_since(t0);
    write_nuisances_csv(in_dir(options.out_dir, "nuisances.csv"), nuis);
    Json weights;
    if (needs.fit_propensity) weights["propensity"] = weight_table(cfg.e_spec, nuis.e_weights);
    if (needs.fit_mu) weights["outcome"] = weight_table(cfg.mu_spec, nuis.mu_weights);
    if (needs.fit_arm_means) {
      weights["outcome_control"] = weight_table(cfg.mu_spec, nuis.mu0_weights);
      weights["outcome_treated"] = weight_table(cfg.mu_spec, nuis.mu1_weights);
    }
    report["stack_weights"] = weights;
    if (needs.fit_propensity) {
      report["overlap"] = overlap_json(overlap_report(nuis.e_raw, cfg.clip_epsilon));
    }
  }

  struct Outcome {
    std::optional<CateEstimate> cate;
    std::string error;
    double seconds = 0.0;
  };
  std::vector<Outcome> outcomes(options.methods.size());
  parallel_for(outcomes.size(), [&](std::size_t k) {
    auto t0 = Clock::now();
    try {
      outcomes[k].cate = estimate(options.methods[k], data, plan, cfg, any_nuisance ? &nuis : nullptr);
    } catch (const Error& e) {
      outcomes[k].error = e.what();
    }
    outcomes[k].seconds = seconds_since(t0);
  });

  FitSummary summary;
  Json methods = Json::object();
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const std::string name = method_name(options.methods[k]);
    timing[name] = outcomes[k].seconds;
    Json entry;
    if (!outcomes[k].cate) {
      entry["status"] = "failed";
      entry["error"] = outcomes[k].error;
      summary.failed.push_back(name);
      log << name << ": failed: " << outcomes[k].error << '\n';
    } else {
      const CateEstimate& c = *outcomes[k].cate;
      write_cate_csv(in_dir(options.out_dir, cate_file(options.methods[k])), c);
      auto s = ate_summary(c.tau_hat, 0.2);
      entry["status"] = "ok";
      entry["fingerprint"] = c.fingerprint;
      entry["ate"] = s.ate;
      entry["least_affected_mean"] = s.least_mean;
      entry["most_affected_mean"] = s.most_mean;
      if (truth) entry["mse"] = evaluate_mse(c, *truth);
      if (!c.notes.empty()) entry["notes"] = c.notes;
      summary.succeeded.push_back(name);
      for (const auto& note : c.notes) log << name << ": " << note << '\n';
    }
    methods[name] = entry;
  }
  report["methods"] = methods;

  if (options.save_forest) {
    bool wants_cf = false;
    for (Method m : options.methods) wants_cf = wants_cf || m == Method::CF;
    if (wants_cf && any_nuisance) {
      save_forest_json(in_dir(options.out_dir, "forest_CF.json"), fit_causal_forest(data, nuis, cfg.forest));
    }
  }
  timing["total"] = seconds_since(start);
  report["timing"] = timing;
  write_json_file(in_dir(options.out_dir, "report.json"), report);
  if (summary.succeeded.empty()) throw EstimationError("every requested method failed");
  return summary;
}

void cmd_bootstrap(const BootstrapCmdOptions& options, std::ostream& log) {
  const auto start = Clock::now();
  Dataset data = load(options.data);
  const MetaConfig& cfg = options.config;
  if (cfg.folds < 2 || cfg.folds > data.n()) throw ArgumentError("folds must be in [2, n]");
  FoldPlan plan = make_folds(data.n(), cfg.folds, cfg.seed);
  CateEstimate cate = estimate(options.method, data, plan, cfg);
  BootstrapOptions bo = options.bootstrap;
  auto res = bootstrap_ci(make_fit_predict(options.method, cfg), data, plan, bo, cate.tau_hat);
  cate.lower = res.lower;
  cate.upper = res.upper;
  ensure_dir(options.out_dir);
  write_cate_csv(in_dir(options.out_dir, cate_file(options.method)), cate);
  Json report{{"command", "bootstrap"},
              {"method", cate.method},
              {"fingerprint", cate.fingerprint},
              {"replications", res.replications},
              {"dropped", res.dropped},
              {"alpha", bo.alpha},
              {"interval", bo.percentile ? "percentile" : "normal"},
              {"seed", bo.seed},
              {"mean_sigma", res.sigma_hat.mean()},
              {"timing", {{"total", seconds_since(start)}}}};
  write_json_file(in_dir(options.out_dir, "bootstrap_" + cate.method + ".json"), report);
  if (res.dropped > 0) log << "bootstrap: dropped " << res.dropped << " replicates\n";
}

void cmd_analyze(const AnalyzeOptions& options, std::ostream& log) {
  Dataset data = load(options.data);
  std::vector<Method> methods = options.methods;
  if (methods.empty()) {
    for (Method m : all_methods()) {
      if (fs::exists(in_dir(options.dir, cate_file(m)))) methods.push_back(m);
    }
    if (methods.empty()) throw DataError("no cate_<METHOD>.csv files in '" + options.dir + "'");
  }
  std::vector<CateEstimate> estimates;
  for (Method m : methods) {
    const std::string path = in_dir(options.dir, cate_file(m));
    if (!fs::exists(path)) throw DataError("missing input " + path);
    CateEstimate c = read_cate_csv(path);
    if (c.tau_hat.size() != data.n()) throw DataError(path + ": row count does not match the data");
    c.method = method_name(m);
    estimates.push_back(std::move(c));
  }
  write_sorted_effects_csv(in_dir(options.dir, "sorted_effects.csv"), estimates);

  std::vector<std::string> names;
  std::vector<std::vector<ClanRow>> clan_rows;
  for (const auto& e : estimates) {
    names.push_back(e.method);
    clan_rows.push_back(clan(e.tau_hat, data, options.q, options.gamma));
  }
  write_clan_csv(in_dir(options.dir, "clan.csv"), names, clan_rows);
  write_correlation_csv(in_dir(options.dir, "correlation.csv"), method_correlation(estimates));

  const std::string nuis_path = in_dir(options.dir, "nuisances.csv");
  if (!fs::exists(nuis_path)) {
    log << "balance.csv skipped: missing input " << nuis_path << '\n';
    return;
  }
  CsvTable nt = read_csv_table(nuis_path);
  auto col = nt.column_index("e_hat");
  if (!col) throw DataError(nuis_path + ": missing e_hat column");
  Vector e(static_cast<Eigen::Index>(nt.rows.size()));
  for (std::size_t i = 0; i < nt.rows.size(); ++i) {
    auto v = parse_double(nt.rows[i][*col]);
    if (!v) {
      log << "balance.csv skipped: " << nuis_path << " has no propensity scores\n";
      return;
    }
    e[static_cast<Eigen::Index>(i)] = *v;
  }
  if (e.size() != data.n()) throw DataError(nuis_path + ": row count does not match the data");
  write_balance_csv(in_dir(options.dir, "balance.csv"), ipw_balance(data, e));
}

std::vector<Figure3Pair> cmd_figure3(const Figure3CmdOptions& options, std::ostream& log) {
  auto pairs = figure3_experiment(options.replications, options.seed, options.experiment);
  ensure_dir(options.out_dir);
  CsvTable t;
  t.header = {"replication", "mse_single", "mse_crossfit"};
  int wins = 0;
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    t.rows.push_back({std::to_string(r + 1), format_double(pairs[r].mse_single),
                      format_double(pairs[r].mse_crossfit)});
    wins += pairs[r].mse_crossfit < pairs[r].mse_single;
  }
  write_csv_table(in_dir(options.out_dir, "figure3.csv"), t);
  log << "cross-fit wins " << wins << " of " << pairs.size() << " replications\n";
  return pairs;
}

namespace {

// Flags shared by the estimation subcommands.
struct EstimatorFlags {
  std::string config_path;
  int folds = 0;
  double clip = 0.0;
  std::uint64_t seed = 0;
  std::string second_stage;
  CLI::Option* folds_opt = nullptr;
  CLI::Option* clip_opt = nullptr;
  CLI::Option* seed_opt = nullptr;

  void add(CLI::App* app) {
    app->add_option("--config", config_path, "JSON estimator configuration");
    folds_opt = app->add_option("--folds", folds, "cross-fitting folds K");
    clip_opt = app->add_option("--clip", clip, "propensity clipping epsilon");
    seed_opt = app->add_option("--seed", seed, "master seed");
    app->add_option("--second-stage", second_stage, "crossfit or insample")
        ->check(CLI::IsMember({"crossfit", "insample"}));
  }

  MetaConfig build() const {
    MetaConfig c = default_meta_config();
    if (!config_path.empty()) c = meta_config_from_json(read_json_file(config_path), c);
    if (folds_opt->count()) c.folds = folds;
    if (clip_opt->count()) c.clip_epsilon = clip;
    if (seed_opt->count()) c.seed = seed;
    if (!second_stage.empty()) {
      c.second_stage = second_stage == "crossfit" ? SecondStage::CrossFit : SecondStage::InSample;
    }
    if (!(c.clip_epsilon > 0 && c.clip_epsilon < 0.5)) throw ArgumentError("--clip must be in (0, 0.5)");
    return c;
  }
};

void add_data_flags(CLI::App* app, DataSource& src, bool required) {
  auto* opt = app->add_option("--data", src.path, "input CSV");
  if (required) opt->required();
  app->add_option("--outcome", src.outcome, "outcome column")->capture_default_str();
  app->add_option("--treatment", src.treatment, "binary treatment column")->capture_default_str();
  app->add_option("--one-hot", src.one_hot, "categorical columns to expand into dummies")->delimiter(',');
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& n : names) {
    auto m = parse_method(n);
    if (!m) throw ArgumentError("unknown method '" + n + "' (expected S, T, X, DR, R, IPW or CF)");
    if (std::find(out.begin(), out.end(), *m) == out.end()) out.push_back(*m);
  }
  return out;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conditional average treatment effect estimation"};
  app.require_subcommand(1);
  app.footer("Threads: set CATE_NUM_THREADS. Exit codes: 0 ok, 1 usage, 2 data, 3 estimation.");

  SimulateOptions sim;
  std::string sim_config;
  auto* simulate = app.add_subcommand("simulate", "generate a simulated dataset with known effects");
  simulate->add_option("--config", sim_config, "JSON simulation configuration");
  auto* n_opt = simulate->add_option("--n", sim.dgp.n, "observations");
  auto* p_opt = simulate->add_option("--p", sim.dgp.p, "covariates");
  auto* ps_opt = simulate->add_option("--propensity-setting", sim.dgp.propensity_setting, "1 (constant) or 2");
  auto* es_opt = simulate->add_option("--effect-setting", sim.dgp.effect_setting, "1 linear, 2 nonlinear, 3 step");
  auto* sim_seed = simulate->add_option("--seed", sim.dgp.seed, "seed");
  simulate->add_option("--out", sim.out_dir, "output directory")->capture_default_str();

  FitOptions fit;
  EstimatorFlags fit_flags;
  std::vector<std::string> fit_methods;
  auto* fit_cmd = app.add_subcommand("fit", "estimate CATE with one or more methods");
  add_data_flags(fit_cmd, fit.data, true);
  fit_flags.add(fit_cmd);
  fit_cmd->add_option("--methods", fit_methods, "S,T,X,DR,R,IPW,CF")->delimiter(',')->required();
  fit_cmd->add_option("--truth", fit.truth_path, "truth.csv for per-method MSE");
  fit_cmd->add_option("--out", fit.out_dir, "output directory")->capture_default_str();
  fit_cmd->add_flag("--save-forest", fit.save_forest, "dump the causal forest as JSON");

  BootstrapCmdOptions boot;
  EstimatorFlags boot_flags;
  std::string boot_method = "T";
  std::uint64_t boot_seed = 0;
  auto* boot_cmd = app.add_subcommand("bootstrap", "bootstrap confidence intervals for one method");
  add_data_flags(boot_cmd, boot.data, true);
  boot_flags.add(boot_cmd);
  boot_cmd->add_option("--method", boot_method, "method")->capture_default_str();
  boot_cmd->add_option("--replications,-B", boot.bootstrap.replications, "bootstrap replications")
      ->capture_default_str();
  boot_cmd->add_option("--alpha", boot.bootstrap.alpha, "1 - confidence level")->capture_default_str();
  boot_cmd->add_flag("--percentile", boot.bootstrap.percentile, "percentile intervals");
  auto* boot_seed_opt = boot_cmd->add_option("--bootstrap-seed", boot_seed, "resampling seed");
  boot_cmd->add_option("--out", boot.out_dir, "output directory")->capture_default_str();

  AnalyzeOptions an;
  std::vector<std::string> an_methods;
  auto* analyze = app.add_subcommand("analyze", "sorted effects, CLAN, correlations and balance");
  add_data_flags(analyze, an.data, true);
  analyze->add_option("--dir", an.dir, "directory with fitted cate files")->capture_default_str();
  analyze->add_option("--methods", an_methods, "methods to analyze")->delimiter(',');
  analyze->add_option("--q", an.q, "share of least/most affected")->capture_default_str();
  analyze->add_option("--gamma", an.gamma, "CLAN confidence level")->capture_default_str();

  Figure3CmdOptions f3;
  auto* figure3 = app.add_subcommand("figure3", "single vs cross-fitted R-learner experiment");
  figure3->add_option("--replications", f3.replications, "replications")->capture_default_str();
  figure3->add_option("--seed", f3.seed, "seed");
  figure3->add_option("--n", f3.experiment.n, "observations")->capture_default_str();
  figure3->add_option("--out", f3.out_dir, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (simulate->parsed()) {
      if (!sim_config.empty()) {
        DgpConfig flags = sim.dgp;
        Json j = read_json_file(sim_config);
        sim.dgp = dgp_from_json(j.contains("simulation") ? j.at("simulation") : j, DgpConfig{});
        if (n_opt->count()) sim.dgp.n = flags.n;
        if (p_opt->count()) sim.dgp.p = flags.p;
        if (ps_opt->count()) sim.dgp.propensity_setting = flags.propensity_setting;
        if (es_opt->count()) sim.dgp.effect_setting = flags.effect_setting;
        if (sim_seed->count()) sim.dgp.seed = flags.seed;
      }
      cmd_simulate(sim);
    } else if (fit_cmd->parsed()) {
      fit.methods = parse_methods(fit_methods);
      fit.config = fit_flags.build();
      auto s = cmd_fit(fit, err);
      out << "fitted " << s.succeeded.size() << " of " << fit.methods.size() << " methods\n";
    } else if (boot_cmd->parsed()) {
      auto m = parse_methods({boot_method});
      boot.method = m.front();
      boot.config = boot_flags.build();
      boot.bootstrap.seed = boot_seed_opt->count() ? boot_seed : boot.config.seed;
      cmd_bootstrap(boot, err);
    } else if (analyze->parsed()) {
      an.methods = parse_methods(an_methods);
      cmd_analyze(an, err);
    } else if (figure3->parsed()) {
      cmd_figure3(f3, out);
    }
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const EstimationError& e) {
    err << "estimation error: " << e.what() << '\n';
    return kEstimation;
  }
  return kOk;
}

}  // namespace cate::cli
