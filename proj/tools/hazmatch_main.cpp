// hazmatch: propensity-score-matching estimation of the marginal causal
// hazard ratio from right-censored data, with plug-in, bootstrap and
// double-resampling confidence intervals, plus a Monte Carlo study runner.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hazmatch/coxph.hpp"
#include "hazmatch/dataset.hpp"
#include "hazmatch/inference.hpp"
#include "hazmatch/matching.hpp"
#include "hazmatch/propensity.hpp"
#include "hazmatch/scenario_io.hpp"
#include "hazmatch/simulation.hpp"

namespace {

constexpr const char* kVersion = "hazmatch " HAZMATCH_VERSION;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

struct CommonDataOpts {
  std::string data;
  std::string col_w = "w";
  std::string col_time = "u";
  std::string col_event = "delta";
  std::string covariates;
  std::string ps_formula = "identity";

  void attach(CLI::App* cmd) {
    cmd->add_option("--data", data, "input CSV file")->required();
    cmd->add_option("--col-w", col_w, "treatment column name");
    cmd->add_option("--col-time", col_time, "follow-up time column name");
    cmd->add_option("--col-event", col_event, "event indicator column name");
    cmd->add_option("--covariates", covariates,
                    "comma-separated covariate columns (default: all remaining)");
    cmd->add_option("--ps-formula", ps_formula,
                    "identity, sqrt, or comma-separated per-column powers");
  }

  hazmatch::CsvSchema schema() const {
    hazmatch::CsvSchema s;
    s.col_w = col_w;
    s.col_time = col_time;
    s.col_event = col_event;
    s.covariates = split_list(covariates);
    return s;
  }

  hazmatch::DesignSpec design(int dim) const {
    hazmatch::DesignSpec d;
    if (ps_formula == "identity" || ps_formula.empty()) return d;
    if (ps_formula == "sqrt") {
      d.powers.assign(static_cast<std::size_t>(dim), 0.5);
      return d;
    }
    for (const std::string& tok : split_list(ps_formula)) {
      d.powers.push_back(std::stod(tok));
    }
    if (static_cast<int>(d.powers.size()) != dim) {
      throw std::invalid_argument("--ps-formula: got " + std::to_string(d.powers.size()) +
                                  " powers for " + std::to_string(dim) + " covariates");
    }
    return d;
  }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

void dump_matches_csv(const hazmatch::Dataset& ds, const hazmatch::MatchResult& mr,
                      const std::string& path) {
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "index";
  for (int j = 0; j < ds.dim(); ++j) out << ",x" << j + 1;
  out << ",w,matched_index,u0,delta0,u1,delta1,weight,u,delta\n";
  const auto rows = imputed_dataset_view(ds, mr);
  for (int i = 0; i < ds.size(); ++i) {
    const hazmatch::Subject& s = ds[i];
    const auto& r0 = rows[static_cast<std::size_t>(2 * i)];      // omega = 0
    const auto& r1 = rows[static_cast<std::size_t>(2 * i + 1)];  // omega = 1
    out << i;
    for (double v : s.x) out << ',' << v;
    out << ',' << s.w << ',' << mr.match_index[static_cast<std::size_t>(i)] << ',' << r0.u << ','
        << r0.delta << ',' << r1.u << ',' << r1.delta << ','
        << mr.weight[static_cast<std::size_t>(i)] << ',' << s.u << ',' << s.delta << '\n';
  }
  write_file(path, out.str());
}

int cmd_estimate(const CommonDataOpts& opts, const std::string& trim_spec,
                 const std::string& methods_csv, const std::string& estimators_csv, int B,
                 double alpha, std::uint64_t seed, int threads, const std::string& out_path,
                 const std::string& dump_path) {
  using namespace hazmatch;
  Dataset ds = load_csv(opts.data, opts.schema());
  const DesignSpec design = opts.design(ds.dim());

  nlohmann::json trim_info;  // null unless trimming was applied
  if (!trim_spec.empty()) {
    double low = 0.1, high = 0.9;
    if (trim_spec != "default") {
      const auto parts = split_list(trim_spec);
      if (parts.size() != 2) throw std::invalid_argument("--trim expects 'low,high' or 'default'");
      low = std::stod(parts[0]);
      high = std::stod(parts[1]);
    }
    const PropensityFit pre = fit_logistic(ds, design);
    auto [trimmed, report] = trim(ds, pre.scores, low, high);
    trim_info = {{"low", report.threshold_low},
                 {"high", report.threshold_high},
                 {"kept", report.kept_ids.size()},
                 {"dropped", report.dropped_ids.size()},
                 {"dropped_ids", report.dropped_ids}};
    ds = std::move(trimmed);
  }

  EstimateConfig cfg;
  cfg.B = B;
  cfg.alpha = alpha;
  cfg.seed = seed;
  cfg.threads = threads;
  cfg.ps_design = design;
  if (!estimators_csv.empty()) {
    cfg.estimators.clear();
    for (const std::string& tok : split_list(estimators_csv)) {
      if (tok == "naive") cfg.estimators.push_back("naive");
      else if (tok == "ipw") cfg.estimators.push_back("ipw");
      else if (tok == "reg") cfg.estimators.push_back("regression");
      else if (tok == "psm") cfg.estimators.push_back("psm");
      else throw std::invalid_argument("--estimators: unknown '" + tok + "'");
    }
  }
  if (!methods_csv.empty()) {
    cfg.methods.clear();
    for (const std::string& tok : split_list(methods_csv)) {
      if (tok == "software") cfg.methods.push_back("software_robust");
      else if (tok == "asymp") cfg.methods.push_back("asymptotic");
      else if (tok == "naiveboot") cfg.methods.push_back("naive_boot");
      else if (tok == "double-rsp") cfg.methods.push_back("double_resampling");
      else throw std::invalid_argument("--methods: unknown '" + tok + "'");
    }
  }
  const bool bootstraps = std::find(cfg.methods.begin(), cfg.methods.end(), "naive_boot") !=
                              cfg.methods.end() ||
                          std::find(cfg.methods.begin(), cfg.methods.end(),
                                    "double_resampling") != cfg.methods.end();
  if (bootstraps && B < 100) {
    throw std::invalid_argument("B must be >= 100 when a bootstrap method is requested");
  }

  const InferenceReport report = estimate_all(ds, cfg);

  if (!dump_path.empty()) {
    const PropensityFit ps = fit_logistic(ds, design);
    dump_matches_csv(ds, match_on_scalar(ps.scores, ds.treatments()), dump_path);
  }

  nlohmann::json j = nlohmann::json::parse(report_to_json(report));
  j["version"] = kVersion;
  j["trim"] = trim_info;
  j["config"] = {{"data", opts.data},
                 {"col_w", opts.col_w},
                 {"col_time", opts.col_time},
                 {"col_event", opts.col_event},
                 {"covariates", opts.covariates},
                 {"ps_formula", opts.ps_formula},
                 {"trim", trim_spec},
                 {"methods", methods_csv},
                 {"estimators", estimators_csv},
                 {"B", B},
                 {"alpha", alpha},
                 {"seed", seed},
                 {"threads", threads}};
  write_file(out_path, j.dump(2) + "\n");

  // human-readable summary
  std::printf("%s  n=%d  events=%d\n", kVersion, report.n, report.n_events);
  std::printf("%-22s %9s %8s   %s\n", "estimator", "beta", "HR", "95% CI (HR)");
  for (const auto& [name, e] : report.estimators) {
    std::printf("%-22s %9.4f %8.4f   (%.4f, %.4f)\n", name.c_str(), e.beta, e.hr,
                std::exp(e.ci_low), std::exp(e.ci_high));
  }
  if (report.methods.count("software_robust") > 0 || !report.methods.empty()) {
    std::printf("%-22s %9.4f %8.4f\n", "psm", report.beta_hat, report.hr);
    for (const auto& [name, m] : report.methods) {
      std::printf("  %-20s %9s %8s   (%.4f, %.4f)\n", name.c_str(), "", "", std::exp(m.ci_low),
                  std::exp(m.ci_high));
    }
  }
  std::printf("report written to %s\n", out_path.c_str());
  return 0;
}

int cmd_simulate(const std::string& scenario_path, int reps_override, int b_override,
                 long long seed_override, int threads_override, int n_override,
                 const std::string& out_spec) {
  using namespace hazmatch;
  std::vector<PlanCell> plan = load_scenario_file(scenario_path);
  for (PlanCell& cell : plan) {
    if (reps_override > 0) cell.cfg.reps = reps_override;
    if (b_override > 0) cell.cfg.B = b_override;
    if (seed_override >= 0) cell.cfg.seed = static_cast<std::uint64_t>(seed_override);
    if (threads_override >= 0) cell.cfg.threads = threads_override;
    if (n_override > 0) cell.cfg.n = n_override;
  }

  std::string prefix = out_spec;
  if (prefix.size() > 4 && prefix.substr(prefix.size() - 4) == ".csv") {
    prefix = prefix.substr(0, prefix.size() - 4);
  }

  std::vector<ScenarioResult> results;
  bool failed = false;
  std::string failure_message;
  for (std::size_t c = 0; c < plan.size(); ++c) {
    std::fprintf(stderr, "cell %zu/%zu: confounding=%s beta0=%g ps=%s reps=%d ...\n", c + 1,
                 plan.size(), plan[c].confounding.c_str(), plan[c].cfg.beta0,
                 plan[c].cfg.sqrt_misspec ? "sqrt" : "correct", plan[c].cfg.reps);
    try {
      results.push_back(run_scenario(plan[c].cfg));
    } catch (const ScenarioFailure& ex) {
      failed = true;
      failure_message = ex.what();
      results.push_back(ex.result);
    }
    std::fprintf(stderr, "cell %zu/%zu: done (%d failures)\n", c + 1, plan.size(),
                 results.back().failures);
  }

  write_file(prefix + ".csv", metrics_to_csv(plan, results));
  write_file(prefix + ".json", results_to_json(plan, results, kVersion));
  std::printf("wrote %s.csv and %s.json\n", prefix.c_str(), prefix.c_str());
  if (failed) {
    std::fprintf(stderr, "error: %s (failure log in %s.json)\n", failure_message.c_str(),
                 prefix.c_str());
    return 1;
  }
  return 0;
}

int cmd_dump_matches(const CommonDataOpts& opts, const std::string& out_path) {
  using namespace hazmatch;
  const Dataset ds = load_csv(opts.data, opts.schema());
  const PropensityFit ps = fit_logistic(ds, opts.design(ds.dim()));
  dump_matches_csv(ds, match_on_scalar(ps.scores, ds.treatments()), out_path);
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"propensity-score-matching inference for the marginal causal hazard ratio"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // estimate
  auto* est = app.add_subcommand("estimate", "estimate the hazard ratio from a CSV dataset");
  CommonDataOpts est_opts;
  est_opts.attach(est);
  std::string trim_spec, methods_csv, estimators_csv, out_path = "report.json", dump_path;
  int B = 1000, threads = 0;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  est->add_option("--trim", trim_spec, "propensity trimming bounds 'low,high' or 'default'");
  est->add_option("--methods", methods_csv,
                  "psm variance methods: software,asymp,naiveboot,double-rsp");
  est->add_option("--estimators", estimators_csv, "estimators: naive,ipw,reg,psm (default psm)");
  est->add_option("--B", B, "bootstrap replicates");
  est->add_option("--alpha", alpha, "1 - confidence level, in (0, 0.5]");
  est->add_option("--seed", seed, "master seed");
  est->add_option("--threads", threads, "worker threads (0 = hardware)");
  est->add_option("--out", out_path, "output report JSON path");
  est->add_option("--dump-matches", dump_path, "also write the imputed dataset CSV here");

  // simulate
  auto* sim = app.add_subcommand("simulate", "run a Monte Carlo scenario grid");
  std::string scenario_path, sim_out = "metrics.csv";
  int sim_reps = 0, sim_b = 0, sim_threads = -1, sim_n = 0;
  long long sim_seed = -1;
  sim->add_option("--scenario", scenario_path, "scenario config file (flat key=value or .json)")
      ->required();
  sim->add_option("--reps", sim_reps, "override Monte Carlo replicates");
  sim->add_option("--B", sim_b, "override bootstrap replicates");
  sim->add_option("--seed", sim_seed, "override master seed");
  sim->add_option("--threads", sim_threads, "override worker threads (0 = hardware)");
  sim->add_option("--n", sim_n, "override sample size");
  sim->add_option("--out", sim_out, "output path or prefix (writes .csv and .json)");

  // dump-matches
  auto* dump = app.add_subcommand("dump-matches", "write the imputed dataset for audit");
  CommonDataOpts dump_opts;
  dump_opts.attach(dump);
  std::string dump_out = "matches.csv";
  dump->add_option("--out", dump_out, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (est->parsed()) {
      if (!(alpha > 0 && alpha <= 0.5)) throw std::invalid_argument("--alpha must be in (0, 0.5]");
      return cmd_estimate(est_opts, trim_spec, methods_csv, estimators_csv, B, alpha, seed,
                          threads, out_path, dump_path);
    }
    if (sim->parsed()) {
      return cmd_simulate(scenario_path, sim_reps, sim_b, sim_seed, sim_threads, sim_n, sim_out);
    }
    if (dump->parsed()) {
      return cmd_dump_matches(dump_opts, dump_out);
    }
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 0;
}
