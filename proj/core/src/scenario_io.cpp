#include "hazmatch/scenario_io.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace hazmatch {

std::array<double, 3> confounding_theta(const std::string& level) {
  if (level == "weak") return {-2.0, 0.5, 0.5};
  if (level == "medium") return {-3.0, 1.2, 1.2};
  if (level == "strong") return {-4.0, 2.0, 2.0};
  throw std::invalid_argument("unknown confounding level '" + level +
                              "' (expected weak, medium or strong)");
}

namespace {

std::string trim_ws(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::string strip_quotes(std::string v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                        (v.front() == '\'' && v.back() == '\''))) {
    return v.substr(1, v.size() - 2);
  }
  return v;
}

// every value is a list of strings; scalars are 1-element lists
using RawConfig = std::map<std::string, std::vector<std::string>>;

RawConfig parse_flat(std::istream& in) {
  RawConfig raw;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim_ws(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("scenario file line " + std::to_string(lineno) +
                                  ": expected key = value");
    }
    const std::string key = trim_ws(line.substr(0, eq));
    std::string value = trim_ws(line.substr(eq + 1));
    std::vector<std::string> items;
    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']') {
        throw std::invalid_argument("scenario file line " + std::to_string(lineno) +
                                    ": unterminated list");
      }
      std::stringstream ss(value.substr(1, value.size() - 2));
      std::string item;
      while (std::getline(ss, item, ',')) items.push_back(strip_quotes(trim_ws(item)));
    } else {
      items.push_back(strip_quotes(value));
    }
    raw[key] = std::move(items);
  }
  return raw;
}

RawConfig parse_json(std::istream& in) {
  nlohmann::json j;
  in >> j;
  if (!j.is_object()) throw std::invalid_argument("scenario JSON must be an object");
  RawConfig raw;
  for (const auto& [key, value] : j.items()) {
    std::vector<std::string> items;
    const auto to_str = [](const nlohmann::json& v) -> std::string {
      if (v.is_string()) return v.get<std::string>();
      std::ostringstream os;
      os.precision(17);
      if (v.is_number_integer()) {
        os << v.get<long long>();
      } else if (v.is_number()) {
        os << v.get<double>();
      } else if (v.is_boolean()) {
        os << (v.get<bool>() ? "true" : "false");
      } else {
        throw std::invalid_argument("scenario JSON: unsupported value type");
      }
      return os.str();
    };
    if (value.is_array()) {
      for (const auto& v : value) items.push_back(to_str(v));
    } else {
      items.push_back(to_str(value));
    }
    raw[key] = std::move(items);
  }
  return raw;
}

double to_double(const std::string& s, const std::string& key) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || s.empty()) {
    throw std::invalid_argument("scenario key '" + key + "': bad number '" + s + "'");
  }
  return v;
}

long long to_int(const std::string& s, const std::string& key) {
  const double v = to_double(s, key);
  const long long i = static_cast<long long>(v);
  if (static_cast<double>(i) != v) {
    throw std::invalid_argument("scenario key '" + key + "': expected an integer, got " + s);
  }
  return i;
}

}  // namespace

std::vector<PlanCell> load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open scenario file: " + path);

  const bool json = path.size() > 5 && path.substr(path.size() - 5) == ".json";
  RawConfig raw = json ? parse_json(in) : parse_flat(in);

  static const std::vector<std::string> known = {
      "n",   "beta0",     "confounding", "theta",         "ps_spec", "reps",
      "B",   "seed",      "threads",     "alpha",         "lambda0", "eta",
      "c_max", "lambda_cov", "censor_target"};
  for (const auto& [key, _] : raw) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw std::invalid_argument("scenario file: unknown key '" + key + "'");
    }
  }

  ScenarioConfig base;
  const auto scalar = [&](const char* key) -> const std::string* {
    const auto it = raw.find(key);
    if (it == raw.end()) return nullptr;
    if (it->second.size() != 1) {
      throw std::invalid_argument("scenario key '" + std::string(key) + "' must be a scalar");
    }
    return &it->second.front();
  };
  if (const auto* v = scalar("n")) base.n = static_cast<int>(to_int(*v, "n"));
  if (const auto* v = scalar("reps")) base.reps = static_cast<int>(to_int(*v, "reps"));
  if (const auto* v = scalar("B")) base.B = static_cast<int>(to_int(*v, "B"));
  if (const auto* v = scalar("seed")) base.seed = static_cast<std::uint64_t>(to_int(*v, "seed"));
  if (const auto* v = scalar("threads")) base.threads = static_cast<int>(to_int(*v, "threads"));
  if (const auto* v = scalar("alpha")) base.alpha = to_double(*v, "alpha");
  if (const auto* v = scalar("lambda0")) base.lambda0 = to_double(*v, "lambda0");
  if (const auto* v = scalar("c_max")) base.c_max = to_double(*v, "c_max");
  if (const auto it = raw.find("eta"); it != raw.end()) {
    if (it->second.size() != 2) throw std::invalid_argument("scenario key 'eta' needs 2 values");
    base.eta = {to_double(it->second[0], "eta"), to_double(it->second[1], "eta")};
  }
  if (const auto it = raw.find("lambda_cov"); it != raw.end()) {
    if (it->second.size() != 2) {
      throw std::invalid_argument("scenario key 'lambda_cov' needs 2 values");
    }
    base.lambda_cov = {to_double(it->second[0], "lambda_cov"),
                       to_double(it->second[1], "lambda_cov")};
  }
  if (const auto it = raw.find("censor_target"); it != raw.end()) {
    if (it->second.size() != 2) {
      throw std::invalid_argument("scenario key 'censor_target' needs 2 values");
    }
    base.censor_low = to_double(it->second[0], "censor_target");
    base.censor_high = to_double(it->second[1], "censor_target");
  }

  // grid axes
  std::vector<double> beta0s = {base.beta0};
  if (const auto it = raw.find("beta0"); it != raw.end()) {
    beta0s.clear();
    for (const std::string& s : it->second) beta0s.push_back(to_double(s, "beta0"));
  }
  std::vector<std::string> specs = {"correct"};
  if (const auto it = raw.find("ps_spec"); it != raw.end()) {
    specs = it->second;
    for (const std::string& s : specs) {
      if (s != "correct" && s != "sqrt") {
        throw std::invalid_argument("scenario key 'ps_spec': expected correct or sqrt, got '" +
                                    s + "'");
      }
    }
  }
  struct Level {
    std::string name;
    std::array<double, 3> theta;
  };
  std::vector<Level> levels;
  const bool has_theta = raw.count("theta") > 0;
  const bool has_conf = raw.count("confounding") > 0;
  if (has_theta && has_conf) {
    throw std::invalid_argument("scenario file: give either 'theta' or 'confounding', not both");
  }
  if (has_theta) {
    const auto& t = raw.at("theta");
    if (t.size() != 3) throw std::invalid_argument("scenario key 'theta' needs 3 values");
    levels.push_back({"custom",
                      {to_double(t[0], "theta"), to_double(t[1], "theta"),
                       to_double(t[2], "theta")}});
  } else if (has_conf) {
    for (const std::string& name : raw.at("confounding")) {
      levels.push_back({name, confounding_theta(name)});
    }
  } else {
    levels.push_back({"weak", confounding_theta("weak")});
  }

  std::vector<PlanCell> plan;
  for (const std::string& spec : specs) {
    for (double beta0 : beta0s) {
      for (const Level& level : levels) {
        PlanCell cell;
        cell.confounding = level.name;
        cell.cfg = base;
        cell.cfg.beta0 = beta0;
        cell.cfg.theta = level.theta;
        cell.cfg.sqrt_misspec = spec == "sqrt";
        cell.cfg.validate();
        plan.push_back(std::move(cell));
      }
    }
  }
  return plan;
}

namespace {

const MetricsRow* find_row(const ScenarioResult& result, const std::string& estimator,
                           const std::string& method) {
  for (const MetricsRow& row : result.rows) {
    if (row.estimator == estimator && row.method == method) return &row;
  }
  return nullptr;
}

}  // namespace

std::string metrics_to_csv(const std::vector<PlanCell>& plan,
                           const std::vector<ScenarioResult>& results) {
  if (plan.size() != results.size()) throw std::invalid_argument("metrics_to_csv: size mismatch");
  std::ostringstream out;
  out.precision(6);

  out << "estimator,method";
  for (std::size_t c = 0; c < plan.size(); ++c) {
    std::string label = plan[c].confounding;
    if (plan.size() > 1) {
      label += "_beta" + std::to_string(plan[c].cfg.beta0).substr(0, 4);
      if (plan[c].cfg.sqrt_misspec) label += "_sqrt";
    }
    out << ",bias_x100_" << label << ",var_x1000_" << label << ",ve_x1000_" << label << ",cr_pct_"
        << label;
  }
  out << '\n';

  const std::pair<const char*, const char*> order[] = {
      {"nai", "software"},  {"ipw", "software"},      {"reg", "software"},
      {"psm0", "software"}, {"psm", "software"},      {"psm", "asymp"},
      {"psm", "naiveboot"}, {"psm", "double-rsp"}};
  for (const auto& [estimator, method] : order) {
    out << estimator << ',' << method;
    for (const ScenarioResult& result : results) {
      const MetricsRow* row = find_row(result, estimator, method);
      if (row == nullptr || row->used == 0) {
        out << ",,,,";
      } else {
        out << ',' << row->bias * 100.0 << ',' << row->var * 1000.0 << ',' << row->ve * 1000.0
            << ',' << row->cr;
      }
    }
    out << '\n';
  }
  return out.str();
}

std::string results_to_json(const std::vector<PlanCell>& plan,
                            const std::vector<ScenarioResult>& results,
                            const std::string& version) {
  if (plan.size() != results.size()) throw std::invalid_argument("results_to_json: size mismatch");
  nlohmann::json j;
  j["version"] = version;
  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t c = 0; c < results.size(); ++c) {
    const ScenarioResult& result = results[c];
    const ScenarioConfig& cfg = result.config;
    nlohmann::json cell;
    cell["confounding"] = plan[c].confounding;
    cell["config"] = {{"n", cfg.n},
                      {"beta0", cfg.beta0},
                      {"theta", {cfg.theta[0], cfg.theta[1], cfg.theta[2]}},
                      {"ps_spec", cfg.sqrt_misspec ? "sqrt" : "correct"},
                      {"lambda0", cfg.lambda0},
                      {"eta", {cfg.eta[0], cfg.eta[1]}},
                      {"lambda_cov", {cfg.lambda_cov[0], cfg.lambda_cov[1]}},
                      {"censor_target", {cfg.censor_low, cfg.censor_high}},
                      {"c_max", cfg.c_max},
                      {"alpha", cfg.alpha},
                      {"reps", cfg.reps},
                      {"B", cfg.B},
                      {"seed", cfg.seed}};
    cell["failures"] = result.failures;
    nlohmann::json rows = nlohmann::json::array();
    for (const MetricsRow& row : result.rows) {
      rows.push_back({{"estimator", row.estimator},
                      {"method", row.method},
                      {"bias", row.bias},
                      {"var", row.var},
                      {"ve", row.ve},
                      {"cr", row.cr},
                      {"used", row.used}});
    }
    cell["rows"] = rows;
    nlohmann::json reps = nlohmann::json::array();
    for (std::size_t r = 0; r < result.replicates.size(); ++r) {
      const ReplicateOutcome& out = result.replicates[r];
      nlohmann::json rep;
      rep["rep"] = r;
      if (out.failed) {
        rep["failed"] = true;
        rep["error"] = out.error;
      } else {
        rep["beta_psm"] = out.report.beta_hat;
        nlohmann::json betas = nlohmann::json::object();
        for (const auto& [name, e] : out.report.estimators) betas[name] = e.beta;
        rep["beta"] = betas;
        nlohmann::json methods = nlohmann::json::object();
        for (const auto& [name, m] : out.report.methods) {
          methods[name] = {{"variance", m.variance}, {"ci_low", m.ci_low}, {"ci_high", m.ci_high}};
        }
        rep["psm_methods"] = methods;
      }
      reps.push_back(std::move(rep));
    }
    cell["replicates"] = reps;
    cells.push_back(std::move(cell));
  }
  j["cells"] = cells;
  return j.dump(2);
}

}  // namespace hazmatch
