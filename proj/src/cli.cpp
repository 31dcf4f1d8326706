#include "invuq/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

namespace invuq::cli {

namespace fs = std::filesystem;
using nlohmann::json;

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : Error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

const std::vector<std::string>& builtin_problems() {
  static const std::vector<std::string> names{"deconvolution_1d", "deconvolution_2d", "gravity", "eight_schools"};
  return names;
}

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
  return s;
}

// Reads a document and reports problems against the line of the offending key.
class Reader {
 public:
  Reader(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(source_, line_of(key), msg);
  }

  int line_of(const std::string& key) const {
    if (key.empty()) return 1;
    const auto pos = text_.find("\"" + key + "\"");
    if (pos == std::string::npos) return 1;
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<long>(pos), '\n'));
  }
  int line_at(std::size_t byte) const {
    byte = std::min(byte, text_.size());
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<long>(byte), '\n'));
  }

  void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) const {
    for (const auto& [k, v] : obj.items()) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
        std::vector<std::string> names(allowed.begin(), allowed.end());
        fail(k, "unknown key '" + k + "' in " + where + "; allowed: " + join(names));
      }
    }
  }

  double number(const json& obj, const std::string& key, double fallback) const {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(key, "'" + key + "' must be a number");
    return v.get<double>();
  }
  std::int64_t integer(const json& obj, const std::string& key, std::int64_t fallback) const {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) fail(key, "'" + key + "' must be an integer");
    return v.get<std::int64_t>();
  }
  bool boolean(const json& obj, const std::string& key, bool fallback) const {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) fail(key, "'" + key + "' must be true or false");
    return v.get<bool>();
  }
  std::string string(const json& obj, const std::string& key, const std::string& fallback) const {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_string()) fail(key, "'" + key + "' must be a string");
    return v.get<std::string>();
  }

 private:
  const std::string& text_;
  std::string source_;
};

SamplerConfig parse_sampler_entry(const Reader& r, const json& e, std::vector<std::string>& vars) {
  if (!e.is_object()) r.fail("sampler", "each sampler entry must be an object");
  r.only_keys(e, "sampler entry",
              {"variables", "kind", "scale", "step", "pcn_step", "target_accept", "max_depth", "step_size",
               "cgls_max_iter", "cgls_tol", "ugla_beta", "adapt", "inner_steps"});
  if (!e.contains("variables") || !e.at("variables").is_array() || e.at("variables").empty())
    r.fail("variables", "sampler entry needs a non-empty 'variables' list");
  for (const auto& v : e.at("variables")) {
    if (!v.is_string()) r.fail("variables", "variable names must be strings");
    vars.push_back(v.get<std::string>());
  }
  SamplerConfig c;
  try {
    c.kind = sampler_kind_from_string(r.string(e, "kind", ""));
  } catch (const InvalidArgument& ex) {
    r.fail("kind", ex.what());
  }
  c.scale = r.number(e, "scale", c.scale);
  c.step = r.number(e, "step", c.step);
  c.pcn_step = r.number(e, "pcn_step", c.pcn_step);
  c.target_accept = r.number(e, "target_accept", c.target_accept);
  c.max_depth = static_cast<int>(r.integer(e, "max_depth", c.max_depth));
  if (e.contains("step_size")) c.step_size = r.number(e, "step_size", 0.0);
  c.cgls_max_iter = static_cast<int>(r.integer(e, "cgls_max_iter", c.cgls_max_iter));
  c.cgls_tol = r.number(e, "cgls_tol", c.cgls_tol);
  c.ugla_beta = r.number(e, "ugla_beta", c.ugla_beta);
  c.adapt = r.boolean(e, "adapt", c.adapt);
  c.inner_steps = static_cast<int>(r.integer(e, "inner_steps", c.inner_steps));
  try {
    c.validate();
  } catch (const InvalidArgument& ex) {
    r.fail("kind", ex.what());
  }
  return c;
}

ProblemConfig parse_problem(const Reader& r, const json& p, const fs::path& base) {
  if (!p.is_object()) r.fail("problem", "'problem' must be an object");
  r.only_keys(p, "problem",
              {"builtin", "n", "N", "phantom", "psf_std", "noise_std", "noise_precision", "data_seed", "informative",
               "m", "prior", "prior_parameter", "prior_hyper", "noise_hyper", "model_csv", "data_csv"});
  ProblemConfig pc;
  pc.builtin = r.string(p, "builtin", "");
  if (pc.builtin.empty()) {
    if (!p.contains("model_csv") || !p.contains("data_csv"))
      r.fail("problem", "problem needs 'builtin' or both 'model_csv' and 'data_csv'");
    pc.model_csv = base / r.string(p, "model_csv", "");
    pc.data_csv = base / r.string(p, "data_csv", "");
  } else {
    const auto& names = builtin_problems();
    if (std::find(names.begin(), names.end(), pc.builtin) == names.end())
      r.fail("builtin", "unknown builtin problem '" + pc.builtin + "'; options: " + join(names));
  }
  const std::int64_t size = p.contains("N") ? r.integer(p, "N", 0) : r.integer(p, "n", 0);
  if (size < 0) r.fail(p.contains("N") ? "N" : "n", "problem size must be positive");
  pc.size = size;
  pc.phantom = r.string(p, "phantom", "");
  pc.psf_std = r.number(p, "psf_std", 3.0);
  if (!(pc.psf_std > 0.0)) r.fail("psf_std", "'psf_std' must be positive");
  if (p.contains("noise_std")) {
    pc.noise_std = r.number(p, "noise_std", 0.0);
    if (!(*pc.noise_std >= 0.0)) r.fail("noise_std", "'noise_std' must be non-negative");
  }
  if (p.contains("noise_precision")) {
    pc.noise_precision = r.number(p, "noise_precision", 0.0);
    if (!(*pc.noise_precision > 0.0)) r.fail("noise_precision", "'noise_precision' must be positive");
  }
  if (p.contains("data_seed")) {
    const auto s = r.integer(p, "data_seed", 0);
    if (s < 0) r.fail("data_seed", "'data_seed' must be non-negative");
    pc.data_seed = static_cast<std::uint64_t>(s);
  }
  pc.informative = r.boolean(p, "informative", false);
  pc.gravity_points = r.integer(p, "m", 100);
  if (pc.gravity_points < 1) r.fail("m", "'m' must be at least 1");
  try {
    pc.prior.prior = prior_kind_from_string(r.string(p, "prior", "gmrf"));
  } catch (const InvalidArgument& ex) {
    r.fail("prior", ex.what());
  }
  pc.prior.prior_parameter = r.number(p, "prior_parameter", pc.prior.prior_parameter);
  pc.prior.prior_hyper = r.boolean(p, "prior_hyper", false);
  pc.prior.noise_hyper = r.boolean(p, "noise_hyper", false);
  return pc;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source, const fs::path& base_dir) {
  Reader r(text, source);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source, r.line_at(e.byte > 0 ? e.byte - 1 : 0), std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError(source, 1, "config must be a JSON object");
  r.only_keys(doc, "config",
              {"spec_version", "run_id", "problem", "sampler", "N", "Nb", "thin", "chains", "seed", "outputs"});
  if (!doc.contains("spec_version")) r.fail("", "missing \"spec_version\"");
  if (r.integer(doc, "spec_version", 0) != 1) r.fail("spec_version", "unsupported spec_version (expected 1)");

  RunConfig c;
  c.run_id = r.string(doc, "run_id", "run");
  if (c.run_id.empty() || c.run_id.find_first_of("./\\ ") != std::string::npos)
    r.fail("run_id", "'run_id' must be non-empty without '.', '/', '\\' or spaces");
  if (!doc.contains("problem")) r.fail("", "missing \"problem\"");
  c.problem = parse_problem(r, doc.at("problem"), base_dir);

  if (doc.contains("sampler")) {
    const auto& s = doc.at("sampler");
    if (s.is_string()) {
      if (s.get<std::string>() != "auto") r.fail("sampler", "'sampler' must be \"auto\" or a list of entries");
    } else if (s.is_array()) {
      if (s.empty()) r.fail("sampler", "sampler list is empty");
      c.auto_sampler = false;
      for (const auto& e : s) {
        PlanEntryConfig pe;
        pe.config = parse_sampler_entry(r, e, pe.variables);
        c.plan.push_back(std::move(pe));
      }
    } else {
      r.fail("sampler", "'sampler' must be \"auto\" or a list of entries");
    }
  }

  c.N = r.integer(doc, "N", 1000);
  if (c.N < 1) r.fail("N", "'N' must be at least 1");
  c.Nb = r.integer(doc, "Nb", 0);
  if (c.Nb < 0) r.fail("Nb", "'Nb' must be non-negative");
  c.thin = r.integer(doc, "thin", 1);
  if (c.thin < 1) r.fail("thin", "'thin' must be at least 1");
  if (c.N / c.thin < 2) r.fail("thin", "fewer than two draws remain after thinning");
  const auto chains = r.integer(doc, "chains", 1);
  if (chains < 1 || chains > 1024) r.fail("chains", "'chains' must be between 1 and 1024");
  c.chains = static_cast<int>(chains);
  const auto seed = r.integer(doc, "seed", 0);
  if (seed < 0) r.fail("seed", "'seed' must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);

  if (doc.contains("outputs")) {
    const auto& o = doc.at("outputs");
    if (!o.is_object()) r.fail("outputs", "'outputs' must be an object");
    r.only_keys(o, "outputs", {"statistics", "directory", "ci_level"});
    if (o.contains("statistics")) {
      if (!o.at("statistics").is_array()) r.fail("statistics", "'statistics' must be a list");
      static const std::set<std::string> known{"mean", "std", "ci", "trace", "violin", "raw"};
      for (const auto& s : o.at("statistics")) {
        if (!s.is_string() || !known.count(s.get<std::string>()))
          r.fail("statistics", "unknown statistic " + s.dump() + "; options: mean, std, ci, trace, violin, raw");
        c.statistics.push_back(s.get<std::string>());
      }
    }
    if (o.contains("directory")) c.directory = fs::path(r.string(o, "directory", ""));
    c.ci_level = r.number(o, "ci_level", 95.0);
    if (!(c.ci_level > 0.0 && c.ci_level < 100.0)) r.fail("ci_level", "'ci_level' must lie in (0, 100)");
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 1, "cannot read config file");
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig c = parse_config(ss.str(), path.string(), path.parent_path());
  return c;
}

fs::path output_directory(const RunConfig& cfg, const Overrides& o) {
  if (o.out) return *o.out;
  const char* root_env = std::getenv("INVUQ_OUTPUT_ROOT");
  const fs::path root = root_env && *root_env ? fs::path(root_env) : fs::path(".");
  if (cfg.directory) return cfg.directory->is_absolute() ? *cfg.directory : root / *cfg.directory;
  return root / cfg.run_id;
}

namespace {

// Problem instance kept alive for the kernels that reference it.
struct LoadedProblem {
  std::unique_ptr<Posterior> posterior;
  std::string description;
};

LoadedProblem load_problem(const ProblemConfig& p, std::uint64_t seed) {
  const std::uint64_t data_seed = p.data_seed.value_or(seed);
  LoadedProblem out;
  if (p.builtin == "deconvolution_1d") {
    Deconvolution1DOptions o;
    if (p.size) o.n = p.size;
    if (!p.phantom.empty()) o.phantom = p.phantom;
    o.psf_std = p.psf_std;
    if (p.noise_std) o.noise_std = *p.noise_std;
    o.seed = data_seed;
    out.posterior = std::make_unique<Posterior>(linear_posterior(deconvolution_1d(o), p.prior));
  } else if (p.builtin == "deconvolution_2d") {
    Deconvolution2DOptions o;
    if (p.size) o.N = p.size;
    if (!p.phantom.empty()) o.phantom = p.phantom;
    o.psf_std = p.psf_std;
    if (p.noise_precision) o.noise_precision = *p.noise_precision;
    if (p.noise_std) o.noise_precision = 1.0 / (*p.noise_std * *p.noise_std);
    o.seed = data_seed;
    out.posterior = std::make_unique<Posterior>(linear_posterior(deconvolution_2d(o), p.prior));
  } else if (p.builtin == "gravity") {
    out.posterior =
        std::make_unique<Posterior>(gravity_problem(data_seed, p.informative, p.gravity_points).posterior());
  } else if (p.builtin == "eight_schools") {
    out.posterior = std::make_unique<Posterior>(eight_schools().posterior());
  } else {
    TestProblemBundle b;
    b.model = std::make_shared<const ForwardModel>(linear_model_from_csv(p.model_csv));
    const Matrix y = read_csv_matrix(p.data_csv);
    if (y.cols() != 1 && y.rows() != 1) throw InvalidArgument("data CSV must hold a single row or column");
    b.y_obs = y.cols() == 1 ? Vector(y.col(0)) : Vector(y.row(0).transpose());
    if (b.y_obs.size() != b.model->range_dim())
      throw DimensionError("observed data", b.model->range_dim(), b.y_obs.size());
    b.info.noise_std = p.noise_std.value_or(0.0);
    out.posterior = std::make_unique<Posterior>(linear_posterior(b, p.prior));
  }
  out.description = p.builtin.empty() ? "csv model " + p.model_csv.string() : p.builtin;
  return out;
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v[i]))
      a.push_back(v[i]);
    else
      a.push_back(nullptr);
  }
  return a;
}

struct VariableSummary {
  std::vector<std::string> labels;
  Vector mean, std, lower, upper, ess;
  std::optional<Vector> rhat;
};

// Pooled statistics over chains; ESS adds up per chain, R-hat needs two chains.
VariableSummary summarize_chains(const std::string& name, const std::vector<Samples>& chains, double level) {
  VariableSummary s;
  const Index dim = chains.front().dim();
  Index total = 0;
  for (const auto& c : chains) total += c.size();
  Matrix pooled(total, dim);
  Index off = 0;
  for (const auto& c : chains) {
    pooled.middleRows(off, c.size()) = c.draws();
    off += c.size();
  }
  const Samples all(pooled, chains.front().geometry());
  s.mean = all.mean();
  s.std = all.std();
  std::tie(s.lower, s.upper) = all.credibility_interval(level);
  s.ess = Vector::Zero(dim);
  for (Index j = 0; j < dim; ++j) {
    s.labels.push_back(all.geometry().coordinate_label(name, j));
    for (const auto& c : chains) {
      try {
        s.ess[j] += invuq::ess(c.chain(j));
      } catch (const Error&) {
        s.ess[j] = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  if (chains.size() >= 2) {
    Vector r(dim);
    for (Index j = 0; j < dim; ++j) {
      std::vector<Vector> cs;
      for (const auto& c : chains) cs.push_back(c.chain(j));
      try {
        r[j] = invuq::rhat(cs);
      } catch (const Error&) {
        r[j] = std::numeric_limits<double>::quiet_NaN();
      }
    }
    s.rhat = r;
  }
  return s;
}

json summary_json(const VariableSummary& s, double level) {
  json j{{"labels", s.labels},     {"mean", vector_json(s.mean)},   {"std", vector_json(s.std)},
         {"ci_level", level},      {"ci_lower", vector_json(s.lower)}, {"ci_upper", vector_json(s.upper)},
         {"ess", vector_json(s.ess)}};
  j["rhat"] = s.rhat ? vector_json(*s.rhat) : json(nullptr);
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

std::string chain_run_id(const std::string& run_id, int chain) { return run_id + "-c" + std::to_string(chain); }

struct RawIndex {
  // variable -> chains in chain order
  std::map<std::string, std::vector<Samples>> chains;
  std::vector<std::string> order;
};

RawIndex scan_raw(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InvalidArgument("no such directory: " + dir.string());
  std::vector<fs::path> sidecars;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string f = e.path().filename().string();
    if (f.size() > 9 && f.ends_with(".raw.json")) sidecars.push_back(e.path());
  }
  std::sort(sidecars.begin(), sidecars.end());
  if (sidecars.empty()) throw InvalidArgument("no raw chain exports (*.raw.json) in " + dir.string());
  std::map<std::string, std::vector<std::pair<Index, Samples>>> found;
  RawIndex idx;
  for (const auto& p : sidecars) {
    std::ifstream in(p);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw InvalidArgument("malformed sidecar " + p.string() + ": " + e.what());
    }
    const std::string var = j.value("variable", "");
    const std::string f = p.filename().string();
    const std::string suffix = "." + var + ".raw.json";
    if (var.empty() || !f.ends_with(suffix)) throw InvalidArgument("malformed sidecar " + p.string());
    const std::string run = f.substr(0, f.size() - suffix.size());
    if (!fs::exists(dir / (run + "." + var + ".raw.csv")))
      throw InvalidArgument("missing raw data for " + p.string());
    Samples s = import_raw(dir, run, var);
    if (!found.count(var)) idx.order.push_back(var);
    const Index chain = s.provenance().chain;
    found[var].emplace_back(chain, std::move(s));
  }
  for (auto& [var, list] : found) {
    std::stable_sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [c, s] : list) idx.chains[var].push_back(std::move(s));
    const Index n = idx.chains[var].front().size();
    for (const auto& s : idx.chains[var])
      if (s.size() != n || s.size() < 2)
        throw InvalidArgument("chains of '" + var + "' need equal lengths of at least 2 draws");
  }
  return idx;
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5g", v);
  return buf;
}

}  // namespace

int run(const fs::path& config, const Overrides& o, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  LoadedProblem prob;
  SamplingPlan plan;
  try {
    cfg = load_config(config);
    if (o.seed) cfg.seed = *o.seed;
    if (o.chains) {
      if (*o.chains < 1) throw ConfigError("--chains", 1, "must be at least 1");
      cfg.chains = *o.chains;
    }
    try {
      prob = load_problem(cfg.problem, cfg.seed);
    } catch (const CapabilityError&) {
      throw;
    } catch (const Error& e) {
      std::ifstream in(config);
      std::stringstream ss;
      ss << in.rdbuf();
      const std::string text = ss.str();
      throw ConfigError(config.string(), Reader(text, config.string()).line_of("problem"), e.what());
    }
    if (cfg.auto_sampler) {
      plan = select_sampler(*prob.posterior);
    } else {
      for (const auto& e : cfg.plan) plan.entries.push_back({e.variables, e.config.kind});
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const CapabilityError& e) {
    err << "capability error: " << e.what() << '\n';
    return kCapabilityError;
  } catch (const Error& e) {
    err << "error: " << config.string() << ":1: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }

  out << "problem: " << prob.description << '\n';
  out << "sampling plan" << (plan.is_gibbs() ? " (Gibbs)" : "") << ":\n" << plan.describe();
  out.flush();

  RunOptions ro;
  ro.N = cfg.N;
  ro.Nb = cfg.Nb;
  ro.seed = cfg.seed;
  for (const auto& e : cfg.plan) ro.configs[e.variables.front()] = e.config;

  std::vector<ChainResult> results;
  try {
    results = sample_chains(*prob.posterior, plan, ro, cfg.chains);
  } catch (const CapabilityError& e) {
    err << "capability error: " << e.what() << '\n';
    return kCapabilityError;
  } catch (const InvalidArgument& e) {
    err << "error: " << config.string() << ":1: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kRuntimeError;
  }

  try {
    const fs::path dir = output_directory(cfg, o);
    fs::create_directories(dir);
    json variables = json::object();
    json timing{{"chains", json::array()}};
    double total = 0.0;
    json chains_json = json::array();
    for (int c = 0; c < cfg.chains; ++c) {
      const auto& r = results[static_cast<std::size_t>(c)];
      json acc = json::object();
      for (const auto& [k, v] : r.acceptance) acc[k] = v;
      chains_json.push_back({{"chain", c},
                             {"seed", r.seed},
                             {"acceptance", acc},
                             {"evaluations", r.evaluations},
                             {"divergences", r.divergences}});
      timing["chains"].push_back(r.wall_time);
      total += r.wall_time;
    }
    timing["total_seconds"] = total;

    for (const auto& name : prob.posterior->targets()) {
      std::vector<Samples> per_chain;
      for (int c = 0; c < cfg.chains; ++c) {
        Samples s = results[static_cast<std::size_t>(c)].samples.at(name).thin(cfg.thin);
        const std::string rid = chain_run_id(cfg.run_id, c);
        export_statistic(s, "raw", dir, rid, name, cfg.ci_level);
        for (const auto& stat : cfg.statistics)
          if (stat != "raw") export_statistic(s, stat, dir, rid, name, cfg.ci_level);
        per_chain.push_back(std::move(s));
      }
      variables[name] = summary_json(summarize_chains(name, per_chain, cfg.ci_level), cfg.ci_level);
    }
    json summary{{"run_id", cfg.run_id},
                 {"problem", prob.description},
                 {"plan", plan.describe()},
                 {"gibbs", plan.is_gibbs()},
                 {"N", cfg.N},
                 {"Nb", cfg.Nb},
                 {"thin", cfg.thin},
                 {"seed", cfg.seed},
                 {"chains", chains_json},
                 {"variables", variables},
                 {"timing", timing}};
    write_json(dir / "summary.json", summary);
    out << "wrote " << (dir / "summary.json").string() << '\n';
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kSuccess;
}

int summarize(const fs::path& dir, std::ostream& out, std::ostream& err) {
  RawIndex idx;
  try {
    idx = scan_raw(dir);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  try {
    json table = json::object();
    out << std::left << std::setw(20) << "variable" << std::right << std::setw(13) << "mean" << std::setw(13) << "std"
        << std::setw(13) << "ci_lower" << std::setw(13) << "ci_upper" << std::setw(11) << "ess" << std::setw(9)
        << "rhat" << '\n';
    for (const auto& var : idx.order) {
      const auto& chains = idx.chains.at(var);
      const VariableSummary s = summarize_chains(var, chains, 95.0);
      for (std::size_t j = 0; j < s.labels.size(); ++j) {
        const auto i = static_cast<Index>(j);
        out << std::left << std::setw(20) << s.labels[j] << std::right << std::setw(13) << fmt(s.mean[i])
            << std::setw(13) << fmt(s.std[i]) << std::setw(13) << fmt(s.lower[i]) << std::setw(13)
            << fmt(s.upper[i]) << std::setw(11) << fmt(s.ess[i]) << std::setw(9)
            << (s.rhat ? fmt((*s.rhat)[i]) : std::string("n/a")) << '\n';
      }
      json j = summary_json(s, 95.0);
      j["chains"] = chains.size();
      table[var] = j;
    }
    write_json(dir / "summary_table.json", table);
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kSuccess;
}

int diag(const fs::path& dir, const std::string& variable, std::ostream& out, std::ostream& err) {
  RawIndex idx;
  try {
    idx = scan_raw(dir);
    if (!idx.chains.count(variable))
      throw InvalidArgument("unknown variable '" + variable + "'; available: " + join(idx.order));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  try {
    const auto& chains = idx.chains.at(variable);
    const Index dim = chains.front().dim();
    const Index n = chains.front().size();
    const Index max_lag = std::min<Index>(99, n - 1);
    const fs::path diag_dir = dir / "diag";
    fs::create_directories(diag_dir);

    for (std::size_t c = 0; c < chains.size(); ++c) {
      Matrix m(n, dim + 1);
      m.col(0) = Vector::LinSpaced(n, 0.0, static_cast<double>(n - 1));
      m.rightCols(dim) = chains[c].draws();
      write_csv_matrix(diag_dir / (variable + ".chain" + std::to_string(c) + ".trace.csv"), m);
    }

    // Autocorrelation and IACT of chain 0; ESS summed over chains.
    std::vector<bool> degenerate(static_cast<std::size_t>(dim), false);
    Matrix acf = Matrix::Zero(max_lag + 1, dim + 1);
    acf.col(0) = Vector::LinSpaced(max_lag + 1, 0.0, static_cast<double>(max_lag));
    json iact_j = json::array(), ess_j = json::array(), labels = json::array();
    for (Index j = 0; j < dim; ++j) {
      labels.push_back(chains.front().geometry().coordinate_label(variable, j));
      const Vector x = chains.front().chain(j);
      if ((x.array() == x[0]).all()) {
        degenerate[static_cast<std::size_t>(j)] = true;
        acf(0, j + 1) = 1.0;
        iact_j.push_back(nullptr);
        ess_j.push_back(nullptr);
        continue;
      }
      acf.col(j + 1) = autocorrelation(x, max_lag);
      iact_j.push_back(invuq::iact(x));
      double e = 0.0;
      bool ok = true;
      for (const auto& ch : chains) {
        try {
          e += invuq::ess(ch.chain(j));
        } catch (const Error&) {
          ok = false;
        }
      }
      ess_j.push_back(ok ? json(e) : json(nullptr));
    }
    const bool all_degenerate = std::all_of(degenerate.begin(), degenerate.end(), [](bool b) { return b; });
    write_csv_matrix(diag_dir / (variable + ".autocorr.csv"), all_degenerate ? Matrix(acf.topRows(1)) : acf);
    json d{{"variable", variable},
           {"labels", labels},
           {"chains", chains.size()},
           {"draws", n},
           {"max_lag", all_degenerate ? 0 : max_lag},
           {"iact", iact_j},
           {"ess", ess_j},
           {"degenerate", all_degenerate},
           {"degenerate_coordinates", degenerate}};
    write_json(diag_dir / (variable + ".diag.json"), d);
    out << "wrote diagnostics for '" << variable << "' to " << diag_dir.string() << '\n';
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kSuccess;
}

}  // namespace invuq::cli
