#include "qgs/experiment.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "qgs/asymptotics.hpp"
#include "qgs/error.hpp"
#include "qgs/overshoot.hpp"

namespace qgs {

namespace {

void check_keys(const Json& obj, const std::set<std::string>& allowed, std::string_view where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(fmt::format("unknown key '{}' in {}", key, where));
  }
}

double get_real(const Json& obj, const char* key, std::string_view where) {
  if (!obj.contains(key)) throw ConfigError(fmt::format("{} is missing '{}'", where, key));
  const Json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(fmt::format("'{}' in {} must be a number", key, where));
  return v.get<double>();
}

double get_real_or(const Json& obj, const char* key, double fallback, std::string_view where) {
  return obj.contains(key) ? get_real(obj, key, where) : fallback;
}

std::uint64_t as_count(const Json& v, std::string_view what) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d < 1.8e19 && std::floor(d) == d) return static_cast<std::uint64_t>(d);
  }
  throw ConfigError(fmt::format("{} must be a nonnegative integer", what));
}

HTerm::Kind kind_from_string(const std::string& s) {
  if (s == "power_log") return HTerm::Kind::PowerLog;
  if (s == "power") return HTerm::Kind::Power;
  if (s == "constant") return HTerm::Kind::Constant;
  throw ConfigError(fmt::format("unknown term kind '{}' (power_log, power, constant)", s));
}

HTerm term_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("each model term must be an object");
  check_keys(j, {"kind", "kappa", "gamma"}, "model term");
  if (!j.contains("kind") || !j.at("kind").is_string()) throw ConfigError("model term needs a string 'kind'");
  const HTerm::Kind kind = kind_from_string(j.at("kind").get<std::string>());
  const double kappa = get_real(j, "kappa", "model term");
  if (kind == HTerm::Kind::Power) return HTerm::power(kappa, get_real(j, "gamma", "power term"));
  if (j.contains("gamma")) throw ConfigError("'gamma' applies to power terms only");
  return kind == HTerm::Kind::PowerLog ? HTerm::power_log(kappa) : HTerm::constant(kappa);
}

TailModel preset_object(const Json& j) {
  check_keys(j, {"preset", "alpha"}, "model preset");
  if (!j.at("preset").is_string()) throw ConfigError("'preset' must be a string");
  const std::string name = j.at("preset").get<std::string>();
  if (name == "stretched") return TailModel::stretched(get_real(j, "alpha", "stretched preset"));
  if (j.contains("alpha")) throw ConfigError(fmt::format("preset '{}' takes no alpha", name));
  return model_from_preset(name);
}

}  // namespace

TailModel model_from_preset(std::string_view name) {
  if (name == "exp") return TailModel::exponential();
  if (name == "normal") return TailModel::normal();
  if (name == "loglog-sq") return TailModel::log_squared();
  if (name.starts_with("stretched(") && name.ends_with(")")) {
    const std::string arg(name.substr(10, name.size() - 11));
    std::size_t used = 0;
    double alpha = 0.0;
    try {
      alpha = std::stod(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != arg.size()) throw ConfigError(fmt::format("bad stretched preset '{}'", name));
    return TailModel::stretched(alpha);
  }
  throw ConfigError(fmt::format("unknown model preset '{}' (exp, stretched(alpha), normal, loglog-sq)", name));
}

TailModel model_from_json(const Json& j) {
  if (j.is_string()) return model_from_preset(j.get<std::string>());
  if (!j.is_object()) throw ConfigError("model must be a preset name or an object");
  if (j.contains("preset")) return preset_object(j);

  const std::string family = j.contains("family") ? j.at("family").get<std::string>() : "stretched";
  if (family == "log_squared") {
    check_keys(j, {"family"}, "log_squared model");
    return TailModel::log_squared();
  }
  if (family != "stretched") throw ConfigError(fmt::format("unknown model family '{}'", family));
  check_keys(j, {"family", "c", "alpha", "x0", "terms"}, "model");
  std::vector<HTerm> terms;
  if (j.contains("terms")) {
    if (!j.at("terms").is_array()) throw ConfigError("'terms' must be an array");
    for (const auto& t : j.at("terms")) terms.push_back(term_from_json(t));
  }
  return TailModel::make(get_real(j, "c", "model"), get_real(j, "alpha", "model"), std::move(terms),
                         get_real_or(j, "x0", 0.0, "model"));
}

Json model_to_json(const TailModel& m) {
  if (m.family() == TailFamily::LogSquared) return Json{{"family", "log_squared"}};
  Json terms = Json::array();
  for (const HTerm& t : m.terms()) {
    Json term{{"kind", to_string(t.kind)}, {"kappa", t.kappa}};
    if (t.kind == HTerm::Kind::Power) term["gamma"] = t.gamma;
    terms.push_back(std::move(term));
  }
  return Json{{"family", "stretched"}, {"c", m.c()}, {"alpha", m.alpha()}, {"x0", m.x0()}, {"terms", terms}};
}

Statistic statistic_from_string(std::string_view name) {
  for (Statistic s : {Statistic::Ybar, Statistic::LogT, Statistic::TStar, Statistic::NormalizedMean,
                      Statistic::LogTOverLogK}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError(fmt::format("unknown statistic '{}'", name));
}

std::string ExperimentConfig::resolved_manifest_path() const {
  return manifest_path.empty() ? csv_path + ".manifest.json" : manifest_path;
}

Json ExperimentConfig::to_json() const {
  Json j;
  j["model"] = model_spec;
  j["model_resolved"] = model_to_json(model);
  j["beta"] = rule.beta;
  j["k_max"] = rule.k_max;
  j["checkpoints"] = rule.checkpoints;
  j["n_paths"] = rule.n_paths;
  j["seed"] = rule.seed;
  if (rule.warm_start) j["warm_start"] = Json{{"k0", rule.warm_start->k0}, {"ybar", rule.warm_start->ybar}};
  Json stats = Json::array();
  for (Statistic s : statistics) stats.push_back(to_string(s));
  j["statistics"] = stats;
  j["tolerance"] = tolerance;
  j["output"] = Json{{"csv", csv_path}, {"manifest", resolved_manifest_path()}};
  return j;
}

ExperimentConfig parse_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  check_keys(j, {"model", "beta", "k_max", "checkpoints", "n_paths", "seed", "statistics", "tolerance", "output",
                 "workers", "warm_start", "model_resolved"},
             "config");
  ExperimentConfig c;
  if (!j.contains("model")) throw ConfigError("config is missing 'model'");
  c.model_spec = j.at("model");
  c.model = model_from_json(c.model_spec);
  if (j.contains("model_resolved") && !(model_from_json(j.at("model_resolved")) == c.model))
    throw ConfigError("'model_resolved' disagrees with 'model'");

  c.rule.beta = get_real(j, "beta", "config");
  if (!j.contains("k_max")) throw ConfigError("config is missing 'k_max'");
  c.rule.k_max = as_count(j.at("k_max"), "k_max");
  if (j.contains("checkpoints")) {
    if (!j.at("checkpoints").is_array()) throw ConfigError("'checkpoints' must be an array");
    for (const auto& v : j.at("checkpoints")) c.rule.checkpoints.push_back(as_count(v, "checkpoint"));
  } else {
    c.rule.checkpoints = {c.rule.k_max};
  }
  c.rule.n_paths = j.contains("n_paths") ? as_count(j.at("n_paths"), "n_paths") : 1;
  c.rule.seed = j.contains("seed") ? as_count(j.at("seed"), "seed") : 0;
  if (j.contains("warm_start")) {
    const Json& w = j.at("warm_start");
    if (!w.is_object()) throw ConfigError("'warm_start' must be an object");
    check_keys(w, {"k0", "ybar"}, "warm_start");
    if (!w.contains("k0")) throw ConfigError("warm_start is missing 'k0'");
    c.rule.warm_start = WarmStart{as_count(w.at("k0"), "warm_start.k0"), get_real(w, "ybar", "warm_start")};
  }

  if (j.contains("statistics")) {
    if (!j.at("statistics").is_array()) throw ConfigError("'statistics' must be an array of names");
    c.statistics.clear();
    for (const auto& s : j.at("statistics")) {
      if (!s.is_string()) throw ConfigError("'statistics' must be an array of names");
      c.statistics.push_back(statistic_from_string(s.get<std::string>()));
    }
  }
  c.tolerance = get_real_or(j, "tolerance", 0.05, "config");
  if (!(c.tolerance > 0.0)) throw ConfigError("'tolerance' must be positive");
  if (j.contains("output")) {
    const Json& o = j.at("output");
    if (!o.is_object()) throw ConfigError("'output' must be an object");
    check_keys(o, {"csv", "manifest"}, "output");
    if (o.contains("csv")) c.csv_path = o.at("csv").get<std::string>();
    if (o.contains("manifest")) c.manifest_path = o.at("manifest").get<std::string>();
  }
  if (j.contains("workers")) c.workers = static_cast<unsigned>(as_count(j.at("workers"), "workers"));

  c.rule.validate();
  if (c.rule.warm_start && !(c.rule.warm_start->ybar * c.rule.beta >= c.model.x0()))
    throw ConstraintViolation("warm_start ybar puts the first threshold below the model support");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config '{}'", path));
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("config '{}' is not valid JSON: {}", path, e.what()));
  }
  try {
    return parse_config(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("config '{}': {}", path, e.what()));
  }
}

unsigned workers_from_env() {
  const char* v = std::getenv("QGS_WORKERS");
  if (v == nullptr || *v == '\0') return 0;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1 || n > 4096) throw ConfigError(fmt::format("QGS_WORKERS='{}' is not a positive integer", v));
  return static_cast<unsigned>(n);
}

void write_checkpoint_csv(std::ostream& out, const PathSet& paths) {
  out << kCsvComment << '\n' << kCsvHeader << '\n';
  fmt::memory_buffer buf;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    for (const Checkpoint& c : paths[p]) {
      buf.clear();
      fmt::format_to(std::back_inserter(buf), "{},{},{},{},{},{}\n", p, c.k, c.ybar, c.log_T, c.t_star,
                     c.normalized_mean);
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
  }
}

std::string checkpoint_csv(const PathSet& paths) {
  std::ostringstream out;
  write_checkpoint_csv(out, paths);
  return out.str();
}

std::string git_blob_sha1(std::string_view content) {
  const std::string header = fmt::format("blob {}", content.size());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size() + 1) != 1 ||  // includes the NUL
      EVP_DigestUpdate(ctx.get(), content.data(), content.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw Error("SHA-1 digest failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

RunOutput run_experiment(const ExperimentConfig& config) {
  const OvershootFunctional fn(config.model);
  std::unique_ptr<GFunctional> g;
  if (config.rule.beta == 1.0) g = std::make_unique<GFunctional>(fn);
  unsigned workers = config.workers != 0 ? config.workers : workers_from_env();

  RunOutput out;
  out.paths = run_paths(config.rule, fn, g.get(), workers);
  out.csv = checkpoint_csv(out.paths);

  Json reports = Json::array();
  for (Statistic s : config.statistics) {
    Json entry{{"statistic", to_string(s)}};
    try {
      entry["convergence"] = convergence_report(out.paths, selector(s), config.tolerance, to_string(s)).to_json();
    } catch (const InsufficientData& e) {
      entry["convergence"] = Json{{"skipped", e.what()}};
    }
    try {
      entry["divergence"] = divergence_check(out.paths, selector(s)).to_json();
    } catch (const InsufficientData& e) {
      entry["divergence"] = Json{{"skipped", e.what()}};
    }
    reports.push_back(std::move(entry));
  }

  Json regime = nullptr;
  if (config.model.family() == TailFamily::Stretched) {
    const RegimeClass r = classify_regime(config.model.alpha(), config.rule.beta, config.model.has_correction());
    regime = Json{{"mean", to_string(r.mean)},
                  {"tstar", to_string(r.tstar)},
                  {"beta_lo", r.beta_lo},
                  {"beta_hi", r.beta_hi},
                  {"extrapolated", r.extrapolated}};
  }

  std::size_t rows = 0;
  for (const auto& p : out.paths) rows += p.size();
  const Json echo = config.to_json();
  out.manifest = Json{{"format", "qgs-run-manifest/1"},
                      {"seed", config.rule.seed},
                      {"config", echo},
                      {"config_sha1", git_blob_sha1(echo.dump(2))},
                      {"csv", Json{{"path", config.csv_path}, {"rows", rows}, {"sha1", git_blob_sha1(out.csv)}}},
                      {"switch_point", std::isfinite(fn.switch_point()) ? Json(fn.switch_point()) : Json(nullptr)},
                      {"regime", regime},
                      {"reports", reports}};
  return out;
}

std::string grid_csv(const GFunctional& g) {
  std::string out = "x,f,G\n";
  for (std::size_t i = 0; i < g.nodes().size(); ++i)
    out += fmt::format("{},{},{}\n", g.nodes()[i], g.f_values()[i], g.G_values()[i]);
  return out;
}

std::string regime_csv(const std::vector<double>& alphas, const std::vector<double>& betas) {
  if (alphas.empty() || betas.empty()) throw InvalidParameter("regime grid needs at least one alpha and one beta");
  std::string out = "alpha,beta,mean_regime,tstar_regime,beta_lo,beta_hi\n";
  for (double a : alphas) {
    for (double b : betas) {
      const RegimeClass r = classify_regime(a, b);
      out += fmt::format("{},{},{},{},{},{}\n", a, b, to_string(r.mean), to_string(r.tstar), r.beta_lo, r.beta_hi);
    }
  }
  return out;
}

}  // namespace qgs
