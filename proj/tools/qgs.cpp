// qgs: command-line front end for simulation, verification and table dumps.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error, 3 verify failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "qgs/acceptance.hpp"
#include "qgs/error.hpp"
#include "qgs/experiment.hpp"
#include "qgs/overshoot.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;
constexpr int kVerifyFailed = 3;

struct ConfigStage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw qgs::Error(fmt::format("cannot open '{}' for writing", path));
  out << content;
  if (!out) throw qgs::Error(fmt::format("write to '{}' failed", path));
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    write_file(path, content);
  }
}

std::vector<double> parse_grid(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw qgs::ConfigError(fmt::format("bad {} grid entry '{}'", what, item));
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos)
      throw qgs::ConfigError(fmt::format("bad {} grid entry '{}'", what, item));
    out.push_back(v);
  }
  return out;
}

unsigned resolve_workers(std::optional<unsigned> flag) { return flag ? *flag : qgs::workers_from_env(); }

int simulate(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<unsigned> workers,
             const std::string& out_path) {
  qgs::ExperimentConfig config;
  try {
    config = qgs::load_config(config_path);
    if (seed) config.rule.seed = *seed;
    if (!out_path.empty()) {
      config.csv_path = out_path;
      config.manifest_path.clear();
    }
    if (workers) config.workers = *workers;
    else if (config.workers == 0) config.workers = qgs::workers_from_env();
  } catch (const qgs::Error& e) {
    throw ConfigStage(fmt::format("{}: {}", e.kind(), e.what()));
  }
  const qgs::RunOutput run = qgs::run_experiment(config);
  write_file(config.csv_path, run.csv);
  write_file(config.resolved_manifest_path(), run.manifest.dump(2) + "\n");
  std::cerr << fmt::format("wrote {} rows to {} (sha1 {}), manifest {}\n", run.manifest["csv"]["rows"].get<std::size_t>(),
                           config.csv_path, run.manifest["csv"]["sha1"].get<std::string>(),
                           config.resolved_manifest_path());
  return kOk;
}

int verify(const std::string& name, std::optional<std::uint64_t> seed, std::optional<unsigned> workers,
           const std::string& out_path) {
  std::vector<const qgs::Suite*> chosen;
  if (name == "all") {
    for (const auto& s : qgs::acceptance_suites()) chosen.push_back(&s);
  } else if (const qgs::Suite* s = qgs::find_suite(name)) {
    chosen.push_back(s);
  } else {
    std::string names;
    for (const auto& s : qgs::acceptance_suites()) names += " " + s.name;
    throw ConfigStage(fmt::format("unknown suite '{}'; known:{} all", name, names));
  }
  qgs::AcceptanceOptions options;
  if (seed) options.seed = *seed;
  try {
    options.workers = resolve_workers(workers);
  } catch (const qgs::Error& e) {
    throw ConfigStage(e.what());
  }
  bool all_passed = true;
  auto report = qgs::Json::array();
  for (const qgs::Suite* s : chosen) {
    const qgs::CriterionResult r = s->run(options);
    std::cout << r.report() << std::flush;
    all_passed = all_passed && r.passed();
    report.push_back(r.to_json());
  }
  if (!out_path.empty()) write_file(out_path, report.dump(2) + "\n");
  return all_passed ? kOk : kVerifyFailed;
}

int regime(const std::string& alphas, const std::string& betas, const std::string& out_path) {
  std::string csv;
  try {
    csv = qgs::regime_csv(parse_grid(alphas, "alpha"), parse_grid(betas, "beta"));
  } catch (const qgs::Error& e) {
    throw ConfigStage(e.what());
  }
  emit(out_path, csv);
  return kOk;
}

int dump_grid(const std::string& config_path, const std::string& model, const std::string& out_path) {
  std::optional<qgs::TailModel> m;
  try {
    if (!config_path.empty()) m = qgs::load_config(config_path).model;
    else if (!model.empty()) m = qgs::model_from_preset(model);
    else throw qgs::ConfigError("dump-grid needs --config or --model");
  } catch (const qgs::Error& e) {
    throw ConfigStage(fmt::format("{}: {}", e.kind(), e.what()));
  }
  const qgs::GFunctional g{qgs::OvershootFunctional(*m)};
  emit(out_path, qgs::grid_csv(g));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and verification of the beta-better-than-average selection rule"};
  app.require_subcommand(1);

  std::string config_path, out_path, suite, alphas, betas, model;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Master seed (overrides the config)");
    sub->add_option("--workers", workers, "Worker threads (fallback: QGS_WORKERS, then all cores)");
  };

  CLI::App* sim = app.add_subcommand("simulate", "Run paths and write checkpoint CSV plus JSON manifest");
  sim->add_option("--config", config_path, "Experiment config (JSON)")->required();
  sim->add_option("--out", out_path, "CSV path (manifest goes to <out>.manifest.json)");
  add_common(sim);

  CLI::App* ver = app.add_subcommand("verify", "Run an acceptance suite ('all' for every suite)");
  ver->add_option("suite", suite, "Suite name")->required();
  ver->add_option("--out", out_path, "Also write the results as JSON");
  add_common(ver);

  CLI::App* reg = app.add_subcommand("regime", "Regime classification over an (alpha, beta) grid as CSV");
  reg->add_option("--alpha", alphas, "Comma-separated alpha values")->required();
  reg->add_option("--beta", betas, "Comma-separated beta values")->required();
  reg->add_option("--out", out_path, "CSV path (default stdout)");

  CLI::App* grid = app.add_subcommand("dump-grid", "Dump the x,f,G table of a model as CSV");
  grid->add_option("--config", config_path, "Experiment config whose model is used");
  grid->add_option("--model", model, "Preset name: exp, stretched(alpha), normal, loglog-sq");
  grid->add_option("--out", out_path, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*sim) return simulate(config_path, seed, workers, out_path);
    if (*ver) return verify(suite, seed, workers, out_path);
    if (*reg) return regime(alphas, betas, out_path);
    if (*grid) return dump_grid(config_path, model, out_path);
  } catch (const ConfigStage& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const qgs::Error& e) {
    std::cerr << "runtime error: " << e.kind() << ": " << e.what() << "\n";
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kConfigError;
}
