#ifndef QGS_EXPERIMENT_HPP
#define QGS_EXPERIMENT_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qgs/diagnostics.hpp"
#include "qgs/process.hpp"
#include "qgs/tail_model.hpp"

namespace qgs {

using Json = nlohmann::ordered_json;

/// Model from its config form. Accepted shapes:
///   "exp" | "normal" | "loglog-sq" | "stretched(2)"
///   {"preset": "stretched", "alpha": 2}
///   {"family": "stretched", "c": 1, "alpha": 2, "x0": 0,
///    "terms": [{"kind": "power_log", "kappa": 1}, {"kind": "power", "kappa": 1, "gamma": 0.5}]}
///   {"family": "log_squared"}
/// Malformed input throws ConfigError; catalog violations propagate from
/// TailModel::make.
TailModel model_from_json(const Json& j);
/// Explicit (non-preset) form; model_from_json(model_to_json(m)) == m.
Json model_to_json(const TailModel& m);
TailModel model_from_preset(std::string_view name);

Statistic statistic_from_string(std::string_view name);

struct ExperimentConfig {
  Json model_spec;  // as written in the config
  TailModel model = TailModel::exponential();
  RuleConfig rule;
  std::vector<Statistic> statistics{Statistic::NormalizedMean};
  double tolerance = 0.05;
  std::string csv_path = "qgs_run.csv";
  std::string manifest_path;  // empty: csv_path + ".manifest.json"
  unsigned workers = 0;       // 0: QGS_WORKERS, then the OpenMP default

  std::string resolved_manifest_path() const;
  /// Normalized echo: every field explicit, model in both the written and
  /// the explicit form. Worker count is omitted (it never changes output).
  Json to_json() const;
};

/// Parses and validates (model catalog and rule preconditions) before
/// returning. Unknown keys, wrong types and failed validation throw Error.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::string& path);

/// Worker count from QGS_WORKERS, or 0 when unset. ConfigError if malformed.
unsigned workers_from_env();

inline constexpr std::string_view kCsvHeader = "path_id,k,ybar,log_T,t_star,normalized_mean";
inline constexpr std::string_view kCsvComment = "# t_star is 1 at k=1 (empty denominator)";

/// Comment line, header, then one row per (path, checkpoint) ordered by
/// path_id then k. Numbers use the shortest round-trip representation.
void write_checkpoint_csv(std::ostream& out, const PathSet& paths);
std::string checkpoint_csv(const PathSet& paths);

/// SHA-1 of "blob <size>\0" + content, as printed by `git hash-object`.
std::string git_blob_sha1(std::string_view content);

struct RunOutput {
  PathSet paths;
  std::string csv;
  Json manifest;
};

/// Builds the functionals, runs every path and assembles CSV and manifest.
RunOutput run_experiment(const ExperimentConfig& config);

/// x,f,G rows of the G table.
std::string grid_csv(const GFunctional& g);

/// alpha,beta,mean_regime,tstar_regime,beta_lo,beta_hi rows. InvalidParameter
/// for an empty grid or nonpositive entries.
std::string regime_csv(const std::vector<double>& alphas, const std::vector<double>& betas);

}  // namespace qgs

#endif  // QGS_EXPERIMENT_HPP
