#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "generators.hpp"
#include "qgs/error.hpp"
#include "qgs/experiment.hpp"

using namespace qgs;

namespace {

Json base_config() {
  return Json::parse(R"({"model":"exp","beta":1.0,"k_max":10,"n_paths":2,"seed":42})");
}

}  // namespace

TEST(ModelJson, Presets) {
  EXPECT_EQ(model_from_json("exp"), TailModel::exponential());
  EXPECT_EQ(model_from_json("normal"), TailModel::normal());
  EXPECT_EQ(model_from_json("loglog-sq"), TailModel::log_squared());
  EXPECT_EQ(model_from_json("stretched(2)"), TailModel::stretched(2.0));
  EXPECT_EQ(model_from_json(Json::parse(R"({"preset":"stretched","alpha":0.5})")), TailModel::stretched(0.5));
  EXPECT_EQ(model_from_json(Json::parse(R"({"family":"log_squared"})")), TailModel::log_squared());
}

TEST(ModelJson, ExplicitForm) {
  const Json j = Json::parse(R"({"family":"stretched","c":1.5,"alpha":1.3,"x0":2,
      "terms":[{"kind":"power","kappa":-0.2,"gamma":0.6},{"kind":"power_log","kappa":0.3},{"kind":"constant","kappa":1}]})");
  const TailModel m = model_from_json(j);
  EXPECT_EQ(m, TailModel::make(1.5, 1.3, {HTerm::power(-0.2, 0.6), HTerm::power_log(0.3), HTerm::constant(1.0)}, 2.0));
}

TEST(ModelJson, Malformed) {
  EXPECT_THROW(model_from_json("gamma"), ConfigError);
  EXPECT_THROW(model_from_json("stretched(2x)"), ConfigError);
  EXPECT_THROW(model_from_json(3), ConfigError);
  EXPECT_THROW(model_from_json(Json::parse(R"({"preset":"exp","alpha":2})")), ConfigError);
  EXPECT_THROW(model_from_json(Json::parse(R"({"family":"weibull","c":1,"alpha":1,"x0":0})")), ConfigError);
  EXPECT_THROW(model_from_json(Json::parse(R"({"family":"stretched","c":1,"alpha":1,"x0":0,"colour":1})")),
               ConfigError);
  EXPECT_THROW(model_from_json(Json::parse(
                   R"({"family":"stretched","c":1,"alpha":1,"x0":0,"terms":[{"kind":"power_log","kappa":1,"gamma":1}]})")),
               ConfigError);
}

TEST(ModelJson, CatalogViolationPropagates) {
  EXPECT_THROW(model_from_json(Json::parse(
                   R"({"family":"stretched","c":1,"alpha":1,"x0":1,"terms":[{"kind":"power","kappa":1,"gamma":1.5}]})")),
               ConstraintViolation);
}

TEST(ModelJsonProperty, RoundTrip) {
  for (const TailModel& m : {TailModel::exponential(), TailModel::normal(), TailModel::log_squared(),
                             TailModel::stretched(0.5)}) {
    EXPECT_EQ(model_from_json(Json::parse(model_to_json(m).dump())), m);
  }
  gen::Gen gen(31);
  for (int i = 0; i < 200; ++i) {
    const TailModel m = gen.model();
    EXPECT_EQ(model_from_json(Json::parse(model_to_json(m).dump())), m);
  }
}

TEST(Config, Defaults) {
  const ExperimentConfig c = parse_config(base_config());
  EXPECT_EQ(c.rule.checkpoints, std::vector<std::uint64_t>{10});
  EXPECT_EQ(c.statistics, std::vector<Statistic>{Statistic::NormalizedMean});
  EXPECT_EQ(c.tolerance, 0.05);
  EXPECT_EQ(c.resolved_manifest_path(), "qgs_run.csv.manifest.json");
  EXPECT_FALSE(c.to_json().contains("workers"));
}

TEST(Config, IntegralFloatsAccepted) {
  Json j = base_config();
  j["k_max"] = 1e3;
  EXPECT_EQ(parse_config(j).rule.k_max, 1000u);
  j["k_max"] = 10.5;
  EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(Config, Errors) {
  Json j = base_config();
  j["bogus"] = 1;
  EXPECT_THROW(parse_config(j), ConfigError);
  j = base_config();
  j.erase("k_max");
  EXPECT_THROW(parse_config(j), ConfigError);
  j = base_config();
  j["beta"] = 0.9;
  EXPECT_THROW(parse_config(j), Error);
  j = base_config();
  j["checkpoints"] = {5, 20};
  EXPECT_THROW(parse_config(j), Error);
  j = base_config();
  j["statistics"] = {"median"};
  EXPECT_THROW(parse_config(j), ConfigError);
  j = base_config();
  j["model"] = "normal";
  j["warm_start"] = {{"k0", 5}, {"ybar", 0.5}};
  EXPECT_THROW(parse_config(j), ConstraintViolation);
  j = base_config();
  j["model_resolved"] = model_to_json(TailModel::stretched(2.0));
  EXPECT_THROW(parse_config(j), ConfigError);
}

TEST(Config, EchoReparses) {
  Json j = base_config();
  j["model"] = "stretched(2)";
  j["checkpoints"] = {3, 5, 10};
  j["warm_start"] = {{"k0", 3}, {"ybar", 1.5}};
  j["statistics"] = {"ybar", "t_star"};
  const ExperimentConfig c = parse_config(j);
  const ExperimentConfig again = parse_config(c.to_json());
  EXPECT_EQ(again.to_json().dump(), c.to_json().dump());
  EXPECT_EQ(again.model, c.model);
}

TEST(Config, LoadFileErrors) {
  EXPECT_THROW(load_config("/nonexistent/q.json"), ConfigError);
  const auto path = std::filesystem::temp_directory_path() / "qgs_bad_config.json";
  std::ofstream(path) << "{ not json";
  EXPECT_THROW(load_config(path.string()), ConfigError);
  std::filesystem::remove(path);
}

TEST(Workers, Environment) {
  ::unsetenv("QGS_WORKERS");
  EXPECT_EQ(workers_from_env(), 0u);
  ::setenv("QGS_WORKERS", "3", 1);
  EXPECT_EQ(workers_from_env(), 3u);
  ::setenv("QGS_WORKERS", "three", 1);
  EXPECT_THROW(workers_from_env(), ConfigError);
  ::unsetenv("QGS_WORKERS");
}

TEST(Csv, Format) {
  Checkpoint a{1, 0.5, 0.0, 1.0, 0.5};
  Checkpoint b{10, 2.25, std::log(20.0), 0.1, 0.1};
  const std::string csv = checkpoint_csv({{a, b}, {a}});
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kCsvComment);
  std::getline(in, line);
  EXPECT_EQ(line, kCsvHeader);
  std::getline(in, line);
  EXPECT_EQ(line, "0,1,0.5,0,1,0.5");
  std::getline(in, line);
  EXPECT_EQ(line, "0,10,2.25,2.995732273553991,0.1,0.1");
  std::getline(in, line);
  EXPECT_EQ(line, "1,1,0.5,0,1,0.5");
  EXPECT_FALSE(std::getline(in, line));
}

TEST(Sha1, MatchesGitBlobHash) {
  EXPECT_EQ(git_blob_sha1("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
  EXPECT_EQ(git_blob_sha1(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST(Run, ManifestDescribesCsv) {
  Json j = base_config();
  j["checkpoints"] = {1, 5, 10};
  j["n_paths"] = 3;
  const RunOutput out = run_experiment(parse_config(j));
  EXPECT_EQ(out.manifest["format"], "qgs-run-manifest/1");
  EXPECT_EQ(out.manifest["seed"], 42);
  EXPECT_EQ(out.manifest["csv"]["rows"], 9);
  EXPECT_EQ(out.manifest["csv"]["sha1"], git_blob_sha1(out.csv));
  EXPECT_EQ(out.manifest["config_sha1"], git_blob_sha1(out.manifest["config"].dump(2)));
  EXPECT_EQ(out.manifest["regime"]["mean"], "MeanAdditive_AS");
  EXPECT_EQ(out.manifest["switch_point"], 0.0);  // expansion exact from x0
  EXPECT_TRUE(out.manifest["reports"][0]["convergence"].contains("skipped"));
  EXPECT_EQ(out.csv, checkpoint_csv(out.paths));
}

TEST(Run, WorkerCountDoesNotChangeOutput) {
  Json j = base_config();
  j["n_paths"] = 37;
  j["model"] = "stretched(0.5)";
  j["beta"] = 1.4;
  j["checkpoints"] = {10, 100, 1000};
  j["k_max"] = 1000;
  ExperimentConfig c = parse_config(j);
  c.workers = 1;
  const RunOutput one = run_experiment(c);
  c.workers = 6;
  const RunOutput six = run_experiment(c);
  EXPECT_EQ(one.csv, six.csv);
  EXPECT_EQ(one.manifest.dump(), six.manifest.dump());
  EXPECT_FALSE(one.manifest["reports"][0]["convergence"].contains("skipped"));
}

TEST(Regime, CsvExample) {
  EXPECT_EQ(regime_csv({1.0}, {1.0, 2.0}),
            "alpha,beta,mean_regime,tstar_regime,beta_lo,beta_hi\n"
            "1,1,MeanAdditive_AS,Tstar_AS,1.5,2\n"
            "1,2,MeanMultiplicative_AS,Tstar_Mixture,1.5,2\n");
  EXPECT_THROW(regime_csv({}, {1.0}), InvalidParameter);
  EXPECT_THROW(regime_csv({1.0}, {0.5}), InvalidParameter);
}

TEST(Grid, CsvShape) {
  const GFunctional g{OvershootFunctional(TailModel::exponential())};
  const std::string csv = grid_csv(g);
  EXPECT_EQ(csv.rfind("x,f,G\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), g.nodes().size() + 1);
}
