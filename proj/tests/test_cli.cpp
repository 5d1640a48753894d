#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;  // stdout and stderr interleaved
};

Result qgs(const std::string& args) {
  const std::string cmd = std::string(QGS_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("qgs_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& content) {
    const fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }

  fs::path dir_;
};

constexpr const char* kGoldenConfig =
    R"({"model": "exp", "beta": 1.0, "k_max": 10, "checkpoints": [1, 5, 10], "n_paths": 2, "seed": 42})";

constexpr const char* kGoldenCsv =
    "# t_star is 1 at k=1 (empty denominator)\n"
    "path_id,k,ybar,log_T,t_star,normalized_mean\n"
    "0,1,0.7580345234053112,0,1,0.7580345234053112\n"
    "0,5,1.5911709885294234,2.4849066497880004,0.8056159879933865,-0.01826692390467688\n"
    "0,10,2.2655356816282946,4.174387269895638,1.3563281406909669,-0.03704941136575135\n"
    "1,1,2.0694923655012407,0,1,2.0694923655012407\n"
    "1,5,2.9785048793905857,4.532599493153255,1.878852782671704,1.3690669669564854\n"
    "1,10,3.3466780690607405,4.844187086458591,0.7828086860382716,1.0440929760666946\n";

}  // namespace

TEST_F(Cli, GoldenCsvIsReproducedAcrossWorkerCounts) {
  const fs::path cfg = write("exp.json", kGoldenConfig);
  const fs::path a = dir_ / "a.csv";
  const fs::path b = dir_ / "b.csv";
  ASSERT_EQ(qgs("simulate --config " + cfg.string() + " --out " + a.string() + " --workers 1").code, 0);
  ASSERT_EQ(qgs("simulate --config " + cfg.string() + " --out " + b.string() + " --workers 8").code, 0);
  EXPECT_EQ(slurp(a), kGoldenCsv);
  EXPECT_EQ(slurp(b), kGoldenCsv);
  const std::string manifest = slurp(dir_ / "a.csv.manifest.json");
  EXPECT_NE(manifest.find("\"sha1\": \"25cf38c14fc050dac91d87bbbe36f7946dd27ab3\""), std::string::npos);
}

TEST_F(Cli, RepeatedRunsAreByteIdentical) {
  const fs::path cfg = write("s.json", R"json({"model":"stretched(2)","beta":1.0,"k_max":500,"checkpoints":[10,100,500],
                                               "n_paths":40,"seed":7})json");
  const fs::path a = dir_ / "a.csv";
  const fs::path b = dir_ / "b.csv";
  ASSERT_EQ(qgs("simulate --config " + cfg.string() + " --out " + a.string()).code, 0);
  ASSERT_EQ(qgs("simulate --config " + cfg.string() + " --out " + b.string() + " --workers 3").code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
}

TEST_F(Cli, SeedFlagOverridesConfig) {
  const fs::path cfg = write("exp.json", kGoldenConfig);
  ASSERT_EQ(qgs("simulate --config " + cfg.string() + " --out " + (dir_ / "a.csv").string() + " --seed 43").code, 0);
  EXPECT_NE(slurp(dir_ / "a.csv"), kGoldenCsv);
}

TEST_F(Cli, CatalogViolationIsAConfigError) {
  const fs::path cfg = write("bad.json", R"({"model":{"family":"stretched","c":1,"alpha":1,"x0":1,
      "terms":[{"kind":"power","kappa":1,"gamma":1.5}]},"beta":1.0,"k_max":10})");
  const Result r = qgs("simulate --config " + cfg.string() + " --out " + (dir_ / "x.csv").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("ConstraintViolation"), std::string::npos) << r.out;
  EXPECT_FALSE(fs::exists(dir_ / "x.csv"));
}

TEST_F(Cli, MissingConfigAndBadFlags) {
  EXPECT_EQ(qgs("simulate --config " + (dir_ / "none.json").string()).code, 1);
  EXPECT_EQ(qgs("simulate").code, 1);
  EXPECT_EQ(qgs("frobnicate").code, 1);
  EXPECT_EQ(qgs("--help").code, 0);
}

TEST_F(Cli, RegimeTable) {
  const Result r = qgs("regime --alpha 1 --beta 1,2");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out,
            "alpha,beta,mean_regime,tstar_regime,beta_lo,beta_hi\n"
            "1,1,MeanAdditive_AS,Tstar_AS,1.5,2\n"
            "1,2,MeanMultiplicative_AS,Tstar_Mixture,1.5,2\n");
  EXPECT_EQ(qgs("regime --alpha '' --beta 1").code, 1);
  EXPECT_EQ(qgs("regime --alpha x --beta 1").code, 1);
  EXPECT_EQ(qgs("regime --alpha 1 --beta 0.5").code, 1);
}

TEST_F(Cli, DumpGrid) {
  const Result r = qgs("dump-grid --model exp");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("x,f,G\n0,1,0\n", 0), 0u) << r.out.substr(0, 80);
  EXPECT_EQ(qgs("dump-grid --model gamma").code, 1);
  EXPECT_EQ(qgs("dump-grid").code, 1);
}

TEST_F(Cli, VerifyFastSuites) {
  const Result w = qgs("verify weights-normalization --out " + (dir_ / "w.json").string());
  EXPECT_EQ(w.code, 0) << w.out;
  EXPECT_EQ(w.out.rfind("PASS [9]", 0), 0u) << w.out;
  EXPECT_TRUE(fs::exists(dir_ / "w.json"));
  EXPECT_EQ(qgs("verify quadrature-closed-form").code, 0);
  const Result u = qgs("verify no-such-suite");
  EXPECT_EQ(u.code, 1);
  EXPECT_NE(u.out.find("unknown suite"), std::string::npos);
}
