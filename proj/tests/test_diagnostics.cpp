#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "qgs/diagnostics.hpp"
#include "qgs/error.hpp"

using namespace qgs;

namespace {

std::vector<Checkpoint> path_of(const std::vector<std::uint64_t>& ks, const std::function<double(std::uint64_t)>& value) {
  std::vector<Checkpoint> p;
  for (auto k : ks) {
    Checkpoint c;
    c.k = k;
    c.normalized_mean = value(k);
    c.ybar = value(k);
    c.t_star = 1.0;
    p.push_back(c);
  }
  return p;
}

PathSet synthetic(std::size_t n, const std::vector<std::uint64_t>& ks,
                  const std::function<double(std::size_t, std::uint64_t)>& value) {
  PathSet out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(path_of(ks, [&](std::uint64_t k) { return value(i, k); }));
  return out;
}

const auto kExp1 = [](double x) { return reference_cdf(Reference::Exp1, x); };

}  // namespace

TEST(SampleSet, Validation) {
  EXPECT_THROW(SampleSet({}), InvalidParameter);
  EXPECT_THROW(SampleSet({1.0, NAN}), InvalidParameter);
  EXPECT_THROW(SampleSet({INFINITY}), InvalidParameter);
  EXPECT_NO_THROW(SampleSet({1.0}, "x", {{"model", "exp"}}));
}

TEST(Ks, PointMassAtZero) { EXPECT_EQ(ks_distance(std::vector<double>{0.0}, kExp1), 1.0); }

TEST(Ks, SingleSample) {
  for (double x : {0.1, 0.69, 2.0}) {
    const double f = kExp1(x);
    EXPECT_DOUBLE_EQ(ks_distance(std::vector<double>{x}, kExp1), std::max(f, 1.0 - f));
  }
}

TEST(Ks, ExactQuantilesPlugIn) {
  const int n = 999;
  std::vector<double> q(n);
  for (int i = 1; i <= n; ++i) q[i - 1] = -std::log1p(-static_cast<double>(i) / (n + 1));
  const KsResult r = ks_statistic(SampleSet(q), Reference::Exp1);
  EXPECT_LT(r.d, 0.002);
  EXPECT_NEAR(r.d, 1.0 / (n + 1), 1e-12);
  EXPECT_GT(r.p_value, 0.999);
}

TEST(Ks, TooFewSamples) {
  EXPECT_THROW(ks_statistic(SampleSet(std::vector<double>(9, 1.0)), Reference::Exp1), TooFewSamples);
  EXPECT_THROW(ks_statistic(SampleSet(std::vector<double>(9, 1.0)), SampleSet(std::vector<double>(20, 1.0))),
               TooFewSamples);
}

TEST(Ks, TwoSampleSelfIsZero) {
  gen::Gen gen(1);
  std::vector<double> v(200);
  for (double& x : v) x = std::round(gen.uniform(0.0, 10.0));  // ties included
  const SampleSet s(v);
  EXPECT_EQ(ks_statistic(s, s).d, 0.0);
}

TEST(Ks, TwoSampleKnownValue) {
  const std::vector<double> a = {1, 2, 3, 4};
  const std::vector<double> b = {3, 4, 5, 6, 7, 8};
  // after 2: F_a = 1/2, F_b = 0
  EXPECT_DOUBLE_EQ(ks_distance(a, b), 1.0 - 2.0 / 6.0);
}

TEST(KsProperty, AffineInvariance) {
  gen::Gen gen(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(50), y(40);
    for (double& v : x) v = gen.uniform(0.0, 3.0);
    for (double& v : y) v = gen.uniform(0.0, 3.0);
    const double a = gen.log_uniform(0.01, 100.0);
    const double b = gen.uniform(-50.0, 50.0);
    std::vector<double> xt(x), yt(y);
    for (double& v : xt) v = a * v + b;
    for (double& v : yt) v = a * v + b;
    EXPECT_NEAR(ks_distance(xt, [&](double t) { return kExp1((t - b) / a); }), ks_distance(x, kExp1), 1e-12);
    EXPECT_DOUBLE_EQ(ks_distance(xt, yt), ks_distance(x, y));
  }
}

TEST(Ks, KolmogorovSeriesValues) {
  // scipy.special.kolmogorov
  EXPECT_NEAR(kolmogorov_survival(0.5), 0.9639452436648751, 1e-12);
  EXPECT_NEAR(kolmogorov_survival(1.0), 0.26999967167735456, 1e-10);
  EXPECT_NEAR(kolmogorov_survival(1.3580986), 0.0500000106802808, 1e-10);
  EXPECT_NEAR(kolmogorov_survival(2.0), 0.0006709252557796953, 1e-10);
  EXPECT_NEAR(kolmogorov_survival(std::nextafter(1.18, 0.0)), kolmogorov_survival(1.18), 1e-10);
  EXPECT_EQ(kolmogorov_survival(0.0), 1.0);
}

TEST(Ks, ExactSmallSamplePValues) {
  // scipy.stats.kstwo.sf
  EXPECT_NEAR(ks_exact_pvalue(10, 0.40925), 0.04999645233425898, 1e-9);
  EXPECT_NEAR(ks_exact_pvalue(20, 0.29408), 0.04999416027203962, 1e-9);
  EXPECT_NEAR(ks_exact_pvalue(30, 0.2417), 0.050005252150218005, 1e-9);
  EXPECT_NEAR(ks_exact_pvalue(5, 0.3), 0.664, 1e-9);
  EXPECT_NEAR(ks_exact_pvalue(34, 0.1), 0.8525202451245393, 1e-9);
}

TEST(Ks, CriticalValue) {
  const double n = 10000.0;
  const double d = ks_critical_value(n, 0.05);
  EXPECT_NEAR(d * (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)), 1.3580986, 1e-6);
  EXPECT_THROW(ks_critical_value(n, 0.0), InvalidParameter);
}

TEST(Gumbel, ReferenceMoments) {
  const GumbelMoments m = gumbel_reference_moments();
  EXPECT_NEAR(m.mean, 0.5772156649, 1e-9);
  EXPECT_NEAR(m.variance, 1.6449340668, 1e-9);
  EXPECT_NEAR(m.mean, kEulerGamma, 1e-10);
  EXPECT_NEAR(m.variance, std::numbers::pi * std::numbers::pi / 6.0, 1e-10);
  EXPECT_NEAR(gumbel_cdf(0.0), std::exp(-1.0), 1e-16);
  EXPECT_NEAR(gumbel_cdf(0.0), 0.3679, 1e-4);
}

TEST(Quantile, TypeSeven) {
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile({7}, 0.9), 7.0);
  EXPECT_THROW(quantile({}, 0.5), InsufficientData);
}

TEST(Convergence, ConstantStatisticStabilizes) {
  const PathSet paths = synthetic(30, {10, 100, 1000}, [](std::size_t, std::uint64_t) { return 2.0; });
  const ConvergenceReport r = convergence_report(paths, selector(Statistic::NormalizedMean));
  EXPECT_EQ(r.cauchy_gap, 0.0);
  EXPECT_TRUE(r.stabilizing);
}

TEST(Convergence, LogKDoesNotStabilize) {
  const PathSet paths = synthetic(40, {10, 100, 1000, 10000}, [](std::size_t i, std::uint64_t k) {
    return std::log(static_cast<double>(k)) + 0.01 * static_cast<double>(i);
  });
  const ConvergenceReport r = convergence_report(paths, selector(Statistic::NormalizedMean), 0.05);
  EXPECT_NEAR(r.cauchy_gap, std::log(10.0), 1e-12);
  const double threshold = std::log(10.0) / r.reference_iqr;
  EXPECT_FALSE(r.stabilizing);
  EXPECT_FALSE(convergence_report(paths, selector(Statistic::NormalizedMean), 0.99 * threshold).stabilizing);
  EXPECT_TRUE(convergence_report(paths, selector(Statistic::NormalizedMean), 1.01 * threshold).stabilizing);
}

TEST(Convergence, SummariesAndGapWindow) {
  // medians 0, 5, 5.1, 5.15: only the last three checkpoints enter the gap
  const std::vector<double> med = {0.0, 5.0, 5.1, 5.15};
  const std::vector<std::uint64_t> ks = {1, 2, 3, 4};
  const PathSet paths = synthetic(31, ks, [&](std::size_t i, std::uint64_t k) {
    return med[k - 1] + (static_cast<double>(i) - 15.0);
  });
  const ConvergenceReport r = convergence_report(paths, selector(Statistic::NormalizedMean), 0.05, "B");
  ASSERT_EQ(r.summaries.size(), 4u);
  EXPECT_NEAR(r.cauchy_gap, 0.1, 1e-12);
  EXPECT_NEAR(r.summaries[1].median, 5.0, 1e-12);
  EXPECT_NEAR(r.summaries[1].mean, 5.0, 1e-12);
  EXPECT_NEAR(r.reference_iqr, 15.0, 1e-12);
  EXPECT_TRUE(r.stabilizing);
  EXPECT_EQ(r.statistic, "B");
}

TEST(Convergence, Deterministic) {
  const PathSet paths = synthetic(35, {1, 2, 3}, [](std::size_t i, std::uint64_t k) {
    return std::sin(static_cast<double>(i * 7 + k));
  });
  EXPECT_EQ(convergence_report(paths, selector(Statistic::Ybar)).to_json().dump(),
            convergence_report(paths, selector(Statistic::Ybar)).to_json().dump());
}

TEST(Convergence, InsufficientData) {
  const auto one = [](std::size_t, std::uint64_t) { return 1.0; };
  EXPECT_THROW(convergence_report(synthetic(29, {1, 2, 3}, one), selector(Statistic::Ybar)), InsufficientData);
  EXPECT_THROW(convergence_report(synthetic(30, {1, 2}, one), selector(Statistic::Ybar)), InsufficientData);
  PathSet ragged = synthetic(30, {1, 2, 3}, one);
  ragged.back().pop_back();
  EXPECT_THROW(convergence_report(ragged, selector(Statistic::Ybar)), InsufficientData);
}

TEST(Convergence, JsonFieldOrder) {
  const PathSet paths = synthetic(30, {1, 2, 3}, [](std::size_t, std::uint64_t) { return 2.0; });
  const std::string json = convergence_report(paths, selector(Statistic::NormalizedMean), 0.05, "B_k").to_json().dump();
  EXPECT_EQ(json,
            R"({"statistic":"B_k","n_paths":30,"checkpoints":[)"
            R"({"k":1,"mean":2.0,"variance":0.0,"median":2.0,"iqr":0.0},)"
            R"({"k":2,"mean":2.0,"variance":0.0,"median":2.0,"iqr":0.0},)"
            R"({"k":3,"mean":2.0,"variance":0.0,"median":2.0,"iqr":0.0}],)"
            R"("cauchy_gap":0.0,"tolerance":0.05,"reference_iqr":0.0,"verdict":"stabilizing"})");
}

TEST(Divergence, ConstantIsNotDiverging) {
  const PathSet paths = synthetic(30, {10, 1000, 10000}, [](std::size_t, std::uint64_t) { return 1.0; });
  const DivergenceVerdict v = divergence_check(paths, selector(Statistic::NormalizedMean));
  EXPECT_EQ(v.fraction_increasing, 0.0);
  EXPECT_FALSE(v.diverging);
}

TEST(Divergence, GrowingStatisticDiverges) {
  const PathSet paths = synthetic(50, {1000, 31623, 1000000}, [](std::size_t i, std::uint64_t k) {
    const double l = std::log(static_cast<double>(k));
    return (1.0 + 0.01 * static_cast<double>(i)) * l * l * l;
  });
  const DivergenceVerdict v = divergence_check(paths, selector(Statistic::NormalizedMean));
  EXPECT_EQ(v.fraction_increasing, 1.0);
  EXPECT_NEAR(v.growth_factor, 8.0, 1e-9);
  EXPECT_TRUE(v.diverging);
  const auto j = v.to_json();
  std::vector<std::string> keys;
  for (const auto& [key, value] : j.items()) keys.push_back(key);
  EXPECT_EQ(keys, (std::vector<std::string>{"fraction_increasing", "growth_factor", "verdict"}));
  EXPECT_EQ(j["verdict"], "diverging");
}

TEST(Divergence, GrowthBelowFactorFiveIsNotDiverging) {
  const PathSet paths = synthetic(50, {1000, 31623, 1000000}, [](std::size_t, std::uint64_t k) {
    return std::log(static_cast<double>(k));
  });
  const DivergenceVerdict v = divergence_check(paths, selector(Statistic::NormalizedMean));
  EXPECT_EQ(v.fraction_increasing, 1.0);
  EXPECT_FALSE(v.diverging);
}

TEST(Divergence, InsufficientData) {
  const auto one = [](std::size_t, std::uint64_t) { return 1.0; };
  EXPECT_THROW(divergence_check(synthetic(30, {10, 100, 1000}, one), selector(Statistic::Ybar)), InsufficientData);
  EXPECT_THROW(divergence_check(synthetic(20, {10, 10000}, one), selector(Statistic::Ybar)), InsufficientData);
}

TEST(TstarMode, Verdicts) {
  const auto with_tstar = [](std::size_t n, const std::function<double(std::size_t, std::uint64_t)>& t) {
    PathSet ps = synthetic(n, {10, 100, 1000}, [](std::size_t, std::uint64_t) { return 0.0; });
    for (std::size_t i = 0; i < n; ++i)
      for (auto& c : ps[i]) c.t_star = t(i, c.k);
    return ps;
  };
  EXPECT_EQ(tstar_mode_report(with_tstar(30, [](std::size_t, std::uint64_t) { return 1.0; })).verdict, "as-like");
  EXPECT_EQ(tstar_mode_report(with_tstar(30, [](std::size_t, std::uint64_t k) { return k == 100 ? 1.5 : 1.0; })).verdict,
            "in-probability-like");
  EXPECT_EQ(tstar_mode_report(with_tstar(30, [](std::size_t, std::uint64_t) { return 2.0; })).verdict,
            "not-concentrating");
}

TEST(Statistics, SelectorsAndNames) {
  Checkpoint c;
  c.k = 100;
  c.ybar = 3.0;
  c.log_T = std::log(1e4);
  c.t_star = 0.7;
  c.normalized_mean = 0.2;
  EXPECT_EQ(selector(Statistic::Ybar)(c), 3.0);
  EXPECT_EQ(selector(Statistic::TStar)(c), 0.7);
  EXPECT_EQ(selector(Statistic::NormalizedMean)(c), 0.2);
  EXPECT_NEAR(selector(Statistic::LogTOverLogK)(c), 2.0, 1e-15);
  EXPECT_EQ(to_string(Statistic::LogTOverLogK), "log_T_over_log_k");
}
