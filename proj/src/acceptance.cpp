#include "qgs/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "qgs/asymptotics.hpp"
#include "qgs/diagnostics.hpp"
#include "qgs/error.hpp"
#include "qgs/overshoot.hpp"
#include "qgs/process.hpp"

namespace qgs {

bool Measurement::passed() const {
  switch (rule) {
    case Rule::Below: return value < hi;
    case Rule::AtMost: return value <= hi;
    case Rule::AtLeast: return value >= lo;
    case Rule::Within: return value >= lo && value <= hi;
    case Rule::Info: return true;
  }
  return false;
}

std::string Measurement::describe() const {
  switch (rule) {
    case Rule::Below: return fmt::format("{} = {:.6g} (need < {:.6g})", name, value, hi);
    case Rule::AtMost: return fmt::format("{} = {:.6g} (need <= {:.6g})", name, value, hi);
    case Rule::AtLeast: return fmt::format("{} = {:.6g} (need >= {:.6g})", name, value, lo);
    case Rule::Within: return fmt::format("{} = {:.6g} (need in [{:.6g}, {:.6g}])", name, value, lo, hi);
    case Rule::Info: return fmt::format("{} = {:.6g}", name, value);
  }
  return name;
}

Measurement below(std::string name, double value, double bound) {
  return {std::move(name), value, Measurement::Rule::Below, 0.0, bound};
}
Measurement at_most(std::string name, double value, double bound) {
  return {std::move(name), value, Measurement::Rule::AtMost, 0.0, bound};
}
Measurement at_least(std::string name, double value, double bound) {
  return {std::move(name), value, Measurement::Rule::AtLeast, bound, 0.0};
}
Measurement within(std::string name, double value, double lo, double hi) {
  return {std::move(name), value, Measurement::Rule::Within, lo, hi};
}
Measurement info(std::string name, double value) { return {std::move(name), value, Measurement::Rule::Info, 0.0, 0.0}; }

bool CriterionResult::passed() const {
  return error.empty() && !measurements.empty() &&
         std::all_of(measurements.begin(), measurements.end(), [](const Measurement& m) { return m.passed(); });
}

std::string CriterionResult::report() const {
  std::string out = fmt::format("{} [{}] {}: {} ({:.1f} s)\n", passed() ? "PASS" : "FAIL", id, suite, title, seconds);
  for (const Measurement& m : measurements)
    out += fmt::format("    {} {}\n", m.rule == Measurement::Rule::Info ? " " : (m.passed() ? "+" : "-"), m.describe());
  if (!error.empty()) out += fmt::format("    error: {}\n", error);
  return out;
}

nlohmann::ordered_json CriterionResult::to_json() const {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["suite"] = suite;
  j["title"] = title;
  j["passed"] = passed();
  j["seconds"] = seconds;
  auto ms = nlohmann::ordered_json::array();
  for (const Measurement& m : measurements) {
    nlohmann::ordered_json e;
    e["name"] = m.name;
    e["value"] = m.value;
    e["check"] = m.describe();
    e["passed"] = m.passed();
    ms.push_back(std::move(e));
  }
  j["measurements"] = ms;
  if (!error.empty()) j["error"] = error;
  return j;
}

CriterionResult Suite::run(const AcceptanceOptions& options) const {
  const auto start = std::chrono::steady_clock::now();
  CriterionResult r;
  try {
    r = body(options);
  } catch (const Error& e) {
    r.error = fmt::format("{}: {}", e.kind(), e.what());
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.id = id;
  r.suite = name;
  r.title = title;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

RuleConfig rule(double beta, std::vector<std::uint64_t> checkpoints, std::uint64_t n_paths, std::uint64_t seed) {
  RuleConfig c;
  c.beta = beta;
  c.k_max = checkpoints.back();
  c.checkpoints = std::move(checkpoints);
  c.n_paths = n_paths;
  c.seed = seed;
  return c;
}

std::vector<double> column(const PathSet& paths, std::size_t index, const StatisticSelector& stat) {
  std::vector<double> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(stat(p.at(index)));
  return out;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double sample_variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// Neumaier-compensated sum.
double compensated_sum(const std::vector<double>& v) {
  double sum = 0.0;
  double comp = 0.0;
  for (double x : v) {
    const double t = sum + x;
    comp += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

std::uint64_t suite_seed(const AcceptanceOptions& o, int id) { return o.seed + static_cast<std::uint64_t>(id); }

// ---------------------------------------------------------------------------

CriterionResult gumbel_beta1(const AcceptanceOptions& o) {
  const auto t0 = Clock::now();
  const OvershootFunctional fn(TailModel::exponential());
  const GFunctional g(fn);
  const PathSet paths = run_paths(rule(1.0, {5000}, 500, suite_seed(o, 1)), fn, &g, o.workers);
  const std::vector<double> centred = column(paths, 0, [](const Checkpoint& c) {
    return c.ybar - std::log(static_cast<double>(c.k));
  });
  const KsResult ks = ks_statistic(SampleSet(centred, "ybar - log k"), Reference::GumbelStd);
  const double elapsed = seconds_since(t0);

  CriterionResult r;
  r.measurements = {
      within("mean(ybar_k - log k)", mean(centred), kEulerGamma - 0.06, kEulerGamma + 0.06),
      within("var(ybar_k - log k)", sample_variance(centred), kGumbelVariance - 0.15, kGumbelVariance + 0.15),
      below("KS D vs Gumbel", ks.d, 0.08),
      info("KS p-value", ks.p_value),
      below("runtime seconds", elapsed, 60.0),
  };
  return r;
}

CriterionResult tk_quadratic(const AcceptanceOptions& o) {
  const auto t0 = Clock::now();
  const OvershootFunctional fn(TailModel::exponential());
  const GFunctional g(fn);
  const PathSet paths = run_paths(rule(1.0, {2000, 8000, 10000}, 200, suite_seed(o, 2)), fn, &g, o.workers);
  const std::vector<double> growth = column(paths, 2, selector(Statistic::LogTOverLogK));
  std::size_t stable = 0;
  for (const auto& p : paths) {
    const double r2000 = std::exp(p[0].log_T - 2.0 * std::log(2000.0));
    const double r8000 = std::exp(p[1].log_T - 2.0 * std::log(8000.0));
    if (std::fabs(r8000 / r2000 - 1.0) < 0.25) ++stable;
  }
  const double elapsed = seconds_since(t0);

  CriterionResult r;
  r.measurements = {
      within("median log T_k / log k at k=1e4", quantile(growth, 0.5), 1.8, 2.2),
      at_least("fraction with |r(8000)/r(2000) - 1| < 0.25, r = T_k/k^2",
               static_cast<double>(stable) / static_cast<double>(paths.size()), 0.70),
      below("runtime seconds", elapsed, 60.0),
  };
  return r;
}

CriterionResult mean_power_law(const AcceptanceOptions& o) {
  const OvershootFunctional fn(TailModel::stretched(2.0));
  const GFunctional g(fn);
  const PathSet paths = run_paths(rule(1.0, {100000}, 200, suite_seed(o, 3)), fn, &g, o.workers);
  const std::vector<double> ratio = column(paths, 0, [](const Checkpoint& c) {
    return c.ybar / std::sqrt(std::log(static_cast<double>(c.k)));
  });
  CriterionResult r;
  r.measurements = {
      within("median ybar_k / (log k)^(1/2) at k=1e5", quantile(ratio, 0.5), 0.97, 1.03),
      info("G^{-1}(log k) / (log k)^(1/2)", g.G_inverse(std::log(1e5)) / std::sqrt(std::log(1e5))),
  };
  return r;
}

CriterionResult additive_normalization(const AcceptanceOptions& o) {
  const OvershootFunctional fn(TailModel::stretched(2.0));
  const GFunctional g(fn);
  const PathSet paths = run_paths(rule(1.0, {10000, 100000}, 200, suite_seed(o, 4)), fn, &g, o.workers);
  std::vector<double> gaps;
  for (const auto& p : paths) gaps.push_back(std::fabs(p[1].normalized_mean - p[0].normalized_mean));
  CriterionResult r;
  r.measurements = {
      below("median |D(1e5) - D(1e4)|, D = ybar_k - G^{-1}(log k)", quantile(gaps, 0.5), 0.05),
      info("median D(1e5)", quantile(column(paths, 1, selector(Statistic::NormalizedMean)), 0.5)),
  };
  return r;
}

CriterionResult bk_convergence(const AcceptanceOptions& o) {
  const OvershootFunctional fn(TailModel::exponential());
  const PathSet paths = run_paths(rule(1.5, {10000, 30000, 100000}, 200, suite_seed(o, 5)), fn, nullptr, o.workers);
  const ConvergenceReport rep = convergence_report(paths, selector(Statistic::NormalizedMean), 0.05, "B_k");
  const CheckpointSummary& last = rep.summaries.back();
  CriterionResult r;
  r.measurements = {
      at_most("cauchy gap of median B_k", rep.cauchy_gap, rep.tolerance * rep.reference_iqr),
      at_least("stabilizing verdict", rep.stabilizing ? 1.0 : 0.0, 1.0),
      below("-median B_k at 1e5 (limit positive)", -last.median, 0.0),
      below("-IQR of B_k at 1e5 (nondegenerate)", -last.iqr, 0.0),
  };
  return r;
}

CriterionResult bk_divergence(const AcceptanceOptions& o) {
  const OvershootFunctional fn(TailModel::log_squared());
  const PathSet paths = run_paths(rule(1.5, {1000, 31623, 1000000}, 100, suite_seed(o, 6)), fn, nullptr, o.workers);
  const DivergenceVerdict v = divergence_check(paths, selector(Statistic::NormalizedMean));
  CriterionResult r;
  r.measurements = {
      at_least("fraction of paths with B_k increasing", v.fraction_increasing, 0.9),
      at_least("median growth factor 1e3 -> 1e6", v.growth_factor, 5.0),
      at_least("diverging verdict", v.diverging ? 1.0 : 0.0, 1.0),
  };
  return r;
}

CriterionResult tstar_exp_limit(const AcceptanceOptions& o) {
  const OvershootFunctional fn(TailModel::exponential());
  const PathSet paths = run_paths(rule(3.0, {60}, 2000, suite_seed(o, 7)), fn, nullptr, o.workers);
  const std::vector<double> t = column(paths, 0, selector(Statistic::TStar));
  const std::vector<double> log_t = column(paths, 0, selector(Statistic::LogT));
  const double finite = static_cast<double>(std::count_if(t.begin(), t.end(), [](double x) {
                          return std::isfinite(x) && x > 0.0;
                        })) / static_cast<double>(t.size());
  const KsResult ks = ks_statistic(SampleSet(t, "T*_60"), Reference::Exp1);
  CriterionResult r;
  r.measurements = {
      below("KS D vs Exp(1)", ks.d, 0.05),
      info("KS p-value", ks.p_value),
      at_least("fraction of finite positive T*_k", finite, 1.0),
      info("median log10 T_k", quantile(log_t, 0.5) / std::log(10.0)),
  };
  return r;
}

CriterionResult tstar_mixture(const AcceptanceOptions& o) {
  const double alpha = 1.0;
  const std::uint64_t seed = suite_seed(o, 8);
  const OvershootFunctional fn(TailModel::exponential());
  const PathSet paths = run_paths(rule(2.0, {80}, 2000, seed), fn, nullptr, o.workers);
  std::vector<double> t = column(paths, 0, selector(Statistic::TStar));
  std::vector<double> draws;
  draws.reserve(paths.size());
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const double w_hat = paths[p][0].normalized_mean;  // ybar_80 / 80^(1/alpha)
    RandomStream rng(seed, (std::uint64_t{1} << 63) | p);
    draws.push_back(MixtureLimit(alpha, w_hat).sample(rng));
  }
  const KsResult ks = ks_statistic(SampleSet(t, "T*_80"), SampleSet(draws, "mixture"));
  CriterionResult r;
  r.measurements = {
      below("|mean T*_k - 1|", std::fabs(mean(t) - 1.0), 0.05),
      below("two-sample KS D vs mixture draws", ks.d, 0.07),
      info("KS p-value", ks.p_value),
      info("mean of mixture draws", mean(draws)),
  };
  return r;
}

CriterionResult weights_normalization(const AcceptanceOptions& o) {
  RandomStream rng(suite_seed(o, 9), 0);
  double worst = 0.0;
  double largest_J = 0.0;
  const int n = 400;
  for (int i = 0; i < n; ++i) {
    const double alpha = std::exp(std::log(0.5) + rng.uniform_open() * std::log(8.0));  // [0.5, 4]
    const double w = std::exp(std::log(0.05) + rng.uniform_open() * std::log(100.0));   // [0.05, 5]
    const MixtureLimit mix(alpha, w);
    const double total = compensated_sum(mix.weights().mu) + mix.weights().tail_mass;
    worst = std::max(worst, std::fabs(total - 1.0));
    largest_J = std::max(largest_J, static_cast<double>(mix.truncation()));
  }
  CriterionResult r;
  r.measurements = {
      below("max |sum mu_j + tail - 1| over 400 (alpha, w)", worst, 1e-12),
      info("largest truncation J", largest_J),
  };
  return r;
}

CriterionResult oracle_equivalence(const AcceptanceOptions& o) {
  const TailModel model = TailModel::exponential();
  const OvershootFunctional fn(model);
  const GFunctional g(fn);
  const std::uint64_t n = 100000;
  const PathSet fast = run_paths(rule(1.0, {5}, n, suite_seed(o, 10)), fn, &g, o.workers);
  const PathSet naive = run_paths_naive(rule(1.0, {5}, n, suite_seed(o, 10) + 7919), model, &g, o.workers);
  const auto T = [](const Checkpoint& c) { return std::round(std::exp(c.log_T)); };
  const KsResult ks_t = ks_statistic(SampleSet(column(fast, 0, T)), SampleSet(column(naive, 0, T)));
  const KsResult ks_y = ks_statistic(SampleSet(column(fast, 0, selector(Statistic::Ybar))),
                                     SampleSet(column(naive, 0, selector(Statistic::Ybar))));
  const double crit = ks_critical_value(ks_t.n_eff, 0.01);
  CriterionResult r;
  r.measurements = {
      below("two-sample KS D on T_5", ks_t.d, crit),
      below("two-sample KS D on ybar_5", ks_y.d, crit),
      info("KS p-value T_5", ks_t.p_value),
      info("KS p-value ybar_5", ks_y.p_value),
  };
  return r;
}

struct NamedModel {
  const char* name;
  TailModel model;
};

CriterionResult quadrature_closed_form(const AcceptanceOptions&) {
  CriterionResult r;
  const OvershootFunctional exp_fn(TailModel::exponential());
  for (double a : {0.0, 1.0, 10.0})
    r.measurements.push_back(below(fmt::format("|f({}) - 1| exponential", a), std::fabs(exp_fn.expected_overshoot(a) - 1.0), 1e-9));

  const std::vector<NamedModel> presets = {{"exp", TailModel::exponential()},
                                           {"stretched(0.5)", TailModel::stretched(0.5)},
                                           {"stretched(2)", TailModel::stretched(2.0)},
                                           {"normal", TailModel::normal()},
                                           {"loglog-sq", TailModel::log_squared()}};
  for (const auto& [name, model] : presets) {
    const GFunctional g{OvershootFunctional(model)};
    double round_trip = 0.0;
    for (int i = 0; i <= 200; ++i) {
      const double y = i == 0 ? 0.0 : std::pow(10.0, -6.0 + 7.69897 * i / 200.0);  // up to 50
      round_trip = std::max(round_trip, std::fabs(g.G_of(g.G_inverse(y)) - y) / (1.0 + y));
    }
    double identity = 0.0;
    const auto& x = g.nodes();
    const auto& G = g.G_values();
    for (std::size_t i = 0; i + 1 < x.size(); i += 7) {
      const double y = g.G_of(0.5 * (x[i] + x[i + 1]));
      const double d = 1e-3 * (G[i + 1] - G[i]);
      const double slope = (g.G_inverse(y + d) - g.G_inverse(y - d)) / (2.0 * d);
      const double f = g.overshoot().expected_overshoot(g.G_inverse(y));
      identity = std::max(identity, std::fabs(slope / f - 1.0));
    }
    r.measurements.push_back(below(fmt::format("G round-trip error / (1 + y), {}", name), round_trip, 1e-9));
    r.measurements.push_back(below(fmt::format("d G^-1/dy vs f(G^-1) rel error, {}", name), identity, 1e-4));
  }
  return r;
}

}  // namespace

const std::vector<Suite>& acceptance_suites() {
  static const std::vector<Suite> suites = {
      {1, "gumbel-beta1", "Gumbel limit of ybar_k - log k, exponential, beta=1", gumbel_beta1},
      {2, "tk-quadratic", "T_k grows like k^2, exponential, beta=1", tk_quadratic},
      {3, "mean-power-law", "ybar_k / (log k)^(1/2) -> 1, alpha=2, beta=1", mean_power_law},
      {4, "additive-normalization", "ybar_k - G^{-1}(log k) settles, alpha=2, beta=1", additive_normalization},
      {5, "bk-convergence", "B_k = ybar_k / k^(1/2) stabilizes, exponential, beta=1.5", bk_convergence},
      {6, "bk-divergence", "B_k diverges, loglog-sq, beta=1.5", bk_divergence},
      {7, "tstar-exp-limit", "T*_k -> Exp(1), exponential, beta=3, k=60", tstar_exp_limit},
      {8, "tstar-mixture", "T*_k -> exponential mixture, exponential, beta=2, k=80", tstar_mixture},
      {9, "weights-normalization", "mixture weights sum to 1", weights_normalization},
      {10, "oracle-equivalence", "shortcut simulator matches the literal rule, k=5", oracle_equivalence},
      {11, "quadrature-closed-form", "f, G and G^{-1} functional identities", quadrature_closed_form},
  };
  return suites;
}

const Suite* find_suite(std::string_view name) {
  for (const Suite& s : acceptance_suites())
    if (s.name == name) return &s;
  return nullptr;
}

}  // namespace qgs
