#include "qgs/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/sinh_sinh.hpp>
#include <fmt/format.h>

#include "qgs/error.hpp"

namespace qgs {

namespace {

constexpr std::size_t kMinKsSamples = 10;
constexpr std::size_t kMinPaths = 30;

double stephens_lambda(double n_eff, double d) {
  const double rn = std::sqrt(n_eff);
  return (rn + 0.12 + 0.11 / rn) * d;
}

// Marsaglia-Tsang-Wang: matrix power with decimal exponent tracking.
using Matrix = std::vector<double>;

void mat_mul(const Matrix& a, const Matrix& b, Matrix& c, int m) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int k = 0; k < m; ++k) s += a[i * m + k] * b[k * m + j];
      c[i * m + j] = s;
    }
}

void mat_pow(const Matrix& a, int ea, Matrix& v, int& ev, int m, int n) {
  if (n == 1) {
    v = a;
    ev = ea;
    return;
  }
  mat_pow(a, ea, v, ev, m, n / 2);
  Matrix b(v.size());
  mat_mul(v, v, b, m);
  int eb = 2 * ev;
  if (n % 2 == 0) {
    v = b;
    ev = eb;
  } else {
    mat_mul(a, b, v, m);
    ev = ea + eb;
  }
  if (v[(m / 2) * m + m / 2] > 1e140) {
    for (double& x : v) x *= 1e-140;
    ev += 140;
  }
}

std::vector<double> finite_sorted(std::span<const double> xs) {
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  return v;
}

void require_rectangular(const PathSet& paths, std::size_t min_checkpoints) {
  if (paths.size() < kMinPaths)
    throw InsufficientData(fmt::format("need at least {} paths, got {}", kMinPaths, paths.size()));
  const auto& first = paths.front();
  if (first.size() < min_checkpoints)
    throw InsufficientData(fmt::format("need at least {} checkpoints, got {}", min_checkpoints, first.size()));
  for (const auto& p : paths) {
    if (p.size() != first.size()) throw InsufficientData("paths carry different checkpoint counts");
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i].k != first[i].k) throw InsufficientData("paths carry different checkpoint k values");
  }
}

std::vector<double> column(const PathSet& paths, std::size_t idx, const StatisticSelector& stat) {
  std::vector<double> v;
  v.reserve(paths.size());
  for (const auto& p : paths) v.push_back(stat(p[idx]));
  return v;
}

}  // namespace

SampleSet::SampleSet(std::vector<double> v, std::string l, nlohmann::ordered_json src)
    : values(std::move(v)), label(std::move(l)), source(std::move(src)) {
  if (values.empty()) throw InvalidParameter("sample set is empty");
  for (double x : values)
    if (!std::isfinite(x)) throw InvalidParameter(fmt::format("sample set '{}' holds a non-finite value", label));
}

double gumbel_cdf(double x) { return std::exp(-std::exp(-x)); }

double reference_cdf(Reference ref, double x) {
  switch (ref) {
    case Reference::Exp1: return x <= 0.0 ? 0.0 : -std::expm1(-x);
    case Reference::GumbelStd: return gumbel_cdf(x);
  }
  return 0.0;
}

double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf) {
  const auto v = finite_sorted(samples);
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = cdf(v[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  const auto x = finite_sorted(a);
  const auto y = finite_sorted(b);
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double t = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == t) ++i;
    while (j < y.size() && y[j] == t) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return d;
}

double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  if (lambda < 1.18) {
    // Small lambda: the theta-function form converges fast where the
    // alternating series does not.
    const double c = -std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double s = 0.0;
    for (int j = 1; j < 100; ++j) {
      const double term = std::exp(c * (2 * j - 1) * (2 * j - 1));
      s += term;
      if (term < 1e-16) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int j = 1; j < 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    s += (j % 2 == 1 ? term : -term);
    if (term < 1e-10) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

double ks_exact_pvalue(std::size_t n_samples, double d) {
  if (!(d > 0.0)) return 1.0;
  if (d >= 1.0) return 0.0;
  const int n = static_cast<int>(n_samples);
  const double s = d * d * n;
  if (s > 7.24 || (s > 3.76 && n > 99))
    return std::clamp(2.0 * std::exp(-(2.000071 + 0.331 / std::sqrt(n) + 1.409 / n) * s), 0.0, 1.0);
  const int k = static_cast<int>(n * d) + 1;
  const int m = 2 * k - 1;
  const double h = k - n * d;
  Matrix H(static_cast<std::size_t>(m * m));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) H[i * m + j] = (i - j + 1 < 0) ? 0.0 : 1.0;
  for (int i = 0; i < m; ++i) {
    H[i * m] -= std::pow(h, i + 1);
    H[(m - 1) * m + i] -= std::pow(h, m - i);
  }
  H[(m - 1) * m] += (2 * h - 1 > 0 ? std::pow(2 * h - 1, m) : 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (i - j + 1 > 0)
        for (int g = 1; g <= i - j + 1; ++g) H[i * m + j] /= g;
  Matrix Q;
  int eQ = 0;
  mat_pow(H, 0, Q, eQ, m, n);
  double p = Q[(k - 1) * m + k - 1];
  for (int i = 1; i <= n; ++i) {
    p = p * i / n;
    if (p < 1e-140) {
      p *= 1e140;
      eQ -= 140;
    }
  }
  p *= std::pow(10.0, eQ);
  return std::clamp(1.0 - p, 0.0, 1.0);
}

double ks_critical_value(double n_eff, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("alpha must lie in (0, 1)");
  double lo = 0.0, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (kolmogorov_survival(mid) > alpha) lo = mid; else hi = mid;
  }
  const double rn = std::sqrt(n_eff);
  return 0.5 * (lo + hi) / (rn + 0.12 + 0.11 / rn);
}

KsResult ks_statistic(const SampleSet& samples, Reference ref) {
  const std::size_t n = samples.values.size();
  if (n < kMinKsSamples) throw TooFewSamples(fmt::format("KS needs at least {} samples, got {}", kMinKsSamples, n));
  KsResult r;
  r.d = ks_distance(samples.values, [ref](double x) { return reference_cdf(ref, x); });
  r.n_eff = static_cast<double>(n);
  r.p_value = n < 35 ? ks_exact_pvalue(n, r.d) : kolmogorov_survival(stephens_lambda(r.n_eff, r.d));
  return r;
}

KsResult ks_statistic(const SampleSet& samples, const SampleSet& other) {
  const std::size_t n = samples.values.size();
  const std::size_t m = other.values.size();
  if (n < kMinKsSamples || m < kMinKsSamples)
    throw TooFewSamples(fmt::format("two-sample KS needs at least {} samples per side, got {} and {}",
                                    kMinKsSamples, n, m));
  KsResult r;
  r.d = ks_distance(samples.values, other.values);
  r.n_eff = static_cast<double>(n) * static_cast<double>(m) / static_cast<double>(n + m);
  r.p_value = kolmogorov_survival(stephens_lambda(r.n_eff, r.d));
  return r;
}

GumbelMoments gumbel_reference_moments() {
  static const GumbelMoments moments = [] {
    boost::math::quadrature::sinh_sinh<double> integrator;
    // Density Lambda'(x) = exp(-x - e^{-x}); written so the far left tail
    // evaluates to 0 rather than inf * 0.
    const auto density = [](double x) { return std::exp(-x - std::exp(-x)); };
    const double mean = integrator.integrate([&](double x) { return x * density(x); }, 1e-13);
    const double second = integrator.integrate(
        [&](double x) {
          const double c = x - mean;
          return c * c * density(x);
        },
        1e-13);
    return GumbelMoments{mean, second};
  }();
  return moments;
}

StatisticSelector selector(Statistic s) {
  switch (s) {
    case Statistic::Ybar: return [](const Checkpoint& c) { return c.ybar; };
    case Statistic::LogT: return [](const Checkpoint& c) { return c.log_T; };
    case Statistic::TStar: return [](const Checkpoint& c) { return c.t_star; };
    case Statistic::NormalizedMean: return [](const Checkpoint& c) { return c.normalized_mean; };
    case Statistic::LogTOverLogK:
      return [](const Checkpoint& c) { return c.log_T / std::log(static_cast<double>(c.k)); };
  }
  throw InvalidParameter("unknown statistic");
}

std::string to_string(Statistic s) {
  switch (s) {
    case Statistic::Ybar: return "ybar";
    case Statistic::LogT: return "log_T";
    case Statistic::TStar: return "t_star";
    case Statistic::NormalizedMean: return "normalized_mean";
    case Statistic::LogTOverLogK: return "log_T_over_log_k";
  }
  return "?";
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InsufficientData("quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ConvergenceReport convergence_report(const PathSet& paths, const StatisticSelector& stat, double tolerance,
                                     std::string statistic_name) {
  require_rectangular(paths, 3);
  ConvergenceReport r;
  r.statistic = std::move(statistic_name);
  r.n_paths = paths.size();
  r.tolerance = tolerance;
  const std::size_t nk = paths.front().size();
  for (std::size_t i = 0; i < nk; ++i) {
    const auto v = column(paths, i, stat);
    CheckpointSummary s;
    s.k = paths.front()[i].k;
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.variance = ss / static_cast<double>(v.size() - 1);
    s.median = quantile(v, 0.5);
    s.iqr = quantile(v, 0.75) - quantile(v, 0.25);
    r.summaries.push_back(s);
  }
  for (std::size_t i = nk - 2; i < nk; ++i)
    r.cauchy_gap = std::max(r.cauchy_gap, std::fabs(r.summaries[i].median - r.summaries[i - 1].median));
  r.reference_iqr = r.summaries.back().iqr;
  r.stabilizing = r.cauchy_gap <= tolerance * r.reference_iqr;
  return r;
}

nlohmann::ordered_json ConvergenceReport::to_json() const {
  nlohmann::ordered_json j;
  j["statistic"] = statistic;
  j["n_paths"] = n_paths;
  j["checkpoints"] = nlohmann::ordered_json::array();
  for (const auto& s : summaries) {
    nlohmann::ordered_json e;
    e["k"] = s.k;
    e["mean"] = s.mean;
    e["variance"] = s.variance;
    e["median"] = s.median;
    e["iqr"] = s.iqr;
    j["checkpoints"].push_back(e);
  }
  j["cauchy_gap"] = cauchy_gap;
  j["tolerance"] = tolerance;
  j["reference_iqr"] = reference_iqr;
  j["verdict"] = stabilizing ? "stabilizing" : "not-stabilizing";
  return j;
}

DivergenceVerdict divergence_check(const PathSet& paths, const StatisticSelector& stat) {
  require_rectangular(paths, 2);
  const auto& cps = paths.front();
  if (cps.back().k < 1000 * cps.front().k)
    throw InsufficientData(fmt::format("checkpoints {}..{} span fewer than three decades", cps.front().k, cps.back().k));
  DivergenceVerdict v;
  std::size_t increasing = 0;
  for (const auto& p : paths) {
    bool up = true;
    for (std::size_t i = 1; i < p.size() && up; ++i) up = stat(p[i]) > stat(p[i - 1]);
    if (up) ++increasing;
  }
  v.fraction_increasing = static_cast<double>(increasing) / static_cast<double>(paths.size());
  const double first = quantile(column(paths, 0, stat), 0.5);
  const double last = quantile(column(paths, cps.size() - 1, stat), 0.5);
  v.growth_factor = first > 0.0 ? last / first : 0.0;
  v.diverging = v.fraction_increasing >= 0.9 && v.growth_factor >= 5.0;
  return v;
}

nlohmann::ordered_json DivergenceVerdict::to_json() const {
  nlohmann::ordered_json j;
  j["fraction_increasing"] = fraction_increasing;
  j["growth_factor"] = growth_factor;
  j["verdict"] = diverging ? "diverging" : "not-diverging";
  return j;
}

TstarModeReport tstar_mode_report(const PathSet& paths, double tolerance) {
  require_rectangular(paths, 3);
  TstarModeReport r;
  r.tolerance = tolerance;
  const std::size_t nk = paths.front().size();
  std::vector<double> osc, dev;
  for (const auto& p : paths) {
    double o = 0.0;
    for (std::size_t i = nk - 2; i < nk; ++i) o = std::max(o, std::fabs(p[i].t_star - p[i - 1].t_star));
    osc.push_back(o);
    dev.push_back(std::fabs(p.back().t_star - 1.0));
  }
  r.median_oscillation = quantile(osc, 0.5);
  r.median_deviation = quantile(dev, 0.5);
  if (r.median_oscillation <= tolerance && r.median_deviation <= tolerance)
    r.verdict = "as-like";
  else if (r.median_deviation <= tolerance)
    r.verdict = "in-probability-like";
  else
    r.verdict = "not-concentrating";
  return r;
}

nlohmann::ordered_json TstarModeReport::to_json() const {
  nlohmann::ordered_json j;
  j["median_oscillation"] = median_oscillation;
  j["median_deviation"] = median_deviation;
  j["tolerance"] = tolerance;
  j["verdict"] = verdict;
  return j;
}

}  // namespace qgs
