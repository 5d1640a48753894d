#ifndef QGS_DIAGNOSTICS_HPP
#define QGS_DIAGNOSTICS_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgs/process.hpp"

namespace qgs {

struct SampleSet {
  std::vector<double> values;
  std::string label;
  nlohmann::ordered_json source = nlohmann::ordered_json::object();

  /// Throws InvalidParameter if empty or any value is not finite.
  SampleSet(std::vector<double> v, std::string label = {},
            nlohmann::ordered_json source = nlohmann::ordered_json::object());
};

enum class Reference { Exp1, GumbelStd };

double reference_cdf(Reference ref, double x);
double gumbel_cdf(double x);

struct KsResult {
  double d = 0.0;
  double p_value = 1.0;
  double n_eff = 0.0;  // n for one-sample, n m / (n + m) for two-sample
};

/// sup_x |F_n(x) - F(x)| over the jump points; no sample-size requirement.
double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);
/// Two-sample sup distance; ties across samples are stepped together.
double ks_distance(std::span<const double> a, std::span<const double> b);

/// One-sample KS against a reference law. TooFewSamples for n < 10.
/// p-value: exact (Marsaglia-Tsang-Wang) for n < 35, asymptotic
/// Kolmogorov series with Stephens' small-sample correction otherwise.
KsResult ks_statistic(const SampleSet& samples, Reference ref);
/// Two-sample KS; asymptotic p-value at n_eff.
KsResult ks_statistic(const SampleSet& samples, const SampleSet& other);

/// Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2), series cut at 1e-10.
double kolmogorov_survival(double lambda);
/// Exact P(D_n >= d) for a continuous one-sample test.
double ks_exact_pvalue(std::size_t n, double d);
/// D with asymptotic p-value alpha at effective size n_eff.
double ks_critical_value(double n_eff, double alpha);

struct GumbelMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and variance of the standard Gumbel law by quadrature of its density.
GumbelMoments gumbel_reference_moments();

inline constexpr double kEulerGamma = 0.5772156649015329;
inline constexpr double kGumbelVariance = 1.6449340668482264;  // pi^2 / 6

enum class Statistic { Ybar, LogT, TStar, NormalizedMean, LogTOverLogK };

using StatisticSelector = std::function<double(const Checkpoint&)>;
StatisticSelector selector(Statistic s);
std::string to_string(Statistic s);

struct CheckpointSummary {
  std::uint64_t k = 0;
  double mean = 0.0;
  double variance = 0.0;
  double median = 0.0;
  double iqr = 0.0;
};

struct ConvergenceReport {
  std::string statistic;
  std::size_t n_paths = 0;
  std::vector<CheckpointSummary> summaries;
  double cauchy_gap = 0.0;  // max |median_k - median_k'| over the last three checkpoints
  double tolerance = 0.0;
  double reference_iqr = 0.0;  // IQR at the last checkpoint
  bool stabilizing = false;    // cauchy_gap <= tolerance * reference_iqr

  nlohmann::ordered_json to_json() const;
};

/// InsufficientData for fewer than 30 paths, fewer than 3 checkpoints or
/// ragged checkpoint lists.
ConvergenceReport convergence_report(const PathSet& paths, const StatisticSelector& stat, double tolerance = 0.05,
                                     std::string statistic_name = "custom");

struct DivergenceVerdict {
  double fraction_increasing = 0.0;  // paths strictly increasing over every checkpoint
  double growth_factor = 0.0;        // median at last / median at first checkpoint
  bool diverging = false;            // fraction >= 0.9 and growth >= 5

  nlohmann::ordered_json to_json() const;
};

/// InsufficientData for fewer than 30 paths or checkpoints spanning fewer
/// than three decades of k.
DivergenceVerdict divergence_check(const PathSet& paths, const StatisticSelector& stat);

/// Empirical stand-in for the a.s. vs in-probability distinction of T*_k:
/// per-path oscillation across the final checkpoints against cross-path
/// concentration of the last value around 1.
struct TstarModeReport {
  double median_oscillation = 0.0;    // median over paths of max |T*_k - T*_k'| (consecutive)
  double median_deviation = 0.0;      // median over paths of |T*_last - 1|
  double tolerance = 0.0;
  std::string verdict;                // "as-like", "in-probability-like" or "not-concentrating"

  nlohmann::ordered_json to_json() const;
};

TstarModeReport tstar_mode_report(const PathSet& paths, double tolerance = 0.05);

/// Type-7 (linear interpolation) quantile of unsorted data.
double quantile(std::vector<double> values, double q);

}  // namespace qgs

#endif  // QGS_DIAGNOSTICS_HPP
