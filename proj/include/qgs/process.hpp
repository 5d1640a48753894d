#ifndef QGS_PROCESS_HPP
#define QGS_PROCESS_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "qgs/overshoot.hpp"
#include "qgs/random.hpp"
#include "qgs/tail_model.hpp"

namespace qgs {

/// Start from an existing core group of k0 items with average ybar instead
/// of a single first item. Core items count one observation each and
/// contribute 1 (certain acceptance) to the T* denominator.
struct WarmStart {
  std::uint64_t k0 = 1;
  double ybar = 0.0;
};

struct RuleConfig {
  double beta = 1.0;
  std::uint64_t k_max = 1;
  std::vector<std::uint64_t> checkpoints;
  std::uint64_t seed = 0;
  std::uint64_t n_paths = 1;
  std::optional<WarmStart> warm_start;

  /// Throws InvalidParameter on beta < 1, empty or unsorted checkpoints,
  /// checkpoints beyond k_max or below the starting k, or n_paths == 0.
  void validate() const;
};

struct PathState {
  std::uint64_t k = 1;
  double ybar = 0.0;
  double log_T = 0.0;
  /// log sum_{j<k} 1/(1 - F(beta ybar_j)); -inf while the sum is empty.
  double log_denom = -std::numeric_limits<double>::infinity();
};

struct Checkpoint {
  std::uint64_t k = 0;
  double ybar = 0.0;
  double log_T = 0.0;
  /// T_k / sum_{j<k} 1/(1 - F(beta ybar_j)); 1 at k = 1 where the sum is empty.
  double t_star = 1.0;
  /// ybar - G^{-1}(log k) when beta == 1, ybar / k^(beta-1) otherwise.
  double normalized_mean = 0.0;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// log of a Geometric(p) waiting time (support 1, 2, ...) given log p.
/// Exact inverse transform N = ceil(log U / log(1 - p)) for p > 1e-9;
/// below that N ~ E / p with E = -log U, i.e. log N = log E - log p.
double geometric_log_from_uniform(double log_p, double u);
double geometric_log_sample(double log_p, RandomStream& rng);

/// One acceptance: given the current state, the waiting-time uniform and the
/// Exp(1) level for the overshoot, return the state after the next retained
/// item. Throws ThresholdBelowSupport when beta * ybar < x0.
PathState advance(const PathState& state, const OvershootFunctional& fn, double beta, double u_wait,
                  double e_overshoot);
PathState step(const PathState& state, const OvershootFunctional& fn, double beta, RandomStream& rng);

PathState initial_state(const RuleConfig& config, const OvershootFunctional& fn, RandomStream& rng);

/// Ybar centring/scaling applied at checkpoints. g may be null when beta > 1.
double normalize_mean(const GFunctional* g, double beta, std::uint64_t k, double ybar);

Checkpoint make_checkpoint(const PathState& state, const GFunctional* g, double beta);

/// One path; deterministic in (config.seed, path_id).
std::vector<Checkpoint> run_path(const RuleConfig& config, const OvershootFunctional& fn, const GFunctional* g,
                                 std::uint64_t path_id);

/// Literal transcription of the rule: draws every observation X_i from F
/// (conditioned on X > x0) and tests X_i > beta * ybar. Only usable for small
/// k and beta; throws Overflow once T would exceed max_observations.
std::vector<Checkpoint> run_path_naive(const RuleConfig& config, const TailModel& model, const GFunctional* g,
                                       RandomStream& rng,
                                       std::uint64_t max_observations = std::uint64_t{1} << 40);

using PathSet = std::vector<std::vector<Checkpoint>>;

/// Reference executor: paths 0..n_paths-1 one after another.
PathSet run_paths_serial(const RuleConfig& config, const OvershootFunctional& fn, const GFunctional* g);

/// OpenMP executor over paths. Output is indexed by path_id and identical to
/// run_paths_serial for any worker count. workers == 0 uses the OpenMP default.
PathSet run_paths(const RuleConfig& config, const OvershootFunctional& fn, const GFunctional* g,
                  unsigned workers = 0);

/// run_path_naive over paths 0..n_paths-1 with streams keyed (seed, path_id).
PathSet run_paths_naive(const RuleConfig& config, const TailModel& model, const GFunctional* g,
                        unsigned workers = 0);

}  // namespace qgs

#endif  // QGS_PROCESS_HPP
