#include "qgs/process.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>

#include <fmt/format.h>
#include <omp.h>

#include "qgs/asymptotics.hpp"
#include "qgs/error.hpp"

namespace qgs {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kExactGeometricFloor = 1e-9;

inline double log_add_exp(double a, double b) {
  const double hi = std::max(a, b);
  if (hi == kNegInf) return kNegInf;
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// log(1 - p) from log p, accurate at both ends.
inline double log1m_exp(double log_p) {
  return log_p > -std::numbers::ln2 ? std::log(-std::expm1(log_p)) : std::log1p(-std::exp(log_p));
}

}  // namespace

void RuleConfig::validate() const {
  if (!(beta >= 1.0) || !std::isfinite(beta)) throw InvalidParameter(fmt::format("beta = {} must be >= 1", beta));
  if (k_max < 1) throw InvalidParameter("k_max must be positive");
  if (n_paths < 1) throw InvalidParameter("n_paths must be positive");
  if (checkpoints.empty()) throw InvalidParameter("checkpoints must be nonempty");
  const std::uint64_t k_start = warm_start ? warm_start->k0 : 1;
  if (warm_start && warm_start->k0 < 1) throw InvalidParameter("warm start needs k0 >= 1");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (i > 0 && checkpoints[i] <= checkpoints[i - 1])
      throw InvalidParameter("checkpoints must be strictly increasing");
    if (checkpoints[i] > k_max)
      throw InvalidParameter(fmt::format("checkpoint {} exceeds k_max {}", checkpoints[i], k_max));
    if (checkpoints[i] < k_start)
      throw InvalidParameter(fmt::format("checkpoint {} precedes the starting k {}", checkpoints[i], k_start));
  }
}

double geometric_log_from_uniform(double log_p, double u) {
  if (!(log_p <= 0.0)) throw InvalidParameter(fmt::format("log p = {} must be <= 0", log_p));
  if (log_p == 0.0) return 0.0;
  if (log_p > std::log(kExactGeometricFloor)) {
    const double n = std::ceil(std::log(u) / log1m_exp(log_p));
    return n > 1.0 ? std::log(n) : 0.0;
  }
  // Geometric(p) -> Exp(1)/p as p -> 0; the TV gap is O(p).
  return std::max(0.0, std::log(-std::log(u)) - log_p);
}

double geometric_log_sample(double log_p, RandomStream& rng) {
  return geometric_log_from_uniform(log_p, rng.uniform_open());
}

PathState advance(const PathState& state, const OvershootFunctional& fn, double beta, double u_wait,
                  double e_overshoot) {
  const TailModel& model = fn.model();
  const double threshold = beta * state.ybar;
  if (!(threshold >= model.x0()))
    throw ThresholdBelowSupport(
        fmt::format("threshold beta * ybar = {} below support x0 = {}", threshold, model.x0()));
  const double log_p = model.log_sf(threshold);
  const double log_n = geometric_log_from_uniform(log_p, u_wait);
  const double z = overshoot_quantile(model, threshold, e_overshoot);

  PathState next;
  next.k = state.k + 1;
  next.ybar = state.ybar + (z + (beta - 1.0) * state.ybar) / static_cast<double>(next.k);
  next.log_T = log_add_exp(state.log_T, log_n);
  next.log_denom = log_add_exp(state.log_denom, -log_p);
  return next;
}

PathState step(const PathState& state, const OvershootFunctional& fn, double beta, RandomStream& rng) {
  const double u = rng.uniform_open();
  const double e = rng.exponential();
  return advance(state, fn, beta, u, e);
}

PathState initial_state(const RuleConfig& config, const OvershootFunctional& fn, RandomStream& rng) {
  PathState s;
  if (config.warm_start) {
    s.k = config.warm_start->k0;
    s.ybar = config.warm_start->ybar;
    s.log_T = std::log(static_cast<double>(s.k));
    s.log_denom = s.k > 1 ? std::log(static_cast<double>(s.k - 1)) : kNegInf;
    return s;
  }
  const double x0 = fn.model().x0();
  s.k = 1;
  s.ybar = x0 + fn.sample(x0, rng);
  s.log_T = 0.0;
  return s;
}

double normalize_mean(const GFunctional* g, double beta, std::uint64_t k, double ybar) {
  const double scale = normalizer(g, beta, k);
  return beta == 1.0 ? ybar - scale : ybar / scale;
}

Checkpoint make_checkpoint(const PathState& state, const GFunctional* g, double beta) {
  Checkpoint c;
  c.k = state.k;
  c.ybar = state.ybar;
  c.log_T = state.log_T;
  c.t_star = state.log_denom == kNegInf ? 1.0 : std::exp(state.log_T - state.log_denom);
  c.normalized_mean = normalize_mean(g, beta, state.k, state.ybar);
  return c;
}

std::vector<Checkpoint> run_path(const RuleConfig& config, const OvershootFunctional& fn, const GFunctional* g,
                                 std::uint64_t path_id) {
  if (path_id >= config.n_paths)
    throw InvalidParameter(fmt::format("path_id {} out of range (n_paths = {})", path_id, config.n_paths));
  RandomStream rng(config.seed, path_id);
  PathState state = initial_state(config, fn, rng);

  std::vector<Checkpoint> out;
  out.reserve(config.checkpoints.size());
  std::size_t next = 0;
  const auto emit = [&] {
    if (next < config.checkpoints.size() && config.checkpoints[next] == state.k) {
      out.push_back(make_checkpoint(state, g, config.beta));
      ++next;
    }
  };
  emit();
  while (state.k < config.k_max) {
    state = step(state, fn, config.beta, rng);
    emit();
  }
  return out;
}

std::vector<Checkpoint> run_path_naive(const RuleConfig& config, const TailModel& model, const GFunctional* g,
                                       RandomStream& rng, std::uint64_t max_observations) {
  if (config.warm_start) throw InvalidParameter("the naive simulator only supports the first-item start");
  const double x0 = model.x0();
  const auto draw = [&] { return x0 + overshoot_quantile(model, x0, rng.exponential()); };

  std::uint64_t t = 1;
  std::uint64_t k = 1;
  double sum = draw();
  double ybar = sum;
  double log_denom = kNegInf;

  std::vector<Checkpoint> out;
  std::size_t next = 0;
  const auto emit = [&] {
    if (next < config.checkpoints.size() && config.checkpoints[next] == k) {
      PathState s{k, ybar, std::log(static_cast<double>(t)), log_denom};
      out.push_back(make_checkpoint(s, g, config.beta));
      ++next;
    }
  };
  emit();
  while (k < config.k_max) {
    const double threshold = config.beta * ybar;
    for (;;) {
      const double x = draw();
      if (++t > max_observations)
        throw Overflow(fmt::format("naive simulation exceeded {} observations", max_observations));
      if (x > threshold) {
        sum += x;
        break;
      }
    }
    log_denom = log_add_exp(log_denom, -model.log_sf(threshold));
    ++k;
    ybar = sum / static_cast<double>(k);
    emit();
  }
  return out;
}

PathSet run_paths_serial(const RuleConfig& config, const OvershootFunctional& fn, const GFunctional* g) {
  config.validate();
  PathSet out(config.n_paths);
  for (std::uint64_t p = 0; p < config.n_paths; ++p) out[p] = run_path(config, fn, g, p);
  return out;
}

PathSet run_paths(const RuleConfig& config, const OvershootFunctional& fn, const GFunctional* g,
                  unsigned workers) {
  config.validate();
  PathSet out(config.n_paths);
  const int threads = workers == 0 ? omp_get_max_threads() : static_cast<int>(workers);
  const auto n = static_cast<std::int64_t>(config.n_paths);
  std::exception_ptr failure;
  std::mutex failure_lock;

#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::int64_t p = 0; p < n; ++p) {
    try {
      out[static_cast<std::size_t>(p)] = run_path(config, fn, g, static_cast<std::uint64_t>(p));
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_lock);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

PathSet run_paths_naive(const RuleConfig& config, const TailModel& model, const GFunctional* g,
                        unsigned workers) {
  config.validate();
  PathSet out(config.n_paths);
  const int threads = workers == 0 ? omp_get_max_threads() : static_cast<int>(workers);
  const auto n = static_cast<std::int64_t>(config.n_paths);
  std::exception_ptr failure;
  std::mutex failure_lock;

#pragma omp parallel for schedule(dynamic, 64) num_threads(threads)
  for (std::int64_t p = 0; p < n; ++p) {
    try {
      RandomStream rng(config.seed, static_cast<std::uint64_t>(p));
      out[static_cast<std::size_t>(p)] = run_path_naive(config, model, g, rng);
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_lock);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace qgs
