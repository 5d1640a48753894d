#ifndef QGS_ASYMPTOTICS_HPP
#define QGS_ASYMPTOTICS_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qgs/overshoot.hpp"
#include "qgs/random.hpp"

namespace qgs {

/// How the running mean is normalized to converge almost surely.
enum class MeanRegime {
  AdditiveAS,        // beta == 1: ybar_k - G^{-1}(log k)
  MultiplicativeAS,  // beta > 1:  ybar_k / k^(beta-1)
};

/// Mode of convergence of T*_k for H(x) = x^alpha.
enum class TstarRegime {
  AS,        // 1 <= beta < 1 + 1/(2 alpha): -> 1 a.s.
  InProb,    // 1 + 1/(2 alpha) <= beta < 1 + 1/alpha: -> 1 in probability
  Mixture,   // beta == 1 + 1/alpha: -> sum of conditionally independent exponentials
  ExpLimit,  // beta > 1 + 1/alpha: -> Exp(1) in distribution
};

std::string to_string(MeanRegime r);
std::string to_string(TstarRegime r);

struct RegimeClass {
  MeanRegime mean = MeanRegime::AdditiveAS;
  TstarRegime tstar = TstarRegime::AS;
  double beta_lo = 0.0;  // 1 + 1/(2 alpha)
  double beta_hi = 0.0;  // 1 + 1/alpha
  /// The T* trichotomy is established only for h == 0; set when the caller's
  /// model carries a correction term.
  bool extrapolated = false;
};

/// Throws InvalidParameter for alpha <= 0 or beta < 1. beta equal to
/// 1 + 1/alpha within 1e-12 relative is the mixture boundary.
RegimeClass classify_regime(double alpha, double beta, bool model_has_correction = false);

/// G^{-1}(log k) when beta == 1 (subtract it), k^(beta-1) when beta > 1
/// (divide by it). g may be null when beta > 1.
double normalizer(const GFunctional* g, double beta, std::uint64_t k);

struct MixtureWeights {
  std::vector<double> mu;  // mu_1 .. mu_J
  double tail_mass = 0.0;  // sum_{j > J} mu_j = exp(-J (beta w)^alpha)
  bool underflow = false;  // (beta w)^alpha > 700: mu_j for j >= 2 flush to zero
};

/// mu_j = (exp((beta w)^alpha) - 1) / exp(j (beta w)^alpha), beta = 1 + 1/alpha.
MixtureWeights mixture_weights(double alpha, double w, std::size_t J);

/// Limit law of T*_k at beta = 1 + 1/alpha, conditional on
/// W = lim ybar_k / k^(1/alpha) = w: sum_j R_j, R_j ~ Exp(mean mu_j).
class MixtureLimit {
 public:
  /// Picks the smallest J with tail mass below max_tail.
  MixtureLimit(double alpha, double w, double max_tail = 1e-10);
  /// Fixed truncation; sampling throws InvalidTruncation if the tail is >= 1e-10.
  MixtureLimit(double alpha, double w, std::size_t J);

  double alpha() const { return alpha_; }
  double beta() const { return 1.0 + 1.0 / alpha_; }
  double w() const { return w_; }
  std::size_t truncation() const { return weights_.mu.size(); }
  const MixtureWeights& weights() const { return weights_; }

  double sample(RandomStream& rng) const;

 private:
  double alpha_;
  double w_;
  MixtureWeights weights_;
};

inline double sample_mixture_limit(const MixtureLimit& mix, RandomStream& rng) { return mix.sample(rng); }

}  // namespace qgs

#endif  // QGS_ASYMPTOTICS_HPP
