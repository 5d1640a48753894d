#include "qgs/asymptotics.hpp"

#include <cmath>

#include <fmt/format.h>

#include "qgs/error.hpp"

namespace qgs {

namespace {

constexpr double kSamplingTail = 1e-10;
constexpr std::size_t kMaxTruncation = 10'000'000;

double mixture_rate(double alpha, double w) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidParameter(fmt::format("alpha = {} must be > 0", alpha));
  if (!(w > 0.0) || !std::isfinite(w)) throw InvalidParameter(fmt::format("w = {} must be > 0", w));
  const double beta = 1.0 + 1.0 / alpha;
  return std::pow(beta * w, alpha);
}

}  // namespace

std::string to_string(MeanRegime r) {
  switch (r) {
    case MeanRegime::AdditiveAS: return "MeanAdditive_AS";
    case MeanRegime::MultiplicativeAS: return "MeanMultiplicative_AS";
  }
  return "?";
}

std::string to_string(TstarRegime r) {
  switch (r) {
    case TstarRegime::AS: return "Tstar_AS";
    case TstarRegime::InProb: return "Tstar_InProb";
    case TstarRegime::Mixture: return "Tstar_Mixture";
    case TstarRegime::ExpLimit: return "Tstar_ExpLimit";
  }
  return "?";
}

RegimeClass classify_regime(double alpha, double beta, bool model_has_correction) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidParameter(fmt::format("alpha = {} must be > 0", alpha));
  if (!(beta >= 1.0) || !std::isfinite(beta)) throw InvalidParameter(fmt::format("beta = {} must be >= 1", beta));
  RegimeClass r;
  r.beta_lo = 1.0 + 1.0 / (2.0 * alpha);
  r.beta_hi = 1.0 + 1.0 / alpha;
  r.mean = beta == 1.0 ? MeanRegime::AdditiveAS : MeanRegime::MultiplicativeAS;
  if (std::fabs(beta - r.beta_hi) <= 1e-12 * r.beta_hi) {
    r.tstar = TstarRegime::Mixture;
  } else if (beta > r.beta_hi) {
    r.tstar = TstarRegime::ExpLimit;
  } else if (beta >= r.beta_lo) {
    r.tstar = TstarRegime::InProb;
  } else {
    r.tstar = TstarRegime::AS;
  }
  r.extrapolated = model_has_correction;
  return r;
}

double normalizer(const GFunctional* g, double beta, std::uint64_t k) {
  if (k < 1) throw InvalidParameter("normalizer needs k >= 1");
  if (beta == 1.0) {
    if (g == nullptr) throw InvalidParameter("beta == 1 normalizer needs the G functional");
    return g->G_inverse(std::log(static_cast<double>(k)));
  }
  return std::pow(static_cast<double>(k), beta - 1.0);
}

MixtureWeights mixture_weights(double alpha, double w, std::size_t J) {
  if (J < 1) throw InvalidParameter("mixture truncation J must be >= 1");
  const double x = mixture_rate(alpha, w);
  MixtureWeights out;
  out.underflow = x > 700.0;
  out.mu.resize(J);
  // mu_j = (1 - e^-x) e^-(j-1)x; each term evaluated directly, not by recurrence.
  const double first = -std::expm1(-x);
  for (std::size_t j = 0; j < J; ++j) out.mu[j] = first * std::exp(-static_cast<double>(j) * x);
  out.tail_mass = std::exp(-static_cast<double>(J) * x);
  return out;
}

MixtureLimit::MixtureLimit(double alpha, double w, double max_tail) : alpha_(alpha), w_(w) {
  if (!(max_tail > 0.0 && max_tail < 1.0)) throw InvalidParameter("max_tail must lie in (0, 1)");
  const double x = mixture_rate(alpha, w);
  const double j = std::ceil(-std::log(max_tail) / x);
  if (!(j <= static_cast<double>(kMaxTruncation)))
    throw InvalidTruncation(fmt::format("(beta w)^alpha = {} needs {} mixture terms", x, j));
  std::size_t J = std::max<std::size_t>(1, static_cast<std::size_t>(j));
  weights_ = mixture_weights(alpha, w, J);
  while (!(weights_.tail_mass < max_tail)) weights_ = mixture_weights(alpha, w, ++J);
}

MixtureLimit::MixtureLimit(double alpha, double w, std::size_t J)
    : alpha_(alpha), w_(w), weights_(mixture_weights(alpha, w, J)) {}

double MixtureLimit::sample(RandomStream& rng) const {
  if (!(weights_.tail_mass < kSamplingTail))
    throw InvalidTruncation(fmt::format("mixture truncation J = {} leaves tail mass {:.3e} >= {:.0e}",
                                        weights_.mu.size(), weights_.tail_mass, kSamplingTail));
  double s = 0.0;
  for (double mu : weights_.mu) s += mu * rng.exponential();
  return s;
}

}  // namespace qgs
