#include "qgs/tail_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "qgs/error.hpp"

namespace qgs {

namespace {

// coef * x^p, treating a zero coefficient as an exact zero even where x^p
// blows up at the origin.
inline double scaled_pow(double coef, double x, double p) {
  if (coef == 0.0) return 0.0;
  return coef * std::pow(x, p);
}

// (a + t)^p - a^p for a, t >= 0.
inline double pow_increment(double a, double t, double p) {
  if (t == 0.0) return 0.0;
  if (a == 0.0) return std::pow(t, p);
  return std::pow(a, p) * std::expm1(p * std::log1p(t / a));
}

}  // namespace

double HTerm::value(double x) const {
  switch (kind) {
    case Kind::PowerLog: return kappa * std::log(x);
    case Kind::Power: return kappa * std::pow(x, gamma);
    case Kind::Constant: return kappa;
  }
  return 0.0;
}

double HTerm::d1(double x) const {
  switch (kind) {
    case Kind::PowerLog: return kappa / x;
    case Kind::Power: return scaled_pow(kappa * gamma, x, gamma - 1.0);
    case Kind::Constant: return 0.0;
  }
  return 0.0;
}

double HTerm::d2(double x) const {
  switch (kind) {
    case Kind::PowerLog: return -kappa / (x * x);
    case Kind::Power: return scaled_pow(kappa * gamma * (gamma - 1.0), x, gamma - 2.0);
    case Kind::Constant: return 0.0;
  }
  return 0.0;
}

double HTerm::d3(double x) const {
  switch (kind) {
    case Kind::PowerLog: return 2.0 * kappa / (x * x * x);
    case Kind::Power:
      return scaled_pow(kappa * gamma * (gamma - 1.0) * (gamma - 2.0), x, gamma - 3.0);
    case Kind::Constant: return 0.0;
  }
  return 0.0;
}

double HTerm::increment(double a, double t) const {
  switch (kind) {
    case Kind::PowerLog: return kappa * std::log1p(t / a);
    case Kind::Power: return kappa * pow_increment(a, t, gamma);
    case Kind::Constant: return 0.0;
  }
  return 0.0;
}

std::string to_string(HTerm::Kind kind) {
  switch (kind) {
    case HTerm::Kind::PowerLog: return "power_log";
    case HTerm::Kind::Power: return "power";
    case HTerm::Kind::Constant: return "constant";
  }
  return "?";
}

TailModel TailModel::make(double c, double alpha, std::vector<HTerm> terms, double x0) {
  if (!(c > 0.0) || !std::isfinite(c))
    throw InvalidParameter(fmt::format("c must be positive and finite, got {}", c));
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw InvalidParameter(fmt::format("alpha must be positive and finite, got {}", alpha));
  if (!(x0 >= 0.0) || !std::isfinite(x0))
    throw InvalidParameter(fmt::format("x0 must be nonnegative and finite, got {}", x0));

  for (const auto& t : terms) {
    if (!std::isfinite(t.kappa) || !std::isfinite(t.gamma))
      throw ConstraintViolation("h-term coefficients must be finite");
    if (t.kind == HTerm::Kind::Power && !(t.gamma > 0.0 && t.gamma < alpha))
      throw ConstraintViolation(fmt::format(
          "power term exponent gamma={} must satisfy 0 < gamma < alpha={}", t.gamma, alpha));
    if (t.kind == HTerm::Kind::PowerLog && x0 <= 0.0)
      throw ConstraintViolation("power_log term requires x0 > 0");
  }

  TailModel m;
  m.family_ = TailFamily::Stretched;
  m.c_ = c;
  m.alpha_ = alpha;
  m.terms_ = std::move(terms);
  m.x0_ = x0;

  // H'(x) -> +inf dominated by c alpha x^(alpha-1). Each negative term
  // coef * x^p is beaten by 1/n of the leading term beyond
  // (n |coef| / (c alpha))^(1 / (alpha - 1 - p)); only the compact piece
  // [x0, that bound] needs scanning.
  struct Negative {
    double coef, power;
  };
  std::vector<Negative> negatives;
  for (const auto& t : m.terms_) {
    if (t.kind == HTerm::Kind::PowerLog && t.kappa < 0.0) negatives.push_back({t.kappa, -1.0});
    if (t.kind == HTerm::Kind::Power && t.kappa < 0.0) negatives.push_back({t.kappa * t.gamma, t.gamma - 1.0});
  }
  const double lead = c * alpha;
  double safe = x0;
  for (const auto& n : negatives) {
    const double bound = std::pow(static_cast<double>(negatives.size()) * std::fabs(n.coef) / lead,
                                  1.0 / (alpha - 1.0 - n.power));
    safe = std::max(safe, bound);
  }

  const double at_x0 = m.H_prime(x0);
  if (!(at_x0 >= 0.0))
    throw ConstraintViolation(fmt::format("H'(x0) = {} is negative at x0 = {}", at_x0, x0));
  if (!negatives.empty() && safe > x0) {
    const double hi = 2.0 * safe;
    const double lo = x0 > 0.0 ? x0 : hi * 1e-12;
    constexpr int kScan = 4000;
    const double ratio = std::pow(hi / lo, 1.0 / kScan);
    double worst_x = lo;
    double worst = std::numeric_limits<double>::infinity();
    double x = lo;
    for (int i = 0; i <= kScan; ++i, x *= ratio) {
      const double d = m.H_prime(x);
      if (d < worst) {
        worst = d;
        worst_x = x;
      }
    }
    // Golden-section polish of the bracketing cell around the scan minimum.
    double a = std::max(lo, worst_x / ratio);
    double b = std::min(hi, worst_x * ratio);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 100; ++it) {
      const double x1 = b - inv_phi * (b - a);
      const double x2 = a + inv_phi * (b - a);
      if (m.H_prime(x1) < m.H_prime(x2)) b = x2; else a = x1;
    }
    worst = std::min(worst, m.H_prime(0.5 * (a + b)));
    if (!(worst > 0.0))
      throw ConstraintViolation(fmt::format(
          "H'(x) = {} <= 0 near x = {}; H must be strictly increasing on [x0, inf)", worst,
          0.5 * (a + b)));
  }
  m.log_r_ = m.H(x0);
  return m;
}

TailModel TailModel::log_squared() {
  TailModel m;
  m.family_ = TailFamily::LogSquared;
  m.c_ = 0.5;
  m.alpha_ = 0.0;
  m.x0_ = 1.0;
  m.log_r_ = 0.0;
  return m;
}

TailModel TailModel::normal() {
  // Mills' ratio: 1 - Phi(x) ~ phi(x) / x = exp(-(x^2/2 + log x + log(2 pi)/2)).
  return make(0.5, 2.0,
              {HTerm::power_log(1.0), HTerm::constant(0.5 * std::log(2.0 * std::numbers::pi))}, 1.0);
}

bool TailModel::has_correction() const {
  return std::any_of(terms_.begin(), terms_.end(),
                     [](const HTerm& t) { return t.kind != HTerm::Kind::Constant && t.kappa != 0.0; });
}

void TailModel::check_derivative_domain(double x) const {
  if (family_ == TailFamily::LogSquared && !(x > 0.0))
    throw DomainError(fmt::format("log-squared model undefined at x = {}", x));
  if (x < 0.0) throw DomainError(fmt::format("x = {} is negative", x));
  if (x == 0.0) {
    for (const auto& t : terms_)
      if (t.kind == HTerm::Kind::PowerLog)
        throw DomainError("power_log term is singular at x = 0");
  }
}

double TailModel::h(double x) const {
  check_derivative_domain(x);
  double s = 0.0;
  for (const auto& t : terms_) s += t.value(x);
  return s;
}

double TailModel::h_prime(double x) const {
  check_derivative_domain(x);
  double s = 0.0;
  for (const auto& t : terms_) s += t.d1(x);
  return s;
}

double TailModel::h_second(double x) const {
  check_derivative_domain(x);
  double s = 0.0;
  for (const auto& t : terms_) s += t.d2(x);
  return s;
}

double TailModel::H(double x) const {
  if (family_ == TailFamily::LogSquared) {
    check_derivative_domain(x);
    const double l = std::log(x);
    return 0.5 * l * l;
  }
  return c_ * std::pow(x, alpha_) + h(x);
}

double TailModel::H_prime(double x) const {
  if (family_ == TailFamily::LogSquared) {
    check_derivative_domain(x);
    return std::log(x) / x;
  }
  return scaled_pow(c_ * alpha_, x, alpha_ - 1.0) + h_prime(x);
}

double TailModel::H_second(double x) const {
  if (family_ == TailFamily::LogSquared) {
    check_derivative_domain(x);
    return (1.0 - std::log(x)) / (x * x);
  }
  return scaled_pow(c_ * alpha_ * (alpha_ - 1.0), x, alpha_ - 2.0) + h_second(x);
}

double TailModel::H_third(double x) const {
  if (family_ == TailFamily::LogSquared) {
    check_derivative_domain(x);
    return (2.0 * std::log(x) - 3.0) / (x * x * x);
  }
  check_derivative_domain(x);
  double s = scaled_pow(c_ * alpha_ * (alpha_ - 1.0) * (alpha_ - 2.0), x, alpha_ - 3.0);
  for (const auto& t : terms_) s += t.d3(x);
  return s;
}

double TailModel::H_increment(double a, double t) const {
  if (family_ == TailFamily::LogSquared) {
    // ((L + d)^2 - L^2) / 2 with d = log1p(t / a).
    const double l = std::log(a);
    const double d = std::log1p(t / a);
    return d * (l + 0.5 * d);
  }
  double s = c_ * pow_increment(a, t, alpha_);
  for (const auto& term : terms_) s += term.increment(a, t);
  return s;
}

double TailModel::log_sf(double x) const {
  if (!(x >= x0_)) throw DomainError(fmt::format("log_sf: x = {} below support x0 = {}", x, x0_));
  return -H_increment(x0_, x - x0_);
}

}  // namespace qgs
