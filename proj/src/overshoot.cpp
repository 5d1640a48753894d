#include "qgs/overshoot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "qgs/error.hpp"

namespace qgs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kNewtonCap = 200;

// h-free inverse: ((c a^alpha + u) / c)^(1/alpha) - a, written without
// cancellation for u << c a^alpha.
double stretched_closed_form(double c, double alpha, double a, double u) {
  if (a == 0.0) return std::pow(u / c, 1.0 / alpha);
  return a * std::expm1(std::log1p(u / (c * std::pow(a, alpha))) / alpha);
}

// Relative size of the last term kept in the 1/H' expansion of f.
double expansion_remainder(const TailModel& m, double a) {
  const double d1 = m.H_prime(a);
  const double d2 = m.H_second(a);
  const double d3 = m.H_third(a);
  const double r = (3.0 * d2 * d2 - d1 * d3) / (d1 * d1 * d1 * d1);
  return std::isfinite(r) ? std::fabs(r) : kInf;
}

boost::math::quadrature::exp_sinh<double>& half_line_integrator() {
  static thread_local boost::math::quadrature::exp_sinh<double> integrator(12);
  return integrator;
}

}  // namespace

double overshoot_quantile(const TailModel& model, double a, double u) {
  if (!(a >= model.x0())) throw DomainError(fmt::format("overshoot at a = {} below x0 = {}", a, model.x0()));
  if (!(u >= 0.0)) throw DomainError(fmt::format("overshoot level u = {} must be >= 0", u));
  if (u == 0.0) return 0.0;
  if (std::isinf(u)) return kInf;

  if (model.family() == TailFamily::LogSquared) {
    // log(a + z) = sqrt(L^2 + 2u); the exponent difference is formed stably.
    const double l = std::log(a);
    const double d = 2.0 * u / (std::sqrt(l * l + 2.0 * u) + l);
    return a * std::expm1(d);
  }

  const double seed = stretched_closed_form(model.c(), model.alpha(), a, u);
  if (!model.has_correction()) return seed;

  const auto residual = [&](double z) { return model.H_increment(a, z) - u; };
  const double tol = 1e-12 * (1.0 + u);

  double lo = 0.0;
  double hi = seed > 0.0 ? seed : std::numeric_limits<double>::min();
  double r = residual(hi);
  if (std::fabs(r) < tol) return hi;
  if (r < 0.0) {
    int grow = 0;
    while (r <= 0.0) {
      lo = hi;
      hi *= 2.0;
      r = residual(hi);
      if (++grow > 4000 || !std::isfinite(hi))
        throw ConvergenceFailure(fmt::format("cannot bracket overshoot at a = {}, u = {}", a, u));
    }
  }

  double z = std::clamp(seed, lo, hi);
  if (z == lo || z == hi) z = 0.5 * (lo + hi);
  for (int it = 0; it < kNewtonCap; ++it) {
    r = residual(z);
    if (std::fabs(r) < tol) return z;
    if (r < 0.0) lo = z; else hi = z;
    const double slope = model.H_prime(a + z);
    double next = z - r / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == z || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) return next;
    z = next;
  }
  throw ConvergenceFailure(fmt::format("overshoot root-finder exceeded {} iterations (a = {}, u = {})",
                                       kNewtonCap, a, u));
}

OvershootFunctional::OvershootFunctional(TailModel model, QuadratureBudget budget)
    : model_(std::move(model)), budget_(budget), switch_point_(kInf) {
  // Scan nodes x0 + s, s geometric up to 1e15, for the first node beyond
  // which the expansion stays accurate.
  const GridSpec grid;
  std::vector<double> nodes{model_.x0()};
  for (double s = grid.first_step * std::max(1.0, model_.x0()); s < 1e15; s *= grid.ratio)
    nodes.push_back(model_.x0() + s);
  std::size_t first_good = nodes.size();
  for (std::size_t i = nodes.size(); i-- > 0;) {
    double rem = kInf;
    if (nodes[i] > 0.0 || model_.family() == TailFamily::Stretched) {
      try {
        rem = expansion_remainder(model_, nodes[i]);
      } catch (const DomainError&) {
        rem = kInf;
      }
    }
    if (!(rem < 1e-8)) break;
    first_good = i;
  }
  if (first_good < nodes.size()) {
    switch_point_ = nodes[first_good];
    const double q = expected_overshoot_quadrature(switch_point_);
    const double s = expected_overshoot_asymptotic(switch_point_);
    stitch_error_ = std::fabs(q - s) / q;
    if (!(stitch_error_ < 1e-6))
      throw QuadratureFailure(fmt::format(
          "expected-overshoot stitching at x* = {} off by {:.3e} relative", switch_point_, stitch_error_));
  }
}

double OvershootFunctional::moment(double a, int order) const {
  if (!(a >= model_.x0()))
    throw DomainError(fmt::format("expected overshoot at a = {} below x0 = {}", a, model_.x0()));
  const auto integrand = [&](double u) {
    const double weight = std::exp(-u);
    if (weight == 0.0) return 0.0;
    const double z = overshoot_quantile(model_, a, u);
    const double zp = order == 1 ? z : z * z;
    return zp == 0.0 ? 0.0 : zp * weight;
  };
  double error = 0.0;
  double l1 = 0.0;
  double value = 0.0;
  try {
    value = half_line_integrator().integrate(integrand, 0.0, kInf, budget_.tolerance, &error, &l1);
  } catch (const std::exception& e) {
    throw QuadratureFailure(fmt::format("overshoot moment {} at a = {}: {}", order, a, e.what()));
  }
  if (!(value > 0.0) || !(error <= budget_.accept_error * value))
    throw QuadratureFailure(fmt::format("overshoot moment {} at a = {}: value {} error estimate {}",
                                        order, a, value, error));
  return value;
}

double OvershootFunctional::expected_overshoot_quadrature(double a) const { return moment(a, 1); }

double OvershootFunctional::expected_overshoot_asymptotic(double a) const {
  const double d1 = model_.H_prime(a);
  const double d2 = model_.H_second(a);
  const double d3 = model_.H_third(a);
  const double q = d2 / (d1 * d1);
  const double r = (3.0 * d2 * d2 - d1 * d3) / (d1 * d1 * d1 * d1);
  return (1.0 - q + r) / d1;
}

double OvershootFunctional::expected_overshoot(double a) const {
  if (!(a >= model_.x0()))
    throw DomainError(fmt::format("expected overshoot at a = {} below x0 = {}", a, model_.x0()));
  return a >= switch_point_ ? expected_overshoot_asymptotic(a) : expected_overshoot_quadrature(a);
}

double OvershootFunctional::expected_overshoot_sq(double a) const { return moment(a, 2); }

double OvershootFunctional::sample(double a, RandomStream& rng) const {
  return overshoot_quantile(model_, a, rng.exponential());
}

// ---------------------------------------------------------------------------

GFunctional::GFunctional(OvershootFunctional fn, GridSpec spec) : fn_(std::move(fn)) {
  if (!(spec.first_step > 0.0) || !(spec.ratio > 1.0) || !(spec.y_max > 0.0))
    throw InvalidParameter("grid needs first_step > 0, ratio > 1, y_max > 0");
  const double x0 = fn_.model().x0();
  const auto inv_f = [this](double x) { return 1.0 / fn_.expected_overshoot(x); };

  x_.push_back(x0);
  f_.push_back(fn_.expected_overshoot(x0));
  G_.push_back(0.0);
  double s = spec.first_step * std::max(1.0, x0);
  while (G_.back() < spec.y_max) {
    const double a = x_.back();
    const double b = x0 + s;
    // Integrate on [-1, 1]: the library's termination test compares an
    // unscaled error estimate with a scaled tolerance.
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const auto unit = [&](double t) { return inv_f(mid + half * t); };
    double err = 0.0;
    const double piece =
        half * boost::math::quadrature::gauss_kronrod<double, 15>::integrate(unit, -1.0, 1.0, 12, 1e-12, &err);
    if (!(piece > 0.0) || !std::isfinite(piece))
      throw QuadratureFailure(fmt::format("G cell [{}, {}] integrated to {}", a, b, piece));
    x_.push_back(b);
    f_.push_back(fn_.expected_overshoot(b));
    G_.push_back(G_.back() + piece);
    s *= spec.ratio;
    if (x_.size() > 200000) throw QuadratureFailure("G grid did not reach y_max");
  }

  // Exact slopes 1/f, then Fritsch-Carlson limiting for a monotone interpolant.
  slope_.resize(x_.size());
  for (std::size_t i = 0; i < x_.size(); ++i) slope_[i] = 1.0 / f_[i];
  for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
    const double secant = (G_[i + 1] - G_[i]) / (x_[i + 1] - x_[i]);
    const double p = slope_[i] / secant;
    const double q = slope_[i + 1] / secant;
    const double norm = p * p + q * q;
    if (norm > 9.0) {
      const double t = 3.0 / std::sqrt(norm);
      slope_[i] = t * p * secant;
      slope_[i + 1] = t * q * secant;
    }
  }
}

std::size_t GFunctional::cell(double x) const {
  if (!(x >= x_.front() && x <= x_.back()))
    throw DomainError(fmt::format("G evaluated at x = {} outside [{}, {}]", x, x_.front(), x_.back()));
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - x_.begin());
  return i == 0 ? 0 : std::min(i - 1, x_.size() - 2);
}

double GFunctional::G_of(double x) const {
  const std::size_t i = cell(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * G_[i] + (t3 - 2 * t2 + t) * h * slope_[i] + (-2 * t3 + 3 * t2) * G_[i + 1] +
         (t3 - t2) * h * slope_[i + 1];
}

double GFunctional::G_prime(double x) const {
  const std::size_t i = cell(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t;
  return (6 * t2 - 6 * t) * G_[i] / h + (3 * t2 - 4 * t + 1) * slope_[i] + (-6 * t2 + 6 * t) * G_[i + 1] / h +
         (3 * t2 - 2 * t) * slope_[i + 1];
}

double GFunctional::G_inverse(double y) const {
  if (!(y >= 0.0 && y <= G_.back()))
    throw DomainError(fmt::format("G_inverse({}) outside [0, {}]", y, G_.back()));
  if (y == 0.0) return x_.front();
  auto it = std::lower_bound(G_.begin(), G_.end(), y);
  const std::size_t j = static_cast<std::size_t>(it - G_.begin());
  if (G_[j] == y) return x_[j];
  double lo = x_[j - 1];
  double hi = x_[j];
  double x = lo + (hi - lo) * (y - G_[j - 1]) / (G_[j] - G_[j - 1]);
  const double tol = 1e-13 * (1.0 + y);
  for (int it_count = 0; it_count < 100; ++it_count) {
    const double r = G_of(x) - y;
    if (std::fabs(r) < tol) return x;
    if (r < 0.0) lo = x; else hi = x;
    double next = x - r / G_prime(x);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x) return x;
    x = next;
  }
  return x;
}

}  // namespace qgs
