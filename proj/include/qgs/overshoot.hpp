#ifndef QGS_OVERSHOOT_HPP
#define QGS_OVERSHOOT_HPP

#include <cstddef>
#include <vector>

#include "qgs/random.hpp"
#include "qgs/tail_model.hpp"

namespace qgs {

/// Inverse-transform kernel for the overshoot Z(a) = X - a | X > a.
///
/// Returns z >= 0 with H(a + z) - H(a) = u. Closed form when h is empty or
/// for the log-squared family; otherwise safeguarded Newton on the increasing
/// map z -> H(a + z) - H(a), seeded by the h-free closed form and stopped at
/// |residual| < 1e-12 (1 + u). Throws ConvergenceFailure past the iteration
/// cap, DomainError for a < x0 or u < 0.
double overshoot_quantile(const TailModel& model, double a, double u);

struct QuadratureBudget {
  double tolerance = 1e-12;     // relative, passed to the exp-sinh integrator
  double accept_error = 1e-9;   // reject results whose error estimate exceeds this (relative)
};

/// Expected overshoot f(a) = E Z(a) and its second moment.
///
/// Below the switch point x*, both moments come from the representation
/// Z(a) = z(a, E), E ~ Exp(1), integrated against e^-u on [0, inf); no
/// tail probability is ever formed, so nothing underflows. Above x*, f uses
/// the expansion 1/H' - H''/H'^3 + (3 H''^2 - H' H''') / H'^5. x* is the
/// smallest grid node from which on the last expansion term is below 1e-8
/// relative; stitching at x* is checked at construction.
class OvershootFunctional {
 public:
  explicit OvershootFunctional(TailModel model, QuadratureBudget budget = {});

  const TailModel& model() const { return model_; }
  double switch_point() const { return switch_point_; }
  double stitch_error() const { return stitch_error_; }

  double expected_overshoot(double a) const;
  double expected_overshoot_sq(double a) const;

  double expected_overshoot_quadrature(double a) const;
  double expected_overshoot_asymptotic(double a) const;

  /// Exact draw from Z(a).
  double sample(double a, RandomStream& rng) const;

 private:
  double moment(double a, int order) const;

  TailModel model_;
  QuadratureBudget budget_;
  double switch_point_;
  double stitch_error_ = 0.0;
};

inline double sample_overshoot(const OvershootFunctional& fn, double a, RandomStream& rng) {
  return fn.sample(a, rng);
}

/// Nodes x0 + s_i with s_0 = 0, s_1 = first_step, s_{i+1} = ratio * s_i.
struct GridSpec {
  double first_step = 1e-6;
  double ratio = 1.02;
  double y_max = 64.0;  // extend until G reaches this
};

/// G(x) = integral_{x0}^{x} 1/f(u) du, tabulated and interpolated.
///
/// Each cell integral is adaptive Gauss-Kronrod on the exact 1/f. Between
/// nodes G is a monotone cubic Hermite using the exact slopes 1/f(x_i).
class GFunctional {
 public:
  explicit GFunctional(OvershootFunctional fn, GridSpec spec = {});

  const OvershootFunctional& overshoot() const { return fn_; }

  /// Throws DomainError for x outside [x0, last node].
  double G_of(double x) const;
  double G_prime(double x) const;
  /// Solves G(x) = y; |G(result) - y| < 1e-9 (1 + y). DomainError outside [0, y_max].
  double G_inverse(double y) const;

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  double y_max() const { return G_.back(); }

  const std::vector<double>& nodes() const { return x_; }
  const std::vector<double>& f_values() const { return f_; }
  const std::vector<double>& G_values() const { return G_; }

 private:
  std::size_t cell(double x) const;

  OvershootFunctional fn_;
  std::vector<double> x_;
  std::vector<double> f_;
  std::vector<double> G_;
  std::vector<double> slope_;  // limited Hermite slopes
};

}  // namespace qgs

#endif  // QGS_OVERSHOOT_HPP
