#ifndef QGS_TAIL_MODEL_HPP
#define QGS_TAIL_MODEL_HPP

#include <string>
#include <vector>

namespace qgs {

/// One term of the lower-order correction h(x) in H(x) = c x^alpha + h(x).
struct HTerm {
  enum class Kind { PowerLog, Power, Constant };

  Kind kind = Kind::Constant;
  double kappa = 0.0;
  double gamma = 0.0;  // Power only

  static HTerm power_log(double kappa) { return {Kind::PowerLog, kappa, 0.0}; }
  static HTerm power(double kappa, double gamma) { return {Kind::Power, kappa, gamma}; }
  static HTerm constant(double value) { return {Kind::Constant, value, 0.0}; }

  double value(double x) const;
  double d1(double x) const;
  double d2(double x) const;
  double d3(double x) const;
  /// value(a + t) - value(a) without cancellation.
  double increment(double a, double t) const;

  friend bool operator==(const HTerm&, const HTerm&) = default;
};

std::string to_string(HTerm::Kind kind);

/// Tail family. Stretched covers the whole c x^alpha + h(x) catalog;
/// LogSquared is the dedicated 1 - F(x) = exp(-(log x)^2 / 2), x >= 1 model,
/// whose expected overshoot grows like x / log x.
enum class TailFamily { Stretched, LogSquared };

/// Survival function 1 - F(x) = r exp(-H(x)) on [x0, inf), with r fixed so
/// that the tail is conditioned to start at x0: log_sf(x0) == 0.
///
/// Immutable after construction.
class TailModel {
 public:
  /// Validated catalog model. Throws InvalidParameter for nonpositive c or
  /// alpha (or negative x0), ConstraintViolation if a Power term has
  /// gamma outside (0, alpha), a PowerLog term is used with x0 == 0, or
  /// H' fails to be positive on (x0, inf).
  static TailModel make(double c, double alpha, std::vector<HTerm> terms, double x0);

  static TailModel log_squared();

  // Presets addressable by name from config files.
  static TailModel exponential() { return make(1.0, 1.0, {}, 0.0); }
  static TailModel stretched(double alpha) { return make(1.0, alpha, {}, 0.0); }
  static TailModel normal();

  TailFamily family() const { return family_; }
  double c() const { return c_; }
  double alpha() const { return alpha_; }
  double x0() const { return x0_; }
  /// Normalization: log r = H(x0), so log(1 - F(x)) = log r - H(x).
  double log_r() const { return log_r_; }
  const std::vector<HTerm>& terms() const { return terms_; }

  /// True when h carries a non-constant term (constants only shift r).
  bool has_correction() const;

  double H(double x) const;
  double H_prime(double x) const;
  double H_second(double x) const;
  double H_third(double x) const;

  double h(double x) const;
  double h_prime(double x) const;
  double h_second(double x) const;

  /// H(a + t) - H(a), accurate to a few ulps of the result even when t << a.
  double H_increment(double a, double t) const;

  /// log(1 - F(x)) = -(H(x) - H(x0)). Throws DomainError for x < x0.
  double log_sf(double x) const;

  friend bool operator==(const TailModel&, const TailModel&) = default;

 private:
  TailModel() = default;
  void check_derivative_domain(double x) const;

  TailFamily family_ = TailFamily::Stretched;
  double c_ = 1.0;
  double alpha_ = 1.0;
  std::vector<HTerm> terms_;
  double x0_ = 0.0;
  double log_r_ = 0.0;
};

}  // namespace qgs

#endif  // QGS_TAIL_MODEL_HPP
