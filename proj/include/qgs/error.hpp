#ifndef QGS_ERROR_HPP
#define QGS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace qgs {

// Every failure raised by the library derives from Error so callers (the CLI
// in particular) can map the whole family onto one exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define QGS_DEFINE_ERROR(Name)                                       \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& what) : Error(what) {}          \
    const char* kind() const noexcept override { return #Name; }     \
  };

QGS_DEFINE_ERROR(InvalidParameter)
QGS_DEFINE_ERROR(ConstraintViolation)
QGS_DEFINE_ERROR(DomainError)
QGS_DEFINE_ERROR(QuadratureFailure)
QGS_DEFINE_ERROR(ConvergenceFailure)
QGS_DEFINE_ERROR(ThresholdBelowSupport)
QGS_DEFINE_ERROR(Overflow)
QGS_DEFINE_ERROR(InvalidTruncation)
QGS_DEFINE_ERROR(TooFewSamples)
QGS_DEFINE_ERROR(InsufficientData)
QGS_DEFINE_ERROR(ConfigError)

#undef QGS_DEFINE_ERROR

}  // namespace qgs

#endif  // QGS_ERROR_HPP
