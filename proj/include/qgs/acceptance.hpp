#ifndef QGS_ACCEPTANCE_HPP
#define QGS_ACCEPTANCE_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace qgs {

/// One measured quantity and the bound it is held to.
struct Measurement {
  enum class Rule { Below, AtMost, AtLeast, Within, Info };
  std::string name;
  double value = 0.0;
  Rule rule = Rule::Info;
  double lo = 0.0;
  double hi = 0.0;

  bool passed() const;
  std::string describe() const;
};

Measurement below(std::string name, double value, double bound);
Measurement at_most(std::string name, double value, double bound);
Measurement at_least(std::string name, double value, double bound);
Measurement within(std::string name, double value, double lo, double hi);
Measurement info(std::string name, double value);

struct CriterionResult {
  int id = 0;
  std::string suite;
  std::string title;
  std::vector<Measurement> measurements;
  double seconds = 0.0;
  std::string error;  // set when the run threw

  bool passed() const;
  /// "PASS [n] suite: title" followed by one indented line per measurement.
  std::string report() const;
  nlohmann::ordered_json to_json() const;
};

struct AcceptanceOptions {
  std::uint64_t seed = 20240601;  // each suite offsets this by its id
  unsigned workers = 0;
};

struct Suite {
  int id = 0;
  std::string name;
  std::string title;
  std::function<CriterionResult(const AcceptanceOptions&)> body;

  /// Runs the body, stamps id/name/title/timing, converts exceptions into
  /// a failed result.
  CriterionResult run(const AcceptanceOptions& options) const;
};

const std::vector<Suite>& acceptance_suites();
/// nullptr when unknown.
const Suite* find_suite(std::string_view name);

}  // namespace qgs

#endif  // QGS_ACCEPTANCE_HPP
