#ifndef MIXFRAC_RUNNER_HPP
#define MIXFRAC_RUNNER_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mixfrac/maxprinciple.hpp"
#include "mixfrac/measure.hpp"

namespace mixfrac::runner {

struct SpectrumTask {
  enum class Method { Both, Direct, Recursive };
  int k = 1;
  Method method = Method::Both;
};

struct MaxPrincipleTask {
  int trials = 100;
  std::uint64_t seed = 0;
};

struct CounterexampleTask {
  double alpha = 1;
  double s = 0.5;
  Convention convention = Convention::Paper;
};

using Task = std::variant<SpectrumTask, MaxPrincipleTask, CounterexampleTask>;

struct RunConfig {
  double domain_a = 0;
  double domain_b = 1;
  Index grid_n = 2;
  SignedMeasure<double> measure;
  std::vector<Task> tasks;
  std::string out_dir = "out";
  bool emit_svg = false;
};

/// Parses and schema-validates a config document; unknown keys are rejected.
/// Throws ConfigError on any structural or value problem.
RunConfig parse_config(const std::string& json_text);
RunConfig parse_config_file(const std::string& path);

struct RunOptions {
  std::string config_path;
  bool force = false;
  std::optional<std::string> out_dir;  // overrides the config's output.dir
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitHypothesisViolation = 2;
inline constexpr int kExitNumericalFailure = 3;

/// Executes the config's tasks in order and writes the CSV/JSON/SVG outputs.
/// Returns the exit code; diagnostics go to err as single machine-parseable
/// lines, progress summaries to out.
int run(const RunOptions& options, std::ostream& out, std::ostream& err);
int run(const RunOptions& options);

/// 17-significant-digit float formatting used in every emitted file
/// (round-trip exact).
std::string format_value(double v);

}  // namespace mixfrac::runner

#endif  // MIXFRAC_RUNNER_HPP
