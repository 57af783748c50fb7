#ifndef MIXFRAC_COMMON_HPP
#define MIXFRAC_COMMON_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>

namespace mixfrac {

using Index = Eigen::Index;

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A structural hypothesis on the measure fails and the caller did not force.
struct HypothesisViolation : Error {
  using Error::Error;
};

struct GridMismatch : Error {
  using Error::Error;
};

/// The assembled quadratic form is not positive definite.
struct IndefiniteForm : Error {
  using Error::Error;
};

struct SingularSystem : Error {
  using Error::Error;
};

/// Adaptive quadrature ran out of its evaluation budget.
struct NonConvergence : Error {
  using Error::Error;
};

/// An iterative solver exceeded its iteration cap.
struct ConvergenceFailure : Error {
  using Error::Error;
};

struct NotFound : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Deterministic, platform-independent uniform generator. std::mt19937_64 is
/// pinned by the standard but the distributions are not, so the mapping to
/// doubles is done by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // warm up so that small seeds decorrelate
    detail::splitmix64(state_);
    detail::splitmix64(state_);
  }

  /// Independent stream for a given index (deterministic per (seed, index)).
  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed;
    std::uint64_t mixed = detail::splitmix64(s) ^ (0xA24BAED4963EE407ULL * (index + 1));
    return Rng(mixed);
  }

  std::uint64_t next_u64() { return detail::splitmix64(state_); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform in [-1, 1).
  double symmetric() { return 2.0 * uniform() - 1.0; }

 private:
  std::uint64_t state_;
};

/// Worker-thread cap: MIXFRAC_THREADS if set and positive, else all cores.
inline unsigned thread_cap() {
  if (const char* env = std::getenv("MIXFRAC_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

}  // namespace mixfrac

#endif  // MIXFRAC_COMMON_HPP
