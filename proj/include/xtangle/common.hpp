#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace xtangle {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Unsigned 128-bit integer used for exact dimension formulas.
using WideCount = unsigned __int128;

/// Size guardrail and rank policy shared by every construction in H^{(x)k}.
struct Limits {
  /// Maximum number of dense matrix entries any single construction may allocate.
  std::size_t max_entries = 4'000'000;
  /// Relative singular-value threshold: rank counts sigma > rank_tol * sigma_max.
  double rank_tol = 1e-8;
};

class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public InputError {
 public:
  using InputError::InputError;
};

class CapExceeded : public std::runtime_error {
 public:
  CapExceeded(const std::string& what, std::size_t requested, std::size_t cap)
      : std::runtime_error("size cap exceeded for " + what + ": " + std::to_string(requested) +
                           " entries requested, cap is " + std::to_string(cap)),
        requested_(requested),
        cap_(cap) {}
  std::size_t requested() const noexcept { return requested_; }
  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t requested_;
  std::size_t cap_;
};

class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// Two independent computations that must agree did not.
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checked arithmetic on WideCount.
WideCount checked_mul(WideCount a, WideCount b);
WideCount checked_add(WideCount a, WideCount b);
std::string to_string(WideCount value);

/// Integer power with overflow detection; throws CapExceeded-style OverflowError.
std::size_t checked_pow(std::size_t base, int exponent);

/// Throws CapExceeded when rows * cols exceeds limits.max_entries.
void check_cap(const std::string& what, std::size_t rows, std::size_t cols, const Limits& limits);

/// Records the largest request passed to check_cap on this thread during its lifetime.
/// Lets cached results replay the cap check their construction performed.
class CapProbe {
 public:
  CapProbe();
  ~CapProbe();
  CapProbe(const CapProbe&) = delete;
  CapProbe& operator=(const CapProbe&) = delete;
  std::size_t peak() const { return peak_; }
  const std::string& what() const { return what_; }
  void record(const std::string& what, std::size_t requested);

 private:
  CapProbe* outer_;
  std::size_t peak_ = 0;
  std::string what_;
};

}  // namespace xtangle
