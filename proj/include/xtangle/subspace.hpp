#pragma once

// X-tangled subspace certification, geometric-measure bounds and degree predictors.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xtangle/hierarchy.hpp"

namespace xtangle {

class Subspace {
 public:
  /// Columns must already be orthonormal (1e-10) with 1 <= s <= N.
  explicit Subspace(Matrix orthonormal_columns, std::string label = {});
  /// Orthonormalizes arbitrary spanning columns at relative tolerance tol.
  static Subspace span_of(const Matrix& columns, double tol = 1e-8, std::string label = {});

  const Matrix& basis() const { return basis_; }
  const std::string& label() const { return label_; }
  std::size_t ambient_dim() const { return static_cast<std::size_t>(basis_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(basis_.cols()); }
  Matrix projector() const { return basis_ * basis_.adjoint(); }

 private:
  Matrix basis_;
  std::string label_;
};

/// Orthonormal basis of S^k(U) inside H^{(x)k}; C(s+k-1, k) columns.
Matrix sym_power_basis(const Subspace& U, int k, const Limits& limits = {});

enum class CertVerdict { CertifiedTangled, Inconclusive };
std::string to_string(CertVerdict v);

struct CertificationResult {
  CertVerdict verdict = CertVerdict::Inconclusive;
  int k = 1;
  std::size_t complement_dim = 0;
  std::size_t sym_power_dim = 0;
  /// Numerical rank of [I_k^perp basis | S^k(U) basis].
  std::size_t rank = 0;
  RealVector singular_values;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double rank_tol = 1e-8;
  /// sigma_min within [tol, 10 tol] of sigma_max.
  bool borderline = false;
  bool rank_certified = false;
  /// lambda_max of the level-k compression of Pi_U.
  double nu = 0.0;
  bool nu_certified = false;
  bool empty_complement = false;
};

/// Throws ConsistencyError when the rank test and the nu_k < 1 - 1e-8 test disagree.
CertificationResult nullstellensatz_certify(const Subspace& U, const VarietySpec& spec, int k,
                                            const Limits& limits = {});

/// 1 - nu_k for the projector onto U; a lower bound on E_X(U). Equals 1 when I_k^perp = 0.
double gm_lower_bound(const Subspace& U, const VarietySpec& spec, int k, const Limits& limits = {});

struct SubspaceWitness {
  Matrix H;
  double mu = 0.0;
  double nu = 0.0;
  WitnessCertificate certificate;
};

/// H = 1 - mu Pi_U with mu = 1/nu_k; requires nu_k < 1 - 1e-8.
SubspaceWitness witness_from_subspace(const Subspace& U, const VarietySpec& spec, int k,
                                      const Limits& limits = {});

/// sqrt(max(0, gm_lower_bound)).
double robustness_radius(const Subspace& U, const VarietySpec& spec, int k, const Limits& limits = {});

struct RangeCriterionResult {
  CertificationResult certification;
  std::size_t image_dim = 0;
};

/// Certifies rho as X-tangled when Im(rho) is certified X-tangled.
RangeCriterionResult range_criterion(const Matrix& rho, const VarietySpec& spec, int k, const Limits& limits = {});

/// Validates a density operator: square, side N, Hermitian, PSD to 1e-8, trace 1 +- 1e-8.
void require_state(const Matrix& rho, std::size_t N, const char* who);

struct DegreeReport {
  VarietySpec spec;
  std::size_t N = 0;
  /// Degree of the generators the bounds refer to.
  int d = 2;
  /// Known worst-case degree; absent when none is known.
  std::optional<std::uint64_t> worst_case{};
  bool exact = false;
  bool upper_bound = false;
  /// Surrogate for a non-variety: certifies tanglement but not every tangled subspace.
  bool surrogate_caveat = false;
  std::optional<std::int64_t> regularity{};
  /// N(d-1)+1, valid for every catalog entry.
  std::uint64_t general_bound = 0;
  std::string note{};
};

DegreeReport worst_case_degree(const VarietySpec& spec);

struct GenericStep {
  int k = 1;
  WideCount complement_dim = 0;
  WideCount bound = 0;
  bool exact = true;
};

struct GenericDegree {
  std::size_t s = 1;
  std::optional<int> k;
  std::vector<GenericStep> steps;
  std::string note;
};

/// Smallest k <= k_cap with dim I_k^perp < C(N - s + k, k).
GenericDegree generic_degree(const VarietySpec& spec, std::size_t s, int k_cap = 12, const Limits& limits = {});

struct EquivalenceCheck {
  bool agree = false;
  bool rank_certified = false;
  bool nu_certified = false;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double nu = 0.0;
  bool borderline = false;
};

EquivalenceCheck equivalence_crosscheck(const Subspace& U, const VarietySpec& spec, int k, const Limits& limits = {});

}  // namespace xtangle
