#pragma once

// Level-k X-tension feasibility: find sigma_k >= 0 with image in I_k^perp and
// Tr_{k-1}(sigma_k) = rho, or a verified witness that none exists.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xtangle/hierarchy.hpp"

namespace xtangle {

struct Tension {
  VarietySpec spec;
  int k = 1;
  /// sigma_k = B Sigma B^* with B the complement basis.
  Matrix Sigma;
  Matrix rho;
  std::shared_ptr<const IdealComplementBasis> basis;

  Matrix sigma() const { return basis->columns * Sigma * basis->columns.adjoint(); }
};

/// Tr over copies 2..k of B Sigma B^*, computed without forming sigma_k.
Matrix tension_marginal(const Matrix& B, const Matrix& Sigma, std::size_t N, int k);

/// Checks PSD (>= -1e-8), trace 1 +- 1e-8 and the marginal against rho entrywise at tol.
bool verify_tension(const Tension& T, double tol = 1e-6);

/// The level-(k-1) tension obtained by tracing out one copy (k >= 2).
Tension reduce_tension(const Tension& T, const Limits& limits = {});

/// True iff Tr(W rho) < nu_min(W, spec, k) - margin.
bool verify_infeasibility_certificate(const Matrix& W, const Matrix& rho, const VarietySpec& spec, int k,
                                      double margin = 1e-6, const Limits& limits = {});

enum class TensionVerdict { Feasible, Infeasible, Undetermined };
std::string to_string(TensionVerdict v);

struct TensionOptions {
  int max_iters = 20000;
  /// Affine residual at which the iteration counts as converged; the cleaned
  /// solution is re-verified at 10 * tol.
  double tol = 1e-7;
  /// Required gap for a reported witness.
  double witness_margin = 1e-6;
};

struct TensionResult {
  TensionVerdict verdict = TensionVerdict::Undetermined;
  std::optional<Tension> tension;
  std::optional<Matrix> witness;
  /// nu_min(W) - Tr(W rho) for the reported witness.
  double witness_gap = 0.0;
  std::string witness_kind;
  int iterations = 0;
  double affine_residual = 0.0;
  double psd_gap = 0.0;
  /// Dimension of the face I_k^perp cap S^k(Im rho) the search ran on.
  std::size_t face_dim = 0;
  std::size_t complement_dim = 0;
  TensionOptions options;
  std::string note;
};

TensionResult tension_feasibility(const Matrix& rho, const VarietySpec& spec, int k, const TensionOptions& options = {},
                                  const Limits& limits = {});

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// Trace-distance bound from a (k, X)-tendable state to the X-arable set; Sep, Bosonic, Fermionic only.
Rational definetti_bound(const VarietySpec& spec, int k);

}  // namespace xtangle
