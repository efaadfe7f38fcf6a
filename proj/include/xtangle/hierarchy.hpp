#pragma once

// Level-k eigencomputations: nu_k = extremal eigenvalue of Pi_{I,k} (H (x) 1^{(x)k-1}) Pi_{I,k},
// and the Hermitian-form variant built from a form on S^d(H).

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xtangle/varieties.hpp"

namespace xtangle {

/// The compressed operator B^* (H (x) 1) B in complement-basis coordinates.
struct LevelOperator {
  VarietySpec spec;
  int k = 1;
  Matrix matrix;
  std::shared_ptr<const IdealComplementBasis> basis;

  bool empty() const { return matrix.rows() == 0; }
};

/// (G (x) 1^{(x)k-d}) applied to the columns of B, where G acts on the first d copies.
Matrix apply_leading_copies(const Matrix& G, const Matrix& B, std::size_t N, int d, int k);

LevelOperator level_operator(const Matrix& H, const VarietySpec& spec, int k, const Limits& limits = {});

/// Extremal level value. An empty complement yields -inf (max) or +inf (min) with the flag set.
struct LevelValue {
  double value = 0.0;
  bool empty_complement = false;
  /// Extremal eigenvector in H^{(x)k} coordinates (empty when the complement is empty).
  Vector vector;
};

LevelValue nu_max(const Matrix& H, const VarietySpec& spec, int k, const Limits& limits = {});
LevelValue nu_min(const Matrix& H, const VarietySpec& spec, int k, const Limits& limits = {});

enum class Direction { Max, Min };
std::string to_string(Direction d);

struct HierarchyLevel {
  int k = 1;
  double nu = 0.0;
  bool empty_complement = false;
  std::size_t complement_dim = 0;
};

struct HierarchyTrace {
  Direction direction = Direction::Max;
  std::vector<HierarchyLevel> levels;
  /// Max: non-increasing; min: non-decreasing (slack 1e-8).
  bool monotone = true;
  /// Tightest one-sided bound reached (last level).
  double final_bound = 0.0;
  bool truncated = false;
  std::string warning;
};

/// Runs k = 1..k_max; a cap error at some level truncates the trace with a warning.
HierarchyTrace optimize_over_variety(const Matrix& H, const VarietySpec& spec, int k_max, Direction direction,
                                     const Limits& limits = {});

struct WitnessCertificate {
  Matrix H;
  int k = 1;
  double nu_min = 0.0;
  bool empty_complement = false;
  /// Eigenvalues of H below -1e-10, ascending.
  std::vector<double> negative_eigenvalues;
  bool certified = false;
};

/// Certified iff nu_min(H, spec, k) >= -1e-10 and H has an eigenvalue below -1e-10.
WitnessCertificate witness_certify(const Matrix& H, const VarietySpec& spec, int k, const Limits& limits = {});

/// Hermitian form H(z, z^*) = (z^{(x)d})^* G z^{(x)d} with G = V Hform V^*, Hform given on S^d(H)
/// occupation coordinates. Returns nu_k = lambda_min of the compression of (G (x) 1^{(x)k-d}).
LevelValue hermitian_form_level(const Matrix& Hform, int d, const VarietySpec& spec, int k,
                                const Limits& limits = {});
/// d recovered from the side length of Hform.
int form_degree(std::size_t side, std::size_t N);

/// H_k = P - Q with P PSD on S^k(H) and Q PSD supported on the coordinate image of I_k.
struct HsosDecomposition {
  bool success = false;
  std::string reason;
  double level_value = 0.0;
  /// All three in S^k(H) occupation coordinates.
  Matrix Hk;
  Matrix P;
  Matrix Q;
  double residual = 0.0;
  double p_min_eigenvalue = 0.0;
  double q_min_eigenvalue = 0.0;
};

HsosDecomposition hsos_decompose(const Matrix& Hform, int d, const VarietySpec& spec, int k,
                                 const Limits& limits = {});

}  // namespace xtangle
