#pragma once

// Symmetric-algebra and dense linear-algebra substrate.
//
// Index conventions used throughout the library:
//   * H = H_1 (x) ... (x) H_m is indexed row-major, factor 1 most significant.
//   * H^{(x)k} is indexed row-major, copy 1 most significant.
//   * S^k(C^N) is indexed by occupation vectors (MultiIndex) in the order
//     produced by occupations(N, k): lexicographic on the sorted index string,
//     so for N = 2, k = 2 the order is e0e0, sym(e0e1), e1e1.

#include <cstddef>
#include <span>
#include <vector>

#include "xtangle/common.hpp"

namespace xtangle {

/// Occupation numbers of the N basis vectors of H; degree k is their sum.
struct MultiIndex {
  std::vector<int> occupations;

  int degree() const;
  friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;
};

/// Integer partition with non-increasing positive parts.
struct Partition {
  std::vector<int> parts;

  explicit Partition(std::vector<int> p);
  int weight() const;
  int length() const { return static_cast<int>(parts.size()); }
  friend bool operator==(const Partition&, const Partition&) = default;
};

/// Dense complex operator with an optional tensor-factor annotation.
struct DenseOperator {
  Matrix matrix;
  /// Factor dimensions whose product is the side length; empty when unannotated.
  std::vector<std::size_t> factor_dims;

  std::size_t side() const { return static_cast<std::size_t>(matrix.rows()); }
};

/// Occupation basis of S^k(C^N) with the sqrt-multinomial normalizations.
struct SymBasis {
  int N = 0;
  int k = 0;
  std::vector<MultiIndex> indices;
  /// sqrt(k! / alpha!) for each index: the number of tensor strings is its square.
  std::vector<double> norms;

  std::size_t size() const { return indices.size(); }
};

// ---- combinatorics (exact) ----

WideCount binomial(std::int64_t n, std::int64_t k);
WideCount factorial(int n);
WideCount multinomial(const MultiIndex& alpha);

/// All occupation vectors of length N summing to k, in canonical order.
std::vector<MultiIndex> occupations(int N, int k);
/// Position of alpha inside occupations(N, degree) without materializing the list.
std::size_t occupation_rank(const MultiIndex& alpha);
/// The sorted index string e_{i1} <= ... <= e_{ik} represented by alpha.
std::vector<int> index_string(const MultiIndex& alpha);

/// Partitions of k with at most max_rows parts, reverse-lexicographic order.
std::vector<Partition> partitions(int k, int max_rows);
/// Hook length of every box, row by row.
std::vector<std::vector<int>> hook_lengths(const Partition& lambda);
/// Dimension of the unitary-group irrep S^lambda(C^n) (hook-content formula).
WideCount schur_dim(const Partition& lambda, int n);
/// Dimension of the symmetric-group irrep indexed by lambda (hook-length formula).
WideCount symmetric_group_dim(const Partition& lambda);
/// dim S^{(k,...,k)}(C^n) with m equal rows, evaluated by the rectangular product formula.
WideCount rect_schur_dim(int k, int m, int n);

// ---- symmetric and antisymmetric subspaces ----

SymBasis sym_basis(int N, int k, const Limits& limits = {});

/// Inclusion S^k(C^N) -> (C^N)^{(x)k} applied to occupation coordinates.
Vector inject_symmetric(const Vector& v, const SymBasis& basis, const Limits& limits = {});
/// Adjoint of inject_symmetric; a left inverse on symmetric tensors.
Vector project_symmetric(const Vector& w, const SymBasis& basis);
/// Isometry matrix (N^k x dim S^k) whose columns are the injected basis vectors.
Matrix sym_isometry(const SymBasis& basis, const Limits& limits = {});
/// Orthogonal projection onto S^k(C^N) inside (C^N)^{(x)k}.
DenseOperator sym_projector(int N, int k, const Limits& limits = {});
/// Orthogonal projection onto Lambda^k(C^n) inside (C^n)^{(x)k}.
DenseOperator antisym_projector(int n, int k, const Limits& limits = {});

/// Coordinates of psi^{(x)k} in the occupation basis: sqrt(k!/alpha!) psi^alpha.
Vector symmetric_power_coords(const Vector& psi, const SymBasis& basis);
/// psi^{(x)k} as a dense vector of length N^k.
Vector tensor_power(const Vector& psi, int k, const Limits& limits = {});
Vector kron(const Vector& a, const Vector& b);
Matrix kron(const Matrix& a, const Matrix& b);

// ---- tensor index bookkeeping ----

/// Index permutation p for H^{(x)k} with H = (x)_i C^{dims[i]}: the entry at copy-major
/// position t moves to position p[t] of the factor-major layout
/// H_1^{(x)k} (x) ... (x) H_m^{(x)k}.
std::vector<std::size_t> reshuffle(std::span<const std::size_t> dims, int k,
                                   const Limits& limits = {});
std::vector<std::size_t> invert_permutation(std::span<const std::size_t> perm);
/// out[perm[i]] = in[i].
Vector apply_permutation(const Vector& in, std::span<const std::size_t> perm);

/// Permutation of tensor factors: the output has factors in the order `order`,
/// i.e. output factor j is input factor order[j]. Returned as an index map as above.
std::vector<std::size_t> factor_permutation(std::span<const std::size_t> dims,
                                            std::span<const std::size_t> order);

/// Partial trace over the factors listed in traced (indices into factor_dims).
DenseOperator partial_trace(const DenseOperator& A, std::span<const std::size_t> traced);

// ---- numerical linear algebra ----

struct OrthonormalSpan {
  Matrix basis;                 ///< orthonormal columns spanning the input
  std::size_t rank = 0;
  RealVector singular_values;   ///< all singular values, descending
};

/// Orthonormal basis of the column span at relative tolerance tol.
OrthonormalSpan span_orthonormalize(const Matrix& columns, double tol = 1e-8);

/// Orthonormal basis of ker(M) at relative tolerance tol (all of C^cols when M = 0).
Matrix null_space(const Matrix& M, double tol = 1e-8);

struct EigExtremes {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  Vector v_min;
  Vector v_max;
};

bool is_hermitian(const Matrix& A, double tol = 1e-10);
/// Extremal eigenpairs of a Hermitian matrix; rejects non-Hermitian input.
EigExtremes eig_extremes(const Matrix& A);

/// Projection onto the PSD cone (eigenvalue clipping), Hermitian part taken first.
Matrix psd_clip(const Matrix& A);

}  // namespace xtangle
