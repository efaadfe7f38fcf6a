#pragma once

// Catalog of varieties X in P(H) and constructions of the degree-k complement
// I_k^perp = span{psi^{(x)k} : psi psi^* in X} inside S^k(H).

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "xtangle/common.hpp"
#include "xtangle/symalg.hpp"

namespace xtangle {

namespace variety {

/// Product states of C^{n_1} (x) ... (x) C^{n_m}.
struct Sep {
  std::vector<std::size_t> dims;
};
/// Bipartite states of Schmidt rank at most r.
struct SchmidtRank {
  int r = 1;
  std::size_t n1 = 1;
  std::size_t n2 = 1;
};
/// phi^{(x)m} inside S^m(C^n).
struct Bosonic {
  int m = 1;
  int n = 1;
};
/// Decomposable m-vectors (the Grassmannian) inside Lambda^m(C^n).
struct Fermionic {
  int m = 1;
  int n = 1;
};
/// Product across some non-trivial bipartition of the factors.
struct Bisep {
  std::vector<std::size_t> dims;
};
/// Product across some partition of the factors into exactly l blocks.
struct LSep {
  int l = 2;
  std::vector<std::size_t> dims;
};
/// Product across some partition of the factors into blocks of at most t factors.
struct TProd {
  int t = 1;
  std::vector<std::size_t> dims;
};
/// Schmidt rank at most r across every cut (1..j | j+1..m).
struct MPS {
  int r = 1;
  std::vector<std::size_t> dims;
};
/// Schmidt rank at most r across the cut (side | rest); upper approximation of PEPS/TNS.
struct SchmidtSurrogate {
  int r = 1;
  std::vector<std::size_t> dims;
  std::vector<std::size_t> side;
};

}  // namespace variety

class VarietySpec {
 public:
  using Kind = std::variant<variety::Sep, variety::SchmidtRank, variety::Bosonic, variety::Fermionic,
                            variety::Bisep, variety::LSep, variety::TProd, variety::MPS,
                            variety::SchmidtSurrogate>;

  /// Validates all invariants; throws InputError on violation.
  explicit VarietySpec(Kind kind);

  static VarietySpec sep(std::vector<std::size_t> dims);
  static VarietySpec schmidt_rank(int r, std::size_t n1, std::size_t n2);
  static VarietySpec bosonic(int m, int n);
  static VarietySpec fermionic(int m, int n);
  static VarietySpec bisep(std::vector<std::size_t> dims);
  static VarietySpec lsep(int l, std::vector<std::size_t> dims);
  static VarietySpec tprod(int t, std::vector<std::size_t> dims);
  static VarietySpec mps(int r, std::vector<std::size_t> dims);
  static VarietySpec surrogate(int r, std::vector<std::size_t> dims, std::vector<std::size_t> side);

  const Kind& kind() const { return kind_; }
  template <typename T>
  const T* as() const {
    return std::get_if<T>(&kind_);
  }

  /// Short family name used in JSON ("sep", "schmidt", "bosonic", ...).
  std::string family() const;
  /// Canonical text form; equal specs have equal keys.
  std::string key() const;
  std::size_t ambient_dim() const;
  /// Tensor-factor dimensions of H; a single factor for bosonic and fermionic spaces.
  std::vector<std::size_t> factor_dims() const;
  /// Degree of the defining equations used by membership tests.
  int generating_degree() const;

  friend bool operator==(const VarietySpec& a, const VarietySpec& b) { return a.key() == b.key(); }

 private:
  Kind kind_;
};

enum class Route { ClosedForm, Generators, Sampling };
std::string to_string(Route route);

/// Orthonormal basis of I_k^perp in H^{(x)k} coordinates.
struct IdealComplementBasis {
  VarietySpec spec;
  int k = 1;
  Matrix columns;
  Route route = Route::ClosedForm;
  /// Exact dimension from a closed formula, when one exists.
  std::optional<WideCount> predicted_dim;
  /// Sampling route only: rank fell short of predicted_dim.
  bool undersampled = false;
  std::uint64_t seed = 0;
  std::size_t num_samples = 0;

  std::size_t rank() const { return static_cast<std::size_t>(columns.cols()); }
};

/// Seed used whenever a caller does not supply one.
inline constexpr std::uint64_t kDefaultSeed = 20240611;

/// Haar-random unit vector in C^n.
Vector random_unit_vector(std::size_t n, std::mt19937_64& rng);

/// Random point of X (unit vector in ambient coordinates).
Vector sample_point(const VarietySpec& spec, std::mt19937_64& rng);
Vector sample_point(const VarietySpec& spec, std::uint64_t seed);

/// Whether psi psi^* lies in X to tolerance tol.
bool membership_check(const VarietySpec& spec, const Vector& psi, double tol = 1e-6,
                      const Limits& limits = {});

/// Exact dim I_k^perp when a closed formula exists.
std::optional<WideCount> predicted_dimension(const VarietySpec& spec, int k);

IdealComplementBasis ikperp_closed_form(const VarietySpec& spec, int k, const Limits& limits = {});

/// num_samples defaults to 1.5 * (predicted or dim S^k(H)) + 10.
IdealComplementBasis ikperp_sampling(const VarietySpec& spec, int k,
                                     std::optional<std::size_t> num_samples = std::nullopt,
                                     std::uint64_t seed = kDefaultSeed, const Limits& limits = {});

/// Degree-k component of the ideal generated by forms of degree d, and its complement.
struct GeneratorComponent {
  int d = 1;
  int k = 1;
  /// Orthonormal basis of I_k in S^k(H^*) pairing coordinates (monomial order of sym_basis).
  Matrix ideal_basis;
  /// Orthonormal basis of I_k^perp in H^{(x)k} coordinates.
  Matrix complement;
};

/// Each generator is a coefficient vector c over the monomials x^alpha of degree d, ordered as
/// occupations(N, d); the form is f(psi) = sum_alpha c_alpha psi^alpha.
GeneratorComponent ideal_component_from_generators(const std::vector<Vector>& generators, int d,
                                                   int N, int k, const Limits& limits = {});

/// Known defining forms for the catalog entries cut out by one family of equations
/// (minors, Veronese quadrics, Grassmannian quadrics for m = 2). Empty optional when none.
struct CatalogGenerators {
  int degree = 2;
  std::vector<Vector> forms;
};
std::optional<CatalogGenerators> catalog_generators(const VarietySpec& spec);

IdealComplementBasis ikperp_generators(const VarietySpec& spec, int k, const Limits& limits = {});

/// Cached basis built by the spec's default route (closed form; sampling with an exact
/// dimension certificate for fermionic specs). Safe for concurrent callers.
std::shared_ptr<const IdealComplementBasis> complement_basis(const VarietySpec& spec, int k,
                                                             const Limits& limits = {});
void clear_complement_cache();

/// Set partitions of {0..m-1}; blocks and their elements in increasing order.
using SetPartition = std::vector<std::vector<std::size_t>>;
std::vector<SetPartition> set_partitions(std::size_t m);
/// Partitions whose block products make up X for Sep/Bisep/LSep/TProd.
std::vector<SetPartition> admissible_partitions(const VarietySpec& spec);

/// Basis of (x)_i S^k(H_{B_i}) inside H^{(x)k} for a partition B of the factors.
Matrix block_symmetric_basis(const std::vector<std::size_t>& dims, const SetPartition& blocks,
                             int k, const Limits& limits = {});

/// m-subsets of {0..n-1} in lexicographic order; indexes the coordinates of Lambda^m(C^n).
std::vector<std::vector<int>> wedge_subsets(int n, int m);
/// Isometry Lambda^m(C^n) -> (C^n)^{(x)m} in the wedge_subsets coordinate order.
Matrix wedge_isometry(int n, int m, const Limits& limits = {});
/// Coordinates of v_1 ^ ... ^ v_m (columns of vs): the maximal minors of vs.
Vector wedge_coords(const Matrix& vs);

/// Singular values of psi reshaped as (factors in side) x (remaining factors).
RealVector flattening_singular_values(const Vector& psi, const std::vector<std::size_t>& dims,
                                      const std::vector<std::size_t>& side);

}  // namespace xtangle
