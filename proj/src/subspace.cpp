#include "xtangle/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace xtangle {

Subspace::Subspace(Matrix orthonormal_columns, std::string label)
    : basis_(std::move(orthonormal_columns)), label_(std::move(label)) {
  const auto s = basis_.cols();
  if (s < 1 || s > basis_.rows()) throw InputError("subspace dimension must satisfy 1 <= s <= N");
  const double err = (basis_.adjoint() * basis_ - Matrix::Identity(s, s)).cwiseAbs().maxCoeff();
  if (err > 1e-10) throw InputError("subspace columns are not orthonormal (error " + std::to_string(err) + ")");
}

Subspace Subspace::span_of(const Matrix& columns, double tol, std::string label) {
  auto span = span_orthonormalize(columns, tol);
  if (span.rank == 0) throw InputError("subspace columns span the zero space");
  return Subspace(std::move(span.basis), std::move(label));
}

Matrix sym_power_basis(const Subspace& U, int k, const Limits& limits) {
  if (k < 1) throw InputError("level k must be >= 1");
  const std::size_t N = U.ambient_dim();
  const std::size_t s = U.dim();
  const SymBasis inner = sym_basis(static_cast<int>(s), k, limits);
  const std::size_t total = checked_pow(N, k);
  check_cap("symmetric power of subspace", total, inner.size(), limits);
  check_cap("subspace tensor power", total, checked_pow(s, k), limits);
  // U^{(x)k} applied to the occupation basis of S^k(C^s), built one copy at a time
  Matrix cols = sym_isometry(inner, limits);  // s^k x C
  std::size_t done = 0;                        // copies already mapped into H
  while (done < static_cast<std::size_t>(k)) {
    // current row index = (mapped copies in C^N) x (unmapped copies in C^s)
    const std::size_t left = checked_pow(N, static_cast<int>(done));
    const std::size_t right = checked_pow(s, k - static_cast<int>(done) - 1);
    Matrix next(static_cast<Eigen::Index>(left * N * right), cols.cols());
    for (Eigen::Index c = 0; c < cols.cols(); ++c) {
      for (std::size_t a = 0; a < left; ++a) {
        Eigen::Map<const Matrix> X(cols.col(c).data() + a * s * right, static_cast<Eigen::Index>(right),
                                   static_cast<Eigen::Index>(s));
        Eigen::Map<Matrix> Y(next.col(c).data() + a * N * right, static_cast<Eigen::Index>(right),
                             static_cast<Eigen::Index>(N));
        Y.noalias() = X * U.basis().transpose();
      }
    }
    cols = std::move(next);
    ++done;
  }
  return cols;
}

std::string to_string(CertVerdict v) {
  return v == CertVerdict::CertifiedTangled ? "certified_tangled" : "inconclusive";
}

namespace {

CertificationResult run_tests(const Subspace& U, const VarietySpec& spec, int k, const Limits& limits) {
  if (U.ambient_dim() != spec.ambient_dim()) {
    throw DimensionMismatch("subspace ambient dimension " + std::to_string(U.ambient_dim()) +
                            " does not match the variety's " + std::to_string(spec.ambient_dim()));
  }
  CertificationResult r;
  r.k = k;
  r.rank_tol = limits.rank_tol;
  const auto basis = complement_basis(spec, k, limits);
  const Matrix S = sym_power_basis(U, k, limits);
  r.complement_dim = basis->rank();
  r.sym_power_dim = static_cast<std::size_t>(S.cols());
  r.empty_complement = r.complement_dim == 0;
  const auto cols = static_cast<Eigen::Index>(r.complement_dim + r.sym_power_dim);
  check_cap("certification system", static_cast<std::size_t>(S.rows()), static_cast<std::size_t>(cols), limits);
  Matrix M(S.rows(), cols);
  M << basis->columns, S;
  r.singular_values = Eigen::JacobiSVD<Matrix>(M).singularValues();
  r.sigma_max = r.singular_values(0);
  r.sigma_min = r.singular_values(r.singular_values.size() - 1);
  for (Eigen::Index i = 0; i < r.singular_values.size(); ++i)
    if (r.singular_values(i) > limits.rank_tol * r.sigma_max) ++r.rank;
  // a tall system keeps all its singular values; a wide one has rank <= rows < cols
  if (M.rows() < M.cols()) r.sigma_min = 0.0;
  r.rank_certified = r.rank == static_cast<std::size_t>(cols) && M.rows() >= M.cols();
  r.borderline = r.sigma_min >= limits.rank_tol * r.sigma_max && r.sigma_min <= 10.0 * limits.rank_tol * r.sigma_max;

  if (r.empty_complement) {
    r.nu = -std::numeric_limits<double>::infinity();
    r.nu_certified = true;
  } else {
    const auto op = level_operator(U.projector(), spec, k, limits);
    r.nu = eig_extremes(op.matrix).lambda_max;
    r.nu_certified = r.nu < 1.0 - 1e-8;
  }
  r.verdict = r.rank_certified && r.nu_certified ? CertVerdict::CertifiedTangled : CertVerdict::Inconclusive;
  return r;
}

}  // namespace

CertificationResult nullstellensatz_certify(const Subspace& U, const VarietySpec& spec, int k, const Limits& limits) {
  auto r = run_tests(U, spec, k, limits);
  if (r.rank_certified != r.nu_certified) {
    throw ConsistencyError("rank test (sigma_min = " + std::to_string(r.sigma_min) + ") and eigen test (nu = " +
                           std::to_string(r.nu) + ") disagree at k = " + std::to_string(k) +
                           (r.borderline ? " (borderline rank)" : ""));
  }
  return r;
}

EquivalenceCheck equivalence_crosscheck(const Subspace& U, const VarietySpec& spec, int k, const Limits& limits) {
  const auto r = run_tests(U, spec, k, limits);
  return EquivalenceCheck{r.rank_certified == r.nu_certified, r.rank_certified, r.nu_certified, r.sigma_min,
                          r.sigma_max, r.nu, r.borderline};
}

double gm_lower_bound(const Subspace& U, const VarietySpec& spec, int k, const Limits& limits) {
  const auto v = nu_max(U.projector(), spec, k, limits);
  if (v.empty_complement) return 1.0;
  return 1.0 - v.value;
}

SubspaceWitness witness_from_subspace(const Subspace& U, const VarietySpec& spec, int k, const Limits& limits) {
  const auto v = nu_max(U.projector(), spec, k, limits);
  if (!v.empty_complement && !(v.value < 1.0 - 1e-8)) {
    throw InputError("subspace is not certified at level k = " + std::to_string(k) + " (nu_k = " +
                     std::to_string(v.value) + ")");
  }
  SubspaceWitness w;
  w.nu = v.value;
  w.mu = v.empty_complement ? 2.0 : 1.0 / std::max(v.value, 1e-6);
  const auto N = static_cast<Eigen::Index>(U.ambient_dim());
  w.H = Matrix::Identity(N, N) - w.mu * U.projector();
  w.certificate = witness_certify(w.H, spec, k, limits);
  return w;
}

double robustness_radius(const Subspace& U, const VarietySpec& spec, int k, const Limits& limits) {
  return std::sqrt(std::max(0.0, gm_lower_bound(U, spec, k, limits)));
}

void require_state(const Matrix& rho, std::size_t N, const char* who) {
  if (rho.rows() != rho.cols() || static_cast<std::size_t>(rho.rows()) != N) {
    throw DimensionMismatch(std::string(who) + ": state must be " + std::to_string(N) + " x " + std::to_string(N));
  }
  if (!is_hermitian(rho)) throw InputError(std::string(who) + ": state is not Hermitian");
  if (std::abs(rho.trace().real() - 1.0) > 1e-8) throw InputError(std::string(who) + ": state trace is not 1");
  if (eig_extremes(rho).lambda_min < -1e-8) throw InputError(std::string(who) + ": state is not PSD");
}

RangeCriterionResult range_criterion(const Matrix& rho, const VarietySpec& spec, int k, const Limits& limits) {
  require_state(rho, spec.ambient_dim(), "range_criterion");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho + rho.adjoint()));
  const double top = es.eigenvalues().maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > limits.rank_tol * top) keep.push_back(i);
  Matrix image(rho.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) image.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]);
  RangeCriterionResult out;
  out.image_dim = keep.size();
  out.certification = nullstellensatz_certify(Subspace(image, "image"), spec, k, limits);
  return out;
}

// ---------------------------------------------------------------------------
// degree predictors

namespace {

std::uint64_t to_u64(WideCount w) {
  if (w > static_cast<WideCount>(std::numeric_limits<std::uint64_t>::max())) {
    throw OverflowError("degree value exceeds 64 bits");
  }
  return static_cast<std::uint64_t>(w);
}

std::uint64_t block_product(const std::vector<std::size_t>& dims, const std::vector<std::size_t>& blk) {
  WideCount p = 1;
  for (auto f : blk) p = checked_mul(p, dims[f]);
  return to_u64(p);
}

// max over partitions of min over blocks of the block dimension
std::uint64_t max_min_block(const std::vector<std::size_t>& dims, const std::vector<SetPartition>& parts) {
  std::uint64_t best = 0;
  for (const auto& p : parts) {
    std::uint64_t lo = std::numeric_limits<std::uint64_t>::max();
    for (const auto& blk : p) lo = std::min(lo, block_product(dims, blk));
    best = std::max(best, lo);
  }
  return best;
}

}  // namespace

DegreeReport worst_case_degree(const VarietySpec& spec) {
  DegreeReport rep{.spec = spec};
  rep.N = spec.ambient_dim();
  rep.d = spec.generating_degree();
  rep.general_bound = to_u64(checked_add(checked_mul(rep.N, static_cast<WideCount>(rep.d - 1)), 1));
  auto schmidt = [&](int r, std::size_t n1, std::size_t n2) {
    const auto lo = static_cast<std::int64_t>(std::min(n1, n2));
    rep.regularity = r * (lo - r);
    rep.worst_case = static_cast<std::uint64_t>(*rep.regularity + 1);
    rep.exact = true;
  };
  if (const auto* p = spec.as<variety::SchmidtRank>()) {
    schmidt(p->r, p->n1, p->n2);
  } else if (const auto* p = spec.as<variety::Sep>()) {
    std::int64_t sum = 0, mx = 0;
    for (auto n : p->dims) {
      sum += static_cast<std::int64_t>(n);
      mx = std::max<std::int64_t>(mx, static_cast<std::int64_t>(n));
    }
    const auto m = static_cast<std::int64_t>(p->dims.size());
    rep.regularity = sum - mx - m + 1;
    rep.worst_case = static_cast<std::uint64_t>(std::max<std::int64_t>(1, sum - mx - m + 2));
    rep.exact = true;
  } else if (const auto* p = spec.as<variety::Bosonic>()) {
    const std::int64_t ceil_nm = (p->n + p->m - 1) / p->m;
    rep.regularity = p->n - ceil_nm;
    rep.worst_case = static_cast<std::uint64_t>(p->n - ceil_nm + 1);
    rep.exact = true;
  } else if (const auto* p = spec.as<variety::Fermionic>()) {
    rep.worst_case = to_u64(checked_add(binomial(p->n, p->m), 1));
    rep.upper_bound = true;
  } else if (const auto* p = spec.as<variety::MPS>()) {
    WideCount prod = 1;
    for (auto n : p->dims) prod = checked_mul(prod, n);
    rep.worst_case = to_u64(checked_add(checked_mul(prod, static_cast<WideCount>(p->r)), 1));
    rep.upper_bound = true;
  } else if (spec.as<variety::Bisep>() || spec.as<variety::LSep>() || spec.as<variety::TProd>()) {
    rep.worst_case = max_min_block(spec.factor_dims(), admissible_partitions(spec));
    rep.exact = true;
    rep.note = "run per block partition: each product-across-partition component is certified separately";
  } else if (const auto* p = spec.as<variety::SchmidtSurrogate>()) {
    std::size_t ns = 1;
    for (auto f : p->side) ns *= p->dims[f];
    schmidt(p->r, ns, rep.N / ns);
    rep.surrogate_caveat = true;
    rep.note = "surrogate Schmidt-rank variety: certification proves tanglement for the contained set, "
               "but not every tangled subspace is certified";
  }
  return rep;
}

GenericDegree generic_degree(const VarietySpec& spec, std::size_t s, int k_cap, const Limits& limits) {
  const std::size_t N = spec.ambient_dim();
  if (s < 1 || s > N) throw InputError("generic_degree requires 1 <= s <= N");
  if (k_cap < 1) throw InputError("generic_degree requires k_cap >= 1");
  GenericDegree out;
  out.s = s;
  for (int k = 1; k <= k_cap; ++k) {
    GenericStep step;
    step.k = k;
    step.bound = binomial(static_cast<std::int64_t>(N - s) + k, k);
    if (auto pred = predicted_dimension(spec, k)) {
      step.complement_dim = *pred;
    } else {
      try {
        step.complement_dim = complement_basis(spec, k, limits)->rank();
        step.exact = false;
      } catch (const CapExceeded& e) {
        out.note = std::string("search stopped at k=") + std::to_string(k) + ": " + e.what();
        return out;
      }
    }
    out.steps.push_back(step);
    if (step.complement_dim < step.bound) {
      out.k = k;
      return out;
    }
  }
  out.note = "no k <= " + std::to_string(k_cap) + " satisfies the inequality";
  return out;
}

}  // namespace xtangle
