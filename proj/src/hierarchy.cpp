#include "xtangle/hierarchy.hpp"

#include <cmath>
#include <limits>

namespace xtangle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_observable(const Matrix& H, std::size_t N, const char* who) {
  if (H.rows() != H.cols()) throw DimensionMismatch(std::string(who) + ": operator is not square");
  if (static_cast<std::size_t>(H.rows()) != N) {
    throw DimensionMismatch(std::string(who) + ": operator side " + std::to_string(H.rows()) +
                            " does not match ambient dimension " + std::to_string(N));
  }
  if (!is_hermitian(H)) throw InputError(std::string(who) + ": operator is not Hermitian");
}

Matrix hermitian_part(const Matrix& A) { return 0.5 * (A + A.adjoint()); }

// B^* (G (x) 1) B for G acting on the first d copies.
Matrix compress(const Matrix& G, int d, const Matrix& B, std::size_t N, int k) {
  return hermitian_part(B.adjoint() * apply_leading_copies(G, B, N, d, k));
}

LevelValue extreme(const Matrix& M, const Matrix& B, Direction dir) {
  LevelValue out;
  if (M.rows() == 0) {
    out.empty_complement = true;
    out.value = dir == Direction::Max ? -kInf : kInf;
    return out;
  }
  const auto e = eig_extremes(M);
  out.value = dir == Direction::Max ? e.lambda_max : e.lambda_min;
  out.vector = B * (dir == Direction::Max ? e.v_max : e.v_min);
  return out;
}

// G = V Hform V^* on H^{(x)d}; Hform itself when d = 1.
Matrix form_operator(const Matrix& Hform, int d, std::size_t N, const Limits& limits) {
  if (d == 1) return Hform;
  const std::size_t side = checked_pow(N, d);
  check_cap("Hermitian form operator", side, side, limits);
  const Matrix V = sym_isometry(sym_basis(static_cast<int>(N), d, limits), limits);
  return V * Hform * V.adjoint();
}

void require_form(const Matrix& Hform, int d, std::size_t N, int k) {
  if (d < 1 || d > k) throw InputError("Hermitian form degree must satisfy 1 <= d <= k");
  if (Hform.rows() != Hform.cols()) throw DimensionMismatch("Hermitian form matrix is not square");
  const WideCount expect = binomial(static_cast<std::int64_t>(N) + d - 1, d);
  if (static_cast<WideCount>(Hform.rows()) != expect) {
    throw DimensionMismatch("Hermitian form side " + std::to_string(Hform.rows()) + " does not match dim S^" +
                            std::to_string(d) + "(H) = " + to_string(expect));
  }
  if (!is_hermitian(Hform)) throw InputError("Hermitian form matrix is not Hermitian");
}

}  // namespace

Matrix apply_leading_copies(const Matrix& G, const Matrix& B, std::size_t N, int d, int k) {
  const std::size_t head = checked_pow(N, d);
  const std::size_t total = checked_pow(N, k);
  if (static_cast<std::size_t>(G.rows()) != head || static_cast<std::size_t>(B.rows()) != total) {
    throw DimensionMismatch("apply_leading_copies: operator and basis sizes do not match");
  }
  const auto tail = static_cast<Eigen::Index>(total / head);
  const Matrix Gt = G.transpose();
  Matrix out(B.rows(), B.cols());
  for (Eigen::Index j = 0; j < B.cols(); ++j) {
    // column as a (tail x head) column-major matrix X(rest, lead)
    Eigen::Map<const Matrix> X(B.col(j).data(), tail, static_cast<Eigen::Index>(head));
    Eigen::Map<Matrix> Y(out.col(j).data(), tail, static_cast<Eigen::Index>(head));
    Y.noalias() = X * Gt;
  }
  return out;
}

LevelOperator level_operator(const Matrix& H, const VarietySpec& spec, int k, const Limits& limits) {
  if (k < 1) throw InputError("level k must be >= 1");
  const std::size_t N = spec.ambient_dim();
  require_observable(H, N, "level_operator");
  auto basis = complement_basis(spec, k, limits);
  LevelOperator op{spec, k, Matrix(0, 0), basis};
  if (basis->rank() == 0) return op;
  op.matrix = compress(H, 1, basis->columns, N, k);
  return op;
}

LevelValue nu_max(const Matrix& H, const VarietySpec& spec, int k, const Limits& limits) {
  const auto op = level_operator(H, spec, k, limits);
  return extreme(op.matrix, op.basis->columns, Direction::Max);
}

LevelValue nu_min(const Matrix& H, const VarietySpec& spec, int k, const Limits& limits) {
  const auto op = level_operator(H, spec, k, limits);
  return extreme(op.matrix, op.basis->columns, Direction::Min);
}

std::string to_string(Direction d) { return d == Direction::Max ? "max" : "min"; }

HierarchyTrace optimize_over_variety(const Matrix& H, const VarietySpec& spec, int k_max, Direction direction,
                                     const Limits& limits) {
  if (k_max < 1) throw InputError("k_max must be >= 1");
  require_observable(H, spec.ambient_dim(), "optimize_over_variety");
  HierarchyTrace trace;
  trace.direction = direction;
  for (int k = 1; k <= k_max; ++k) {
    LevelValue v;
    std::size_t dim = 0;
    try {
      const auto op = level_operator(H, spec, k, limits);
      v = extreme(op.matrix, op.basis->columns, direction);
      dim = op.basis->rank();
    } catch (const CapExceeded& e) {
      trace.truncated = true;
      trace.warning = "trace truncated at k=" + std::to_string(k) + ": " + e.what();
      break;
    }
    if (!trace.levels.empty()) {
      const double prev = trace.levels.back().nu;
      if (direction == Direction::Max && v.value > prev + 1e-8) trace.monotone = false;
      if (direction == Direction::Min && v.value < prev - 1e-8) trace.monotone = false;
    }
    trace.levels.push_back({k, v.value, v.empty_complement, dim});
  }
  if (!trace.levels.empty()) trace.final_bound = trace.levels.back().nu;
  return trace;
}

WitnessCertificate witness_certify(const Matrix& H, const VarietySpec& spec, int k, const Limits& limits) {
  require_observable(H, spec.ambient_dim(), "witness_certify");
  WitnessCertificate cert;
  cert.H = H;
  cert.k = k;
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(H), Eigen::EigenvaluesOnly);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) < -1e-10) cert.negative_eigenvalues.push_back(es.eigenvalues()(i));
  const auto v = nu_min(H, spec, k, limits);
  cert.nu_min = v.value;
  cert.empty_complement = v.empty_complement;
  cert.certified = v.value >= -1e-10 && !cert.negative_eigenvalues.empty();
  return cert;
}

int form_degree(std::size_t side, std::size_t N) {
  if (N == 1) {
    if (side == 1) return 1;
    throw DimensionMismatch("Hermitian form side does not match any dim S^d(C^1)");
  }
  for (int d = 1; d <= 64; ++d) {
    const WideCount c = binomial(static_cast<std::int64_t>(N) + d - 1, d);
    if (c == static_cast<WideCount>(side)) return d;
    if (c > static_cast<WideCount>(side)) break;
  }
  throw DimensionMismatch("Hermitian form side " + std::to_string(side) + " is not dim S^d(C^" +
                          std::to_string(N) + ") for any d");
}

LevelValue hermitian_form_level(const Matrix& Hform, int d, const VarietySpec& spec, int k, const Limits& limits) {
  const std::size_t N = spec.ambient_dim();
  require_form(Hform, d, N, k);
  const auto basis = complement_basis(spec, k, limits);
  if (basis->rank() == 0) return extreme(Matrix(0, 0), basis->columns, Direction::Min);
  const Matrix G = form_operator(Hform, d, N, limits);
  return extreme(compress(G, d, basis->columns, N, k), basis->columns, Direction::Min);
}

HsosDecomposition hsos_decompose(const Matrix& Hform, int d, const VarietySpec& spec, int k, const Limits& limits) {
  const std::size_t N = spec.ambient_dim();
  require_form(Hform, d, N, k);
  HsosDecomposition out;
  const auto basis = complement_basis(spec, k, limits);
  const SymBasis sb = sym_basis(static_cast<int>(N), k, limits);
  const Matrix Vk = sym_isometry(sb, limits);
  const Matrix G = form_operator(Hform, d, N, limits);
  out.Hk = hermitian_part(Vk.adjoint() * apply_leading_copies(G, Vk, N, d, k));
  const Eigen::Index C = out.Hk.rows();

  const Matrix Bs = Vk.adjoint() * basis->columns;  // I_k^perp in S^k coordinates
  const Matrix A = hermitian_part(Bs.adjoint() * out.Hk * Bs);
  out.level_value = A.rows() > 0 ? eig_extremes(A).lambda_min : kInf;
  if (out.level_value < -1e-10) {
    out.reason = "level value is negative";
    return out;
  }
  const double scale = std::max(1.0, out.Hk.cwiseAbs().maxCoeff());
  if (eig_extremes(out.Hk).lambda_min >= -1e-10 * scale) {
    out.P = out.Hk;
    out.Q = Matrix::Zero(C, C);
  } else {
    const Matrix W = null_space(Bs.adjoint(), limits.rank_tol);  // coordinate image of I_k
    const Matrix Bm = Bs.adjoint() * out.Hk * W;
    const Matrix Cc = hermitian_part(W.adjoint() * out.Hk * W);
    Matrix Apinv = Matrix::Zero(A.rows(), A.cols());
    if (A.rows() > 0) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(A);
      const double cut = 1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
      for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const double l = es.eigenvalues()(i);
        if (l > cut) Apinv += (1.0 / l) * es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
      }
    }
    const Matrix M = hermitian_part(Bm.adjoint() * Apinv * Bm - Cc);
    double shift = 0.0;
    if (M.rows() > 0) shift = std::max(0.0, -eig_extremes(M).lambda_min);
    shift += 1e-9 * scale;
    const Matrix X = M + shift * Matrix::Identity(M.rows(), M.cols());
    out.Q = hermitian_part(W * X * W.adjoint());
    out.P = hermitian_part(out.Hk + out.Q);
  }
  out.residual = (out.Hk - (out.P - out.Q)).norm();
  out.p_min_eigenvalue = eig_extremes(out.P).lambda_min;
  out.q_min_eigenvalue = eig_extremes(out.Q).lambda_min;
  const double pscale = std::max(1.0, out.P.cwiseAbs().maxCoeff());
  if (out.p_min_eigenvalue < -1e-10 * pscale) {
    out.reason = "compressed block is singular and its range condition fails";
    return out;
  }
  out.success = out.residual < 1e-8 && out.q_min_eigenvalue >= -1e-10 * pscale;
  if (!out.success) out.reason = "reconstruction check failed";
  return out;
}

}  // namespace xtangle
