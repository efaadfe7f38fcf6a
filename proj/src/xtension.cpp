#include "xtangle/xtension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "xtangle/subspace.hpp"

namespace xtangle {

namespace {

const double kSqrt2 = std::sqrt(2.0);

// Orthonormal real coordinates for n x n Hermitian matrices:
// [diagonal | sqrt2 Re upper | sqrt2 Im upper].
RealVector herm_to_vec(const Matrix& M) {
  const Eigen::Index n = M.rows();
  RealVector v(n * n);
  Eigen::Index p = 0;
  for (Eigen::Index a = 0; a < n; ++a) v(p++) = M(a, a).real();
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) v(p++) = kSqrt2 * 0.5 * (M(a, b).real() + M(b, a).real());
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) v(p++) = kSqrt2 * 0.5 * (M(a, b).imag() - M(b, a).imag());
  return v;
}

Matrix vec_to_herm(const RealVector& v, Eigen::Index n) {
  Matrix M = Matrix::Zero(n, n);
  Eigen::Index p = 0;
  for (Eigen::Index a = 0; a < n; ++a) M(a, a) = v(p++);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) {
      M(a, b) += v(p) / kSqrt2;
      M(b, a) += v(p) / kSqrt2;
      ++p;
    }
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) {
      M(a, b) += Complex(0.0, v(p) / kSqrt2);
      M(b, a) -= Complex(0.0, v(p) / kSqrt2);
      ++p;
    }
  return M;
}

// Real matrix of Sigma -> Tr_{k-1}(B Sigma B^*) in the coordinates above.
RealMatrix marginal_map(const Matrix& B, std::size_t N, int k) {
  const auto n = static_cast<Eigen::Index>(N);
  const auto D = B.cols();
  const auto tail = static_cast<Eigen::Index>(checked_pow(N, k - 1));
  // M[i*N+j](a,b) = sum_rest B(i,rest,a) conj(B(j,rest,b)); L(Sigma)_ij = sum_ab Sigma_ab M_ij(a,b)
  std::vector<Matrix> M(static_cast<std::size_t>(n * n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      M[static_cast<std::size_t>(i * n + j)] =
          B.middleRows(i * tail, tail).transpose() * B.middleRows(j * tail, tail).conjugate();
  RealMatrix A(n * n, D * D);
  Matrix L(n, n);
  auto emit = [&](Eigen::Index col, auto&& entry) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) L(i, j) = entry(M[static_cast<std::size_t>(i * n + j)]);
    A.col(col) = herm_to_vec(L);
  };
  Eigen::Index q = 0;
  for (Eigen::Index a = 0; a < D; ++a) emit(q++, [&](const Matrix& m) { return m(a, a); });
  for (Eigen::Index a = 0; a < D; ++a)
    for (Eigen::Index b = a + 1; b < D; ++b)
      emit(q++, [&](const Matrix& m) { return (m(a, b) + m(b, a)) / kSqrt2; });
  for (Eigen::Index a = 0; a < D; ++a)
    for (Eigen::Index b = a + 1; b < D; ++b)
      emit(q++, [&](const Matrix& m) { return Complex(0.0, 1.0) * (m(a, b) - m(b, a)) / kSqrt2; });
  return A;
}

// Least-squares machinery for A x = b through a thin SVD of A.
struct AffineMap {
  RealMatrix A;
  // thin SVD factors of A restricted to its numerical rank
  RealMatrix U;
  RealMatrix V;
  RealVector inv_sigma;

  explicit AffineMap(RealMatrix a) : A(std::move(a)) {
    Eigen::JacobiSVD<RealMatrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& sv = svd.singularValues();
    const double top = sv.size() > 0 ? sv(0) : 0.0;
    Eigen::Index r = 0;
    while (r < sv.size() && sv(r) > 1e-11 * top) ++r;
    U = svd.matrixU().leftCols(r);
    V = svd.matrixV().leftCols(r);
    inv_sigma = sv.head(r).cwiseInverse();
  }
  RealVector pinv_apply(const RealVector& r) const { return V * inv_sigma.cwiseProduct(U.transpose() * r); }
  RealVector project(const RealVector& x, const RealVector& b) const { return x - pinv_apply(A * x - b); }
  // (A^T)^+ g: maps a parameter-space direction to marginal space
  RealVector dual_apply(const RealVector& g) const { return U * inv_sigma.cwiseProduct(V.transpose() * g); }
  // component of r outside range(A)
  RealVector range_residual(const RealVector& r) const { return r - U * (U.transpose() * r); }
};

RealVector psd_project(const RealVector& x, Eigen::Index D) {
  return herm_to_vec(psd_clip(vec_to_herm(x, D)));
}

double witness_gap(const Matrix& W, const Matrix& rho, const VarietySpec& spec, int k, const Limits& limits) {
  const auto v = nu_min(W, spec, k, limits);
  const double value = (W * rho).trace().real();
  if (v.empty_complement) return std::numeric_limits<double>::infinity();
  return v.value - value;
}

Matrix image_basis(const Matrix& rho) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho + rho.adjoint()));
  const double top = es.eigenvalues().maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > 1e-9 * top) keep.push_back(i);
  Matrix R(rho.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) R.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]);
  return R;
}

// Orthonormal coordinates (in complement-basis space) of I_k^perp cap S^k(Im rho).
Matrix face_coordinates(const Matrix& B, const Matrix& R, int k, const Limits& limits) {
  const auto D = B.cols();
  if (R.cols() == R.rows() || D == 0) return Matrix::Identity(D, D);
  const Matrix S = sym_power_basis(Subspace(R), k, limits);
  const Matrix C = B.adjoint() * S;
  Eigen::JacobiSVD<Matrix> svd(C, Eigen::ComputeFullU);
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) >= 1.0 - 1e-8) ++count;
  return svd.matrixU().leftCols(count);
}

// Gauss-Newton on Sigma = V V^* for the residual A vec(V V^*) - b, started from a PSD iterate.
std::optional<Matrix> factored_polish(const AffineMap& am, const RealVector& b, const Matrix& X0, double tol) {
  const auto D = X0.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> es(X0);
  const double top = es.eigenvalues().maxCoeff();
  if (!(top > 0.0)) return std::nullopt;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < D; ++i)
    if (es.eigenvalues()(i) > 1e-8 * top) keep.push_back(i);
  const auto r = static_cast<Eigen::Index>(keep.size());
  const double work = 2.0 * D * r * static_cast<double>(am.A.rows()) * static_cast<double>(am.A.cols());
  if (work > 2e8) return std::nullopt;
  Matrix V(D, r);
  for (Eigen::Index j = 0; j < r; ++j)
    V.col(j) = std::sqrt(es.eigenvalues()(keep[static_cast<std::size_t>(j)])) *
               es.eigenvectors().col(keep[static_cast<std::size_t>(j)]);
  auto residual = [&](const Matrix& W) -> RealVector { return am.A * herm_to_vec(W * W.adjoint()) - b; };
  RealVector f = residual(V);
  const Eigen::Index P = 2 * D * r;
  RealMatrix J(am.A.rows(), P);
  for (int iter = 0; iter < 40 && f.norm() >= 0.1 * tol; ++iter) {
    Eigen::Index col = 0;
    for (Eigen::Index c = 0; c < r; ++c)
      for (Eigen::Index a = 0; a < D; ++a)
        for (const Complex unit : {Complex(1.0, 0.0), Complex(0.0, 1.0)}) {
          Matrix outer = Matrix::Zero(D, D);
          outer.row(a) = unit * V.col(c).adjoint();
          J.col(col++) = am.A * herm_to_vec(outer + outer.adjoint());
        }
    RealMatrix G = J * J.transpose();
    G.diagonal().array() += 1e-12 * std::max(1.0, G.diagonal().maxCoeff());
    const RealVector step = -(J.transpose() * G.ldlt().solve(f));
    Matrix dV(D, r);
    Eigen::Index p = 0;
    for (Eigen::Index c = 0; c < r; ++c)
      for (Eigen::Index a = 0; a < D; ++a) {
        dV(a, c) = Complex(step(p), step(p + 1));
        p += 2;
      }
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 12; ++ls, t *= 0.5) {
      const Matrix Vn = V + t * dV;
      const RealVector fn = residual(Vn);
      if (fn.norm() < f.norm()) {
        V = Vn;
        f = fn;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  if (f.norm() >= tol) return std::nullopt;
  return Matrix(V * V.adjoint());
}

struct Candidate {
  Matrix W;
  std::string kind;
};

void consider(const Candidate& c, const Matrix& rho, const VarietySpec& spec, int k, double margin,
              const Limits& limits, TensionResult& out) {
  if (!c.W.allFinite() || !is_hermitian(c.W)) return;
  const double gap = witness_gap(c.W, rho, spec, k, limits);
  if (!(gap > margin)) return;
  if (!out.witness || gap > out.witness_gap) {
    out.witness = c.W;
    out.witness_gap = gap;
    out.witness_kind = c.kind;
  }
}

}  // namespace

Matrix tension_marginal(const Matrix& B, const Matrix& Sigma, std::size_t N, int k) {
  const auto n = static_cast<Eigen::Index>(N);
  const auto tail = static_cast<Eigen::Index>(checked_pow(N, k - 1));
  if (B.rows() != n * tail || Sigma.rows() != B.cols() || Sigma.cols() != B.cols())
    throw DimensionMismatch("tension_marginal: basis and Sigma sizes do not match");
  const Matrix T = B * Sigma;
  Matrix L(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      L(i, j) = T.middleRows(i * tail, tail).cwiseProduct(B.middleRows(j * tail, tail).conjugate()).sum();
  return L;
}

bool verify_tension(const Tension& T, double tol) {
  if (!T.basis) return false;
  const Matrix& B = T.basis->columns;
  const auto D = B.cols();
  if (D == 0 || T.Sigma.rows() != D || T.Sigma.cols() != D || !T.Sigma.allFinite()) return false;
  const std::size_t N = T.spec.ambient_dim();
  if (T.rho.rows() != static_cast<Eigen::Index>(N) || T.rho.cols() != T.rho.rows()) return false;
  if ((T.Sigma - T.Sigma.adjoint()).cwiseAbs().maxCoeff() > 1e-10) return false;
  if (std::abs(T.Sigma.trace().real() - 1.0) > 1e-8) return false;
  if (eig_extremes(0.5 * (T.Sigma + T.Sigma.adjoint())).lambda_min < -1e-8) return false;
  const Matrix L = tension_marginal(B, T.Sigma, N, T.k);
  return (L - T.rho).cwiseAbs().maxCoeff() <= tol;
}

Tension reduce_tension(const Tension& T, const Limits& limits) {
  if (T.k < 2) throw InputError("reduce_tension needs k >= 2");
  const std::size_t N = T.spec.ambient_dim();
  const auto n = static_cast<Eigen::Index>(N);
  const Matrix& B = T.basis->columns;
  const auto head = B.rows() / n;
  // Tr over the last copy: sum_z B_z Sigma B_z^* with B_z the rows x*N + z
  Matrix sigma = Matrix::Zero(head, head);
  for (Eigen::Index z = 0; z < n; ++z) {
    Matrix Bz(head, B.cols());
    for (Eigen::Index x = 0; x < head; ++x) Bz.row(x) = B.row(x * n + z);
    sigma += Bz * T.Sigma * Bz.adjoint();
  }
  Tension out{T.spec, T.k - 1, Matrix(), T.rho, complement_basis(T.spec, T.k - 1, limits)};
  const Matrix& C = out.basis->columns;
  out.Sigma = C.adjoint() * sigma * C;
  out.Sigma = 0.5 * (out.Sigma + out.Sigma.adjoint()).eval();
  return out;
}

bool verify_infeasibility_certificate(const Matrix& W, const Matrix& rho, const VarietySpec& spec, int k, double margin,
                                      const Limits& limits) {
  const std::size_t N = spec.ambient_dim();
  if (W.rows() != static_cast<Eigen::Index>(N) || W.cols() != W.rows() || !W.allFinite() || !is_hermitian(W))
    return false;
  if (rho.rows() != W.rows() || rho.cols() != W.cols()) return false;
  return witness_gap(W, rho, spec, k, limits) > margin;
}

std::string to_string(TensionVerdict v) {
  switch (v) {
    case TensionVerdict::Feasible: return "feasible";
    case TensionVerdict::Infeasible: return "infeasible";
    case TensionVerdict::Undetermined: return "undetermined";
  }
  return "undetermined";
}

TensionResult tension_feasibility(const Matrix& rho, const VarietySpec& spec, int k, const TensionOptions& options,
                                  const Limits& limits) {
  if (k < 1) throw InputError("level k must be >= 1");
  if (options.max_iters < 1) throw InputError("max_iters must be >= 1");
  if (!(options.tol > 0.0)) throw InputError("tol must be positive");
  const std::size_t N = spec.ambient_dim();
  require_state(rho, N, "tension_feasibility");
  const Matrix rh = 0.5 * (rho + rho.adjoint());

  TensionResult out;
  out.options = options;
  const auto basis = complement_basis(spec, k, limits);
  const Matrix& B = basis->columns;
  out.complement_dim = basis->rank();
  const RealVector b = herm_to_vec(rh);
  const Matrix R = image_basis(rh);
  const Matrix proj_R = R * R.adjoint();
  const Matrix off_R = Matrix::Identity(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N)) - proj_R;

  // ---- search on the face I_k^perp cap S^k(Im rho)
  const Matrix F = out.complement_dim > 0 ? face_coordinates(B, R, k, limits) : Matrix(0, 0);
  const auto Df = F.cols();
  out.face_dim = static_cast<std::size_t>(Df);
  RealVector x_last, y_last;
  std::optional<AffineMap> face_map;
  const double verify_tol = 10.0 * options.tol;

  auto accept = [&](const Matrix& Sigma_face) {
    Matrix S = F * psd_clip(Sigma_face) * F.adjoint();
    S = 0.5 * (S + S.adjoint()).eval();
    const double tr = S.trace().real();
    if (!(tr > 0.0)) return false;
    S /= tr;
    Tension T{spec, k, S, rh, basis};
    if (!verify_tension(T, verify_tol)) return false;
    out.tension = std::move(T);
    out.verdict = TensionVerdict::Feasible;
    return true;
  };

  if (Df > 0) {
    check_cap("tension parameter map", N * N, static_cast<std::size_t>(Df * Df), limits);
    const Matrix BF = B * F;
    face_map.emplace(marginal_map(BF, N, k));
    const AffineMap& am = *face_map;

    // polish: least-squares correction on the face spanned by the dominant eigenvectors
    auto polish = [&](const RealVector& x) {
      const Matrix X = vec_to_herm(x, Df);
      Eigen::SelfAdjointEigenSolver<Matrix> es(X);
      const double top = es.eigenvalues().maxCoeff();
      if (!(top > 0.0)) return false;
      for (double cut : {1e-3, 1e-5, 1e-7}) {
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = 0; i < Df; ++i)
          if (es.eigenvalues()(i) > cut * top) keep.push_back(i);
        Matrix V(Df, static_cast<Eigen::Index>(keep.size()));
        for (std::size_t j = 0; j < keep.size(); ++j) V.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]);
        const AffineMap sub(marginal_map(BF * V, N, k));
        const RealVector s0 = herm_to_vec(V.adjoint() * X * V);
        const RealVector s = sub.project(s0, b);
        if ((sub.A * s - b).norm() > options.tol) continue;
        const Matrix Sv = vec_to_herm(s, V.cols());
        if (eig_extremes(Sv).lambda_min < -1e-10) continue;
        if (accept(V * Sv * V.adjoint())) return true;
      }
      if (const auto S = factored_polish(am, b, X, options.tol)) return accept(*S);
      return false;
    };

    RealVector x = am.pinv_apply(b);
    const double affine_gap = am.range_residual(b).norm();
    if (affine_gap <= options.tol) {
      RealVector q = RealVector::Zero(x.size());
      RealVector y = x;
      double checkpoint = std::numeric_limits<double>::infinity();
      for (int it = 1; it <= options.max_iters; ++it) {
        y = am.project(x, b);
        const RealVector z = y + q;
        x = psd_project(z, Df);
        q = z - x;
        out.iterations = it;
        out.affine_residual = (am.A * x - b).norm();
        out.psd_gap = (x - y).norm();
        if (out.affine_residual < options.tol) {
          if (accept(vec_to_herm(x, Df))) break;
          if (polish(x)) break;
        }
        if (it % 100 == 0) {
          if (polish(x)) break;
          if (it >= 1000 && out.affine_residual > 0.999 * checkpoint) {
            out.note = "iteration stalled";
            break;
          }
          checkpoint = out.affine_residual;
        }
      }
      x_last = x;
      y_last = y;
      if (out.verdict != TensionVerdict::Feasible && out.note.empty()) out.note = "iteration limit reached";
    } else {
      out.affine_residual = affine_gap;
      out.note = "marginal constraint unreachable on the face";
    }
  } else {
    out.note = out.complement_dim == 0 ? "complement is empty" : "face I_k^perp cap S^k(Im rho) is zero";
  }
  if (out.verdict == TensionVerdict::Feasible) return out;

  // ---- witness candidates; only verified ones are reported
  const double margin = options.witness_margin;
  const auto n = static_cast<Eigen::Index>(N);
  if (out.complement_dim == 0) {
    consider({-Matrix::Identity(n, n), "empty complement"}, rh, spec, k, margin, limits, out);
  } else {
    // marginals of the full complement cannot reach rho
    if (out.complement_dim > 0) {
      check_cap("tension parameter map", N * N, out.complement_dim * out.complement_dim, limits);
      const AffineMap full(marginal_map(B, N, k));
      const RealVector r = full.range_residual(b);
      if (r.norm() > 1e-9) {
        const Matrix Y = vec_to_herm(r, n);
        consider({-Y / Y.norm(), "marginal kernel"}, rh, spec, k, margin, limits, out);
      }
    }
    // 1 - mu Pi_{Im rho}
    const auto nu = nu_max(proj_R, spec, k, limits);
    if (!nu.empty_complement && nu.value < 1.0 - 1e-12) {
      const double top = 1.0 / std::max(nu.value, 1e-6);
      const int steps = 16;
      for (int i = 1; i <= steps; ++i) {
        const double mu = 1.0 + (top - 1.0) * static_cast<double>(i) / steps;
        consider({Matrix::Identity(n, n) - mu * proj_R, "image projector"}, rh, spec, k, margin, limits, out);
      }
    }
    // residual direction of the stalled iteration mapped back to H
    if (face_map && x_last.size() > 0) {
      const RealVector g = y_last - x_last;
      if (g.norm() > 1e-12) {
        const RealVector zc = face_map->dual_apply(g);
        if (zc.norm() > 1e-14) {
          Matrix Z = vec_to_herm(zc, n);
          Z /= Z.norm();
          for (double sign : {-1.0, 1.0}) {
            for (double t : {0.0, 0.5, 1.0, 2.0, 4.0}) {
              consider({sign * Z + t * off_R, "dual direction"}, rh, spec, k, margin, limits, out);
            }
          }
        }
      }
    }
  }
  if (out.witness) out.verdict = TensionVerdict::Infeasible;
  return out;
}

Rational definetti_bound(const VarietySpec& spec, int k) {
  if (k < 1) throw InputError("de Finetti bound needs k >= 1");
  std::int64_t num = 0, den = 1;
  const auto kk = static_cast<std::int64_t>(k);
  if (const auto* f = spec.as<variety::Fermionic>()) {
    const auto m = static_cast<std::int64_t>(f->m), n = static_cast<std::int64_t>(f->n);
    num = 4 * m * (n - m);
    den = n + kk;
  } else if (const auto* s = spec.as<variety::Sep>()) {
    const auto m = static_cast<std::int64_t>(s->dims.size());
    const auto nmax = static_cast<std::int64_t>(*std::max_element(s->dims.begin(), s->dims.end()));
    num = 4 * m * (nmax - 1);
    den = kk + 1;
  } else if (const auto* bo = spec.as<variety::Bosonic>()) {
    const auto m = static_cast<std::int64_t>(bo->m), n = static_cast<std::int64_t>(bo->n);
    num = 4 * m * (n - 1);
    den = kk + 1;
  } else {
    throw InputError("no de Finetti bound is available for variety " + spec.family());
  }
  const std::int64_t g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return {num, den};
}

}  // namespace xtangle
