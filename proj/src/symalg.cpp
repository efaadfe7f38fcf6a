#include "xtangle/symalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace xtangle {

namespace {

WideCount gcd_wide(WideCount a, WideCount b) {
  while (b != 0) {
    WideCount t = a % b;
    a = b;
    b = t;
  }
  return a;
}

// Accumulates a product of positive rationals exactly, keeping the fraction reduced.
class ExactProduct {
 public:
  void multiply(std::int64_t num, std::int64_t den) {
    WideCount n = static_cast<WideCount>(num);
    WideCount d = static_cast<WideCount>(den);
    WideCount g = gcd_wide(n, den_);
    n /= g;
    den_ /= g;
    g = gcd_wide(d, num_);
    d /= g;
    num_ /= g;
    num_ = checked_mul(num_, n);
    den_ = checked_mul(den_, d);
  }
  WideCount value() const {
    if (num_ % den_ != 0) throw ConsistencyError("dimension product is not an integer");
    return num_ / den_;
  }

 private:
  WideCount num_ = 1;
  WideCount den_ = 1;
};

std::size_t string_to_index(std::span<const int> s, std::size_t N) {
  std::size_t idx = 0;
  for (int v : s) idx = idx * N + static_cast<std::size_t>(v);
  return idx;
}

}  // namespace

int MultiIndex::degree() const { return std::accumulate(occupations.begin(), occupations.end(), 0); }

Partition::Partition(std::vector<int> p) : parts(std::move(p)) {
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i] <= 0) throw InputError("partition parts must be positive");
    if (i > 0 && parts[i] > parts[i - 1]) throw InputError("partition parts must be non-increasing");
  }
}

int Partition::weight() const { return std::accumulate(parts.begin(), parts.end(), 0); }

WideCount binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  WideCount result = 1;
  for (std::int64_t i = 1; i <= k; ++i) {
    // result * (n - k + i) / i stays exact because C(n-k+i, i) is an integer.
    WideCount g = gcd_wide(result, static_cast<WideCount>(i));
    WideCount r = result / g;
    WideCount f = static_cast<WideCount>(n - k + i) / (static_cast<WideCount>(i) / g);
    result = checked_mul(r, f);
  }
  return result;
}

WideCount factorial(int n) {
  WideCount r = 1;
  for (int i = 2; i <= n; ++i) r = checked_mul(r, static_cast<WideCount>(i));
  return r;
}

WideCount multinomial(const MultiIndex& alpha) {
  // product of binomials avoids the large intermediate k!
  WideCount r = 1;
  int running = 0;
  for (int a : alpha.occupations) {
    running += a;
    r = checked_mul(r, binomial(running, a));
  }
  return r;
}

std::vector<MultiIndex> occupations(int N, int k) {
  if (N < 1 || k < 0) throw InputError("occupations requires N >= 1 and k >= 0");
  std::vector<MultiIndex> out;
  std::vector<int> s(static_cast<std::size_t>(k), 0);
  while (true) {
    MultiIndex m{std::vector<int>(static_cast<std::size_t>(N), 0)};
    for (int v : s) ++m.occupations[static_cast<std::size_t>(v)];
    out.push_back(std::move(m));
    int pos = k - 1;
    while (pos >= 0 && s[static_cast<std::size_t>(pos)] == N - 1) --pos;
    if (pos < 0) break;
    const int v = s[static_cast<std::size_t>(pos)] + 1;
    for (int j = pos; j < k; ++j) s[static_cast<std::size_t>(j)] = v;
  }
  return out;
}

std::vector<int> index_string(const MultiIndex& alpha) {
  std::vector<int> s;
  for (std::size_t i = 0; i < alpha.occupations.size(); ++i) {
    for (int c = 0; c < alpha.occupations[i]; ++c) s.push_back(static_cast<int>(i));
  }
  return s;
}

std::size_t occupation_rank(const MultiIndex& alpha) {
  const auto N = static_cast<std::int64_t>(alpha.occupations.size());
  const auto s = index_string(alpha);
  const auto k = static_cast<std::int64_t>(s.size());
  std::size_t rank = 0;
  std::int64_t prev = 0;
  for (std::int64_t j = 0; j < k; ++j) {
    const std::int64_t remaining = k - j - 1;
    for (std::int64_t v = prev; v < s[static_cast<std::size_t>(j)]; ++v) {
      rank += static_cast<std::size_t>(binomial(N - v + remaining - 1, remaining));
    }
    prev = s[static_cast<std::size_t>(j)];
  }
  return rank;
}

std::vector<Partition> partitions(int k, int max_rows) {
  if (k < 1 || max_rows < 1) throw InputError("partitions requires k >= 1 and max_rows >= 1");
  std::vector<Partition> out;
  std::vector<int> current;
  auto rec = [&](auto&& self, int remaining, int max_part) -> void {
    if (remaining == 0) {
      out.emplace_back(current);
      return;
    }
    if (static_cast<int>(current.size()) == max_rows) return;
    for (int p = std::min(remaining, max_part); p >= 1; --p) {
      current.push_back(p);
      self(self, remaining - p, p);
      current.pop_back();
    }
  };
  rec(rec, k, k);
  return out;
}

std::vector<std::vector<int>> hook_lengths(const Partition& lambda) {
  const auto& rows = lambda.parts;
  std::vector<std::vector<int>> hooks(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < rows[i]; ++j) {
      int below = 0;
      for (std::size_t r = i + 1; r < rows.size() && rows[r] > j; ++r) ++below;
      hooks[i].push_back(rows[i] - j - 1 + below + 1);
    }
  }
  return hooks;
}

WideCount schur_dim(const Partition& lambda, int n) {
  if (n < 1) throw InputError("schur_dim requires n >= 1");
  if (lambda.length() > n) return 0;
  const auto hooks = hook_lengths(lambda);
  ExactProduct prod;
  for (std::size_t i = 0; i < lambda.parts.size(); ++i) {
    for (int j = 0; j < lambda.parts[i]; ++j) {
      const int content = j - static_cast<int>(i);
      prod.multiply(n + content, hooks[i][static_cast<std::size_t>(j)]);
    }
  }
  return prod.value();
}

WideCount symmetric_group_dim(const Partition& lambda) {
  ExactProduct prod;
  const auto hooks = hook_lengths(lambda);
  int box = 0;
  for (const auto& row : hooks) {
    for (int h : row) prod.multiply(++box, h);
  }
  return prod.value();
}

WideCount rect_schur_dim(int k, int m, int n) {
  if (k < 0 || m < 1 || n < 1) throw InputError("rect_schur_dim requires k >= 0, m >= 1, n >= 1");
  if (m > n) throw InputError("rect_schur_dim requires m <= n");
  ExactProduct prod;
  for (int i = 1; i <= m; ++i) {
    for (int j = 1; j <= k; ++j) prod.multiply(n + j - i, m - i + k - j + 1);
  }
  return prod.value();
}

SymBasis sym_basis(int N, int k, const Limits& limits) {
  if (N < 1 || k < 1) throw InputError("sym_basis requires N >= 1 and k >= 1");
  const WideCount count = binomial(N + k - 1, k);
  if (count > static_cast<WideCount>(limits.max_entries)) {
    throw CapExceeded("S^" + std::to_string(k) + "(C^" + std::to_string(N) + ") of dimension " +
                          to_string(count),
                      static_cast<std::size_t>(std::min<WideCount>(count, SIZE_MAX)),
                      limits.max_entries);
  }
  SymBasis b;
  b.N = N;
  b.k = k;
  b.indices = occupations(N, k);
  b.norms.reserve(b.indices.size());
  for (const auto& a : b.indices) b.norms.push_back(std::sqrt(static_cast<double>(multinomial(a))));
  return b;
}

namespace {

template <typename Visit>
void for_each_string(const MultiIndex& alpha, Visit&& visit) {
  auto s = index_string(alpha);
  do {
    visit(std::span<const int>(s));
  } while (std::next_permutation(s.begin(), s.end()));
}

}  // namespace

Vector inject_symmetric(const Vector& v, const SymBasis& basis, const Limits& limits) {
  if (static_cast<std::size_t>(v.size()) != basis.size()) {
    throw DimensionMismatch("inject_symmetric: vector length " + std::to_string(v.size()) +
                            " does not match basis size " + std::to_string(basis.size()));
  }
  const auto N = static_cast<std::size_t>(basis.N);
  const std::size_t total = checked_pow(N, basis.k);
  check_cap("symmetric tensor", total, 1, limits);
  Vector out = Vector::Zero(static_cast<Eigen::Index>(total));
  for (std::size_t a = 0; a < basis.size(); ++a) {
    const Complex c = v(static_cast<Eigen::Index>(a)) / basis.norms[a];
    if (c == Complex(0.0)) continue;
    for_each_string(basis.indices[a], [&](std::span<const int> s) {
      out(static_cast<Eigen::Index>(string_to_index(s, N))) += c;
    });
  }
  return out;
}

Vector project_symmetric(const Vector& w, const SymBasis& basis) {
  const auto N = static_cast<std::size_t>(basis.N);
  if (static_cast<std::size_t>(w.size()) != checked_pow(N, basis.k)) {
    throw DimensionMismatch("project_symmetric: tensor length mismatch");
  }
  Vector out(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t a = 0; a < basis.size(); ++a) {
    Complex acc = 0.0;
    for_each_string(basis.indices[a], [&](std::span<const int> s) {
      acc += w(static_cast<Eigen::Index>(string_to_index(s, N)));
    });
    out(static_cast<Eigen::Index>(a)) = acc / basis.norms[a];
  }
  return out;
}

Matrix sym_isometry(const SymBasis& basis, const Limits& limits) {
  const auto N = static_cast<std::size_t>(basis.N);
  const std::size_t total = checked_pow(N, basis.k);
  check_cap("symmetric isometry", total, basis.size(), limits);
  Matrix V = Matrix::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t a = 0; a < basis.size(); ++a) {
    const double c = 1.0 / basis.norms[a];
    for_each_string(basis.indices[a], [&](std::span<const int> s) {
      V(static_cast<Eigen::Index>(string_to_index(s, N)), static_cast<Eigen::Index>(a)) = c;
    });
  }
  return V;
}

DenseOperator sym_projector(int N, int k, const Limits& limits) {
  const std::size_t total = checked_pow(static_cast<std::size_t>(N), k);
  check_cap("symmetric projector", total, total, limits);
  const Matrix V = sym_isometry(sym_basis(N, k, limits), limits);
  return DenseOperator{V * V.adjoint(), std::vector<std::size_t>(static_cast<std::size_t>(k),
                                                                 static_cast<std::size_t>(N))};
}

DenseOperator antisym_projector(int n, int k, const Limits& limits) {
  if (n < 1 || k < 1) throw InputError("antisym_projector requires n >= 1 and k >= 1");
  const std::size_t total = checked_pow(static_cast<std::size_t>(n), k);
  check_cap("antisymmetric projector", total, total, limits);
  DenseOperator P{Matrix::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total)),
                  std::vector<std::size_t>(static_cast<std::size_t>(k), static_cast<std::size_t>(n))};
  if (k > n) return P;
  const double scale = 1.0 / std::sqrt(static_cast<double>(factorial(k)));
  std::vector<int> subset(static_cast<std::size_t>(k));
  std::iota(subset.begin(), subset.end(), 0);
  while (true) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(total));
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    do {
      int inversions = 0;
      for (int a = 0; a < k; ++a)
        for (int b = a + 1; b < k; ++b)
          if (perm[static_cast<std::size_t>(a)] > perm[static_cast<std::size_t>(b)]) ++inversions;
      std::vector<int> s(static_cast<std::size_t>(k));
      for (int a = 0; a < k; ++a) s[static_cast<std::size_t>(a)] = subset[static_cast<std::size_t>(perm[static_cast<std::size_t>(a)])];
      v(static_cast<Eigen::Index>(string_to_index(s, static_cast<std::size_t>(n)))) =
          (inversions % 2 == 0 ? scale : -scale);
    } while (std::next_permutation(perm.begin(), perm.end()));
    P.matrix += v * v.adjoint();
    int pos = k - 1;
    while (pos >= 0 && subset[static_cast<std::size_t>(pos)] == n - k + pos) --pos;
    if (pos < 0) break;
    ++subset[static_cast<std::size_t>(pos)];
    for (int j = pos + 1; j < k; ++j) subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
  }
  return P;
}

Vector symmetric_power_coords(const Vector& psi, const SymBasis& basis) {
  if (psi.size() != basis.N) throw DimensionMismatch("symmetric_power_coords: vector length mismatch");
  Vector out(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t a = 0; a < basis.size(); ++a) {
    Complex prod = basis.norms[a];
    const auto& occ = basis.indices[a].occupations;
    for (std::size_t i = 0; i < occ.size(); ++i) {
      for (int c = 0; c < occ[i]; ++c) prod *= psi(static_cast<Eigen::Index>(i));
    }
    out(static_cast<Eigen::Index>(a)) = prod;
  }
  return out;
}

Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Vector tensor_power(const Vector& psi, int k, const Limits& limits) {
  if (k < 1) throw InputError("tensor_power requires k >= 1");
  check_cap("tensor power", checked_pow(static_cast<std::size_t>(psi.size()), k), 1, limits);
  Vector out = psi;
  for (int i = 1; i < k; ++i) out = kron(out, psi);
  return out;
}

std::vector<std::size_t> reshuffle(std::span<const std::size_t> dims, int k, const Limits& limits) {
  const std::size_t m = dims.size();
  // order of factors in the copy-major layout: (copy c, factor f) at slot c*m + f;
  // target layout puts slot (f, c) at f*k + c.
  std::vector<std::size_t> slot_dims;
  std::vector<std::size_t> order;
  for (int c = 0; c < k; ++c)
    for (std::size_t f = 0; f < m; ++f) slot_dims.push_back(dims[f]);
  for (std::size_t f = 0; f < m; ++f)
    for (int c = 0; c < k; ++c) order.push_back(static_cast<std::size_t>(c) * m + f);
  std::size_t total = 1;
  for (auto d : slot_dims) total *= d;
  check_cap("reshuffle permutation", total, 1, limits);
  return factor_permutation(slot_dims, order);
}

std::vector<std::size_t> factor_permutation(std::span<const std::size_t> dims,
                                            std::span<const std::size_t> order) {
  const std::size_t m = dims.size();
  if (order.size() != m) throw DimensionMismatch("factor_permutation: order length mismatch");
  std::size_t total = 1;
  for (auto d : dims) total *= d;
  // stride of each input factor inside the output index
  std::vector<std::size_t> out_stride(m);
  std::size_t stride = 1;
  for (std::size_t j = m; j-- > 0;) {
    out_stride[order[j]] = stride;
    stride *= dims[order[j]];
  }
  std::vector<std::size_t> perm(total);
  std::vector<std::size_t> digit(m, 0);
  for (std::size_t t = 0; t < total; ++t) {
    std::size_t idx = 0;
    for (std::size_t f = 0; f < m; ++f) idx += digit[f] * out_stride[f];
    perm[t] = idx;
    for (std::size_t f = m; f-- > 0;) {
      if (++digit[f] < dims[f]) break;
      digit[f] = 0;
    }
  }
  return perm;
}

std::vector<std::size_t> invert_permutation(std::span<const std::size_t> perm) {
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
  return inv;
}

Vector apply_permutation(const Vector& in, std::span<const std::size_t> perm) {
  if (static_cast<std::size_t>(in.size()) != perm.size()) {
    throw DimensionMismatch("apply_permutation: length mismatch");
  }
  Vector out(in.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out(static_cast<Eigen::Index>(perm[i])) = in(static_cast<Eigen::Index>(i));
  return out;
}

DenseOperator partial_trace(const DenseOperator& A, std::span<const std::size_t> traced) {
  if (A.factor_dims.empty()) throw InputError("partial_trace: operator has no factor annotation");
  const auto& dims = A.factor_dims;
  std::size_t total = 1;
  for (auto d : dims) total *= d;
  if (total != A.side() || A.matrix.cols() != A.matrix.rows()) {
    throw DimensionMismatch("partial_trace: factor annotation does not match side length");
  }
  std::vector<bool> is_traced(dims.size(), false);
  for (auto t : traced) {
    if (t >= dims.size()) throw InputError("partial_trace: factor index out of range");
    is_traced[t] = true;
  }
  std::vector<std::size_t> kept_dims;
  std::size_t kept_total = 1, traced_total = 1;
  for (std::size_t f = 0; f < dims.size(); ++f) {
    if (is_traced[f]) {
      traced_total *= dims[f];
    } else {
      kept_dims.push_back(dims[f]);
      kept_total *= dims[f];
    }
  }
  std::vector<std::size_t> kept_of(total), traced_of(total);
  std::vector<std::size_t> digit(dims.size(), 0);
  for (std::size_t t = 0; t < total; ++t) {
    std::size_t kk = 0, tt = 0;
    for (std::size_t f = 0; f < dims.size(); ++f) {
      if (is_traced[f]) {
        tt = tt * dims[f] + digit[f];
      } else {
        kk = kk * dims[f] + digit[f];
      }
    }
    kept_of[t] = kk;
    traced_of[t] = tt;
    for (std::size_t f = dims.size(); f-- > 0;) {
      if (++digit[f] < dims[f]) break;
      digit[f] = 0;
    }
  }
  // group full indices by their traced part so the sum runs over matching pairs only
  std::vector<std::vector<std::size_t>> by_traced(traced_total);
  for (std::size_t t = 0; t < total; ++t) by_traced[traced_of[t]].push_back(t);
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(kept_total), static_cast<Eigen::Index>(kept_total));
  for (const auto& group : by_traced) {
    for (auto r : group)
      for (auto c : group)
        out(static_cast<Eigen::Index>(kept_of[r]), static_cast<Eigen::Index>(kept_of[c])) +=
            A.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  return DenseOperator{std::move(out), std::move(kept_dims)};
}

OrthonormalSpan span_orthonormalize(const Matrix& columns, double tol) {
  OrthonormalSpan out;
  if (columns.cols() == 0 || columns.rows() == 0) {
    out.basis = Matrix(columns.rows(), 0);
    out.singular_values = RealVector(0);
    return out;
  }
  // Jacobi rather than BDCSVD: Eigen 3.4.0's BDCSVD loses U on strongly rank-deficient input
  Eigen::JacobiSVD<Matrix> svd(columns, Eigen::ComputeThinU);
  out.singular_values = svd.singularValues();
  const double smax = out.singular_values.size() > 0 ? out.singular_values(0) : 0.0;
  std::size_t rank = 0;
  if (smax > 0.0) {
    for (Eigen::Index i = 0; i < out.singular_values.size(); ++i)
      if (out.singular_values(i) > tol * smax) ++rank;
  }
  out.rank = rank;
  out.basis = svd.matrixU().leftCols(static_cast<Eigen::Index>(rank));
  return out;
}

Matrix null_space(const Matrix& M, double tol) {
  const Eigen::Index n = M.cols();
  if (M.rows() == 0 || n == 0) return Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullV);
  const RealVector s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  if (smax == 0.0) return Matrix::Identity(n, n);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol * smax) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

bool is_hermitian(const Matrix& A, double tol) {
  if (A.rows() != A.cols()) return false;
  if (A.size() == 0) return true;
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  return (A - A.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

EigExtremes eig_extremes(const Matrix& A) {
  if (A.rows() == 0) throw InputError("eig_extremes: empty matrix");
  if (!is_hermitian(A)) throw InputError("eig_extremes: matrix is not Hermitian");
  const Matrix H = 0.5 * (A + A.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  const Eigen::Index last = H.rows() - 1;
  return EigExtremes{es.eigenvalues()(0), es.eigenvalues()(last), es.eigenvectors().col(0),
                     es.eigenvectors().col(last)};
}

Matrix psd_clip(const Matrix& A) {
  const Matrix H = 0.5 * (A + A.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  const RealVector clipped = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace xtangle
