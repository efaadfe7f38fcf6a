#include "xtangle/varieties.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <shared_mutex>
#include <sstream>

namespace xtangle {

namespace {

using variety::Bisep;
using variety::Bosonic;
using variety::Fermionic;
using variety::LSep;
using variety::MPS;
using variety::SchmidtRank;
using variety::SchmidtSurrogate;
using variety::Sep;
using variety::TProd;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::size_t product(const std::vector<std::size_t>& v) {
  std::size_t p = 1;
  for (auto d : v) {
    if (d != 0 && p > SIZE_MAX / d) throw OverflowError("dimension product overflows size_t");
    p *= d;
  }
  return p;
}

void check_dims(const std::vector<std::size_t>& dims, std::size_t min_factors, const char* who) {
  if (dims.size() < min_factors) {
    throw InputError(std::string(who) + ": needs at least " + std::to_string(min_factors) +
                     " tensor factors");
  }
  for (auto d : dims)
    if (d < 1) throw InputError(std::string(who) + ": every local dimension must be >= 1");
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::size_t wide_to_size(WideCount w, const std::string& what) {
  if (w > static_cast<WideCount>(SIZE_MAX)) throw OverflowError(what + " does not fit in size_t");
  return static_cast<std::size_t>(w);
}

// Complement of `side` inside {0..m-1}.
std::vector<std::size_t> other_side(std::size_t m, const std::vector<std::size_t>& side) {
  std::vector<std::size_t> rest;
  for (std::size_t f = 0; f < m; ++f)
    if (std::find(side.begin(), side.end(), f) == side.end()) rest.push_back(f);
  return rest;
}

// psi reshaped into a (prod dims[side]) x (prod dims[rest]) matrix.
Matrix flatten(const Vector& psi, const std::vector<std::size_t>& dims,
               const std::vector<std::size_t>& side) {
  const auto rest = other_side(dims.size(), side);
  std::vector<std::size_t> order = side;
  order.insert(order.end(), rest.begin(), rest.end());
  const auto perm = factor_permutation(dims, order);
  const Vector moved = apply_permutation(psi, perm);
  std::size_t rows = 1;
  for (auto f : side) rows *= dims[f];
  const std::size_t cols = static_cast<std::size_t>(psi.size()) / rows;
  Matrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          moved(static_cast<Eigen::Index>(i * cols + j));
  return M;
}

// Sides of the bipartite rank conditions defining a rank-type variety.
std::vector<std::vector<std::size_t>> rank_cuts(const VarietySpec& spec) {
  std::vector<std::vector<std::size_t>> cuts;
  if (spec.as<SchmidtRank>()) {
    cuts.push_back({0});
  } else if (const auto* p = spec.as<MPS>()) {
    for (std::size_t j = 1; j < p->dims.size(); ++j) {
      std::vector<std::size_t> side(j);
      std::iota(side.begin(), side.end(), 0);
      cuts.push_back(side);
    }
  } else if (const auto* s = spec.as<SchmidtSurrogate>()) {
    cuts.push_back(s->side);
  }
  return cuts;
}

int rank_bound(const VarietySpec& spec) {
  if (const auto* p = spec.as<SchmidtRank>()) return p->r;
  if (const auto* p = spec.as<MPS>()) return p->r;
  if (const auto* p = spec.as<SchmidtSurrogate>()) return p->r;
  return 0;
}

bool is_rank_type(const VarietySpec& spec) {
  return spec.as<SchmidtRank>() || spec.as<MPS>() || spec.as<SchmidtSurrogate>();
}

bool is_union_type(const VarietySpec& spec) {
  return spec.as<Bisep>() || spec.as<LSep>() || spec.as<TProd>();
}

}  // namespace

// ---------------------------------------------------------------------------
// VarietySpec

VarietySpec::VarietySpec(Kind kind) : kind_(std::move(kind)) {
  std::visit(
      Overloaded{
          [](const Sep& v) { check_dims(v.dims, 1, "sep"); },
          [](const SchmidtRank& v) {
            if (v.n1 < 1 || v.n2 < 1) throw InputError("schmidt: local dimensions must be >= 1");
            if (v.r < 1 || static_cast<std::size_t>(v.r) > std::min(v.n1, v.n2)) {
              throw InputError("schmidt: need 1 <= r <= min(n1, n2)");
            }
          },
          [](const Bosonic& v) {
            if (v.m < 1 || v.n < 1) throw InputError("bosonic: need m >= 1 and n >= 1");
          },
          [](const Fermionic& v) {
            if (v.m < 1 || v.n < 1 || v.m > v.n) throw InputError("fermionic: need 1 <= m <= n");
          },
          [](const Bisep& v) { check_dims(v.dims, 2, "bisep"); },
          [](const LSep& v) {
            check_dims(v.dims, 2, "lsep");
            if (v.l < 2 || static_cast<std::size_t>(v.l) > v.dims.size()) {
              throw InputError("lsep: need 2 <= l <= number of factors");
            }
          },
          [](const TProd& v) {
            check_dims(v.dims, 1, "tprod");
            if (v.t < 1 || static_cast<std::size_t>(v.t) > v.dims.size()) {
              throw InputError("tprod: need 1 <= t <= number of factors");
            }
          },
          [](const MPS& v) {
            check_dims(v.dims, 2, "mps");
            if (v.r < 1) throw InputError("mps: bond dimension r must be >= 1");
          },
          [](const SchmidtSurrogate& v) {
            check_dims(v.dims, 2, "surrogate");
            if (v.side.empty() || v.side.size() >= v.dims.size()) {
              throw InputError("surrogate: bipartition side must be a non-empty proper subset");
            }
            std::set<std::size_t> seen;
            std::size_t ns = 1;
            for (auto f : v.side) {
              if (f >= v.dims.size()) throw InputError("surrogate: bipartition index out of range");
              if (!seen.insert(f).second) throw InputError("surrogate: repeated bipartition index");
              ns *= v.dims[f];
            }
            const std::size_t nt = product(v.dims) / ns;
            if (v.r < 1 || static_cast<std::size_t>(v.r) > std::min(ns, nt)) {
              throw InputError("surrogate: need 1 <= r <= min of the two side dimensions");
            }
          },
      },
      kind_);
  if (auto* s = std::get_if<SchmidtSurrogate>(&kind_)) std::sort(s->side.begin(), s->side.end());
}

VarietySpec VarietySpec::sep(std::vector<std::size_t> dims) { return VarietySpec(Sep{std::move(dims)}); }
VarietySpec VarietySpec::schmidt_rank(int r, std::size_t n1, std::size_t n2) {
  return VarietySpec(SchmidtRank{r, n1, n2});
}
VarietySpec VarietySpec::bosonic(int m, int n) { return VarietySpec(Bosonic{m, n}); }
VarietySpec VarietySpec::fermionic(int m, int n) { return VarietySpec(Fermionic{m, n}); }
VarietySpec VarietySpec::bisep(std::vector<std::size_t> dims) { return VarietySpec(Bisep{std::move(dims)}); }
VarietySpec VarietySpec::lsep(int l, std::vector<std::size_t> dims) {
  return VarietySpec(LSep{l, std::move(dims)});
}
VarietySpec VarietySpec::tprod(int t, std::vector<std::size_t> dims) {
  return VarietySpec(TProd{t, std::move(dims)});
}
VarietySpec VarietySpec::mps(int r, std::vector<std::size_t> dims) {
  return VarietySpec(MPS{r, std::move(dims)});
}
VarietySpec VarietySpec::surrogate(int r, std::vector<std::size_t> dims, std::vector<std::size_t> side) {
  return VarietySpec(SchmidtSurrogate{r, std::move(dims), std::move(side)});
}

std::string VarietySpec::family() const {
  return std::visit(Overloaded{
                        [](const Sep&) { return std::string("sep"); },
                        [](const SchmidtRank&) { return std::string("schmidt"); },
                        [](const Bosonic&) { return std::string("bosonic"); },
                        [](const Fermionic&) { return std::string("fermionic"); },
                        [](const Bisep&) { return std::string("bisep"); },
                        [](const LSep&) { return std::string("lsep"); },
                        [](const TProd&) { return std::string("tprod"); },
                        [](const MPS&) { return std::string("mps"); },
                        [](const SchmidtSurrogate&) { return std::string("surrogate"); },
                    },
                    kind_);
}

std::string VarietySpec::key() const {
  std::ostringstream os;
  os << family();
  std::visit(Overloaded{
                 [&](const Sep& v) { os << "(" << join(v.dims) << ")"; },
                 [&](const SchmidtRank& v) { os << "(r=" << v.r << ";" << v.n1 << "," << v.n2 << ")"; },
                 [&](const Bosonic& v) { os << "(m=" << v.m << ";n=" << v.n << ")"; },
                 [&](const Fermionic& v) { os << "(m=" << v.m << ";n=" << v.n << ")"; },
                 [&](const Bisep& v) { os << "(" << join(v.dims) << ")"; },
                 [&](const LSep& v) { os << "(l=" << v.l << ";" << join(v.dims) << ")"; },
                 [&](const TProd& v) { os << "(t=" << v.t << ";" << join(v.dims) << ")"; },
                 [&](const MPS& v) { os << "(r=" << v.r << ";" << join(v.dims) << ")"; },
                 [&](const SchmidtSurrogate& v) {
                   os << "(r=" << v.r << ";" << join(v.dims) << ";side=" << join(v.side) << ")";
                 },
             },
             kind_);
  return os.str();
}

std::size_t VarietySpec::ambient_dim() const {
  if (const auto* b = as<Bosonic>()) return wide_to_size(binomial(b->n + b->m - 1, b->m), "ambient dimension");
  if (const auto* f = as<Fermionic>()) return wide_to_size(binomial(f->n, f->m), "ambient dimension");
  return product(factor_dims());
}

std::vector<std::size_t> VarietySpec::factor_dims() const {
  return std::visit(Overloaded{
                        [](const SchmidtRank& v) { return std::vector<std::size_t>{v.n1, v.n2}; },
                        [this](const Bosonic&) { return std::vector<std::size_t>{ambient_dim()}; },
                        [this](const Fermionic&) { return std::vector<std::size_t>{ambient_dim()}; },
                        [](const auto& v) { return v.dims; },
                    },
                    kind_);
}

int VarietySpec::generating_degree() const {
  if (is_rank_type(*this)) return rank_bound(*this) + 1;
  return 2;
}

std::string to_string(Route route) {
  switch (route) {
    case Route::ClosedForm:
      return "closed-form";
    case Route::Generators:
      return "generators";
    case Route::Sampling:
      return "sampling";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// partitions of the factor set

std::vector<SetPartition> set_partitions(std::size_t m) {
  std::vector<SetPartition> out;
  if (m == 0) return out;
  // restricted growth strings a[0..m-1], a[0] = 0, a[i] <= 1 + max(a[0..i-1])
  std::vector<std::size_t> a(m, 0);
  while (true) {
    std::size_t blocks = *std::max_element(a.begin(), a.end()) + 1;
    SetPartition p(blocks);
    for (std::size_t i = 0; i < m; ++i) p[a[i]].push_back(i);
    out.push_back(std::move(p));
    std::size_t i = m;
    bool advanced = false;
    while (i-- > 1) {
      const std::size_t prefix_max = *std::max_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(i));
      if (a[i] <= prefix_max) {
        ++a[i];
        std::fill(a.begin() + static_cast<std::ptrdiff_t>(i) + 1, a.end(), 0);
        advanced = true;
        break;
      }
    }
    if (!advanced) break;
  }
  return out;
}

std::vector<SetPartition> admissible_partitions(const VarietySpec& spec) {
  std::vector<SetPartition> out;
  if (const auto* s = spec.as<Sep>()) {
    SetPartition p;
    for (std::size_t i = 0; i < s->dims.size(); ++i) p.push_back({i});
    out.push_back(std::move(p));
  } else if (const auto* b = spec.as<Bisep>()) {
    for (auto& p : set_partitions(b->dims.size()))
      if (p.size() == 2) out.push_back(std::move(p));
  } else if (const auto* l = spec.as<LSep>()) {
    for (auto& p : set_partitions(l->dims.size()))
      if (p.size() == static_cast<std::size_t>(l->l)) out.push_back(std::move(p));
  } else if (const auto* t = spec.as<TProd>()) {
    for (auto& p : set_partitions(t->dims.size())) {
      const bool ok = std::all_of(p.begin(), p.end(), [&](const auto& blk) {
        return blk.size() <= static_cast<std::size_t>(t->t);
      });
      if (ok) out.push_back(std::move(p));
    }
  } else {
    throw InputError("admissible_partitions: " + spec.family() + " is not a block-product variety");
  }
  return out;
}

// ---------------------------------------------------------------------------
// wedge coordinates

std::vector<std::vector<int>> wedge_subsets(int n, int m) {
  std::vector<std::vector<int>> out;
  if (m < 0 || m > n) return out;
  std::vector<int> s(static_cast<std::size_t>(m));
  std::iota(s.begin(), s.end(), 0);
  while (true) {
    out.push_back(s);
    int pos = m - 1;
    while (pos >= 0 && s[static_cast<std::size_t>(pos)] == n - m + pos) --pos;
    if (pos < 0) break;
    ++s[static_cast<std::size_t>(pos)];
    for (int j = pos + 1; j < m; ++j) s[static_cast<std::size_t>(j)] = s[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

Matrix wedge_isometry(int n, int m, const Limits& limits) {
  const auto subsets = wedge_subsets(n, m);
  const std::size_t total = checked_pow(static_cast<std::size_t>(n), m);
  check_cap("wedge isometry", total, subsets.size(), limits);
  Matrix W = Matrix::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(subsets.size()));
  const double scale = 1.0 / std::sqrt(static_cast<double>(factorial(m)));
  for (std::size_t c = 0; c < subsets.size(); ++c) {
    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    do {
      int inversions = 0;
      for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b)
          if (perm[static_cast<std::size_t>(a)] > perm[static_cast<std::size_t>(b)]) ++inversions;
      std::size_t idx = 0;
      for (int a = 0; a < m; ++a)
        idx = idx * static_cast<std::size_t>(n) +
              static_cast<std::size_t>(subsets[c][static_cast<std::size_t>(perm[static_cast<std::size_t>(a)])]);
      W(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(c)) = inversions % 2 == 0 ? scale : -scale;
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  return W;
}

Vector wedge_coords(const Matrix& vs) {
  const int n = static_cast<int>(vs.rows());
  const int m = static_cast<int>(vs.cols());
  const auto subsets = wedge_subsets(n, m);
  Vector out(static_cast<Eigen::Index>(subsets.size()));
  Matrix minor(m, m);
  for (std::size_t c = 0; c < subsets.size(); ++c) {
    for (int a = 0; a < m; ++a) minor.row(a) = vs.row(subsets[c][static_cast<std::size_t>(a)]);
    out(static_cast<Eigen::Index>(c)) = minor.determinant();
  }
  return out;
}

RealVector flattening_singular_values(const Vector& psi, const std::vector<std::size_t>& dims,
                                      const std::vector<std::size_t>& side) {
  if (static_cast<std::size_t>(psi.size()) != product(dims)) {
    throw DimensionMismatch("flattening: vector length does not match the factor dimensions");
  }
  return Eigen::JacobiSVD<Matrix>(flatten(psi, dims, side)).singularValues();
}

// ---------------------------------------------------------------------------
// sampling points of X

Vector random_unit_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = Complex(g(rng), g(rng));
  return v / v.norm();
}

namespace {

Matrix random_gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < M.cols(); ++j)
    for (Eigen::Index i = 0; i < M.rows(); ++i) M(i, j) = Complex(g(rng), g(rng));
  return M;
}

Vector block_product_point(const std::vector<std::size_t>& dims, const SetPartition& blocks,
                           std::mt19937_64& rng) {
  std::vector<std::size_t> order;
  Vector v = Vector::Ones(1);
  for (const auto& blk : blocks) {
    std::size_t d = 1;
    for (auto f : blk) d *= dims[f];
    v = kron(v, random_unit_vector(d, rng));
    order.insert(order.end(), blk.begin(), blk.end());
  }
  // v is laid out in factor order `order`; move back to the natural order
  std::vector<std::size_t> reordered_dims;
  for (auto f : order) reordered_dims.push_back(dims[f]);
  const auto inv = invert_permutation(order);
  return apply_permutation(v, factor_permutation(reordered_dims, inv));
}

Vector rank_bounded_point(std::size_t rows, std::size_t cols, int r, std::mt19937_64& rng) {
  const Matrix A = random_gaussian(rows, static_cast<std::size_t>(r), rng);
  const Matrix B = random_gaussian(static_cast<std::size_t>(r), cols, rng);
  const Matrix M = A * B;
  Vector v(static_cast<Eigen::Index>(rows * cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      v(static_cast<Eigen::Index>(i * cols + j)) = M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return v / v.norm();
}

}  // namespace

Vector sample_point(const VarietySpec& spec, std::mt19937_64& rng) {
  return std::visit(
      Overloaded{
          [&](const SchmidtRank& v) { return rank_bounded_point(v.n1, v.n2, v.r, rng); },
          [&](const Bosonic& v) {
            const Vector phi = random_unit_vector(static_cast<std::size_t>(v.n), rng);
            return symmetric_power_coords(phi, sym_basis(v.n, v.m));
          },
          [&](const Fermionic& v) {
            const Vector w = wedge_coords(random_gaussian(static_cast<std::size_t>(v.n),
                                                          static_cast<std::size_t>(v.m), rng));
            return Vector(w / w.norm());
          },
          [&](const MPS& v) {
            // open-boundary chain with bond dimension r
            Matrix state = random_gaussian(v.dims[0], static_cast<std::size_t>(v.r), rng);
            for (std::size_t j = 1; j < v.dims.size(); ++j) {
              const bool last = j + 1 == v.dims.size();
              const std::size_t right = last ? 1 : static_cast<std::size_t>(v.r);
              const Matrix A = random_gaussian(static_cast<std::size_t>(v.r), v.dims[j] * right, rng);
              const Matrix T = state * A;  // (prefix) x (n_j * right)
              Matrix next(T.rows() * static_cast<Eigen::Index>(v.dims[j]), static_cast<Eigen::Index>(right));
              for (Eigen::Index p = 0; p < T.rows(); ++p)
                for (std::size_t a = 0; a < v.dims[j]; ++a)
                  for (std::size_t b = 0; b < right; ++b)
                    next(p * static_cast<Eigen::Index>(v.dims[j]) + static_cast<Eigen::Index>(a),
                         static_cast<Eigen::Index>(b)) = T(p, static_cast<Eigen::Index>(a * right + b));
              state = std::move(next);
            }
            Vector out = state.col(0);
            return Vector(out / out.norm());
          },
          [&](const SchmidtSurrogate& v) {
            const auto rest = other_side(v.dims.size(), v.side);
            std::size_t ns = 1, nt = 1;
            std::vector<std::size_t> order = v.side, reordered;
            order.insert(order.end(), rest.begin(), rest.end());
            for (auto f : v.side) ns *= v.dims[f];
            for (auto f : rest) nt *= v.dims[f];
            for (auto f : order) reordered.push_back(v.dims[f]);
            const Vector w = rank_bounded_point(ns, nt, v.r, rng);
            return apply_permutation(w, factor_permutation(reordered, invert_permutation(order)));
          },
          [&](const auto&) {
            const auto parts = admissible_partitions(spec);
            std::uniform_int_distribution<std::size_t> pick(0, parts.size() - 1);
            return block_product_point(spec.factor_dims(), parts[pick(rng)], rng);
          },
      },
      spec.kind());
}

Vector sample_point(const VarietySpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_point(spec, rng);
}

// ---------------------------------------------------------------------------
// predicted dimensions

std::optional<WideCount> predicted_dimension(const VarietySpec& spec, int k) {
  if (k < 1) throw InputError("level k must be >= 1");
  auto schmidt_sum = [k](int r, std::size_t n1, std::size_t n2) {
    WideCount total = 0;
    for (const auto& lam : partitions(k, r)) {
      total = checked_add(total, checked_mul(schur_dim(lam, static_cast<int>(n1)),
                                             schur_dim(lam, static_cast<int>(n2))));
    }
    return total;
  };
  return std::visit(
      Overloaded{
          [&](const Sep& v) -> std::optional<WideCount> {
            WideCount p = 1;
            for (auto d : v.dims) p = checked_mul(p, binomial(static_cast<std::int64_t>(d) + k - 1, k));
            return p;
          },
          [&](const SchmidtRank& v) -> std::optional<WideCount> { return schmidt_sum(v.r, v.n1, v.n2); },
          [&](const Bosonic& v) -> std::optional<WideCount> {
            const std::int64_t km = static_cast<std::int64_t>(k) * v.m;
            return binomial(v.n + km - 1, km);
          },
          [&](const Fermionic& v) -> std::optional<WideCount> { return rect_schur_dim(k, v.m, v.n); },
          [&](const MPS& v) -> std::optional<WideCount> {
            if (v.dims.size() != 2) return std::nullopt;
            return schmidt_sum(std::min<int>(v.r, static_cast<int>(std::min(v.dims[0], v.dims[1]))),
                               v.dims[0], v.dims[1]);
          },
          [&](const SchmidtSurrogate& v) -> std::optional<WideCount> {
            std::size_t ns = 1;
            for (auto f : v.side) ns *= v.dims[f];
            return schmidt_sum(v.r, ns, product(v.dims) / ns);
          },
          [&](const auto&) -> std::optional<WideCount> { return std::nullopt; },
      },
      spec.kind());
}

// ---------------------------------------------------------------------------
// closed-form constructions

Matrix block_symmetric_basis(const std::vector<std::size_t>& dims, const SetPartition& blocks,
                             int k, const Limits& limits) {
  if (k < 1) throw InputError("level k must be >= 1");
  const std::size_t m = dims.size();
  const std::size_t N = product(dims);
  const std::size_t total = checked_pow(N, k);
  std::vector<std::size_t> block_dim, block_count;
  std::size_t cols = 1;
  for (const auto& blk : blocks) {
    std::size_t d = 1;
    for (auto f : blk) d *= dims[f];
    block_dim.push_back(d);
    const std::size_t c = wide_to_size(binomial(static_cast<std::int64_t>(d) + k - 1, k), "block dimension");
    block_count.push_back(c);
    if (c != 0 && cols > SIZE_MAX / c) throw OverflowError("block basis too large");
    cols *= c;
  }
  check_cap("block symmetric basis", total, cols, limits);
  Matrix B = Matrix::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(cols));
  // strides of each factor inside the ambient index (factor 0 most significant)
  std::vector<std::size_t> stride(m);
  std::size_t s = 1;
  for (std::size_t f = m; f-- > 0;) {
    stride[f] = s;
    s *= dims[f];
  }
  std::vector<std::size_t> copy_idx(static_cast<std::size_t>(k));
  for (std::size_t t = 0; t < total; ++t) {
    std::size_t rem = t;
    for (int c = k; c-- > 0;) {
      copy_idx[static_cast<std::size_t>(c)] = rem % N;
      rem /= N;
    }
    std::size_t col = 0;
    double value = 1.0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      MultiIndex occ{std::vector<int>(block_dim[b], 0)};
      for (int c = 0; c < k; ++c) {
        std::size_t local = 0;
        for (auto f : blocks[b]) local = local * dims[f] + (copy_idx[static_cast<std::size_t>(c)] / stride[f]) % dims[f];
        ++occ.occupations[local];
      }
      col = col * block_count[b] + occupation_rank(occ);
      value /= std::sqrt(static_cast<double>(multinomial(occ)));
    }
    B(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(col)) = value;
  }
  return B;
}

namespace {

Matrix bosonic_basis(const Bosonic& v, int k, const Limits& limits) {
  const SymBasis inner = sym_basis(v.n, v.m, limits);
  const std::size_t D = inner.size();
  const std::size_t total = checked_pow(D, k);
  const std::size_t cols = wide_to_size(binomial(v.n + static_cast<std::int64_t>(k) * v.m - 1,
                                                 static_cast<std::int64_t>(k) * v.m),
                                        "bosonic complement dimension");
  check_cap("bosonic complement", total, cols, limits);
  Matrix B = Matrix::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(cols));
  for (std::size_t t = 0; t < total; ++t) {
    std::size_t rem = t;
    MultiIndex alpha{std::vector<int>(static_cast<std::size_t>(v.n), 0)};
    double value = 1.0;
    for (int c = 0; c < k; ++c) {
      const auto& beta = inner.indices[rem % D];
      rem /= D;
      for (std::size_t i = 0; i < beta.occupations.size(); ++i) alpha.occupations[i] += beta.occupations[i];
      value *= std::sqrt(static_cast<double>(multinomial(beta)));
    }
    value /= std::sqrt(static_cast<double>(multinomial(alpha)));
    B(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(occupation_rank(alpha))) = value;
  }
  return B;
}

// Projector Pi^wedge_{S, r+1} (x) Pi^wedge_{T, r+1} for the cut (side | rest), written on
// H^{(x)(r+1)} in the natural copy-major layout.
Matrix cut_projector(const std::vector<std::size_t>& dims, const std::vector<std::size_t>& side, int r,
                     const Limits& limits) {
  const auto rest = other_side(dims.size(), side);
  std::size_t ns = 1, nt = 1;
  for (auto f : side) ns *= dims[f];
  for (auto f : rest) nt *= dims[f];
  const int q = r + 1;
  const std::size_t N = ns * nt;
  const std::size_t total = checked_pow(N, q);
  check_cap("cut projector", total, total, limits);
  const Matrix K = kron(antisym_projector(static_cast<int>(ns), q, limits).matrix,
                        antisym_projector(static_cast<int>(nt), q, limits).matrix);
  // copy-major over (H_S (x) H_T)^{(x)q} -> factor-major (H_S^{(x)q} (x) H_T^{(x)q})
  const std::vector<std::size_t> st = {ns, nt};
  const auto to_factor_major = reshuffle(st, q, limits);
  // natural factor order -> (side, rest) order, applied within each copy
  std::vector<std::size_t> order = side;
  order.insert(order.end(), rest.begin(), rest.end());
  const auto within = factor_permutation(dims, order);
  std::vector<std::size_t> map(total);
  for (std::size_t u = 0; u < total; ++u) {
    std::size_t rem = u, pos = 0, scale = 1;
    for (int c = 0; c < q; ++c) {
      pos += within[rem % N] * scale;
      rem /= N;
      scale *= N;
    }
    map[u] = to_factor_major[pos];
  }
  Matrix Phi(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
  for (std::size_t a = 0; a < total; ++a)
    for (std::size_t b = 0; b < total; ++b)
      Phi(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          K(static_cast<Eigen::Index>(map[a]), static_cast<Eigen::Index>(map[b]));
  return Phi;
}

Matrix rank_kernel_basis(const std::vector<std::size_t>& dims,
                         const std::vector<std::vector<std::size_t>>& cuts, int r, int k,
                         const Limits& limits) {
  const std::size_t N = product(dims);
  const Matrix V = sym_isometry(sym_basis(static_cast<int>(N), k, limits), limits);
  if (k < r + 1) return V;
  const std::size_t total = static_cast<std::size_t>(V.rows());
  const std::size_t head = checked_pow(N, r + 1);
  const std::size_t tail = total / head;
  check_cap("rank kernel system", total * cuts.size(), static_cast<std::size_t>(V.cols()), limits);
  Matrix M(static_cast<Eigen::Index>(total * cuts.size()), V.cols());
  for (std::size_t c = 0; c < cuts.size(); ++c) {
    const Matrix Phi = cut_projector(dims, cuts[c], r, limits);
    const Matrix PhiT = Phi.transpose();
    for (Eigen::Index j = 0; j < V.cols(); ++j) {
      Eigen::Map<const Matrix> X(V.col(j).data(), static_cast<Eigen::Index>(tail),
                                 static_cast<Eigen::Index>(head));
      const Matrix Y = X * PhiT;
      M.block(static_cast<Eigen::Index>(c * total), j, static_cast<Eigen::Index>(total), 1) =
          Eigen::Map<const Vector>(Y.data(), Y.size());
    }
  }
  return V * null_space(M, limits.rank_tol);
}

}  // namespace

IdealComplementBasis ikperp_closed_form(const VarietySpec& spec, int k, const Limits& limits) {
  if (k < 1) throw InputError("level k must be >= 1");
  IdealComplementBasis out{spec, k, Matrix(), Route::ClosedForm, predicted_dimension(spec, k), false, 0, 0};
  if (const auto* f = spec.as<Fermionic>()) {
    // no explicit equations: span of sampled points, certified by the exact irrep dimension
    const WideCount target = *out.predicted_dim;
    std::size_t samples = wide_to_size(target, "fermionic dimension") * 3 / 2 + 10;
    std::uint64_t seed = kDefaultSeed;
    for (int attempt = 0; attempt < 4; ++attempt) {
      auto sampled = ikperp_sampling(spec, k, samples, seed, limits);
      if (static_cast<WideCount>(sampled.rank()) > target) {
        throw ConsistencyError("fermionic sampling rank " + std::to_string(sampled.rank()) +
                               " exceeds the irrep dimension " + to_string(target));
      }
      if (!sampled.undersampled || attempt == 3) return sampled;
      samples *= 2;
      ++seed;
    }
    (void)f;
  }
  if (is_rank_type(spec)) {
    out.columns = rank_kernel_basis(spec.factor_dims(), rank_cuts(spec), rank_bound(spec), k, limits);
    return out;
  }
  if (const auto* b = spec.as<Bosonic>()) {
    out.columns = bosonic_basis(*b, k, limits);
    return out;
  }
  const auto dims = spec.factor_dims();
  const auto parts = admissible_partitions(spec);
  if (parts.size() == 1) {
    out.columns = block_symmetric_basis(dims, parts.front(), k, limits);
    return out;
  }
  std::vector<Matrix> pieces;
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    pieces.push_back(block_symmetric_basis(dims, p, k, limits));
    cols += pieces.back().cols();
  }
  check_cap("block sum", static_cast<std::size_t>(pieces.front().rows()), static_cast<std::size_t>(cols), limits);
  Matrix all(pieces.front().rows(), cols);
  Eigen::Index at = 0;
  for (const auto& p : pieces) {
    all.middleCols(at, p.cols()) = p;
    at += p.cols();
  }
  out.columns = span_orthonormalize(all, limits.rank_tol).basis;
  return out;
}

// ---------------------------------------------------------------------------
// sampling route

IdealComplementBasis ikperp_sampling(const VarietySpec& spec, int k, std::optional<std::size_t> num_samples,
                                     std::uint64_t seed, const Limits& limits) {
  if (k < 1) throw InputError("level k must be >= 1");
  const auto pred = predicted_dimension(spec, k);
  const std::size_t N = spec.ambient_dim();
  const SymBasis basis = sym_basis(static_cast<int>(N), k, limits);
  const std::size_t target = pred ? wide_to_size(*pred, "predicted dimension") : basis.size();
  const std::size_t count = num_samples.value_or(target * 3 / 2 + 10);
  check_cap("sampling matrix", basis.size(), count, limits);
  std::mt19937_64 rng(seed);
  Matrix S(static_cast<Eigen::Index>(basis.size()), static_cast<Eigen::Index>(count));
  for (std::size_t j = 0; j < count; ++j)
    S.col(static_cast<Eigen::Index>(j)) = symmetric_power_coords(sample_point(spec, rng), basis);
  const auto span = span_orthonormalize(S, limits.rank_tol);
  IdealComplementBasis out{spec, k, sym_isometry(basis, limits) * span.basis, Route::Sampling, pred, false, seed, count};
  if (pred && static_cast<WideCount>(span.rank) < *pred) out.undersampled = true;
  return out;
}

// ---------------------------------------------------------------------------
// generator route

GeneratorComponent ideal_component_from_generators(const std::vector<Vector>& generators, int d, int N,
                                                   int k, const Limits& limits) {
  if (d < 1 || k < d) throw InputError("ideal component requires 1 <= d <= k");
  const auto gen_monomials = occupations(N, d);
  const SymBasis target = sym_basis(N, k, limits);
  const std::size_t C = target.size();
  const auto shifts = occupations(N, k - d);
  const std::size_t rows = generators.size() * shifts.size();
  check_cap("ideal generator system", std::max<std::size_t>(rows, 1), C, limits);
  std::vector<double> pairing_scale(C);
  for (std::size_t g = 0; g < C; ++g) pairing_scale[g] = 1.0 / target.norms[g];  // sqrt(gamma!/k!)
  Matrix W = Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(C));
  std::size_t row = 0;
  for (const auto& c : generators) {
    if (static_cast<std::size_t>(c.size()) != gen_monomials.size()) {
      throw DimensionMismatch("generator coefficient vector has length " + std::to_string(c.size()) +
                              ", expected " + std::to_string(gen_monomials.size()));
    }
    for (const auto& beta : shifts) {
      for (std::size_t a = 0; a < gen_monomials.size(); ++a) {
        const Complex coef = c(static_cast<Eigen::Index>(a));
        if (coef == Complex(0.0)) continue;
        MultiIndex gamma = gen_monomials[a];
        for (std::size_t i = 0; i < gamma.occupations.size(); ++i) gamma.occupations[i] += beta.occupations[i];
        const std::size_t g = occupation_rank(gamma);
        W(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(g)) += coef * pairing_scale[g];
      }
      ++row;
    }
  }
  GeneratorComponent out;
  out.d = d;
  out.k = k;
  if (rows == 0) {
    out.ideal_basis = Matrix(static_cast<Eigen::Index>(C), 0);
    out.complement = sym_isometry(target, limits);
    return out;
  }
  out.ideal_basis = span_orthonormalize(W.transpose(), limits.rank_tol).basis;
  out.complement = sym_isometry(target, limits) * null_space(W, limits.rank_tol);
  return out;
}

namespace {

Vector form_from_terms(int N, int d, const std::vector<std::pair<std::vector<std::size_t>, Complex>>& terms) {
  Vector c = Vector::Zero(static_cast<Eigen::Index>(binomial(N + d - 1, d)));
  for (const auto& [vars, coef] : terms) {
    MultiIndex a{std::vector<int>(static_cast<std::size_t>(N), 0)};
    for (auto v : vars) ++a.occupations[v];
    c(static_cast<Eigen::Index>(occupation_rank(a))) += coef;
  }
  return c;
}

// All (q x q) minors of the flattening (side | rest), as forms in the ambient coordinates.
void append_minors(const std::vector<std::size_t>& dims, const std::vector<std::size_t>& side, int q,
                   std::vector<Vector>& out) {
  const auto rest = other_side(dims.size(), side);
  std::size_t rows = 1, cols = 1;
  for (auto f : side) rows *= dims[f];
  for (auto f : rest) cols *= dims[f];
  if (static_cast<std::size_t>(q) > std::min(rows, cols)) return;
  std::vector<std::size_t> order = side;
  order.insert(order.end(), rest.begin(), rest.end());
  std::vector<std::size_t> reordered;
  for (auto f : order) reordered.push_back(dims[f]);
  // ambient index of matrix entry (i, j)
  const auto back = factor_permutation(reordered, invert_permutation(order));
  const int N = static_cast<int>(rows * cols);
  const auto row_sets = wedge_subsets(static_cast<int>(rows), q);
  const auto col_sets = wedge_subsets(static_cast<int>(cols), q);
  for (const auto& rs : row_sets) {
    for (const auto& cs : col_sets) {
      std::vector<std::pair<std::vector<std::size_t>, Complex>> terms;
      std::vector<int> perm(static_cast<std::size_t>(q));
      std::iota(perm.begin(), perm.end(), 0);
      do {
        int inversions = 0;
        for (int a = 0; a < q; ++a)
          for (int b = a + 1; b < q; ++b)
            if (perm[static_cast<std::size_t>(a)] > perm[static_cast<std::size_t>(b)]) ++inversions;
        std::vector<std::size_t> vars;
        for (int a = 0; a < q; ++a) {
          const auto i = static_cast<std::size_t>(rs[static_cast<std::size_t>(a)]);
          const auto j = static_cast<std::size_t>(cs[static_cast<std::size_t>(perm[static_cast<std::size_t>(a)])]);
          vars.push_back(back[i * cols + j]);
        }
        terms.emplace_back(vars, inversions % 2 == 0 ? 1.0 : -1.0);
      } while (std::next_permutation(perm.begin(), perm.end()));
      out.push_back(form_from_terms(N, q, terms));
    }
  }
}

}  // namespace

std::optional<CatalogGenerators> catalog_generators(const VarietySpec& spec) {
  CatalogGenerators out;
  if (const auto* s = spec.as<Sep>()) {
    out.degree = 2;
    if (s->dims.size() == 1) {
      return out;  // X is all of P(H)
    }
    for (std::size_t f = 0; f < s->dims.size(); ++f) append_minors(s->dims, {f}, 2, out.forms);
    return out;
  }
  if (is_rank_type(spec)) {
    out.degree = rank_bound(spec) + 1;
    for (const auto& cut : rank_cuts(spec)) append_minors(spec.factor_dims(), cut, out.degree, out.forms);
    return out;
  }
  if (const auto* b = spec.as<Bosonic>()) {
    out.degree = 2;
    const auto occ = occupations(b->n, b->m);
    const int D = static_cast<int>(occ.size());
    std::map<std::vector<int>, std::vector<std::pair<std::size_t, std::size_t>>> by_sum;
    for (std::size_t a = 0; a < occ.size(); ++a) {
      for (std::size_t c = a; c < occ.size(); ++c) {
        std::vector<int> sum(occ[a].occupations);
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += occ[c].occupations[i];
        by_sum[sum].emplace_back(a, c);
      }
    }
    // y_a y_c sqrt(a! c!) depends on a + c only
    auto weight = [&](std::size_t a, std::size_t c) {
      double w = 1.0;
      for (auto idx : {a, c}) {
        for (int o : occ[idx].occupations) w *= std::sqrt(static_cast<double>(factorial(o)));
      }
      return w;
    };
    for (const auto& [sum, pairs] : by_sum) {
      for (std::size_t p = 1; p < pairs.size(); ++p) {
        const auto [a0, c0] = pairs.front();
        const auto [a1, c1] = pairs[p];
        out.forms.push_back(form_from_terms(D, 2, {{{a0, c0}, weight(a0, c0)}, {{a1, c1}, -weight(a1, c1)}}));
      }
    }
    return out;
  }
  if (const auto* f = spec.as<Fermionic>()) {
    if (f->m != 2) return std::nullopt;
    out.degree = 2;
    const auto subsets = wedge_subsets(f->n, 2);
    const int D = static_cast<int>(subsets.size());
    auto id = [&](int i, int j) {
      for (std::size_t s = 0; s < subsets.size(); ++s)
        if (subsets[s][0] == i && subsets[s][1] == j) return s;
      throw ConsistencyError("missing wedge coordinate");
    };
    for (const auto& q : wedge_subsets(f->n, 4)) {
      const int i = q[0], j = q[1], k = q[2], l = q[3];
      out.forms.push_back(form_from_terms(
          D, 2, {{{id(i, j), id(k, l)}, 1.0}, {{id(i, k), id(j, l)}, -1.0}, {{id(i, l), id(j, k)}, 1.0}}));
    }
    return out;
  }
  return std::nullopt;
}

IdealComplementBasis ikperp_generators(const VarietySpec& spec, int k, const Limits& limits) {
  if (k < 1) throw InputError("level k must be >= 1");
  const auto gens = catalog_generators(spec);
  if (!gens) throw InputError("no catalog generators for variety " + spec.family());
  IdealComplementBasis out{spec, k, Matrix(), Route::Generators, predicted_dimension(spec, k), false, 0, 0};
  const int N = static_cast<int>(spec.ambient_dim());
  if (k < gens->degree) {
    out.columns = sym_isometry(sym_basis(N, k, limits), limits);
  } else {
    out.columns = ideal_component_from_generators(gens->forms, gens->degree, N, k, limits).complement;
  }
  return out;
}

// ---------------------------------------------------------------------------
// membership

bool membership_check(const VarietySpec& spec, const Vector& psi, double tol, const Limits& limits) {
  if (static_cast<std::size_t>(psi.size()) != spec.ambient_dim()) {
    throw DimensionMismatch("membership_check: vector length " + std::to_string(psi.size()) +
                            " does not match ambient dimension " + std::to_string(spec.ambient_dim()));
  }
  if (std::abs(psi.norm() - 1.0) > 1e-6) throw InputError("membership_check: vector is not normalized");
  const auto dims = spec.factor_dims();
  if (is_rank_type(spec)) {
    const auto r = static_cast<Eigen::Index>(rank_bound(spec));
    for (const auto& cut : rank_cuts(spec)) {
      const RealVector sv = flattening_singular_values(psi, dims, cut);
      if (sv.size() > r && sv(r) > tol) return false;
    }
    return true;
  }
  if (is_union_type(spec)) {
    for (const auto& p : admissible_partitions(spec)) {
      bool product_here = true;
      for (const auto& blk : p) {
        if (blk.size() == dims.size()) continue;
        const RealVector sv = flattening_singular_values(psi, dims, blk);
        if (sv.size() > 1 && sv(1) > tol) {
          product_here = false;
          break;
        }
      }
      if (product_here) return true;
    }
    return false;
  }
  const int d = spec.generating_degree();
  const auto B = complement_basis(spec, d, limits);
  const Vector power = tensor_power(psi, d, limits);
  return (B->columns.adjoint() * power).norm() >= 1.0 - tol;
}

// ---------------------------------------------------------------------------
// cache

namespace {

struct CachedBasis {
  std::shared_ptr<const IdealComplementBasis> basis;
  // largest allocation the construction requested, replayed against later caps
  std::size_t peak = 0;
  std::string what;
};

struct ComplementCache {
  std::shared_mutex mutex;
  std::map<std::string, CachedBasis> entries;
};

ComplementCache& cache() {
  static ComplementCache c;
  return c;
}

}  // namespace

std::shared_ptr<const IdealComplementBasis> complement_basis(const VarietySpec& spec, int k,
                                                             const Limits& limits) {
  std::ostringstream key;
  key << spec.key() << "#k=" << k << "#tol=" << limits.rank_tol;
  auto& c = cache();
  {
    std::shared_lock lock(c.mutex);
    auto it = c.entries.find(key.str());
    if (it != c.entries.end()) {
      check_cap(it->second.what, it->second.peak, 1, limits);
      return it->second.basis;
    }
  }
  // build outside the lock; the cap is checked by the construction itself
  CachedBasis entry;
  {
    CapProbe probe;
    entry.basis = std::make_shared<const IdealComplementBasis>(ikperp_closed_form(spec, k, limits));
    entry.peak = probe.peak();
    entry.what = probe.what();
  }
  std::unique_lock lock(c.mutex);
  auto [it, inserted] = c.entries.emplace(key.str(), std::move(entry));
  return it->second.basis;
}

void clear_complement_cache() {
  auto& c = cache();
  std::unique_lock lock(c.mutex);
  c.entries.clear();
}

}  // namespace xtangle
