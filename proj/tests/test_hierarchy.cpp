#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "xtangle/hierarchy.hpp"

using namespace xtangle;

namespace {

Matrix singlet_projector() {
  const Vector s = oracle::singlet();
  return s * s.adjoint();
}

// Explicit (G (x) 1) compressed onto an oracle basis.
double oracle_level_max(const Matrix& H, const Matrix& B, int k) {
  const auto N = H.rows();
  Matrix big = H;
  for (int c = 1; c < k; ++c) big = oracle::kron_op(big, Matrix::Identity(N, N));
  const Matrix C = B.adjoint() * big * B;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (C + C.adjoint()));
  return es.eigenvalues().maxCoeff();
}

// Symmetric tensor g with <g, z (x) z> = z00 z11 - z01 z10 on C^2 (x) C^2.
Vector determinant_tensor() {
  Vector g = Vector::Zero(16);
  g(0 * 4 + 3) = 0.5;
  g(3 * 4 + 0) = 0.5;
  g(1 * 4 + 2) = -0.5;
  g(2 * 4 + 1) = -0.5;
  return g;
}

std::vector<VarietySpec> small_catalog() {
  return {VarietySpec::sep({2, 2}),          VarietySpec::sep({2, 3}),        VarietySpec::schmidt_rank(1, 2, 3),
          VarietySpec::bosonic(2, 2),        VarietySpec::fermionic(2, 4),    VarietySpec::bisep({2, 2, 2}),
          VarietySpec::tprod(2, {2, 2, 2}), VarietySpec::mps(1, {2, 2, 2}), VarietySpec::surrogate(1, {2, 2, 2}, {0})};
}

}  // namespace

TEST_SUITE("hierarchy") {

TEST_CASE("leading-copy action matches the explicit Kronecker product") {
  std::mt19937_64 rng(11);
  const std::size_t N = 3;
  for (int k = 1; k <= 3; ++k) {
    for (int d = 1; d <= k; ++d) {
      const std::size_t head = checked_pow(N, d);
      const Matrix G = oracle::random_hermitian(head, rng);
      Matrix B(static_cast<Eigen::Index>(checked_pow(N, k)), 3);
      for (Eigen::Index j = 0; j < 3; ++j) B.col(j) = oracle::haar(static_cast<std::size_t>(B.rows()), rng);
      Matrix big = G;
      for (int c = d; c < k; ++c) big = oracle::kron_op(big, Matrix::Identity(3, 3));
      CHECK((apply_leading_copies(G, B, N, d, k) - big * B).norm() < 1e-12);
    }
  }
}

TEST_CASE("identity compresses to the identity") {
  for (const auto& spec : small_catalog()) {
    const auto N = static_cast<Eigen::Index>(spec.ambient_dim());
    for (int k = 1; k <= 2; ++k) {
      const auto op = level_operator(Matrix::Identity(N, N), spec, k);
      CHECK((op.matrix - Matrix::Identity(op.matrix.rows(), op.matrix.cols())).norm() < 1e-10);
      CHECK(nu_min(Matrix::Identity(N, N), spec, k).value == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("level one reproduces the spectrum of H") {
  std::mt19937_64 rng(3);
  for (const auto& spec : {VarietySpec::sep({2, 2}), VarietySpec::bosonic(2, 3), VarietySpec::fermionic(2, 4)}) {
    const Matrix H = oracle::random_hermitian(spec.ambient_dim(), rng);
    const auto op = level_operator(H, spec, 1);
    REQUIRE(op.matrix.rows() == H.rows());
    Eigen::SelfAdjointEigenSolver<Matrix> a(op.matrix), b(H);
    CHECK((a.eigenvalues() - b.eigenvalues()).norm() < 1e-10);
  }
}

TEST_CASE("singlet projector levels") {
  const auto sep = VarietySpec::sep({2, 2});
  const Matrix P = singlet_projector();
  CHECK(nu_max(P, sep, 1).value == doctest::Approx(1.0));
  CHECK(nu_max(P, sep, 2).value == doctest::Approx(0.75).epsilon(1e-12));
  // independent basis of S^k(C^2) (x) S^k(C^2)
  for (int k = 2; k <= 3; ++k) {
    const Matrix B = oracle::bipartite_sep_complement(2, 2, k);
    CHECK(nu_max(P, sep, k).value == doctest::Approx(oracle_level_max(P, B, k)).epsilon(1e-10));
  }
  // exact sequence (k+1)/(2k): approaches the product-state optimum 1/2 from above
  double prev = 2.0;
  for (int k = 1; k <= 6; ++k) {
    const double v = nu_max(P, sep, k).value;
    CHECK(v == doctest::Approx((k + 1.0) / (2.0 * k)).epsilon(1e-10));
    CHECK(v <= prev + 1e-12);
    CHECK(v >= 0.5);
    prev = v;
  }
  std::mt19937_64 rng(5);
  CHECK(oracle::max_product_expectation(P, 2, 2, 2000, rng) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("optimize_over_variety traces") {
  const auto sep = VarietySpec::sep({2, 2});
  SUBCASE("diagonal observable") {
    Matrix H = Matrix::Zero(4, 4);
    H.diagonal() << 0.7, -0.2, 0.4, 1.3;
    const auto t = optimize_over_variety(H, sep, 3, Direction::Min);
    REQUIRE(t.levels.size() == 3);
    CHECK(t.monotone);
    for (const auto& l : t.levels) {
      CHECK(l.nu <= -0.2 + 1e-10);
      CHECK(l.nu >= -0.2 - 1e-10);
    }
  }
  SUBCASE("zero observable") {
    const auto t = optimize_over_variety(Matrix::Zero(4, 4), sep, 3, Direction::Max);
    for (const auto& l : t.levels) CHECK(std::abs(l.nu) < 1e-14);
  }
  SUBCASE("singlet decreases toward one half") {
    const auto t = optimize_over_variety(singlet_projector(), sep, 4, Direction::Max);
    CHECK(t.monotone);
    CHECK(t.final_bound == doctest::Approx(0.625).epsilon(1e-10));
    for (std::size_t i = 1; i < t.levels.size(); ++i) CHECK(t.levels[i].nu < t.levels[i - 1].nu);
  }
  SUBCASE("cap truncates with a warning") {
    Limits tight;
    tight.max_entries = 300;
    const auto t = optimize_over_variety(singlet_projector(), sep, 5, Direction::Max, tight);
    CHECK(t.truncated);
    CHECK(!t.warning.empty());
    CHECK(t.levels.size() < 5);
  }
}

TEST_CASE("witness certification") {
  const auto sep = VarietySpec::sep({2, 2});
  const Matrix I = Matrix::Identity(4, 4);
  const Matrix P = singlet_projector();
  CHECK_FALSE(witness_certify(I + P, sep, 2).certified);
  CHECK_FALSE(witness_certify(-I, sep, 3).certified);
  // mu = 1/nu_2 makes the level-2 operator PSD
  const auto w = witness_certify(I - (4.0 / 3.0) * P, sep, 2);
  CHECK(w.certified);
  REQUIRE(w.negative_eigenvalues.size() == 1);
  CHECK(w.negative_eigenvalues[0] == doctest::Approx(-1.0 / 3.0));
  CHECK_FALSE(witness_certify(I - (4.0 / 3.0) * P, sep, 1).certified);
  // 1 - 2 Pi_singlet is zero on its best product state: nu_min = -1/k at every finite level
  for (int k = 1; k <= 5; ++k) {
    const auto c = witness_certify(I - 2.0 * P, sep, k);
    CHECK_FALSE(c.certified);
    CHECK(c.nu_min == doctest::Approx(-1.0 / k).epsilon(1e-10));
  }
}

TEST_CASE("sandwich against sampled variety points") {
  std::mt19937_64 rng(2024);
  for (const auto& spec : small_catalog()) {
    const std::size_t N = spec.ambient_dim();
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix H = oracle::random_hermitian(N, rng);
      double lo = 1e300, hi = -1e300;
      for (int i = 0; i < 200; ++i) {
        const Vector psi = sample_point(spec, rng);
        const double v = (psi.adjoint() * H * psi)(0).real();
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      for (int k = 1; k <= 2; ++k) {
        CHECK(lo >= nu_min(H, spec, k).value - 1e-8);
        CHECK(hi <= nu_max(H, spec, k).value + 1e-8);
      }
    }
  }
}

TEST_CASE("monotonicity and shift covariance") {
  std::mt19937_64 rng(77);
  for (const auto& spec : {VarietySpec::sep({2, 2}), VarietySpec::bosonic(2, 2), VarietySpec::schmidt_rank(1, 2, 3)}) {
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix H = oracle::random_hermitian(spec.ambient_dim(), rng);
      const auto up = optimize_over_variety(H, spec, 3, Direction::Max);
      const auto down = optimize_over_variety(H, spec, 3, Direction::Min);
      CHECK(up.monotone);
      CHECK(down.monotone);
      for (std::size_t i = 1; i < 3; ++i) {
        CHECK(up.levels[i].nu <= up.levels[i - 1].nu + 1e-8);
        CHECK(down.levels[i].nu >= down.levels[i - 1].nu - 1e-8);
      }
      const double c = 0.37;
      const Matrix Hc = H + c * Matrix::Identity(H.rows(), H.cols());
      for (int k = 1; k <= 2; ++k) {
        CHECK(std::abs(nu_max(Hc, spec, k).value - nu_max(H, spec, k).value - c) < 1e-9);
        CHECK(std::abs(nu_min(Hc, spec, k).value - nu_min(H, spec, k).value - c) < 1e-9);
      }
    }
  }
}

TEST_CASE("dimension and Hermiticity checks") {
  const auto sep = VarietySpec::sep({2, 2});
  CHECK_THROWS_AS(level_operator(Matrix::Identity(3, 3), sep, 2), DimensionMismatch);
  Matrix A = Matrix::Zero(4, 4);
  A(0, 1) = 1.0;
  CHECK_THROWS_AS(level_operator(A, sep, 2), InputError);
  CHECK_THROWS_AS(level_operator(Matrix::Identity(4, 4), sep, 0), InputError);
  Limits tight;
  tight.max_entries = 100;
  CHECK_THROWS_AS(level_operator(Matrix::Identity(4, 4), sep, 3, tight), CapExceeded);
}

TEST_CASE("Hermitian-form levels") {
  std::mt19937_64 rng(8);
  const auto sep = VarietySpec::sep({2, 2});
  SUBCASE("degree one is nu_min exactly") {
    for (const auto& spec : {sep, VarietySpec::bosonic(2, 2), VarietySpec::schmidt_rank(1, 2, 3)}) {
      const Matrix H = oracle::random_hermitian(spec.ambient_dim(), rng);
      for (int k = 1; k <= 3; ++k) CHECK(hermitian_form_level(H, 1, spec, k).value == nu_min(H, spec, k).value);
    }
  }
  SUBCASE("identity form") {
    for (int d = 1; d <= 2; ++d) {
      const auto side = static_cast<Eigen::Index>(binomial(4 + d - 1, d));
      for (int k = d; k <= 3; ++k)
        CHECK(hermitian_form_level(Matrix::Identity(side, side), d, sep, k).value ==
              doctest::Approx(1.0).epsilon(1e-10));
    }
  }
  SUBCASE("determinant form vanishes on product states") {
    const Matrix V = sym_isometry(sym_basis(4, 2));
    const Vector w = V.adjoint() * determinant_tensor();
    const Matrix F = w * w.adjoint();
    for (int k = 2; k <= 3; ++k) CHECK(std::abs(hermitian_form_level(F, 2, sep, k).value) < 1e-10);
    const Vector a = oracle::haar(2, rng), b = oracle::haar(2, rng);
    const Vector zz = oracle::power(oracle::kron(a, b), 2);
    CHECK(std::abs((zz.adjoint() * (V * F * V.adjoint()) * zz)(0)) < 1e-12);
  }
  SUBCASE("degree inference") {
    CHECK(form_degree(4, 4) == 1);
    CHECK(form_degree(10, 4) == 2);
    CHECK(form_degree(20, 4) == 3);
    CHECK_THROWS_AS(form_degree(11, 4), DimensionMismatch);
  }
  SUBCASE("level sequence is non-decreasing") {
    const Matrix F = oracle::random_hermitian(10, rng);
    double prev = -1e300;
    for (int k = 2; k <= 4; ++k) {
      const double v = hermitian_form_level(F, 2, sep, k).value;
      CHECK(v >= prev - 1e-8);
      prev = v;
    }
  }
}

TEST_CASE("HSOS decomposition") {
  const auto sep = VarietySpec::sep({2, 2});
  const Matrix V = sym_isometry(sym_basis(4, 2));
  Vector w = V.adjoint() * determinant_tensor();
  w.normalize();
  SUBCASE("PSD form needs no correction") {
    const auto h = hsos_decompose(Matrix::Identity(10, 10), 2, sep, 2);
    CHECK(h.success);
    CHECK(h.Q.norm() < 1e-14);
    CHECK((h.P - h.Hk).norm() < 1e-14);
  }
  SUBCASE("indefinite form that is PSD on the complement") {
    const Matrix F = Matrix::Identity(10, 10) - 2.0 * w * w.adjoint();
    for (int k = 2; k <= 3; ++k) {
      const auto h = hsos_decompose(F, 2, sep, k);
      CHECK(h.success);
      CHECK(h.level_value >= -1e-10);
      CHECK(h.residual < 1e-8);
      CHECK(h.p_min_eigenvalue >= -1e-10);
      CHECK(h.q_min_eigenvalue >= -1e-10);
      // a correction is needed exactly when the lifted form is indefinite
      Eigen::SelfAdjointEigenSolver<Matrix> lifted(h.Hk);
      if (k == 2) CHECK(lifted.eigenvalues().minCoeff() == doctest::Approx(-1.0).epsilon(1e-10));
      CHECK((h.Q.norm() > 1e-3) == (lifted.eigenvalues().minCoeff() < -1e-10));
      // Q lives on the coordinate image of I_k
      const auto B = complement_basis(sep, k);
      const Matrix Bs = sym_isometry(sym_basis(4, k)).adjoint() * B->columns;
      CHECK((Bs.adjoint() * h.Q).norm() < 1e-8);
      CHECK((h.Hk - (h.P - h.Q)).norm() < 1e-8);
    }
  }
  SUBCASE("random forms that pass the level test") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
      Matrix F = oracle::random_hermitian(10, rng);
      const double v = hermitian_form_level(F, 2, sep, 3).value;
      F += (std::max(0.0, -v) + 0.05) * Matrix::Identity(10, 10);
      const auto h = hsos_decompose(F, 2, sep, 3);
      CHECK(h.success);
      CHECK(h.residual < 1e-8);
      CHECK(h.p_min_eigenvalue >= -1e-10 * std::max(1.0, h.P.cwiseAbs().maxCoeff()));
      CHECK(h.q_min_eigenvalue >= -1e-10 * std::max(1.0, h.P.cwiseAbs().maxCoeff()));
    }
  }
  SUBCASE("negative level value fails") {
    const auto h = hsos_decompose(-Matrix::Identity(10, 10), 2, sep, 2);
    CHECK_FALSE(h.success);
    CHECK(h.reason == "level value is negative");
  }
}

}  // TEST_SUITE
