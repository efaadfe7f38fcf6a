// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [--expect-fail=N,M]  (listed criteria must fail; the exit code reports any surprise)

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "xtangle/hierarchy.hpp"
#include "xtangle/subspace.hpp"
#include "xtangle/xtension.hpp"

using namespace xtangle;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Subspace haar_subspace(std::size_t N, std::size_t s, std::mt19937_64& rng) {
  Matrix cols(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(s));
  for (std::size_t j = 0; j < s; ++j) cols.col(static_cast<Eigen::Index>(j)) = oracle::haar(N, rng);
  return Subspace::span_of(cols);
}

Subspace singlet_span() {
  return Subspace(oracle::singlet(), "singlet");
}

Matrix random_mixture(const VarietySpec& spec, std::mt19937_64& rng) {
  const auto N = static_cast<Eigen::Index>(spec.ambient_dim());
  const int terms = 1 + static_cast<int>(rng() % 10);
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  Matrix rho = Matrix::Zero(N, N);
  double total = 0.0;
  for (int t = 0; t < terms; ++t) {
    const double w = weight(rng);
    const Vector p = sample_point(spec, rng);
    rho += w * p * p.adjoint();
    total += w;
  }
  rho /= total;
  return 0.5 * (rho + rho.adjoint());
}

Outcome criterion1() {
  const auto spec = VarietySpec::schmidt_rank(1, 2, 2);
  const auto start = std::chrono::steady_clock::now();
  const auto c1 = nullstellensatz_certify(singlet_span(), spec, 1);
  const auto c2 = nullstellensatz_certify(singlet_span(), spec, 2);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ostringstream os;
  os << "k=1 " << to_string(c1.verdict) << ", k=2 " << to_string(c2.verdict) << ", " << secs << " s";
  return {c1.verdict == CertVerdict::Inconclusive && c2.verdict == CertVerdict::CertifiedTangled && secs < 1.0,
          os.str()};
}

Outcome criterion2() {
  std::ostringstream os;
  bool ok = true;
  for (std::size_t n = 2; n <= 7; ++n) {
    const auto d = worst_case_degree(VarietySpec::schmidt_rank(1, 2, n));
    ok = ok && d.worst_case && *d.worst_case == 2;
  }
  os << "SchmidtRank(1,(2,n)) n=2..7 -> 2";
  const auto sep = worst_case_degree(VarietySpec::sep({2, 2, 2}));
  const auto bos = worst_case_degree(VarietySpec::bosonic(2, 4));
  ok = ok && sep.worst_case && *sep.worst_case == 3 && bos.worst_case && *bos.worst_case == 3;
  os << "; Sep(2,2,2) -> " << (sep.worst_case ? std::to_string(*sep.worst_case) : "none");
  os << "; Bosonic(2,4) -> " << (bos.worst_case ? std::to_string(*bos.worst_case) : "none");
  return {ok, os.str()};
}

Outcome criterion3() {
  const std::vector<VarietySpec> grid{VarietySpec::sep({2, 2}), VarietySpec::sep({2, 3}),
                                      VarietySpec::schmidt_rank(1, 2, 2), VarietySpec::bosonic(2, 2),
                                      VarietySpec::fermionic(2, 4)};
  bool ok = true;
  int compared = 0;
  std::ostringstream os;
  for (const auto& spec : grid) {
    for (int k = 1; k <= 3; ++k) {
      const auto predicted = predicted_dimension(spec, k);
      const auto sampled = ikperp_sampling(spec, k).rank();
      if (!predicted || static_cast<WideCount>(sampled) != *predicted) {
        ok = false;
        os << spec.key() << " k=" << k << " sampled " << sampled << " mismatch; ";
      }
      const auto closed = ikperp_closed_form(spec, k).rank();
      if (closed != sampled) {
        ok = false;
        os << spec.key() << " k=" << k << " closed form " << closed << " mismatch; ";
      }
      if (catalog_generators(spec)) {
        const auto gen = ikperp_generators(spec, k).rank();
        if (gen != sampled) {
          ok = false;
          os << spec.key() << " k=" << k << " generators " << gen << " mismatch; ";
        }
      }
      ++compared;
    }
  }
  const auto f = ikperp_sampling(VarietySpec::fermionic(2, 4), 2).rank();
  ok = ok && f == 20 && rect_schur_dim(2, 2, 4) == 20;
  os << compared << " (spec, k) pairs; Fermionic(2,4) k=2 dim " << f << ", rect_schur_dim " << to_string(rect_schur_dim(2, 2, 4));
  return {ok, os.str()};
}

Outcome criterion4() {
  const auto sep = VarietySpec::sep({2, 2});
  const double truth = 1.0 - oracle::max_schmidt_sq(oracle::singlet(), 2, 2);
  std::ostringstream os;
  os.precision(6);
  bool monotone = true, below = true;
  double prev = -1.0, last = 0.0;
  os << "values";
  for (int k = 1; k <= 6; ++k) {
    last = gm_lower_bound(singlet_span(), sep, k);
    os << " " << last;
    monotone = monotone && last >= prev - 1e-10;
    below = below && last <= truth + 1e-6;
    prev = last;
  }
  os << "; oracle " << truth << "; target >= 0.45 at k=6";
  return {monotone && below && last >= 0.45, os.str()};
}

Outcome criterion5() {
  std::mt19937_64 rng(5);
  int agree = 0, total = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 8);
    const int m = 1 + static_cast<int>(rng() % static_cast<unsigned>(n));
    const int k = 1 + static_cast<int>(rng() % 50);
    const auto f = definetti_bound(VarietySpec::fermionic(m, n), k);
    agree += f.num * (n + k) == 4LL * m * (n - m) * f.den ? 1 : 0;
    const auto b = definetti_bound(VarietySpec::bosonic(m, n), k);
    agree += b.num * (k + 1) == 4LL * m * (n - 1) * b.den ? 1 : 0;
    std::vector<std::size_t> dims(static_cast<std::size_t>(m));
    for (auto& d : dims) d = 1 + rng() % 6;
    long long nmax = 0;
    for (auto d : dims) nmax = std::max(nmax, static_cast<long long>(d));
    const auto s = definetti_bound(VarietySpec::sep(dims), k);
    agree += s.num * (k + 1) == 4LL * m * (nmax - 1) * s.den ? 1 : 0;
    total += 3;
  }
  return {agree == total, std::to_string(agree) + "/" + std::to_string(total) + " exact rational matches"};
}

Outcome criterion6() {
  const auto sep = VarietySpec::sep({2, 2});
  std::mt19937_64 rng(6);
  const auto start = std::chrono::steady_clock::now();
  int good = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix H = oracle::random_hermitian(4, rng);
    bool ok = true;
    double pmax = 1e300, pmin = -1e300;
    for (int k = 1; k <= 3; ++k) {
      const double hi = nu_max(H, sep, k).value;
      const double lo = nu_min(H, sep, k).value;
      ok = ok && hi <= pmax + 1e-8 && lo >= pmin - 1e-8;
      pmax = hi;
      pmin = lo;
    }
    good += ok ? 1 : 0;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ostringstream os;
  os << good << "/20 monotone, " << secs << " s";
  return {good == 20 && secs < 60.0, os.str()};
}

Outcome criterion7() {
  const auto sep = VarietySpec::sep({2, 2});
  std::mt19937_64 rng(7);
  int agree = 0;
  for (int trial = 0; trial < 50; ++trial) agree += equivalence_crosscheck(haar_subspace(4, 1, rng), sep, 2).agree ? 1 : 0;
  return {agree == 50, std::to_string(agree) + "/50 agree"};
}

Outcome criterion8() {
  std::mt19937_64 rng(8);
  std::ostringstream os;
  bool ok = true;
  for (const auto& spec : {VarietySpec::sep({2, 2}), VarietySpec::bosonic(2, 2), VarietySpec::fermionic(2, 4)}) {
    int feasible = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto r = tension_feasibility(random_mixture(spec, rng), spec, 2);
      if (r.verdict == TensionVerdict::Feasible && r.tension && verify_tension(*r.tension)) ++feasible;
    }
    ok = ok && feasible == 100;
    os << spec.key() << " " << feasible << "/100; ";
  }
  const Vector s = oracle::singlet();
  const Matrix rho = s * s.adjoint();
  const auto sep = VarietySpec::sep({2, 2});
  const auto r = tension_feasibility(rho, sep, 2);
  const bool refuted = r.verdict == TensionVerdict::Infeasible && r.witness &&
                       verify_infeasibility_certificate(*r.witness, rho, sep, 2, 0.1);
  os << "singlet " << to_string(r.verdict) << " gap " << r.witness_gap;
  return {ok && refuted, os.str()};
}

Outcome criterion9() {
  const auto spec = VarietySpec::schmidt_rank(1, 2, 2);
  const auto g = generic_degree(spec, 1);
  bool inequality = false;
  for (const auto& st : g.steps)
    if (st.k == 2) inequality = st.exact && st.complement_dim == 9 && st.bound == 10 && st.complement_dim < st.bound;
  std::mt19937_64 rng(9);
  int certified = 0;
  for (int trial = 0; trial < 100; ++trial)
    certified += nullstellensatz_certify(haar_subspace(4, 1, rng), spec, 2).verdict == CertVerdict::CertifiedTangled;
  std::ostringstream os;
  os << "generic degree " << (g.k ? std::to_string(*g.k) : "none") << ", 9 < 10 " << (inequality ? "holds" : "missing")
     << ", " << certified << "/100 certified";
  return {g.k && *g.k == 2 && inequality && certified == 100, os.str()};
}

Outcome criterion10() {
  const auto spec = VarietySpec::sep({2, 3});
  std::mt19937_64 rng(10);
  const auto start = std::chrono::steady_clock::now();
  int agree = 0, false_cert = 0, certified = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto U = haar_subspace(6, 1 + static_cast<std::size_t>(trial % 2), rng);
    const bool cert = nullstellensatz_certify(U, spec, 2).verdict == CertVerdict::CertifiedTangled;
    const double overlap = oracle::max_product_expectation(U.projector(), 2, 3, 100000, rng);
    const bool tangled = overlap < 1.0 - 1e-6;
    agree += cert == tangled ? 1 : 0;
    false_cert += cert && !tangled ? 1 : 0;
    certified += cert ? 1 : 0;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ostringstream os;
  os << agree << "/100 agree, " << certified << " certified, " << false_cert << " false certifications, " << secs
     << " s";
  return {agree == 100 && false_cert == 0 && secs < 600.0, os.str()};
}

Outcome criterion11() {
  const auto sep = VarietySpec::sep({2, 2});
  std::mt19937_64 rng(11);
  int exact = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix H = oracle::random_hermitian(4, rng);
    const int k = 1 + trial % 3;
    exact += hermitian_form_level(H, 1, sep, k).value == nu_min(H, sep, k).value ? 1 : 0;
  }
  bool identity = true;
  for (int k = 1; k <= 3; ++k)
    identity = identity && std::abs(hermitian_form_level(Matrix::Identity(4, 4), 1, sep, k).value - 1.0) < 1e-12;
  double worst = 0.0;
  int invoked = 0;
  for (int trial = 0; trial < 10; ++trial) {
    Matrix F = oracle::random_hermitian(10, rng);
    const int k = 2 + trial % 2;
    const double v = hermitian_form_level(F, 2, sep, k).value;
    F += (std::max(0.0, -v) + 0.05) * Matrix::Identity(10, 10);
    const auto h = hsos_decompose(F, 2, sep, k);
    if (!h.success) return {false, "hsos_decompose failed: " + h.reason};
    worst = std::max(worst, h.residual);
    ++invoked;
  }
  std::ostringstream os;
  os << exact << "/10 bit-identical, identity " << (identity ? "1" : "wrong") << ", hsos max residual " << worst
     << " over " << invoked;
  return {exact == 10 && identity && worst < 1e-8, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expect_fail;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    const std::string prefix = "--expect-fail=";
    if (arg.rfind(prefix, 0) != 0) {
      std::cerr << "unknown argument " << arg << "\n";
      return 2;
    }
    std::stringstream ss(arg.substr(prefix.size()));
    std::string item;
    while (std::getline(ss, item, ',')) expect_fail.insert(std::stoi(item));
  }
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                       criterion5, criterion6, criterion7, criterion8,
                                                       criterion9, criterion10, criterion11};
  int surprises = 0, failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    const bool expected_failure = expect_fail.count(id) > 0;
    if (o.pass == expected_failure) ++surprises;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << " (" << o.detail << ")"
              << (expected_failure && !o.pass ? " [known unattainable]" : "") << std::endl;
  }
  std::cout << failed << " of " << criteria.size() << " criteria failed";
  if (!expect_fail.empty()) std::cout << "; " << surprises << " outcome(s) differ from the recorded expectation";
  std::cout << std::endl;
  return surprises == 0 ? 0 : 1;
}
