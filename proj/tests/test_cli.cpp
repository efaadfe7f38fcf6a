#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "xtangle/cli.hpp"

using namespace xtangle;
using io::json;

namespace {

struct Run {
  int code;
  json out;
  json err;
};

Run run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  Run r{code, nullptr, nullptr};
  if (!out.str().empty() && out.str().front() == '{') r.out = json::parse(out.str());
  if (!err.str().empty()) r.err = json::parse(err.str());
  return r;
}

std::string singlet_columns() {
  const double h = 1.0 / std::sqrt(2.0);
  std::ostringstream os;
  os << "[[0, " << h << ", " << -h << ", 0]]";
  return os.str();
}

std::string singlet_state() {
  return "[[0,0,0,0],[0,0.5,-0.5,0],[0,-0.5,0.5,0],[0,0,0,0]]";
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("degree reports the worst-case value") {
  const auto r = run_cli({"degree", "--variety", "schmidt", "--r", "1", "--dims", "2,5"});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out["result"]["worst_case_degree"] == 2);
  CHECK(r.out["result"]["exact"] == true);
  CHECK(r.out["command"] == "degree");
  CHECK(r.out.contains("wall_time_s"));
  CHECK(r.out["version"] == XTANGLE_VERSION);

  const auto g = run_cli({"degree", "--variety", "schmidt", "--r", "1", "--dims", "2,2", "--s", "1"});
  REQUIRE(g.code == cli::kOk);
  CHECK(g.out["result"]["generic"]["degree"] == 2);
}

TEST_CASE("definetti bound") {
  const auto r = run_cli({"definetti", "--variety", "fermionic", "--m", "2", "--n", "4", "--k", "6"});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out["result"]["bound"].get<double>() == doctest::Approx(1.6));
  CHECK(r.out["result"]["table"][0]["numerator"] == 8);
  CHECK(r.out["result"]["table"][0]["denominator"] == 5);
  const auto t = run_cli({"definetti", "--variety", "sep", "--dims", "2,2", "--k-max", "15"});
  REQUIRE(t.code == cli::kOk);
  CHECK(t.out["result"]["table"].size() == 15);
  CHECK(t.out["result"]["table"][14]["bound"].get<double>() == doctest::Approx(0.5));
  CHECK_FALSE(t.out["result"].contains("bound"));
}

TEST_CASE("certify-subspace on the singlet") {
  const auto r = run_cli({"certify-subspace", "--variety", "schmidt", "--r", "1", "--dims", "2,2", "--k", "2",
                          "--subspace", singlet_columns()});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out["result"]["verdict"] == "certified_tangled");
  CHECK(r.out["result"]["certified_at"] == 2);
  const auto trace = run_cli({"certify-subspace", "--variety", "schmidt", "--r", "1", "--dims", "2,2", "--k-max",
                              "3", "--subspace", singlet_columns()});
  REQUIRE(trace.code == cli::kOk);
  CHECK(trace.out["result"]["levels"].size() == 2);
  CHECK(trace.out["result"]["levels"][0]["verdict"] == "inconclusive");
}

TEST_CASE("ikperp with basis") {
  const auto r = run_cli({"ikperp", "--variety", "fermionic", "--m", "2", "--n", "4", "--k", "2", "--emit-basis"});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out["result"]["dim"] == 20);
  CHECK(r.out["result"]["matches_prediction"] == true);
  REQUIRE(r.out["result"].contains("basis"));
  const Matrix B = io::columns_from_json(r.out["result"]["basis"], "basis");
  CHECK(B.cols() == 20);
  CHECK(B.rows() == 36);
  CHECK((B.adjoint() * B - Matrix::Identity(20, 20)).norm() < 1e-8);
  const auto plain = run_cli({"ikperp", "--variety", "sep", "--dims", "2,2", "--k", "2"});
  CHECK_FALSE(plain.out["result"].contains("basis"));
  CHECK(plain.out["result"]["dim"] == 9);
}

TEST_CASE("tension refutes the singlet") {
  const auto r =
      run_cli({"tension", "--variety", "sep", "--dims", "2,2", "--k", "2", "--state", singlet_state()});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out["result"]["verdict"] == "infeasible");
  CHECK(r.out["result"]["witness"]["gap"].get<double>() >= 0.1);
  CHECK(r.out["result"]["extensions"].is_object());
  const auto mixed = run_cli({"tension", "--variety", "sep", "--dims", "2,2", "--k", "2", "--state",
                              "[[0.25,0,0,0],[0,0.25,0,0],[0,0,0.25,0],[0,0,0,0.25]]"});
  REQUIRE(mixed.code == cli::kOk);
  CHECK(mixed.out["result"]["verdict"] == "feasible");
  CHECK(mixed.out["result"]["tension"]["verified"] == true);
}

TEST_CASE("remaining commands complete") {
  const std::string obs = "[[1,0,0,0],[0,-1,0,0],[0,0,-1,0],[0,0,0,1]]";
  CHECK(run_cli({"gm", "--variety", "sep", "--dims", "2,2", "--k-max", "3", "--subspace", singlet_columns()}).code ==
        cli::kOk);
  const auto w = run_cli({"witness", "--variety", "sep", "--dims", "2,2", "--k", "3", "--subspace", singlet_columns()});
  REQUIRE(w.code == cli::kOk);
  CHECK(w.out["result"]["mode"] == "construct");
  CHECK(w.out["result"]["certificate"]["certified"] == true);
  const auto v = run_cli({"witness", "--variety", "sep", "--dims", "2,2", "--k", "2", "--observable", obs, "--state",
                          singlet_state()});
  REQUIRE(v.code == cli::kOk);
  CHECK(v.out["result"]["mode"] == "verify");
  CHECK(v.out["result"].contains("detects_state"));
  const auto o = run_cli(
      {"optimize", "--variety", "sep", "--dims", "2,2", "--k-max", "3", "--observable", obs, "--direction", "min"});
  REQUIRE(o.code == cli::kOk);
  CHECK(o.out["result"]["levels"].size() == 3);
  CHECK(o.out["result"]["direction"] == "min");
  std::ostringstream form;
  form << "[";
  for (int i = 0; i < 10; ++i) {
    form << (i ? "," : "") << "[";
    for (int j = 0; j < 10; ++j) form << (j ? "," : "") << (i == j ? 1 : 0);
    form << "]";
  }
  form << "]";
  const auto f = run_cli({"optimize", "--variety", "sep", "--dims", "2,2", "--k-max", "3", "--form", form.str()});
  REQUIRE(f.code == cli::kOk);
  CHECK(f.out["result"]["degree"] == 2);
  CHECK(f.out["result"]["levels"][0]["nu"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("errors are structured") {
  SUBCASE("input error") {
    const auto r = run_cli({"definetti", "--variety", "schmidt", "--r", "1", "--dims", "2,2", "--k", "3"});
    CHECK(r.code == cli::kInputError);
    CHECK(r.err["error"]["exit_code"] == 1);
    CHECK(r.err["error"]["type"] == "input_error");
  }
  SUBCASE("bad variety") {
    const auto r = run_cli({"degree", "--variety", "nonsense"});
    CHECK(r.code == cli::kInputError);
  }
  SUBCASE("usage error") {
    const auto r = run_cli({"degree", "--bogus"});
    CHECK(r.code == cli::kInputError);
    CHECK(r.err["error"]["type"] == "usage");
  }
  SUBCASE("cap exceeded") {
    const auto r = run_cli({"ikperp", "--variety", "sep", "--dims", "3,3", "--k", "4", "--cap", "1000"});
    CHECK(r.code == cli::kCapExceeded);
    CHECK(r.err["error"]["exit_code"] == 2);
  }
  SUBCASE("unknown request field") {
    const auto r = run_cli({"degree", "--request", R"({"command":"degree","spec":{"variety":"sep","dims":[2,2]},"bogus":1})"});
    CHECK(r.code == cli::kInputError);
  }
  SUBCASE("mismatched dimensions") {
    const auto r = run_cli({"tension", "--variety", "sep", "--dims", "2,3", "--k", "2", "--state", singlet_state()});
    CHECK(r.code == cli::kInputError);
  }
  SUBCASE("missing payload") {
    const auto r = run_cli({"tension", "--variety", "sep", "--dims", "2,2", "--k", "2"});
    CHECK(r.code == cli::kInputError);
  }
  SUBCASE("help and version") {
    CHECK(run_cli({"--help"}).code == cli::kOk);
    CHECK(run_cli({"--version"}).code == cli::kOk);
  }
}

TEST_CASE("request files round-trip") {
  const auto r = run_cli({"certify-subspace", "--variety", "sep", "--dims", "2,2", "--k-max", "2", "--subspace",
                          singlet_columns(), "--seed", "77", "--tol", "1e-9"});
  REQUIRE(r.code == cli::kOk);
  const json& echo = r.out["request"];
  const auto parsed = io::request_from_json(echo);
  CHECK(io::request_to_json(parsed) == echo);
  CHECK(parsed.seed == 77);
  CHECK(parsed.tol == 1e-9);
  CHECK(r.out["limits"]["tol"] == 1e-9);
  // the echo can be fed back as a request
  const auto again = run_cli({"certify-subspace", "--request", echo.dump()});
  REQUIRE(again.code == cli::kOk);
  CHECK(again.out["result"] == r.out["result"]);
  CHECK(again.out["request"] == echo);
}

TEST_CASE("request JSON codec") {
  std::mt19937_64 rng(4);
  io::JobRequest req;
  req.command = "witness";
  req.spec = VarietySpec::surrogate(1, {2, 2, 3}, {0, 2});
  req.k = 3;
  req.observable = oracle::random_hermitian(12, rng);
  req.state = Matrix::Identity(12, 12) / 12.0;
  req.s = 2;
  req.max_iters = 50;
  req.solver_tol = 1e-6;
  req.seed = 12345;
  req.cap = 999;
  req.emit_basis = true;
  const auto back = io::request_from_json(json::parse(io::request_to_json(req).dump()));
  CHECK(back == req);
  for (const auto& spec : {VarietySpec::sep({2, 3}), VarietySpec::schmidt_rank(2, 3, 4), VarietySpec::bosonic(2, 3),
                           VarietySpec::fermionic(2, 5), VarietySpec::bisep({2, 2, 2}), VarietySpec::lsep(2, {2, 2, 2}),
                           VarietySpec::tprod(2, {2, 2, 2}), VarietySpec::mps(2, {2, 2, 2})})
    CHECK(io::spec_from_json(io::spec_to_json(spec)) == spec);
  CHECK_THROWS_AS(io::spec_from_json(json{{"variety", "sep"}}), InputError);
  CHECK_THROWS_AS(io::spec_from_json(json{{"variety", "sep"}, {"dims", {2, 2}}, {"r", 1}}), InputError);
  CHECK_THROWS_AS(io::request_from_json(json{{"command", "degree"}, {"schema_version", 99}}), InputError);
  CHECK_THROWS_AS(io::matrix_from_json(json::parse("[[1,2],[3]]"), "m"), InputError);
  CHECK(io::complex_from_json(json::parse("[1.5,-2]"), "z") == Complex(1.5, -2.0));
  CHECK(io::complex_from_json(json(3.0), "z") == Complex(3.0, 0.0));
}

TEST_CASE("fixed seeds give identical verdicts") {
  const std::vector<std::string> args{"ikperp", "--variety", "mps", "--r", "1", "--dims", "2,2,2", "--k", "2",
                                      "--seed", "99", "--emit-basis"};
  const auto a = run_cli(args), b = run_cli(args);
  REQUIRE(a.code == cli::kOk);
  CHECK(a.out["result"].dump() == b.out["result"].dump());
  const std::vector<std::string> t{"tension", "--variety", "sep", "--dims", "2,2", "--k", "2", "--state",
                                   "[[0.4,0,0,0.1],[0,0.1,0,0],[0,0,0.1,0],[0.1,0,0,0.4]]"};
  const auto x = run_cli(t), y = run_cli(t);
  REQUIRE(x.code == cli::kOk);
  CHECK(x.out["result"].dump() == y.out["result"].dump());
}

}  // TEST_SUITE
