#include "xtangle/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "xtangle/subspace.hpp"
#include "xtangle/xtension.hpp"

#ifndef XTANGLE_VERSION
#define XTANGLE_VERSION "0.0.0"
#endif

namespace xtangle::cli {

namespace {

using io::json;
using io::JobRequest;

json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

// exact counts stay numbers when they fit in 64 bits
json wide_json(WideCount w) {
  if (w <= static_cast<WideCount>(std::numeric_limits<std::uint64_t>::max())) return static_cast<std::uint64_t>(w);
  return to_string(w);
}

const VarietySpec& need_spec(const JobRequest& r) {
  if (!r.spec) throw InputError(r.command + ": a variety spec is required");
  return *r.spec;
}

int need_k(const JobRequest& r) {
  if (!r.k) throw InputError(r.command + ": level k is required");
  if (*r.k < 1) throw InputError(r.command + ": k must be >= 1");
  return *r.k;
}

// [k_lo, k_hi] from k or k_max
std::pair<int, int> level_range(const JobRequest& r, bool from_one) {
  if (r.k_max) {
    if (*r.k_max < 1) throw InputError(r.command + ": k_max must be >= 1");
    return {1, *r.k_max};
  }
  const int k = need_k(r);
  return {from_one ? 1 : k, k};
}

Subspace need_subspace(const JobRequest& r) {
  if (!r.subspace) throw InputError(r.command + ": a subspace is required");
  const auto N = static_cast<Eigen::Index>(need_spec(r).ambient_dim());
  if (r.subspace->rows() != N) {
    throw DimensionMismatch(r.command + ": subspace columns have length " + std::to_string(r.subspace->rows()) +
                            ", ambient dimension is " + std::to_string(N));
  }
  return Subspace::span_of(*r.subspace, r.tol, "request");
}

json certification_json(const CertificationResult& c) {
  return {{"k", c.k},
          {"verdict", to_string(c.verdict)},
          {"complement_dim", c.complement_dim},
          {"sym_power_dim", c.sym_power_dim},
          {"rank", c.rank},
          {"sigma_min", c.sigma_min},
          {"sigma_max", c.sigma_max},
          {"rank_tol", c.rank_tol},
          {"borderline", c.borderline},
          {"rank_certified", c.rank_certified},
          {"nu", number_or_null(c.nu)},
          {"nu_certified", c.nu_certified},
          {"empty_complement", c.empty_complement}};
}

json witness_json(const WitnessCertificate& w) {
  return {{"k", w.k},
          {"nu_min", number_or_null(w.nu_min)},
          {"empty_complement", w.empty_complement},
          {"negative_eigenvalues", w.negative_eigenvalues},
          {"certified", w.certified}};
}

json cmd_ikperp(const JobRequest& r) {
  const auto& spec = need_spec(r);
  const int k = need_k(r);
  const Limits limits = r.limits();
  auto basis = complement_basis(spec, k, limits);
  if (basis->route == Route::Sampling && r.seed != kDefaultSeed) {
    basis = std::make_shared<const IdealComplementBasis>(ikperp_sampling(spec, k, std::nullopt, r.seed, limits));
  }
  json out{{"k", k},
           {"ambient_dim", spec.ambient_dim()},
           {"dim", basis->rank()},
           {"route", to_string(basis->route)},
           {"undersampled", basis->undersampled},
           {"num_samples", basis->num_samples}};
  if (basis->predicted_dim) {
    out["predicted_dim"] = wide_json(*basis->predicted_dim);
    out["matches_prediction"] = static_cast<WideCount>(basis->rank()) == *basis->predicted_dim;
  } else {
    out["predicted_dim"] = nullptr;
  }
  if (r.emit_basis) out["basis"] = io::columns_to_json(basis->columns);
  return out;
}

json cmd_certify(const JobRequest& r) {
  const auto& spec = need_spec(r);
  const Subspace U = need_subspace(r);
  const auto [lo, hi] = level_range(r, false);
  json levels = json::array();
  json certified_at = nullptr;
  for (int k = lo; k <= hi; ++k) {
    const auto c = nullstellensatz_certify(U, spec, k, r.limits());
    levels.push_back(certification_json(c));
    if (c.verdict == CertVerdict::CertifiedTangled) {
      certified_at = k;
      break;
    }
  }
  return {{"subspace_dim", U.dim()},
          {"verdict", certified_at.is_null() ? "inconclusive" : "certified_tangled"},
          {"certified_at", certified_at},
          {"levels", levels}};
}

json cmd_gm(const JobRequest& r) {
  const auto& spec = need_spec(r);
  const Subspace U = need_subspace(r);
  const auto [lo, hi] = level_range(r, true);
  json levels = json::array();
  double best = 0.0;
  for (int k = lo; k <= hi; ++k) {
    const double g = gm_lower_bound(U, spec, k, r.limits());
    best = std::max(best, g);
    levels.push_back({{"k", k}, {"lower_bound", g}, {"robustness_radius", std::sqrt(std::max(0.0, g))}});
  }
  return {{"subspace_dim", U.dim()}, {"levels", levels}, {"best_lower_bound", best}};
}

json cmd_witness(const JobRequest& r) {
  const auto& spec = need_spec(r);
  const int k = need_k(r);
  const Limits limits = r.limits();
  if (r.observable) {
    const auto cert = witness_certify(*r.observable, spec, k, limits);
    json out{{"mode", "verify"}, {"certificate", witness_json(cert)}};
    if (r.state) {
      require_state(*r.state, spec.ambient_dim(), "witness");
      out["expectation"] = (*r.observable * *r.state).trace().real();
      out["detects_state"] = verify_infeasibility_certificate(*r.observable, *r.state, spec, k, 1e-6, limits);
    }
    return out;
  }
  if (r.subspace) {
    const auto w = witness_from_subspace(need_subspace(r), spec, k, limits);
    return {{"mode", "construct"},
            {"H", io::matrix_to_json(w.H)},
            {"mu", w.mu},
            {"nu", w.nu},
            {"certificate", witness_json(w.certificate)}};
  }
  throw InputError("witness: an observable (to verify) or a subspace (to construct) is required");
}

json cmd_optimize(const JobRequest& r) {
  const auto& spec = need_spec(r);
  const auto [lo, hi] = level_range(r, true);
  (void)lo;
  const Limits limits = r.limits();
  if (r.observable && r.form) throw InputError("optimize: give either an observable or a form, not both");
  if (r.observable) {
    Direction dir = Direction::Max;
    if (r.direction) {
      if (*r.direction == "min") dir = Direction::Min;
      else if (*r.direction != "max") throw InputError("optimize: direction must be 'max' or 'min'");
    }
    const auto t = optimize_over_variety(*r.observable, spec, hi, dir, limits);
    json levels = json::array();
    for (const auto& l : t.levels)
      levels.push_back({{"k", l.k},
                        {"nu", number_or_null(l.nu)},
                        {"empty_complement", l.empty_complement},
                        {"complement_dim", l.complement_dim}});
    return {{"mode", "observable"},       {"direction", to_string(t.direction)}, {"levels", levels},
            {"monotone", t.monotone},     {"final_bound", number_or_null(t.final_bound)},
            {"truncated", t.truncated},   {"warning", t.warning}};
  }
  if (r.form) {
    if (r.direction && *r.direction != "min") throw InputError("optimize: Hermitian forms are bounded from below only");
    const int d = form_degree(static_cast<std::size_t>(r.form->rows()), spec.ambient_dim());
    json levels = json::array();
    bool truncated = false;
    std::string warning;
    for (int k = d; k <= hi; ++k) {
      try {
        const auto v = hermitian_form_level(*r.form, d, spec, k, limits);
        const auto h = hsos_decompose(*r.form, d, spec, k, limits);
        levels.push_back({{"k", k},
                          {"nu", number_or_null(v.value)},
                          {"empty_complement", v.empty_complement},
                          {"hsos", {{"success", h.success},
                                    {"reason", h.reason},
                                    {"residual", h.residual},
                                    {"p_min_eigenvalue", h.p_min_eigenvalue},
                                    {"q_min_eigenvalue", h.q_min_eigenvalue}}}});
      } catch (const CapExceeded& e) {
        truncated = true;
        warning = "trace truncated at k=" + std::to_string(k) + ": " + e.what();
        break;
      }
    }
    return {{"mode", "form"}, {"degree", d}, {"direction", "min"}, {"levels", levels},
            {"truncated", truncated}, {"warning", warning}};
  }
  throw InputError("optimize: an observable or a Hermitian form is required");
}

json cmd_tension(const JobRequest& r) {
  const auto& spec = need_spec(r);
  const int k = need_k(r);
  if (!r.state) throw InputError("tension: a state is required");
  TensionOptions opt;
  if (r.max_iters) opt.max_iters = *r.max_iters;
  if (r.solver_tol) opt.tol = *r.solver_tol;
  const auto t = tension_feasibility(*r.state, spec, k, opt, r.limits());
  json out{{"verdict", to_string(t.verdict)},
           {"iterations", t.iterations},
           {"affine_residual", t.affine_residual},
           {"psd_gap", t.psd_gap},
           {"face_dim", t.face_dim},
           {"complement_dim", t.complement_dim},
           {"note", t.note},
           {"tolerances",
            {{"solver_tol", opt.tol},
             {"verify_tol", 10.0 * opt.tol},
             {"witness_margin", opt.witness_margin},
             {"max_iters", opt.max_iters}}},
           {"extensions", json::object()}};
  if (t.tension) {
    out["tension"] = {{"k", t.tension->k},
                      {"Sigma", io::matrix_to_json(t.tension->Sigma)},
                      {"verified", verify_tension(*t.tension, 10.0 * opt.tol)}};
  }
  if (t.witness) {
    out["witness"] = {{"W", io::matrix_to_json(*t.witness)}, {"gap", t.witness_gap}, {"kind", t.witness_kind}};
  }
  return out;
}

json cmd_definetti(const JobRequest& r) {
  const auto& spec = need_spec(r);
  const auto [lo, hi] = level_range(r, false);
  json table = json::array();
  for (int k = lo; k <= hi; ++k) {
    const auto b = definetti_bound(spec, k);
    table.push_back({{"k", k}, {"bound", b.value()}, {"numerator", b.num}, {"denominator", b.den}});
  }
  json out{{"table", table}};
  if (lo == hi) out["bound"] = table[0]["bound"];
  return out;
}

json cmd_degree(const JobRequest& r) {
  const auto& spec = need_spec(r);
  const auto d = worst_case_degree(spec);
  json out{{"ambient_dim", d.N},
           {"generator_degree", d.d},
           {"worst_case_degree", d.worst_case ? json(*d.worst_case) : json(nullptr)},
           {"exact", d.exact},
           {"upper_bound", d.upper_bound},
           {"surrogate_caveat", d.surrogate_caveat},
           {"regularity", d.regularity ? json(*d.regularity) : json(nullptr)},
           {"general_bound", d.general_bound},
           {"note", d.note}};
  if (r.s) {
    const int cap = r.k_max ? *r.k_max : 12;
    const auto g = generic_degree(spec, *r.s, cap, r.limits());
    json steps = json::array();
    for (const auto& st : g.steps)
      steps.push_back({{"k", st.k},
                       {"complement_dim", wide_json(st.complement_dim)},
                       {"bound", wide_json(st.bound)},
                       {"exact", st.exact}});
    out["generic"] = {{"s", g.s}, {"degree", g.k ? json(*g.k) : json(nullptr)}, {"steps", steps}, {"note", g.note}};
  }
  return out;
}

using Handler = json (*)(const JobRequest&);

struct CommandEntry {
  std::string name;
  Handler handler;
  std::string description;
};

const std::vector<CommandEntry>& handlers() {
  static const std::vector<CommandEntry> table{
      {"ikperp", cmd_ikperp, "dimension (and optionally a basis) of the level-k complement I_k^perp"},
      {"certify-subspace", cmd_certify, "Nullstellensatz certification of a subspace, cross-checked by eigenvalues"},
      {"gm", cmd_gm, "geometric-measure lower bounds over a range of levels"},
      {"witness", cmd_witness, "verify an observable as a witness, or construct one from a subspace"},
      {"optimize", cmd_optimize, "level trace for an observable or a Hermitian form"},
      {"tension", cmd_tension, "level-k extension feasibility of a state, with certificates"},
      {"definetti", cmd_definetti, "de Finetti trace-distance bounds"},
      {"degree", cmd_degree, "worst-case and generic certification degrees"}};
  return table;
}

json load_json_arg(const std::string& value, const std::string& what) {
  const auto first = value.find_first_not_of(" \t\r\n");
  try {
    if (first != std::string::npos && (value[first] == '[' || value[first] == '{')) return json::parse(value);
    std::ifstream in(value);
    if (!in) throw InputError(what + ": cannot open '" + value + "'");
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(what + ": invalid JSON (" + std::string(e.what()) + ")");
  }
}

std::vector<std::size_t> parse_list(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw InputError(what + ": expected a comma-separated list of non-negative integers");
    }
  }
  return out;
}

struct Flags {
  std::string request, variety, dims, side, state, subspace, observable, form, direction;
  std::optional<int> r, m, n, l, t, k, k_max, max_iters;
  std::optional<std::size_t> s, cap;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol, solver_tol;
  bool emit_basis = false;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--request", f.request, "JSON request file");
  sub->add_option("--variety", f.variety, "sep|schmidt|bosonic|fermionic|bisep|lsep|tprod|mps|surrogate");
  sub->add_option("--dims", f.dims, "local dimensions, comma separated");
  sub->add_option("--side", f.side, "surrogate cut: factor indices, comma separated");
  sub->add_option("--r", f.r, "Schmidt rank / bond dimension bound");
  sub->add_option("--m", f.m, "number of particles");
  sub->add_option("--n", f.n, "single-particle dimension");
  sub->add_option("--l", f.l, "l for l-separability");
  sub->add_option("--t", f.t, "t for t-producibility");
  sub->add_option("--k", f.k, "hierarchy level");
  sub->add_option("--k-max", f.k_max, "last hierarchy level of a trace");
  sub->add_option("--state", f.state, "density matrix: JSON file or inline JSON");
  sub->add_option("--subspace", f.subspace, "spanning columns: JSON file or inline JSON");
  sub->add_option("--observable", f.observable, "Hermitian operator: JSON file or inline JSON");
  sub->add_option("--form", f.form, "Hermitian form on S^d(H): JSON file or inline JSON");
  sub->add_option("--direction", f.direction, "max|min");
  sub->add_option("--s", f.s, "subspace dimension for the generic degree");
  sub->add_option("--seed", f.seed, "random seed");
  sub->add_option("--cap", f.cap, "maximum dense entries per construction");
  sub->add_option("--tol", f.tol, "relative rank tolerance");
  sub->add_option("--max-iters", f.max_iters, "tension solver iteration limit");
  sub->add_option("--solver-tol", f.solver_tol, "tension solver residual tolerance");
  sub->add_flag("--emit-basis", f.emit_basis, "include the I_k^perp basis in the report");
}

JobRequest build_request(const std::string& command, const Flags& f) {
  JobRequest r;
  if (!f.request.empty()) {
    r = io::request_from_json(load_json_arg(f.request, "--request"));
    if (!r.command.empty() && r.command != command)
      throw InputError("request file is for '" + r.command + "', not '" + command + "'");
  }
  r.command = command;
  if (!f.variety.empty()) {
    json spec{{"variety", f.variety}};
    if (!f.dims.empty()) spec["dims"] = parse_list(f.dims, "--dims");
    if (!f.side.empty()) spec["side"] = parse_list(f.side, "--side");
    if (f.r) spec["r"] = *f.r;
    if (f.m) spec["m"] = *f.m;
    if (f.n) spec["n"] = *f.n;
    if (f.l) spec["l"] = *f.l;
    if (f.t) spec["t"] = *f.t;
    r.spec = io::spec_from_json(spec);
  }
  if (f.k) r.k = f.k;
  if (f.k_max) r.k_max = f.k_max;
  if (!f.state.empty()) r.state = io::matrix_from_json(load_json_arg(f.state, "--state"), "--state");
  if (!f.subspace.empty()) r.subspace = io::columns_from_json(load_json_arg(f.subspace, "--subspace"), "--subspace");
  if (!f.observable.empty())
    r.observable = io::matrix_from_json(load_json_arg(f.observable, "--observable"), "--observable");
  if (!f.form.empty()) r.form = io::matrix_from_json(load_json_arg(f.form, "--form"), "--form");
  if (!f.direction.empty()) r.direction = f.direction;
  if (f.s) r.s = f.s;
  if (f.seed) r.seed = *f.seed;
  if (f.cap) r.cap = *f.cap;
  if (f.tol) r.tol = *f.tol;
  if (f.max_iters) r.max_iters = f.max_iters;
  if (f.solver_tol) r.solver_tol = f.solver_tol;
  if (f.emit_basis) r.emit_basis = true;
  return r;
}

void emit_error(std::ostream& err, int code, const std::string& type, const std::string& message) {
  err << json{{"error", {{"type", type}, {"message", message}, {"exit_code", code}}}}.dump() << "\n";
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& h : handlers()) v.push_back(h.name);
    return v;
  }();
  return names;
}

json execute(const JobRequest& request) {
  const auto it = std::find_if(handlers().begin(), handlers().end(),
                               [&](const auto& h) { return h.name == request.command; });
  if (it == handlers().end()) throw InputError("unknown command '" + request.command + "'");
  if (!(request.tol > 0.0 && request.tol < 1.0)) throw InputError("tol must lie in (0, 1)");
  if (request.cap == 0) throw InputError("cap must be positive");
  const auto start = std::chrono::steady_clock::now();
  json result = it->handler(request);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {{"command", request.command},
          {"request", io::request_to_json(request)},
          {"result", std::move(result)},
          {"version", XTANGLE_VERSION},
          {"seed", request.seed},
          {"limits", {{"cap", request.cap}, {"tol", request.tol}}},
          {"wall_time_s", elapsed}};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Certify X-tanglement of states and subspaces", "xtangle"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", XTANGLE_VERSION);
  Flags flags;
  std::vector<std::pair<std::string, CLI::App*>> subs;
  for (const auto& entry : handlers()) {
    auto* sub = app.add_subcommand(entry.name, entry.description);
    add_flags(sub, flags);
    subs.emplace_back(entry.name, sub);
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << XTANGLE_VERSION << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    emit_error(err, kInputError, "usage", e.what());
    return kInputError;
  }
  std::string command;
  for (const auto& [name, sub] : subs)
    if (sub->parsed()) command = name;
  try {
    const JobRequest request = build_request(command, flags);
    out << execute(request).dump(2) << "\n";
    return kOk;
  } catch (const InputError& e) {
    emit_error(err, kInputError, "input_error", e.what());
    return kInputError;
  } catch (const io::json::exception& e) {
    emit_error(err, kInputError, "input_error", e.what());
    return kInputError;
  } catch (const CapExceeded& e) {
    emit_error(err, kCapExceeded, "cap_exceeded", e.what());
    return kCapExceeded;
  } catch (const OverflowError& e) {
    emit_error(err, kCapExceeded, "overflow", e.what());
    return kCapExceeded;
  } catch (const ConsistencyError& e) {
    emit_error(err, kInconsistency, "inconsistency", e.what());
    return kInconsistency;
  } catch (const std::invalid_argument& e) {
    emit_error(err, kInputError, "input_error", e.what());
    return kInputError;
  } catch (const std::exception& e) {
    emit_error(err, kInconsistency, "internal_error", e.what());
    return kInconsistency;
  }
}

}  // namespace xtangle::cli
