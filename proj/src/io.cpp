#include "xtangle/io.hpp"

#include <set>

namespace xtangle::io {

namespace {

void require_fields(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw InputError(where + ": unknown field '" + key + "'");
  }
}

const json& field(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw InputError(where + ": missing field '" + key + "'");
  return j.at(key);
}

std::int64_t as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw InputError(where + ": expected an integer");
  return v.get<std::int64_t>();
}

std::size_t as_size(const json& v, const std::string& where) {
  const auto x = as_int(v, where);
  if (x < 0) throw InputError(where + ": expected a non-negative integer");
  return static_cast<std::size_t>(x);
}

int as_small_int(const json& v, const std::string& where) {
  const auto x = as_int(v, where);
  if (x < -1'000'000 || x > 1'000'000) throw InputError(where + ": integer out of range");
  return static_cast<int>(x);
}

std::vector<std::size_t> as_sizes(const json& v, const std::string& where) {
  if (!v.is_array()) throw InputError(where + ": expected an array of integers");
  std::vector<std::size_t> out;
  for (const auto& e : v) out.push_back(as_size(e, where));
  return out;
}

bool same(const std::optional<Matrix>& a, const std::optional<Matrix>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  return a->rows() == b->rows() && a->cols() == b->cols() && (*a).cwiseEqual(*b).all();
}

}  // namespace

json spec_to_json(const VarietySpec& spec) {
  json j;
  j["variety"] = spec.family();
  if (const auto* v = spec.as<variety::Sep>()) {
    j["dims"] = v->dims;
  } else if (const auto* v = spec.as<variety::SchmidtRank>()) {
    j["r"] = v->r;
    j["dims"] = {v->n1, v->n2};
  } else if (const auto* v = spec.as<variety::Bosonic>()) {
    j["m"] = v->m;
    j["n"] = v->n;
  } else if (const auto* v = spec.as<variety::Fermionic>()) {
    j["m"] = v->m;
    j["n"] = v->n;
  } else if (const auto* v = spec.as<variety::Bisep>()) {
    j["dims"] = v->dims;
  } else if (const auto* v = spec.as<variety::LSep>()) {
    j["l"] = v->l;
    j["dims"] = v->dims;
  } else if (const auto* v = spec.as<variety::TProd>()) {
    j["t"] = v->t;
    j["dims"] = v->dims;
  } else if (const auto* v = spec.as<variety::MPS>()) {
    j["r"] = v->r;
    j["dims"] = v->dims;
  } else if (const auto* v = spec.as<variety::SchmidtSurrogate>()) {
    j["r"] = v->r;
    j["dims"] = v->dims;
    j["side"] = v->side;
  }
  return j;
}

VarietySpec spec_from_json(const json& j) {
  const std::string where = "spec";
  if (!j.is_object()) throw InputError("spec: expected a JSON object");
  const json& name = field(j, "variety", where);
  if (!name.is_string()) throw InputError("spec.variety: expected a string");
  const auto family = name.get<std::string>();
  auto dims = [&] { return as_sizes(field(j, "dims", where), "spec.dims"); };
  auto integer = [&](const char* key) { return as_small_int(field(j, key, where), std::string("spec.") + key); };
  if (family == "sep") {
    require_fields(j, {"variety", "dims"}, where);
    return VarietySpec::sep(dims());
  }
  if (family == "schmidt") {
    require_fields(j, {"variety", "r", "dims"}, where);
    const auto d = dims();
    if (d.size() != 2) throw InputError("spec.dims: schmidt needs exactly two local dimensions");
    return VarietySpec::schmidt_rank(integer("r"), d[0], d[1]);
  }
  if (family == "bosonic") {
    require_fields(j, {"variety", "m", "n"}, where);
    return VarietySpec::bosonic(integer("m"), integer("n"));
  }
  if (family == "fermionic") {
    require_fields(j, {"variety", "m", "n"}, where);
    return VarietySpec::fermionic(integer("m"), integer("n"));
  }
  if (family == "bisep") {
    require_fields(j, {"variety", "dims"}, where);
    return VarietySpec::bisep(dims());
  }
  if (family == "lsep") {
    require_fields(j, {"variety", "l", "dims"}, where);
    return VarietySpec::lsep(integer("l"), dims());
  }
  if (family == "tprod") {
    require_fields(j, {"variety", "t", "dims"}, where);
    return VarietySpec::tprod(integer("t"), dims());
  }
  if (family == "mps") {
    require_fields(j, {"variety", "r", "dims"}, where);
    return VarietySpec::mps(integer("r"), dims());
  }
  if (family == "surrogate") {
    require_fields(j, {"variety", "r", "dims", "side"}, where);
    return VarietySpec::surrogate(integer("r"), dims(), as_sizes(field(j, "side", where), "spec.side"));
  }
  throw InputError("spec.variety: unknown variety '" + family + "'");
}

json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

Complex complex_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw InputError(where + ": expected a number or a [re, im] pair");
}

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(complex_to_json(M(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw InputError(where + ": expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array() || j[0].empty()) throw InputError(where + ": rows must be non-empty arrays");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw InputError(where + ": ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c)
      M(r, c) = complex_from_json(row[static_cast<std::size_t>(c)], where);
  }
  return M;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i)));
  return out;
}

Vector vector_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw InputError(where + ": expected a non-empty array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i], where);
  return v;
}

json columns_to_json(const Matrix& columns) {
  json out = json::array();
  for (Eigen::Index c = 0; c < columns.cols(); ++c) out.push_back(vector_to_json(columns.col(c)));
  return out;
}

Matrix columns_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw InputError(where + ": expected a non-empty array of columns");
  const Vector first = vector_from_json(j[0], where);
  Matrix M(first.size(), static_cast<Eigen::Index>(j.size()));
  M.col(0) = first;
  for (std::size_t c = 1; c < j.size(); ++c) {
    const Vector v = vector_from_json(j[c], where);
    if (v.size() != first.size()) throw InputError(where + ": columns differ in length");
    M.col(static_cast<Eigen::Index>(c)) = v;
  }
  return M;
}

bool operator==(const JobRequest& a, const JobRequest& b) {
  return a.command == b.command && a.spec == b.spec && a.k == b.k && a.k_max == b.k_max && same(a.state, b.state) &&
         same(a.subspace, b.subspace) && same(a.observable, b.observable) && same(a.form, b.form) &&
         a.direction == b.direction && a.s == b.s && a.max_iters == b.max_iters && a.solver_tol == b.solver_tol &&
         a.seed == b.seed && a.cap == b.cap && a.tol == b.tol && a.emit_basis == b.emit_basis;
}

json request_to_json(const JobRequest& r) {
  json j;
  j["schema_version"] = kRequestSchemaVersion;
  j["command"] = r.command;
  if (r.spec) j["spec"] = spec_to_json(*r.spec);
  if (r.k) j["k"] = *r.k;
  if (r.k_max) j["k_max"] = *r.k_max;
  if (r.state) j["state"] = matrix_to_json(*r.state);
  if (r.subspace) j["subspace"] = columns_to_json(*r.subspace);
  if (r.observable) j["observable"] = matrix_to_json(*r.observable);
  if (r.form) j["form"] = matrix_to_json(*r.form);
  if (r.direction) j["direction"] = *r.direction;
  if (r.s) j["s"] = *r.s;
  if (r.max_iters) j["max_iters"] = *r.max_iters;
  if (r.solver_tol) j["solver_tol"] = *r.solver_tol;
  j["seed"] = r.seed;
  j["cap"] = r.cap;
  j["tol"] = r.tol;
  j["emit_basis"] = r.emit_basis;
  return j;
}

JobRequest request_from_json(const json& j) {
  require_fields(j,
                 {"schema_version", "command", "spec", "k", "k_max", "state", "subspace", "observable", "form",
                  "direction", "s", "max_iters", "solver_tol", "seed", "cap", "tol", "emit_basis"},
                 "request");
  JobRequest r;
  if (j.contains("schema_version") && as_int(j["schema_version"], "request.schema_version") != kRequestSchemaVersion)
    throw InputError("request.schema_version: unsupported version");
  if (j.contains("command")) {
    if (!j["command"].is_string()) throw InputError("request.command: expected a string");
    r.command = j["command"].get<std::string>();
  }
  if (j.contains("spec")) r.spec = spec_from_json(j["spec"]);
  if (j.contains("k")) r.k = as_small_int(j["k"], "request.k");
  if (j.contains("k_max")) r.k_max = as_small_int(j["k_max"], "request.k_max");
  if (j.contains("state")) r.state = matrix_from_json(j["state"], "request.state");
  if (j.contains("subspace")) r.subspace = columns_from_json(j["subspace"], "request.subspace");
  if (j.contains("observable")) r.observable = matrix_from_json(j["observable"], "request.observable");
  if (j.contains("form")) r.form = matrix_from_json(j["form"], "request.form");
  if (j.contains("direction")) {
    if (!j["direction"].is_string()) throw InputError("request.direction: expected a string");
    r.direction = j["direction"].get<std::string>();
  }
  if (j.contains("s")) r.s = as_size(j["s"], "request.s");
  if (j.contains("max_iters")) r.max_iters = as_small_int(j["max_iters"], "request.max_iters");
  if (j.contains("solver_tol")) {
    if (!j["solver_tol"].is_number()) throw InputError("request.solver_tol: expected a number");
    r.solver_tol = j["solver_tol"].get<double>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<std::int64_t>() >= 0))
      throw InputError("request.seed: expected a non-negative integer");
    r.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("cap")) r.cap = as_size(j["cap"], "request.cap");
  if (j.contains("tol")) {
    if (!j["tol"].is_number()) throw InputError("request.tol: expected a number");
    r.tol = j["tol"].get<double>();
  }
  if (j.contains("emit_basis")) {
    if (!j["emit_basis"].is_boolean()) throw InputError("request.emit_basis: expected a boolean");
    r.emit_basis = j["emit_basis"].get<bool>();
  }
  return r;
}

}  // namespace xtangle::io
