#pragma once

// JSON encoding: complex numbers as [re, im], matrices row-major (array of rows),
// subspaces as an array of columns.

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "xtangle/varieties.hpp"

namespace xtangle::io {

using json = nlohmann::json;

inline constexpr int kRequestSchemaVersion = 1;

json spec_to_json(const VarietySpec& spec);
/// {"variety": "...", ...parameters}; unknown or missing fields throw InputError.
VarietySpec spec_from_json(const json& j);

json complex_to_json(Complex z);
/// Accepts [re, im] or a plain real number.
Complex complex_from_json(const json& j, const std::string& where);

json matrix_to_json(const Matrix& M);
Matrix matrix_from_json(const json& j, const std::string& where);

json vector_to_json(const Vector& v);
Vector vector_from_json(const json& j, const std::string& where);

/// Array of columns.
json columns_to_json(const Matrix& columns);
Matrix columns_from_json(const json& j, const std::string& where);

struct JobRequest {
  std::string command;
  std::optional<VarietySpec> spec;
  std::optional<int> k;
  std::optional<int> k_max;
  std::optional<Matrix> state;
  /// Columns spanning the subspace.
  std::optional<Matrix> subspace;
  std::optional<Matrix> observable;
  /// Hermitian form on S^d(H) occupation coordinates.
  std::optional<Matrix> form;
  std::optional<std::string> direction;
  std::optional<std::size_t> s;
  std::optional<int> max_iters;
  std::optional<double> solver_tol;
  std::uint64_t seed = kDefaultSeed;
  std::size_t cap = Limits{}.max_entries;
  double tol = Limits{}.rank_tol;
  bool emit_basis = false;

  Limits limits() const { return {cap, tol}; }
  friend bool operator==(const JobRequest& a, const JobRequest& b);
};

json request_to_json(const JobRequest& r);
/// Rejects unknown fields and type errors with InputError.
JobRequest request_from_json(const json& j);

}  // namespace xtangle::io
