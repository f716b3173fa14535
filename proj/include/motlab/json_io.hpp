#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "motlab/errors.hpp"
#include "motlab/measures.hpp"
#include "motlab/mot.hpp"
#include "motlab/numeric.hpp"
#include "motlab/stability.hpp"

namespace motlab {

/// A JSON document failed structural validation (missing fields, wrong
/// types). Syntax errors surface as nlohmann::json::parse_error.
struct JsonError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Writers. Emitted numbers carry 17 significant digits so every double
// round-trips exactly.

inline void append_number_array(std::string& out, const std::vector<double>& v) {
  out += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  out += ']';
}

inline std::string to_json(const DiscreteMeasure& mu) {
  std::string out = "{\"atoms\":";
  append_number_array(out, mu.atoms());
  out += ",\"weights\":";
  append_number_array(out, mu.weights());
  out += '}';
  return out;
}

inline std::string to_json(const Coupling& q) {
  std::string out = "{\"x_atoms\":";
  append_number_array(out, q.x_atoms());
  out += ",\"y_atoms\":";
  append_number_array(out, q.y_atoms());
  out += ",\"mass\":[";
  for (std::size_t i = 0; i < q.x_atoms().size(); ++i) {
    if (i) out += ',';
    out += '[';
    for (std::size_t j = 0; j < q.y_atoms().size(); ++j) {
      if (j) out += ',';
      out += format_double(q.mass()(i, j));
    }
    out += ']';
  }
  out += "]}";
  return out;
}

inline std::string to_json(const OrderVerdict& v) {
  switch (v.kind) {
    case OrderKind::holds:
      return "{\"verdict\":\"holds\"}";
    case OrderKind::fails_mean:
      return "{\"verdict\":\"fails_mean\",\"mean_mu1\":" + format_double(v.lhs) +
             ",\"mean_mu2\":" + format_double(v.rhs) + "}";
    case OrderKind::fails_at:
      return "{\"verdict\":\"fails_at\",\"x\":" + format_double(v.witness) +
             ",\"u1\":" + format_double(v.lhs) +
             ",\"u2\":" + format_double(v.rhs) + "}";
  }
  return "{}";
}

inline std::string to_json(const SolveReport& r) {
  return "{\"value\":" + format_double(r.value) +
         ",\"optimizer\":" + to_json(r.optimizer) +
         ",\"martingale_residual\":" + format_double(r.martingale_residual) +
         ",\"lp_iterations\":" + std::to_string(r.lp_iterations) + "}";
}

inline std::string to_json(const ProjectionResult& r) {
  return "{\"distance\":" + format_double(r.distance) +
         ",\"nearest\":" + to_json(r.nearest) + "}";
}

// ---------------------------------------------------------------------------
// Readers.

namespace json_detail {

inline const nlohmann::json& require(const nlohmann::json& j, const char* key,
                                     const char* context) {
  auto it = j.find(key);
  if (it == j.end())
    throw JsonError(std::string(context) + ": missing field '" + key + "'");
  return *it;
}

inline std::vector<double> numbers(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) throw JsonError(std::string(what) + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) throw JsonError(std::string(what) + " must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace json_detail

inline DiscreteMeasure measure_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw JsonError("measure must be a JSON object");
  auto atoms = json_detail::numbers(json_detail::require(j, "atoms", "measure"),
                                    "measure atoms");
  auto weights = json_detail::numbers(
      json_detail::require(j, "weights", "measure"), "measure weights");
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

inline DiscreteMeasure measure_from_json_text(const std::string& text) {
  return measure_from_json(nlohmann::json::parse(text));
}

inline Coupling coupling_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw JsonError("coupling must be a JSON object");
  auto xs = json_detail::numbers(json_detail::require(j, "x_atoms", "coupling"),
                                 "coupling x_atoms");
  auto ys = json_detail::numbers(json_detail::require(j, "y_atoms", "coupling"),
                                 "coupling y_atoms");
  const auto& mass = json_detail::require(j, "mass", "coupling");
  if (!mass.is_array()) throw JsonError("coupling mass must be an array of rows");
  DenseMatrix m(xs.size(), ys.size());
  if (mass.size() != xs.size())
    throw JsonError("coupling mass row count does not match x_atoms");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    auto row = json_detail::numbers(mass[i], "coupling mass row");
    if (row.size() != ys.size())
      throw JsonError("coupling mass column count does not match y_atoms");
    for (std::size_t jcol = 0; jcol < ys.size(); ++jcol) m(i, jcol) = row[jcol];
  }
  return Coupling(std::move(xs), std::move(ys), std::move(m));
}

inline Coupling coupling_from_json_text(const std::string& text) {
  return coupling_from_json(nlohmann::json::parse(text));
}

inline LpSense sense_from_string(const std::string& s) {
  if (s == "max") return LpSense::maximize;
  if (s == "min") return LpSense::minimize;
  throw JsonError("sense must be \"max\" or \"min\"");
}

/// Experiment description consumed by the sweep/hemi subcommands.
struct ExperimentSpec {
  MeasurePair base;
  std::string cost;
  LpSense sense = LpSense::maximize;
  PerturbationScheme scheme;
  std::optional<Coupling> target;  // lower-hemi target; defaults to a solved optimizer
};

inline ExperimentSpec experiment_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw JsonError("experiment spec must be a JSON object");
  const auto& base = json_detail::require(j, "base", "experiment");
  ExperimentSpec spec{
      MeasurePair{
          measure_from_json(json_detail::require(base, "mu1", "experiment base")),
          measure_from_json(json_detail::require(base, "mu2", "experiment base"))},
      "",
      LpSense::maximize,
      {},
      std::nullopt};
  const auto& cost = json_detail::require(j, "cost", "experiment");
  if (!cost.is_string()) throw JsonError("experiment cost must be a string");
  spec.cost = cost.get<std::string>();
  if (auto it = j.find("sense"); it != j.end()) {
    if (!it->is_string()) throw JsonError("experiment sense must be a string");
    spec.sense = sense_from_string(it->get<std::string>());
  }
  const auto& scheme = json_detail::require(j, "scheme", "experiment");
  if (!scheme.is_object()) throw JsonError("experiment scheme must be an object");
  const auto& kind = json_detail::require(scheme, "kind", "scheme");
  if (!kind.is_string()) throw JsonError("scheme kind must be a string");
  spec.scheme.kind = scheme_kind_from_string(kind.get<std::string>());
  spec.scheme.levels = json_detail::numbers(
      json_detail::require(scheme, "levels", "scheme"), "scheme levels");
  if (spec.scheme.levels.empty()) throw JsonError("scheme levels must be non-empty");
  if (auto it = scheme.find("seed"); it != scheme.end()) {
    if (!it->is_number_integer() && !it->is_number_unsigned())
      throw JsonError("scheme seed must be an integer");
    spec.scheme.seed = it->get<std::uint64_t>();
  }
  if (auto it = j.find("target"); it != j.end())
    spec.target = coupling_from_json(*it);
  return spec;
}

inline ExperimentSpec experiment_from_json_text(const std::string& text) {
  return experiment_from_json(nlohmann::json::parse(text));
}

}  // namespace motlab
