#pragma once

// JSON scenario documents.
//
//   {
//     "dimension": 3,
//     "pre":  {"vector": [[1,0],[1,0],[1,0]]},
//     "post": {"vector": [[1,0],[1,0],[-1,0]]},
//     "measurements": [
//       {"name": "E1", "outcomes": [
//          {"label": "P1", "vector": [[1,0],[0,0],[0,0]]},
//          {"label": "P1perp", "span": [[[0,0],[1,0],[0,0]], [[0,0],[0,0],[1,0]]]}]}
//     ]
//   }
//
// A complex number is an [re, im] pair; a bare number is read as real. A state
// is given as exactly one of "vector", "projector" (matrix of rows) or "span".
// Vectors need not be normalized.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ppsctx/builtins.hpp"
#include "ppsctx/contextuality.hpp"
#include "ppsctx/measurement.hpp"

namespace ppsctx {

namespace io {

using json = nlohmann::json;

[[noreturn]] inline void parse_fail(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::ParseError, field + ": " + what);
}

inline Complex parse_complex(const json& j, const std::string& field) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  parse_fail(field, "expected [re, im] or a number");
}

inline Vector parse_vector(const json& j, int dim, const std::string& field) {
  if (!j.is_array()) parse_fail(field, "expected an array of complex numbers");
  if (static_cast<int>(j.size()) != dim) {
    parse_fail(field, "has " + std::to_string(j.size()) + " components, expected " + std::to_string(dim));
  }
  ColVector c(dim);
  for (int i = 0; i < dim; ++i) c[i] = parse_complex(j[static_cast<std::size_t>(i)], field + "[" + std::to_string(i) + "]");
  try {
    return Vector(std::move(c));
  } catch (const Error& e) {
    parse_fail(field, e.what());
  }
}

inline Projector parse_state(const json& j, int dim, const std::string& field) {
  if (!j.is_object()) parse_fail(field, "expected an object with one of vector/projector/span");
  const int kinds = static_cast<int>(j.contains("vector")) + static_cast<int>(j.contains("projector")) +
                    static_cast<int>(j.contains("span"));
  if (kinds != 1) parse_fail(field, "needs exactly one of vector/projector/span");
  if (j.contains("vector")) return projector_from_vector(parse_vector(j["vector"], dim, field + ".vector"));
  if (j.contains("span")) {
    const json& s = j["span"];
    if (!s.is_array() || s.empty()) parse_fail(field + ".span", "expected a non-empty list of vectors");
    std::vector<Vector> vs;
    for (std::size_t i = 0; i < s.size(); ++i) vs.push_back(parse_vector(s[i], dim, field + ".span[" + std::to_string(i) + "]"));
    return projector_from_vectors(vs);
  }
  const json& m = j["projector"];
  const std::string f = field + ".projector";
  if (!m.is_array() || static_cast<int>(m.size()) != dim) parse_fail(f, "expected " + std::to_string(dim) + " rows");
  Matrix mat(dim, dim);
  for (int r = 0; r < dim; ++r) {
    const json& row = m[static_cast<std::size_t>(r)];
    const std::string fr = f + "[" + std::to_string(r) + "]";
    if (!row.is_array() || static_cast<int>(row.size()) != dim) parse_fail(fr, "expected " + std::to_string(dim) + " entries");
    for (int c = 0; c < dim; ++c) mat(r, c) = parse_complex(row[static_cast<std::size_t>(c)], fr + "[" + std::to_string(c) + "]");
  }
  try {
    return Projector::from_operator(Operator(std::move(mat)));
  } catch (const Error& e) {
    parse_fail(f, e.what());
  }
}

inline json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline json projector_to_json(const Projector& p) {
  json rows = json::array();
  for (int r = 0; r < p.dim(); ++r) {
    json row = json::array();
    for (int c = 0; c < p.dim(); ++c) row.push_back(complex_to_json(p.matrix()(r, c)));
    rows.push_back(std::move(row));
  }
  return json{{"projector", std::move(rows)}};
}

}  // namespace io

inline Scenario parse_scenario(const std::string& text) {
  using io::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("document: ") + e.what());
  }
  if (!j.is_object()) io::parse_fail("document", "expected a JSON object");
  if (!j.contains("dimension") || !j["dimension"].is_number_integer() || j["dimension"].get<int>() < 1) {
    io::parse_fail("dimension", "expected a positive integer");
  }
  const int dim = j["dimension"].get<int>();
  for (const char* key : {"pre", "post", "measurements"}) {
    if (!j.contains(key)) io::parse_fail(key, "missing");
  }
  Projector pre = io::parse_state(j["pre"], dim, "pre");
  Projector post = io::parse_state(j["post"], dim, "post");
  const json& ms = j["measurements"];
  if (!ms.is_array()) io::parse_fail("measurements", "expected an array");
  std::vector<Pvm> pvms;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const std::string f = "measurements[" + std::to_string(i) + "]";
    const json& m = ms[i];
    if (!m.is_object() || !m.contains("name") || !m["name"].is_string()) io::parse_fail(f + ".name", "expected a string");
    if (!m.contains("outcomes") || !m["outcomes"].is_array()) io::parse_fail(f + ".outcomes", "expected an array");
    std::vector<Projector> es;
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < m["outcomes"].size(); ++k) {
      const json& o = m["outcomes"][k];
      const std::string fo = f + ".outcomes[" + std::to_string(k) + "]";
      es.push_back(io::parse_state(o, dim, fo));
      labels.push_back(o.contains("label") && o["label"].is_string() ? o["label"].get<std::string>() : std::to_string(k));
    }
    try {
      pvms.emplace_back(m["name"].get<std::string>(), std::move(es), std::move(labels));
    } catch (const Error& e) {
      io::parse_fail(f, e.what());
    }
  }
  try {
    return Scenario(std::move(pre), std::move(post), std::move(pvms));
  } catch (const Error& e) {
    io::parse_fail("document", e.what());
  }
}

inline Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

/// Scenario document with every state written as an explicit projector matrix.
inline std::string write_scenario(const Scenario& s) {
  using io::json;
  json j;
  j["dimension"] = s.dim();
  j["pre"] = io::projector_to_json(s.pre());
  j["post"] = io::projector_to_json(s.post());
  json ms = json::array();
  for (const auto& m : s.measurements()) {
    json outcomes = json::array();
    for (std::size_t k = 0; k < m.size(); ++k) {
      json o = io::projector_to_json(m[k]);
      o["label"] = m.label(k);
      outcomes.push_back(std::move(o));
    }
    ms.push_back(json{{"name", m.name()}, {"outcomes", std::move(outcomes)}});
  }
  j["measurements"] = std::move(ms);
  return j.dump(2) + "\n";
}

/// A loaded input: either a scenario or a bare constraint-system fixture.
struct LoadedInput {
  std::string name;
  std::optional<Scenario> scenario;
  std::optional<ConstraintSystem> system;
};

inline LoadedInput load_builtin(const std::string& name) {
  if (name == "three-box") return {name, builtins::three_box(), std::nullopt};
  if (name == "clifton-rays") return {name, std::nullopt, builtins::clifton_rays()};
  throw Error(ErrorCode::UnknownBuiltin, "no builtin named '" + name + "'");
}

}  // namespace ppsctx
