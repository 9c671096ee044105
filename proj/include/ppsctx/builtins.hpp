#pragma once

#include <string>
#include <vector>

#include "ppsctx/contextuality.hpp"
#include "ppsctx/measurement.hpp"

namespace ppsctx::builtins {

inline Projector ray(std::initializer_list<Complex> v) { return projector_from_vector(Vector(v)); }

inline Projector span(std::initializer_list<Vector> vs) {
  std::vector<Vector> tmp(vs);
  return projector_from_vectors(tmp);
}

/// Three boxes: pre |1>+|2>+|3>, post |1>+|2>-|3>, and the two alternative
/// intermediate measurements {P1, P1perp} and {P2, P2perp}.
inline Scenario three_box() {
  const Projector p1 = ray({1, 0, 0});
  const Projector p2 = ray({0, 1, 0});
  const Projector p1perp = span({Vector{0, 1, 0}, Vector{0, 0, 1}});
  const Projector p2perp = span({Vector{1, 0, 0}, Vector{0, 0, 1}});
  std::vector<Pvm> ms;
  ms.emplace_back("E1", std::vector<Projector>{p1, p1perp}, std::vector<std::string>{"P1", "P1perp"});
  ms.emplace_back("E2", std::vector<Projector>{p2, p2perp}, std::vector<std::string>{"P2", "P2perp"});
  return Scenario(ray({1, 1, 1}), ray({1, 1, -1}), std::move(ms));
}

/// The eight rays of the three-box proof as a constraint system, fed straight to the solver:
/// |phi> and |psi> fixed to 1, exclusions for every orthogonal pair, and the
/// two orthogonal triplets as resolutions.
inline ConstraintSystem clifton_rays(bool fix_post = true) {
  ConstraintSystem cs(3);
  const auto phi = cs.add_node(ray({1, 1, 1}), "phi", NodeRole::Pre);
  const auto psi = cs.add_node(ray({1, 1, -1}), "psi", NodeRole::Post);
  const auto e1 = cs.add_node(ray({1, 0, 0}), "1", NodeRole::Ray);
  const auto a = cs.add_node(ray({0, 1, 1}), "2+3", NodeRole::Ray);
  const auto b = cs.add_node(ray({0, 1, -1}), "2-3", NodeRole::Ray);
  const auto e2 = cs.add_node(ray({0, 1, 0}), "2", NodeRole::Ray);
  const auto c = cs.add_node(ray({1, 0, 1}), "1+3", NodeRole::Ray);
  const auto d = cs.add_node(ray({1, 0, -1}), "1-3", NodeRole::Ray);
  cs.fix(phi, 1);
  if (fix_post) cs.fix(psi, 1);
  cs.add_resolution({e1, a, b});
  cs.add_resolution({e2, c, d});
  cs.compute_exclusions();
  cs.validate();
  return cs;
}

inline const std::vector<std::string>& names() {
  static const std::vector<std::string> n{"three-box", "clifton-rays"};
  return n;
}

}  // namespace ppsctx::builtins
