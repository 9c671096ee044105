#pragma once

#include <vector>

#include "ppsctx/ppsctx.hpp"

namespace ppsctx::testing {

/// Pre = post = |1><1| in d=2 with the single PVM {|1><1|, |2><2|}.
inline Scenario repeated_measurement() {
  const Projector e1 = builtins::ray({1, 0});
  const Projector e2 = builtins::ray({0, 1});
  std::vector<Pvm> ms;
  ms.emplace_back("E", std::vector<Projector>{e1, e2}, std::vector<std::string>{"P", "Pperp"});
  return Scenario(e1, e1, std::move(ms));
}

inline Scenario three_box_first_only() {
  const Scenario s = builtins::three_box();
  return Scenario(s.pre(), s.post(), {s.pvm("E1")});
}

/// Four boxes, pre (1,1,1,1), post (1,1,1,-1), and the pair projectors
/// P12, P23, P13 each certain. The pair measurements commute but no single
/// pair is orthogonal to another, so the contradiction needs derived products.
inline Scenario four_box_pairs() {
  auto pair = [](int a, int b) {
    Matrix m = Matrix::Zero(4, 4);
    m(a, a) = 1;
    m(b, b) = 1;
    return Projector::from_operator(Operator(m));
  };
  std::vector<Pvm> ms;
  const int pairs[3][2] = {{0, 1}, {1, 2}, {0, 2}};
  const char* names[3] = {"A12", "A23", "A13"};
  for (int i = 0; i < 3; ++i) {
    const Projector p = pair(pairs[i][0], pairs[i][1]);
    ms.emplace_back(names[i], std::vector<Projector>{p, p.complement()}, std::vector<std::string>{"in", "out"});
  }
  return Scenario(builtins::ray({1, 1, 1, 1}), builtins::ray({1, 1, 1, -1}), std::move(ms));
}

}  // namespace ppsctx::testing
