// Walks the three-box scenario through ABL, paradox detection and the
// noncontextuality proof, printing each stage.

#include <iostream>

#include "ppsctx/ppsctx.hpp"

int main() {
  using namespace ppsctx;
  const Scenario s = builtins::three_box();

  const AblTable table = abl_table(s);
  for (const auto& row : table.rows) {
    const Pvm& m = s.pvm(row.pvm);
    for (std::size_t k = 0; k < m.size(); ++k) {
      std::cout << row.pvm << "/" << m.label(k) << "  p = " << row.probabilities[k] << "\n";
    }
  }

  const ParadoxVerdict v = detect_paradox(s);
  std::cout << "logical: " << (v.is_logical ? "yes" : "no") << ", paradox: " << (v.is_paradox ? "yes" : "no") << "\n";
  if (!v.is_paradox) return 0;
  std::cout << v.violations.front().message << "\n";

  const ConstraintSystem cs = build_constraint_system(s, v);
  const Certificate cert = solve(cs);
  std::cout << cs.size() << " nodes, " << cs.exclusions.size() << " exclusions, "
            << (cert.status == Status::Unsat ? "UNSAT" : "SAT") << " after " << cert.search_nodes << " search nodes\n";
  std::cout << export_orthogonality_graph(cs).dot;
  return 0;
}
