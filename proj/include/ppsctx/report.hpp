#pragma once

// Human-readable reports plus a line-oriented machine block for each CLI
// subcommand. Probabilities are printed with 12 decimals; ordering follows the
// scenario and the constraint system, so identical inputs give identical bytes.

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "ppsctx/builtins.hpp"
#include "ppsctx/contextuality.hpp"
#include "ppsctx/measurement.hpp"
#include "ppsctx/paradox.hpp"
#include "ppsctx/scenario_io.hpp"

namespace ppsctx {

struct CommandResult {
  std::string out;
  std::string err;
  int exit_code = 0;
};

namespace report {

inline std::string fixed12(double x) {
  if (std::abs(x) < 5e-13) x = 0.0;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12f", x + 0.0);
  return buf;
}

inline std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

inline const Scenario& require_scenario(const LoadedInput& in) {
  if (!in.scenario) throw Error(ErrorCode::NotAScenario, "'" + in.name + "' is a constraint-system fixture, not a scenario");
  return *in.scenario;
}

inline void scenario_summary(std::ostream& os, std::ostream& mb, const std::string& name, const Scenario& s) {
  os << "scenario: " << name << "\n";
  os << "  dimension: " << s.dim() << "\n";
  os << "  pre rank: " << s.pre().rank() << ", post rank: " << s.post().rank() << "\n";
  os << "  pre/post overlap: " << fixed12(s.relative_overlap()) << "\n";
  os << "  measurements:";
  for (const auto& m : s.measurements()) os << " " << m.name() << "(" << m.size() << ")";
  os << "\n\n";
  mb << "scenario name=" << quoted(name) << " dim=" << s.dim() << " pre_rank=" << s.pre().rank()
     << " post_rank=" << s.post().rank() << " pvms=" << s.measurements().size()
     << " overlap=" << fixed12(s.relative_overlap()) << "\n";
}

inline void abl_section(std::ostream& os, std::ostream& mb, const Scenario& s, const AblTable& t) {
  os << "ABL probabilities\n";
  for (const auto& row : t.rows) {
    const Pvm& pvm = s.pvm(row.pvm);
    os << "  " << row.pvm << "  weight " << fixed12(row.weight) << "\n";
    mb << "weight pvm=" << quoted(row.pvm) << " w=" << fixed12(row.weight) << "\n";
    if (row.probabilities.empty()) {
      os << "    post-selection impossible after this measurement\n";
      continue;
    }
    for (std::size_t k = 0; k < row.probabilities.size(); ++k) {
      os << "    " << pvm.label(k) << "  " << fixed12(row.probabilities[k]) << "\n";
      mb << "abl pvm=" << quoted(row.pvm) << " k=" << k << " label=" << quoted(pvm.label(k))
         << " p=" << fixed12(row.probabilities[k]) << "\n";
    }
  }
  os << "\n";
}

inline void verdict_section(std::ostream& os, std::ostream& mb, const ParadoxVerdict& v) {
  os << "Verdict\n";
  os << "  logical: " << (v.is_logical ? "yes" : "no") << "\n";
  os << "  paradox: " << (v.is_paradox ? "yes" : "no") << "\n";
  os << "  pre/post nonorthogonal: " << (v.pre_post_nonorthogonal ? "yes" : "no") << "\n";
  os << "  closure depth: " << v.depth << "\n";
  mb << "verdict logical=" << v.is_logical << " paradox=" << v.is_paradox
     << " nonorthogonal=" << v.pre_post_nonorthogonal << " depth=" << v.depth << "\n";
  for (const auto& e : v.non_extremal) {
    os << "  not extremal: " << e.pvm << "[" << e.element << "] = " << fixed12(e.probability) << "\n";
    mb << "nonextremal pvm=" << quoted(e.pvm) << " k=" << e.element << " p=" << fixed12(e.probability) << "\n";
  }
  for (const auto& viol : v.violations) {
    os << "  violation: " << to_string(viol.kind) << " [";
    mb << "violation kind=" << to_string(viol.kind) << " conditions=";
    for (std::size_t i = 0; i < viol.conditions.size(); ++i) {
      os << (i ? ", " : "") << to_string(viol.conditions[i]);
      mb << (i ? "," : "") << to_string(viol.conditions[i]);
    }
    os << "]\n    " << viol.message << "\n";
    mb << " derived=" << viol.derived_value << "\n";
    for (const auto& c : viol.projectors) {
      os << "    " << c.role << " = " << c.label << " (rank " << c.projector.rank();
      if (c.value) os << ", value " << *c.value;
      os << ")\n";
      mb << "cited role=" << quoted(c.role) << " label=" << quoted(c.label) << " rank=" << c.projector.rank()
         << " value=" << (c.value ? std::to_string(*c.value) : "none") << "\n";
    }
  }
  if (v.is_logical) {
    os << "  assignment:\n";
    for (const auto& e : v.assignment.entries()) {
      os << "    " << e.label << " = " << e.value << "  (" << to_string(e.provenance) << ", rank "
         << e.projector.rank() << ")\n";
      mb << "assign label=" << quoted(e.label) << " value=" << e.value << " provenance=" << to_string(e.provenance)
         << " rank=" << e.projector.rank() << "\n";
    }
  }
  os << "\n";
}

inline std::string constraint_text(const ConstraintSystem& cs, ConstraintRef c) {
  std::string s = std::string(to_string(c.kind));
  if (c.kind == ConstraintKind::Decision) return s;
  s += "#" + std::to_string(c.index) + " {";
  const auto nodes = detail::constraint_nodes(cs, c);
  for (std::size_t i = 0; i < nodes.size(); ++i) s += (i ? ", " : "") + cs.node(nodes[i]).label;
  return s + "}";
}

inline void system_section(std::ostream& os, std::ostream& mb, const ConstraintSystem& cs) {
  os << "Constraint system\n";
  os << "  nodes: " << cs.size() << " (rank-1: " << cs.rank1_count() << ")\n";
  mb << "system nodes=" << cs.size() << " rank1=" << cs.rank1_count() << " exclusions=" << cs.exclusions.size()
     << " resolutions=" << cs.resolutions.size() << " sums=" << cs.sums.size() << "\n";
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const auto& n = cs.node(i);
    os << "    [" << i << "] " << n.label << "  " << graph_node_label(cs, i) << "\n";
    mb << "node i=" << i << " label=" << quoted(n.label) << " rank=" << n.projector.rank()
       << " ray=" << quoted(graph_node_label(cs, i)) << "\n";
  }
  os << "  fixed: " << cs.fixed.size() << ", exclusions: " << cs.exclusions.size()
     << ", resolutions: " << cs.resolutions.size() << ", sums: " << cs.sums.size() << "\n\n";
}

inline void certificate_section(std::ostream& os, std::ostream& mb, const ConstraintSystem& cs,
                                const Certificate& cert) {
  os << "Certificate\n";
  os << "  status: " << to_string(cert.status) << "\n";
  os << "  search nodes: " << cert.search_nodes << "\n";
  mb << "certificate status=" << to_string(cert.status) << " search_nodes=" << cert.search_nodes << "\n";
  if (cert.status == Status::Sat) {
    os << "  witness:";
    mb << "witness";
    for (std::size_t i = 0; i < cert.witness.size(); ++i) {
      os << " " << cs.node(i).label << "=" << cert.witness[i];
      mb << " " << cert.witness[i];
    }
    os << "\n\n";
    mb << "\n";
    return;
  }
  os << "  trace:\n";
  for (std::size_t i = 0; i < cert.trace.size(); ++i) {
    const auto& s = cert.trace[i];
    os << "    " << (i + 1) << ". " << cs.node(s.node).label << " := " << s.value << "   by "
       << constraint_text(cs, s.cite) << "\n";
    mb << "step n=" << (i + 1) << " node=" << s.node << " value=" << s.value << " cite=" << to_string(s.cite.kind)
       << "#" << s.cite.index << "\n";
  }
  if (cert.conflict) {
    os << "  contradiction: " << constraint_text(cs, *cert.conflict) << "\n";
    mb << "conflict cite=" << to_string(cert.conflict->kind) << "#" << cert.conflict->index << " nodes=";
    const auto nodes = detail::constraint_nodes(cs, *cert.conflict);
    for (std::size_t i = 0; i < nodes.size(); ++i) mb << (i ? "," : "") << nodes[i];
    mb << "\n";
  }
  os << "\n";
}

inline CommandResult finish(std::ostringstream& os, std::ostringstream& mb, int code) {
  mb << "exit " << code << "\n";
  return {os.str() + "[machine]\n" + mb.str(), "", code};
}

}  // namespace report

inline CommandResult cmd_abl(const LoadedInput& in) {
  const Scenario& s = report::require_scenario(in);
  std::ostringstream os, mb;
  report::scenario_summary(os, mb, in.name, s);
  report::abl_section(os, mb, s, abl_table(s));
  return report::finish(os, mb, 0);
}

/// Exit 0 when the scenario is a logical PPS paradox, 2 otherwise.
inline CommandResult cmd_detect(const LoadedInput& in, int depth = 3) {
  const Scenario& s = report::require_scenario(in);
  const ParadoxVerdict v = detect_paradox(s, depth);
  std::ostringstream os, mb;
  report::scenario_summary(os, mb, in.name, s);
  report::abl_section(os, mb, s, v.table);
  report::verdict_section(os, mb, v);
  return report::finish(os, mb, v.is_paradox ? 0 : 2);
}

/// Exit 0 with an UNSAT certificate, 2 when the system is satisfiable.
inline CommandResult cmd_prove(const LoadedInput& in, int depth = 3) {
  std::ostringstream os, mb;
  ConstraintSystem cs = [&] {
    if (in.system) return *in.system;
    const Scenario& s = *in.scenario;
    const ParadoxVerdict v = detect_paradox(s, depth);
    report::scenario_summary(os, mb, in.name, s);
    report::abl_section(os, mb, s, v.table);
    report::verdict_section(os, mb, v);
    return build_constraint_system(s, v);
  }();
  if (in.system) mb << "fixture name=" << report::quoted(in.name) << "\n";
  report::system_section(os, mb, cs);
  const Certificate cert = solve(cs);
  report::certificate_section(os, mb, cs, cert);
  return report::finish(os, mb, cert.status == Status::Unsat ? 0 : 2);
}

inline CommandResult cmd_simulate(const LoadedInput& in, const std::string& pvm_name, std::uint64_t samples,
                                  std::uint64_t seed) {
  const Scenario& s = report::require_scenario(in);
  const Pvm& pvm = s.pvm(pvm_name);
  const SimulationResult r = simulate_frequencies(s, pvm, samples, seed);
  const AblTable t = abl_table(s);
  std::ostringstream os, mb;
  report::scenario_summary(os, mb, in.name, s);
  os << "Simulation of " << pvm.name() << "\n";
  os << "  samples: " << r.samples << ", seed: " << seed << ", accepted: " << r.accepted << "\n";
  mb << "simulate pvm=" << report::quoted(pvm.name()) << " samples=" << r.samples << " seed=" << seed
     << " accepted=" << r.accepted << "\n";
  for (std::size_t k = 0; k < pvm.size(); ++k) {
    const auto abl = t.probability(pvm.name(), k);
    os << "    " << pvm.label(k) << "  frequency " << report::fixed12(r.frequencies[k]) << "  count " << r.counts[k];
    if (abl) os << "  abl " << report::fixed12(*abl);
    os << "\n";
    mb << "freq k=" << k << " label=" << report::quoted(pvm.label(k)) << " f=" << report::fixed12(r.frequencies[k])
       << " count=" << r.counts[k] << " abl=" << (abl ? report::fixed12(*abl) : std::string("none")) << "\n";
  }
  os << "\n";
  return report::finish(os, mb, 0);
}

inline ConstraintSystem system_for(const LoadedInput& in, int depth = 3) {
  if (in.system) return *in.system;
  const ParadoxVerdict v = detect_paradox(*in.scenario, depth);
  return build_constraint_system(*in.scenario, v);
}

/// DOT text on stdout, or written to `out_path` when given.
inline CommandResult cmd_graph(const LoadedInput& in, const std::optional<std::string>& out_path, int depth = 3) {
  const GraphDocument g = export_orthogonality_graph(system_for(in, depth));
  if (!out_path) return {g.dot, "", 0};
  std::ofstream f(*out_path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + *out_path);
  f << g.dot;
  if (!f) throw Error(ErrorCode::IoError, "failed writing " + *out_path);
  return {"wrote " + *out_path + "\n", "", 0};
}

/// Runs `fn`, turning library errors into exit code 1 and a one-line code.
template <typename Fn>
CommandResult guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return {"", "error code=" + std::string(to_string(e.code())) + " message=" + report::quoted(e.what()) + "\n", 1};
  } catch (const std::exception& e) {
    return {"", "error code=Internal message=" + report::quoted(e.what()) + "\n", 1};
  }
}

}  // namespace ppsctx
