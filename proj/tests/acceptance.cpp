// Acceptance suite: one PASS/FAIL line per criterion, with its runtime budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ppsctx/ppsctx.hpp"
#include "support/generators.hpp"

using namespace ppsctx;
namespace t = ppsctx::testing;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

// `key=value` pairs of one machine-block line; quoted values are unquoted.
std::map<std::string, std::string> fields(const std::string& line) {
  std::map<std::string, std::string> out;
  static const std::regex kv(R"re((\w+)=("(?:[^"\\]|\\.)*"|\S*))re");
  for (auto it = std::sregex_iterator(line.begin(), line.end(), kv); it != std::sregex_iterator(); ++it) {
    std::string v = (*it)[2];
    if (v.size() >= 2 && v.front() == '"') v = v.substr(1, v.size() - 2);
    out[(*it)[1]] = v;
  }
  return out;
}

std::vector<std::string> machine_lines(const std::string& report, const std::string& tag) {
  std::vector<std::string> out;
  std::istringstream in(report.substr(report.find("[machine]")));
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(tag + " ", 0) == 0) out.push_back(line);
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<double> parse_ray(const std::string& label) {
  std::vector<double> v;
  std::string body = label.substr(1, label.size() - 2);
  std::istringstream in(body);
  std::string part;
  while (std::getline(in, part, ',')) v.push_back(std::stod(part));
  return v;
}

Outcome three_box_certainties() {
  Outcome o;
  const Scenario s = builtins::three_box();
  const double want[2][2] = {{1.0, 0.0}, {1.0, 0.0}};
  const char* names[2] = {"E1", "E2"};
  for (int m = 0; m < 2; ++m) {
    for (std::size_t k = 0; k < 2; ++k) {
      const double p = abl_probability(s, s.pvm(names[m]), k);
      o.require(std::abs(p - want[m][k]) <= 1e-9, std::string(names[m]) + " k=" + std::to_string(k) +
                                                      " gave " + std::to_string(p));
    }
  }
  return o;
}

Outcome decomposition_golden() {
  Outcome o;
  const Scenario s = builtins::three_box();
  struct Case {
    const char* pvm;
    std::initializer_list<Complex> q, r;
  };
  for (const Case& c : {Case{"E1", {0, 1, 1}, {0, 1, -1}}, Case{"E2", {1, 0, 1}, {1, 0, -1}}}) {
    const Decomposition d = lemma1_decompose(s, s.pvm(c.pvm)[0]);
    const Projector q = builtins::ray(c.q);
    const Projector r = builtins::ray(c.r);
    o.require(d.q.rank() == 1 && d.r.rank() == 1, std::string(c.pvm) + ": parts are not rank 1");
    o.require(norm_inf(d.q.matrix() * q.matrix() - d.q.matrix()) <= 1e-9, std::string(c.pvm) + ": q mismatch");
    o.require(norm_inf(d.r.matrix() * r.matrix() - d.r.matrix()) <= 1e-9, std::string(c.pvm) + ": r mismatch");
  }
  return o;
}

Outcome clifton_proof() {
  Outcome o;
  const CommandResult r = cmd_prove(load_builtin("three-box"));
  o.require(r.exit_code == 0, "exit code " + std::to_string(r.exit_code));
  auto sys = fields(machine_lines(r.out, "system").at(0));
  o.require(sys["nodes"] == "8" && sys["rank1"] == "8", "system has " + sys["nodes"] + " nodes");
  auto cert = fields(machine_lines(r.out, "certificate").at(0));
  o.require(cert["status"] == "UNSAT", "status " + cert["status"]);
  o.require(std::stoull(cert["search_nodes"]) <= 256, "explored " + cert["search_nodes"] + " assignments");
  std::map<std::string, std::string> ray_of;
  for (const auto& l : machine_lines(r.out, "node")) {
    auto f = fields(l);
    ray_of[f["i"]] = f["ray"];
  }
  const auto conflict = machine_lines(r.out, "conflict");
  o.require(conflict.size() == 1, "no terminal contradiction");
  if (!o.ok) return o;
  auto c = fields(conflict[0]);
  o.require(c["cite"].rfind("exclusion#", 0) == 0, "terminal constraint is " + c["cite"]);
  const auto comma = c["nodes"].find(',');
  std::set<std::string> rays{ray_of[c["nodes"].substr(0, comma)], ray_of[c["nodes"].substr(comma + 1)]};
  o.require(rays == std::set<std::string>{"(1, 0, 0)", "(0, 1, 0)"}, "terminal exclusion is not |1>-|2>");
  return o;
}

Outcome clifton_fixture() {
  Outcome o;
  o.require(solve(builtins::clifton_rays(true)).status == Status::Unsat, "fixture is SAT");
  const ConstraintSystem open = builtins::clifton_rays(false);
  const Certificate c = solve(open);
  o.require(c.status == Status::Sat, "fixture without post is UNSAT");
  o.require(c.status != Status::Sat || check_witness(open, c.witness), "witness fails re-check");
  return o;
}

Outcome monte_carlo() {
  Outcome o;
  const Scenario s = builtins::three_box();
  const auto r = simulate_frequencies(s, s.pvm("E1"), 1000000, 42);
  o.require(r.accepted > 0, "no accepted runs");
  o.require(std::abs(r.frequencies[0] - 1.0) < 0.005, "P1 frequency " + std::to_string(r.frequencies[0]));
  for (std::uint64_t i = 0; i < 20; ++i) {
    CounterRng rng = CounterRng(505).substream(i);
    const int d = 2 + static_cast<int>(i % 3);
    const Scenario rs = t::random_scenario(d, rng);
    for (const auto& m : rs.measurements()) {
      const auto sim = simulate_frequencies(rs, m, 1000000, 1000 + i);
      for (std::size_t k = 0; k < m.size(); ++k) {
        const double p = abl_probability(rs, m, k);
        const double tol = 5 * std::sqrt(p * (1 - p) / static_cast<double>(sim.accepted)) + 1e-12;
        o.require(std::abs(sim.frequencies[k] - p) <= tol,
                  "case " + std::to_string(i) + " " + m.name() + " k=" + std::to_string(k));
      }
    }
  }
  return o;
}

constexpr std::uint64_t kCorpus = 60;

Outcome planted_paradox_suite() {
  Outcome o;
  std::uint64_t flagged = 0, unsat = 0;
  for (std::uint64_t seed = 0; seed < kCorpus; ++seed) {
    const auto planted = t::planted_paradox(seed);
    const Scenario& s = planted.scenario;
    o.require(s.pre_post_nonorthogonal(), "seed " + std::to_string(seed) + " has orthogonal pre/post");
    const ParadoxVerdict v = detect_paradox(s);
    if (!v.is_logical || !v.is_paradox) {
      o.require(false, "seed " + std::to_string(seed) + " (" + t::to_string(planted.variant) + ") not flagged");
      continue;
    }
    ++flagged;
    const ConstraintSystem cs = build_constraint_system(s, v);
    const Certificate c = solve(cs);
    if (c.status == Status::Unsat && replay_trace(cs, c)) ++unsat;
    else o.require(false, "seed " + std::to_string(seed) + " (" + t::to_string(planted.variant) + ") SAT");
  }
  o.require(flagged >= 50, "only " + std::to_string(flagged) + " paradoxes");
  if (o.ok) o.detail = std::to_string(flagged) + " paradoxes flagged, " + std::to_string(unsat) + " UNSAT";
  return o;
}

Outcome certain_outcome_suite() {
  Outcome o;
  std::uint64_t checked = 0;
  auto all_entries = [&](const Scenario& s, const std::string& tag) {
    for (const auto& m : s.measurements()) {
      for (std::size_t k = 0; k < m.size(); ++k) {
        const Lemma2Check c = lemma2_check(s, m, k);
        o.require(c.holds && c.admissible > 0, tag + " " + m.name() + ":" + m.label(k));
        ++checked;
      }
    }
  };
  all_entries(builtins::three_box(), "three-box");
  for (std::uint64_t seed = 0; seed < kCorpus; ++seed) all_entries(t::planted_paradox(seed).scenario, "seed " + std::to_string(seed));
  if (o.ok) o.detail = std::to_string(checked) + " extremal entries";
  return o;
}

// Row weights scale with Tr(pre), so they are compared only when pre is unchanged up to a unitary.
bool same_table(const Scenario& a, const Scenario& b, bool weights = true) {
  const AblTable x = abl_table(a), y = abl_table(b);
  for (const auto& m : a.measurements()) {
    if (weights && std::abs(x.weight(m.name()) - y.weight(m.name())) > 1e-9) return false;
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (std::abs(*x.probability(m.name(), k) - *y.probability(m.name(), k)) > 1e-9) return false;
    }
  }
  return true;
}

Outcome invariance_suite() {
  Outcome o;
  constexpr int kCases = 100;
  for (int i = 0; i < kCases; ++i) {
    CounterRng rng = CounterRng(808).substream(static_cast<std::uint64_t>(i));
    const int d = 2 + static_cast<int>(rng.below(4));
    const std::string tag = "case " + std::to_string(i);

    // Normalization.
    const Scenario s = t::random_scenario(d, rng);
    const AblTable table = abl_table(s);
    for (const auto& row : table.rows) {
      double sum = 0.0;
      for (double p : row.probabilities) sum += p;
      o.require(std::abs(sum - 1.0) <= 1e-9, tag + ": normalization");
    }

    // Rescaling the spanning vectors of pre and post.
    std::vector<Vector> pre, pre_scaled, post, post_scaled;
    const int rpre = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(d - 1)));
    for (int j = 0; j < rpre; ++j) {
      const ColVector v = t::random_vector(d, rng);
      pre.emplace_back(v);
      pre_scaled.emplace_back(ColVector(v * (t::random_complex(rng) * 7.0)));
    }
    const ColVector w = t::random_vector(d, rng);
    post.emplace_back(w);
    post_scaled.emplace_back(ColVector(w * (t::random_complex(rng) * 0.01)));
    const Scenario a(projector_from_vectors(pre), projector_from_vectors(post), s.measurements());
    const Scenario b(projector_from_vectors(pre_scaled), projector_from_vectors(post_scaled), s.measurements());
    o.require(same_table(a, b), tag + ": rescaling");

    // Unitary covariance of the table and of the verdict.
    const Scenario base = i % 2 == 0 ? t::planted_paradox(static_cast<std::uint64_t>(i)).scenario : s;
    const Scenario rot = conjugate(base, t::random_unitary(base.dim(), rng));
    o.require(same_table(base, rot), tag + ": unitary covariance of the table");
    const ParadoxVerdict v0 = detect_paradox(base), v1 = detect_paradox(rot);
    o.require(v0.is_logical == v1.is_logical && v0.is_paradox == v1.is_paradox, tag + ": unitary covariance of is_paradox");

    // Pre/post swap.
    o.require(same_table(s, Scenario(s.post(), s.pre(), s.measurements()), false), tag + ": swap symmetry");
  }
  if (o.ok) o.detail = std::to_string(kCases) + " cases per property";
  return o;
}

Outcome graph_golden() {
  Outcome o;
  const CommandResult r = cmd_graph(load_builtin("three-box"), std::nullopt);
  o.require(r.exit_code == 0, "exit code " + std::to_string(r.exit_code));
  o.require(r.out == read_file(std::string(PPSCTX_GOLDEN_DIR) + "/three-box.dot"), "differs from the golden file");

  // Underlying graph: exactly the orthogonal pairs among the eight rays.
  std::vector<std::string> nodes;
  std::set<std::pair<std::string, std::string>> edges;
  static const std::regex node_re(R"re(^  "([^"]+)";$)re");
  static const std::regex edge_re(R"re(^  "([^"]+)" -- "([^"]+)";$)re");
  std::istringstream in(r.out);
  std::string line;
  std::smatch m;
  while (std::getline(in, line)) {
    if (std::regex_match(line, m, node_re)) nodes.push_back(m[1]);
    if (std::regex_match(line, m, edge_re)) edges.insert(std::minmax(m[1].str(), m[2].str()));
  }
  o.require(nodes.size() == 8, std::to_string(nodes.size()) + " nodes");
  std::set<std::pair<std::string, std::string>> want;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      const auto a = parse_ray(nodes[i]), b = parse_ray(nodes[j]);
      double dot = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
      if (std::abs(dot) < 1e-12) want.insert(std::minmax(nodes[i], nodes[j]));
    }
  }
  o.require(edges == want, "edge set differs from the orthogonal pairs");
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget_ms;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "three-box certainties", 1, three_box_certainties},
      {2, "outcome decomposition golden values", 10, decomposition_golden},
      {3, "eight-ray contextuality proof", 100, clifton_proof},
      {4, "clifton-rays builtin", 100, clifton_fixture},
      {5, "Monte-Carlo oracle agreement", 60000, monte_carlo},
      {6, "planted paradox suite", 120000, planted_paradox_suite},
      {7, "certain outcomes forced", 60000, certain_outcome_suite},
      {8, "invariance suite", 30000, invariance_suite},
      {9, "orthogonality graph golden file", 10, graph_golden},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("threw: ") + e.what();
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (o.ok && ms > c.budget_ms) {
      o.ok = false;
      o.detail = "over budget";
    }
    if (!o.ok) ++failures;
    std::printf("%s [%d] %s  (%.3f ms, budget %.0f ms)%s%s\n", o.ok ? "PASS" : "FAIL", c.id, c.name, ms, c.budget_ms,
                o.detail.empty() ? "" : "  ", o.detail.c_str());
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failures);
  return failures == 0 ? 0 : 1;
}
