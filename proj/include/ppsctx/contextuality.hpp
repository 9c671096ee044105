#pragma once

// From a logical PPS paradox to a noncontextuality proof.
//
// Every value-1 outcome P of an intermediate PVM splits I - P into Q + R with
// Q orthogonal to the post-selection and R orthogonal to the pre-selection.
// Treating pre, post, the PVM elements and these parts as alternative
// measurements at one time gives a 0/1 constraint system; an exhaustive search
// over it yields either a witness assignment or an UNSAT certificate.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ppsctx/linalg.hpp"
#include "ppsctx/measurement.hpp"
#include "ppsctx/paradox.hpp"

namespace ppsctx {

struct Decomposition {
  Projector p;
  Projector q;  // orthogonal to the post-selection
  Projector r;  // orthogonal to the pre-selection
};

/// R = (I-P) ∧ (I-Πpre), Q = (I-P) - R. Requires Πpost (I-P) Πpre = 0.
inline Decomposition lemma1_decompose(const Scenario& s, const Projector& p) {
  check_same_dim(s.pre(), p);
  const Projector comp = p.complement();
  const double lhs = norm_inf(s.post().matrix() * comp.matrix() * s.pre().matrix());
  if (lhs > tol::orth) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", lhs);
    throw Error(ErrorCode::PreconditionViolated,
                std::string("||Πpost (I-P) Πpre|| = ") + buf + "; the ABL probability of P is not 1");
  }
  Projector r = meet(comp, s.pre().complement());
  Projector q = Projector::from_operator(comp.op() - r.op());
  if (norm_inf(q.matrix() * r.matrix()) > tol::orth || norm_inf(s.pre().matrix() * r.matrix()) > tol::orth ||
      norm_inf(s.post().matrix() * q.matrix()) > tol::orth) {
    throw Error(ErrorCode::PreconditionViolated, "decomposition parts are not orthogonal to pre/post");
  }
  return {p, std::move(q), std::move(r)};
}

enum class NodeRole { Pre, Post, Element, PostOrthogonal, PreOrthogonal, Derived, Ray };

struct CsNode {
  Projector projector;
  std::string label;
  NodeRole role = NodeRole::Element;
};

/// whole = Σ parts (mutually orthogonal). `whole` is empty when the composite
/// projector is represented only through its parts.
struct SumRecord {
  std::optional<std::size_t> whole;
  Projector whole_projector;
  std::string whole_label;
  std::vector<std::size_t> parts;
};

class ConstraintSystem {
 public:
  explicit ConstraintSystem(int dim) : dim_(dim) {}

  int dim() const noexcept { return dim_; }
  const std::vector<CsNode>& nodes() const noexcept { return nodes_; }
  const CsNode& node(std::size_t i) const { return nodes_.at(i); }
  std::size_t size() const noexcept { return nodes_.size(); }

  std::vector<std::pair<std::size_t, int>> fixed;
  std::vector<std::pair<std::size_t, std::size_t>> exclusions;
  std::vector<std::vector<std::size_t>> resolutions;
  std::vector<SumRecord> sums;

  std::optional<std::size_t> find(const Projector& p) const { return index_.find(p); }

  /// Deduplicating insert; the first label wins. Zero projectors are not nodes.
  std::size_t add_node(const Projector& p, std::string label, NodeRole role) {
    if (p.is_zero()) throw Error(ErrorCode::InvalidArgument, "the zero projector cannot be a node");
    if (p.dim() != dim_) throw Error(ErrorCode::DimensionMismatch, "node dimension differs from the system");
    auto [i, inserted] = index_.insert(p);
    if (inserted) nodes_.push_back({p, std::move(label), role});
    return i;
  }

  void fix(std::size_t node, int value) {
    for (const auto& [n, v] : fixed) {
      if (n == node && v == value) return;
    }
    fixed.emplace_back(node, value);
  }

  void add_resolution(std::vector<std::size_t> members) {
    std::vector<std::size_t> key = members;
    std::sort(key.begin(), key.end());
    key.erase(std::unique(key.begin(), key.end()), key.end());
    for (const auto& r : resolutions) {
      std::vector<std::size_t> rk = r;
      std::sort(rk.begin(), rk.end());
      if (rk == key) return;
    }
    resolutions.push_back(std::move(members));
  }

  /// One exclusion per orthogonal node pair (i < j).
  void compute_exclusions() {
    exclusions.clear();
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      for (std::size_t j = i + 1; j < nodes_.size(); ++j) {
        if (is_orthogonal(nodes_[i].projector, nodes_[j].projector)) exclusions.emplace_back(i, j);
      }
    }
  }

  /// Throws InvalidArgument naming the first malformed constraint.
  void validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
    for (const auto& [n, v] : fixed) {
      if (n >= nodes_.size() || (v != 0 && v != 1)) bad("malformed fixed value");
    }
    for (const auto& [a, b] : exclusions) {
      if (a >= nodes_.size() || b >= nodes_.size()) bad("exclusion refers to a missing node");
      if (!is_orthogonal(nodes_[a].projector, nodes_[b].projector)) {
        bad("exclusion between non-orthogonal nodes " + nodes_[a].label + ", " + nodes_[b].label);
      }
    }
    const Matrix id = Matrix::Identity(dim_, dim_);
    for (const auto& r : resolutions) {
      Matrix sum = Matrix::Zero(dim_, dim_);
      for (auto n : r) {
        if (n >= nodes_.size()) bad("resolution refers to a missing node");
        sum += nodes_[n].projector.matrix();
      }
      if (!approx_equal(sum, id)) bad("resolution does not sum to the identity");
    }
    for (const auto& s : sums) {
      Matrix sum = Matrix::Zero(dim_, dim_);
      for (auto n : s.parts) {
        if (n >= nodes_.size()) bad("sum refers to a missing node");
        sum += nodes_[n].projector.matrix();
      }
      if (!approx_equal(sum, s.whole_projector.matrix())) bad("sum parts do not add up to " + s.whole_label);
      if (s.whole && !approx_equal(nodes_[*s.whole].projector, s.whole_projector)) bad("sum whole mismatch");
    }
  }

  std::size_t rank1_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const CsNode& n) { return n.projector.rank() == 1; }));
  }

 private:
  int dim_;
  std::vector<CsNode> nodes_;
  ProjectorIndex index_;
};

// ---------------------------------------------------------------------------
// Certificates and the solver

enum class ConstraintKind { Fixed, Exclusion, Resolution, Sum, Decision };

constexpr std::string_view to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::Fixed: return "fixed";
    case ConstraintKind::Exclusion: return "exclusion";
    case ConstraintKind::Resolution: return "resolution";
    case ConstraintKind::Sum: return "sum";
    case ConstraintKind::Decision: return "decision";
  }
  return "?";
}

/// Index into the matching list of the system (`fixed`, `exclusions`, ...).
struct ConstraintRef {
  ConstraintKind kind = ConstraintKind::Decision;
  std::size_t index = 0;
  friend bool operator==(const ConstraintRef&, const ConstraintRef&) = default;
};

struct TraceStep {
  std::size_t node = 0;
  int value = 0;
  ConstraintRef cite;
};

enum class Status { Sat, Unsat };

constexpr std::string_view to_string(Status s) { return s == Status::Sat ? "SAT" : "UNSAT"; }

struct Certificate {
  Status status = Status::Unsat;
  std::vector<int> witness;          // SAT only
  std::vector<TraceStep> trace;      // UNSAT only: propagation log of the final failed branch
  std::optional<ConstraintRef> conflict;
  std::uint64_t search_nodes = 0;    // partial assignments explored
};

namespace detail {

// -1 unassigned, 0, 1
using Values = std::vector<int>;

inline std::vector<std::size_t> constraint_nodes(const ConstraintSystem& cs, ConstraintRef c) {
  switch (c.kind) {
    case ConstraintKind::Fixed: return {cs.fixed[c.index].first};
    case ConstraintKind::Exclusion: return {cs.exclusions[c.index].first, cs.exclusions[c.index].second};
    case ConstraintKind::Resolution: return cs.resolutions[c.index];
    case ConstraintKind::Sum: {
      std::vector<std::size_t> out;
      if (cs.sums[c.index].whole) out.push_back(*cs.sums[c.index].whole);
      out.insert(out.end(), cs.sums[c.index].parts.begin(), cs.sums[c.index].parts.end());
      return out;
    }
    case ConstraintKind::Decision: return {};
  }
  return {};
}

/// Every constraint the solver enforces, in the fixed scan order.
inline std::vector<ConstraintRef> all_constraints(const ConstraintSystem& cs) {
  std::vector<ConstraintRef> out;
  for (std::size_t i = 0; i < cs.fixed.size(); ++i) out.push_back({ConstraintKind::Fixed, i});
  for (std::size_t i = 0; i < cs.exclusions.size(); ++i) out.push_back({ConstraintKind::Exclusion, i});
  for (std::size_t i = 0; i < cs.resolutions.size(); ++i) out.push_back({ConstraintKind::Resolution, i});
  for (std::size_t i = 0; i < cs.sums.size(); ++i) {
    if (cs.sums[i].whole) out.push_back({ConstraintKind::Sum, i});
  }
  return out;
}

struct Tally {
  int ones = 0, zeros = 0, open = 0;
};

inline Tally tally(const Values& v, const std::vector<std::size_t>& nodes) {
  Tally t;
  for (auto n : nodes) {
    if (v[n] == 1) ++t.ones;
    else if (v[n] == 0) ++t.zeros;
    else ++t.open;
  }
  return t;
}

/// True iff the (partial) assignment already breaks the constraint.
inline bool violated(const ConstraintSystem& cs, ConstraintRef c, const Values& v) {
  switch (c.kind) {
    case ConstraintKind::Fixed: {
      const auto [n, val] = cs.fixed[c.index];
      return v[n] != -1 && v[n] != val;
    }
    case ConstraintKind::Exclusion: {
      const auto [a, b] = cs.exclusions[c.index];
      return v[a] == 1 && v[b] == 1;
    }
    case ConstraintKind::Resolution: {
      const Tally t = tally(v, cs.resolutions[c.index]);
      return t.ones >= 2 || (t.open == 0 && t.ones == 0);
    }
    case ConstraintKind::Sum: {
      const SumRecord& s = cs.sums[c.index];
      const Tally t = tally(v, s.parts);
      const int w = v[*s.whole];
      if (t.ones >= 2) return true;
      if (w == 0 && t.ones >= 1) return true;
      if (w == 1 && t.open == 0 && t.ones == 0) return true;
      return false;
    }
    case ConstraintKind::Decision: return false;
  }
  return false;
}

/// Unit implications of one constraint under `v`.
inline void implications(const ConstraintSystem& cs, ConstraintRef c, const Values& v,
                         std::vector<TraceStep>& out) {
  switch (c.kind) {
    case ConstraintKind::Fixed: {
      const auto [n, val] = cs.fixed[c.index];
      if (v[n] == -1) out.push_back({n, val, c});
      return;
    }
    case ConstraintKind::Exclusion: {
      const auto [a, b] = cs.exclusions[c.index];
      if (v[a] == 1 && v[b] == -1) out.push_back({b, 0, c});
      if (v[b] == 1 && v[a] == -1) out.push_back({a, 0, c});
      return;
    }
    case ConstraintKind::Resolution: {
      const auto& r = cs.resolutions[c.index];
      const Tally t = tally(v, r);
      if (t.ones >= 1) {
        for (auto n : r) {
          if (v[n] == -1) out.push_back({n, 0, c});
        }
      } else if (t.open == 1) {
        for (auto n : r) {
          if (v[n] == -1) out.push_back({n, 1, c});
        }
      }
      return;
    }
    case ConstraintKind::Sum: {
      const SumRecord& s = cs.sums[c.index];
      const std::size_t w = *s.whole;
      const Tally t = tally(v, s.parts);
      if (t.ones >= 1) {
        if (v[w] == -1) out.push_back({w, 1, c});
        for (auto n : s.parts) {
          if (v[n] == -1) out.push_back({n, 0, c});
        }
      } else if (v[w] == 0) {
        for (auto n : s.parts) {
          if (v[n] == -1) out.push_back({n, 0, c});
        }
      } else if (v[w] == 1 && t.open == 1) {
        for (auto n : s.parts) {
          if (v[n] == -1) out.push_back({n, 1, c});
        }
      } else if (v[w] == -1 && t.open == 0) {
        out.push_back({w, 0, c});
      }
      return;
    }
    case ConstraintKind::Decision: return;
  }
}

struct Branch {
  Values values;
  std::vector<TraceStep> steps;
};

/// Round-based propagation: all implications are computed from the state at
/// the start of a round, applied together, then constraints are scanned for a
/// conflict. Returns the first violated constraint, if any.
inline std::optional<ConstraintRef> propagate(const ConstraintSystem& cs, const std::vector<ConstraintRef>& cons,
                                              Branch& b) {
  for (const auto& c : cons) {
    if (violated(cs, c, b.values)) return c;
  }
  std::vector<TraceStep> pending;
  while (true) {
    pending.clear();
    for (const auto& c : cons) implications(cs, c, b.values, pending);
    if (pending.empty()) return std::nullopt;
    for (const auto& step : pending) {
      if (b.values[step.node] != -1) continue;
      b.values[step.node] = step.value;
      b.steps.push_back(step);
    }
    for (const auto& c : cons) {
      if (violated(cs, c, b.values)) return c;
    }
  }
}

/// Keeps only the steps the conflict depends on, in their original order.
inline std::vector<TraceStep> slice_trace(const ConstraintSystem& cs, const std::vector<TraceStep>& steps,
                                          ConstraintRef conflict) {
  std::vector<bool> needed(cs.size(), false);
  for (auto n : constraint_nodes(cs, conflict)) needed[n] = true;
  std::vector<bool> keep(steps.size(), false);
  for (std::size_t i = steps.size(); i-- > 0;) {
    const TraceStep& s = steps[i];
    if (!needed[s.node]) continue;
    keep[i] = true;
    needed[s.node] = false;
    for (auto n : constraint_nodes(cs, s.cite)) {
      if (n != s.node) needed[n] = true;
    }
  }
  std::vector<TraceStep> out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (keep[i]) out.push_back(steps[i]);
  }
  return out;
}

/// Fixed nodes first, then by descending constraint degree, ties by index.
inline std::vector<std::size_t> variable_order(const ConstraintSystem& cs, const std::vector<ConstraintRef>& cons) {
  std::vector<int> degree(cs.size(), 0);
  for (const auto& c : cons) {
    for (auto n : constraint_nodes(cs, c)) ++degree[n];
  }
  std::vector<bool> is_fixed(cs.size(), false);
  std::vector<std::size_t> order;
  for (const auto& [n, v] : cs.fixed) {
    if (!is_fixed[n]) {
      is_fixed[n] = true;
      order.push_back(n);
    }
  }
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (!is_fixed[i]) rest.push_back(i);
  }
  std::stable_sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) { return degree[a] > degree[b]; });
  order.insert(order.end(), rest.begin(), rest.end());
  return order;
}

}  // namespace detail

/// True iff the full assignment satisfies every constraint of the system.
inline bool check_witness(const ConstraintSystem& cs, const std::vector<int>& w) {
  if (w.size() != cs.size()) return false;
  for (int x : w) {
    if (x != 0 && x != 1) return false;
  }
  for (const auto& [n, v] : cs.fixed) {
    if (w[n] != v) return false;
  }
  for (const auto& [a, b] : cs.exclusions) {
    if (w[a] + w[b] > 1) return false;
  }
  for (const auto& r : cs.resolutions) {
    int ones = 0;
    for (auto n : r) ones += w[n];
    if (ones != 1) return false;
  }
  for (const auto& s : cs.sums) {
    if (!s.whole) continue;
    int ones = 0;
    for (auto n : s.parts) ones += w[n];
    if (ones != w[*s.whole]) return false;
  }
  return true;
}

/// Exhaustive backtracking search with unit propagation. UNSAT is a proof:
/// every branch of the search tree was closed by a violated constraint.
inline Certificate solve(const ConstraintSystem& cs) {
  const auto cons = detail::all_constraints(cs);
  const auto order = detail::variable_order(cs, cons);
  Certificate cert;
  detail::Branch last_failed;
  ConstraintRef last_conflict;

  std::function<bool(detail::Branch)> dfs = [&](detail::Branch b) -> bool {
    ++cert.search_nodes;
    if (auto c = detail::propagate(cs, cons, b)) {
      last_failed = std::move(b);
      last_conflict = *c;
      return false;
    }
    auto next = std::find_if(order.begin(), order.end(), [&](std::size_t n) { return b.values[n] == -1; });
    if (next == order.end()) {
      cert.witness = b.values;
      return true;
    }
    for (int val : {1, 0}) {
      detail::Branch child = b;
      child.values[*next] = val;
      child.steps.push_back({*next, val, {ConstraintKind::Decision, 0}});
      if (dfs(std::move(child))) return true;
    }
    return false;
  };

  detail::Branch root{detail::Values(cs.size(), -1), {}};
  if (dfs(std::move(root))) {
    cert.status = Status::Sat;
    return cert;
  }
  cert.status = Status::Unsat;
  cert.conflict = last_conflict;
  cert.trace = detail::slice_trace(cs, last_failed.steps, last_conflict);
  return cert;
}

/// Replays an UNSAT trace: each non-decision step must be forced by its cited
/// constraint given the earlier steps, and the final constraint must be violated.
inline bool replay_trace(const ConstraintSystem& cs, const Certificate& cert) {
  if (cert.status != Status::Unsat || !cert.conflict) return false;
  detail::Values v(cs.size(), -1);
  for (const auto& s : cert.trace) {
    if (s.node >= cs.size() || v[s.node] != -1) return false;
    if (s.cite.kind != ConstraintKind::Decision) {
      detail::Values flipped = v;
      flipped[s.node] = 1 - s.value;
      if (!detail::violated(cs, s.cite, flipped)) return false;
    }
    v[s.node] = s.value;
  }
  return detail::violated(cs, *cert.conflict, v);
}

/// Calls `fn` for every full assignment satisfying the system (plain 2^n sweep).
inline std::uint64_t enumerate_models(const ConstraintSystem& cs,
                                      const std::function<void(const std::vector<int>&)>& fn = {}) {
  const std::size_t n = cs.size();
  if (n > 24) throw Error(ErrorCode::InvalidArgument, "too many nodes for exhaustive enumeration");
  std::uint64_t count = 0;
  std::vector<int> w(n, 0);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    for (std::size_t i = 0; i < n; ++i) w[i] = static_cast<int>((mask >> i) & 1u);
    if (check_witness(cs, w)) {
      ++count;
      if (fn) fn(w);
    }
  }
  return count;
}

// ---------------------------------------------------------------------------
// Building the system from a paradox

namespace detail {

class SystemBuilder {
 public:
  SystemBuilder(const Scenario& s, const LogicalAssignment& a) : s_(s), a_(a), cs_(s.dim()) {}

  ConstraintSystem& system() { return cs_; }

  /// Marks `sibling` (= I - p of a two-outcome PVM) as represented by `parts`.
  void eliminate(const Projector& sibling, std::string label, std::vector<std::size_t> parts) {
    cs_.sums.push_back({std::nullopt, sibling, label, std::move(parts)});
    eliminated_.push_back({sibling, std::move(label), cs_.sums.size() - 1});
  }

  std::optional<std::size_t> node_for(const Projector& p) const { return cs_.find(p); }

  /// Makes the assignment entry a node, adding the constraints of its derivation.
  std::optional<std::size_t> ensure(std::size_t e) {
    const AssignmentEntry& entry = a_[e];
    const Projector& p = entry.projector;
    if (p.is_zero()) return std::nullopt;
    if (auto n = cs_.find(p)) return n;
    switch (entry.provenance) {
      case Provenance::AblDirect: {
        const std::size_t n = cs_.add_node(p, entry.label, NodeRole::Element);
        for (const auto& el : eliminated_) {
          if (approx_equal(el.projector, p)) cs_.sums[el.sum].whole = n;
        }
        return n;
      }
      case Provenance::ForcedConstant: {
        const std::size_t n = cs_.add_node(p, "I", NodeRole::Derived);
        cs_.add_resolution({n});
        return n;
      }
      case Provenance::ClosureDerived: break;
    }
    switch (entry.derivation) {
      case Derivation::Complement: {
        auto base = ensure(entry.operands.at(0));
        const std::size_t n = cs_.add_node(p, entry.label, NodeRole::Derived);
        std::vector<std::size_t> r{n};
        if (base) r.insert(r.begin(), *base);
        cs_.add_resolution(r);
        return n;
      }
      case Derivation::Product: {
        return cells(entry.operands.at(0), entry.operands.at(1)).c11;
      }
      case Derivation::Join: {
        const Cells c = cells(entry.operands.at(0), entry.operands.at(1));
        const std::size_t n = cs_.add_node(p, entry.label, NodeRole::Derived);
        std::vector<std::size_t> parts;
        for (auto x : {c.c11, c.c10, c.c01}) {
          if (x) parts.push_back(*x);
        }
        if (parts.size() >= 2) cs_.sums.push_back({n, p, entry.label, parts});
        std::vector<std::size_t> r{n};
        if (c.c00) r.push_back(*c.c00);
        cs_.add_resolution(r);
        return n;
      }
      case Derivation::None: break;
    }
    return cs_.add_node(p, entry.label, NodeRole::Derived);
  }

  struct Cells {
    std::optional<std::size_t> c11, c10, c01, c00;
  };

  /// Joint outcomes of a commuting pair: {AB, A(I-B), (I-A)B, (I-A)(I-B)} as a
  /// resolution, with A and B recorded as sums of their cells.
  Cells cells(std::size_t ea, std::size_t eb) {
    const auto na = ensure(ea);
    const auto nb = ensure(eb);
    const Projector& a = a_[ea].projector;
    const Projector& b = a_[eb].projector;
    const int d = cs_.dim();
    const Matrix id = Matrix::Identity(d, d);
    const Matrix ab = a.matrix() * b.matrix();
    const std::string la = a_[ea].label, lb = a_[eb].label;
    auto cell = [&](const Matrix& m, const std::string& tag) -> std::optional<std::size_t> {
      Projector c = Projector::from_operator(Operator(m));
      if (c.is_zero()) return std::nullopt;
      return cs_.add_node(c, tag + "(" + la + "," + lb + ")", NodeRole::Derived);
    };
    Cells c;
    c.c11 = cell(ab, "cell11");
    c.c10 = cell(a.matrix() - ab, "cell10");
    c.c01 = cell(b.matrix() - ab, "cell01");
    c.c00 = cell(id - a.matrix() - b.matrix() + ab, "cell00");
    std::vector<std::size_t> res;
    for (auto x : {c.c11, c.c10, c.c01, c.c00}) {
      if (x) res.push_back(*x);
    }
    cs_.add_resolution(res);
    auto record = [&](std::optional<std::size_t> whole, const Projector& wp, const std::string& label,
                      std::optional<std::size_t> x, std::optional<std::size_t> y) {
      if (!whole || !x || !y) return;
      cs_.sums.push_back({whole, wp, label, {*x, *y}});
    };
    record(na, a, la, c.c11, c.c10);
    record(nb, b, lb, c.c11, c.c01);
    return c;
  }

  void encode(const Violation& v) {
    auto entry = [&](std::string_view role) -> std::optional<std::size_t> {
      const auto* c = v.cited(role);
      return c ? c->entry : std::nullopt;
    };
    switch (v.kind) {
      case ViolationKind::ValueConflict: return;
      case ViolationKind::ConstantMismatch:
        if (auto x = entry("X")) ensure(*x);
        return;
      case ViolationKind::ComplementMismatch: {
        auto p = entry("P");
        auto c = entry("I-P");
        std::vector<std::size_t> r;
        for (auto e : {p, c}) {
          if (e) {
            if (auto n = ensure(*e)) r.push_back(*n);
          }
        }
        if (!r.empty()) cs_.add_resolution(r);
        return;
      }
      case ViolationKind::JoinOutOfRange: {
        auto p = entry("P");
        auto q = entry("Q");
        if (!p || !q) return;
        ensure(*p);
        ensure(*q);
        // An orthogonal pair is already covered by its exclusion.
        if (is_orthogonal(a_[*p].projector, a_[*q].projector)) return;
        cells(*p, *q);
        return;
      }
      case ViolationKind::ProductExceedsFactor:
      case ViolationKind::JoinMismatch: {
        auto p = entry("P");
        auto q = entry("Q");
        if (!p || !q) return;
        if (auto pq = entry("PQ")) ensure(*pq);
        const Cells c = cells(*p, *q);
        if (v.kind == ViolationKind::JoinMismatch) {
          if (auto j = entry("P+Q-PQ")) {
            const Projector& jp = a_[*j].projector;
            const std::size_t n = *ensure(*j);
            std::vector<std::size_t> parts;
            for (auto x : {c.c11, c.c10, c.c01}) {
              if (x) parts.push_back(*x);
            }
            if (parts.size() >= 2) cs_.sums.push_back({n, jp, a_[*j].label, parts});
            std::vector<std::size_t> r{n};
            if (c.c00) r.push_back(*c.c00);
            cs_.add_resolution(r);
          }
        }
        return;
      }
    }
  }

 private:
  struct Eliminated {
    Projector projector;
    std::string label;
    std::size_t sum;
  };

  const Scenario& s_;
  const LogicalAssignment& a_;
  ConstraintSystem cs_;
  std::vector<Eliminated> eliminated_;
};

inline std::optional<std::size_t> value_one_element(const Pvm& pvm, const LogicalAssignment& a) {
  for (std::size_t k = 0; k < pvm.size(); ++k) {
    if (a.value(pvm[k]) == 1) return k;
  }
  return std::nullopt;
}

}  // namespace detail

/// Pre/post fixed to 1, every PVM element, the q/r parts of every value-1
/// element, orthogonality exclusions, and resolutions of the identity. The
/// sibling of a value-1 element in a two-outcome PVM is represented by its
/// parts. The violation found by the paradox detector is encoded on top when
/// its operands are not already mutually exclusive nodes.
inline ConstraintSystem build_constraint_system(const Scenario& s, const ParadoxVerdict& verdict) {
  if (!verdict.is_paradox) throw Error(ErrorCode::NotAParadox, "the scenario is not a logical PPS paradox");
  if (!s.pre_post_nonorthogonal()) {
    throw Error(ErrorCode::NonorthogonalityRequired, "pre- and post-selection projectors are orthogonal");
  }
  const LogicalAssignment& a = verdict.assignment;
  detail::SystemBuilder b(s, a);
  ConstraintSystem& cs = b.system();

  const std::size_t pre = cs.add_node(s.pre(), "pre", NodeRole::Pre);
  const std::size_t post = cs.add_node(s.post(), "post", NodeRole::Post);
  cs.fix(pre, 1);
  cs.fix(post, 1);

  struct Plan {
    const Pvm* pvm;
    std::optional<std::size_t> one;
    std::optional<Decomposition> dec;
    std::optional<std::size_t> eliminated;  // element index represented by q + r
  };
  std::vector<Plan> plans;
  for (const auto& pvm : s.measurements()) {
    Plan plan{&pvm, std::nullopt, std::nullopt, std::nullopt};
    const AblRow* row = verdict.table.row(pvm.name());
    if (row != nullptr && !row->probabilities.empty()) {
      plan.one = detail::value_one_element(pvm, a);
      if (plan.one) {
        plan.dec = lemma1_decompose(s, pvm[*plan.one]);
        if (pvm.size() == 2 && !plan.dec->q.is_zero() && !plan.dec->r.is_zero()) plan.eliminated = 1 - *plan.one;
      }
    }
    plans.push_back(std::move(plan));
  }
  // A sibling that is also a plain element of another PVM stays a node.
  for (auto& plan : plans) {
    if (!plan.eliminated) continue;
    const Projector& sib = (*plan.pvm)[*plan.eliminated];
    for (const auto& other : plans) {
      for (std::size_t k = 0; k < other.pvm->size(); ++k) {
        if (&other == &plan && k == *plan.eliminated) continue;
        if (other.eliminated && k == *other.eliminated) continue;
        if (approx_equal((*other.pvm)[k], sib)) plan.eliminated.reset();
        if (!plan.eliminated) break;
      }
      if (!plan.eliminated) break;
    }
  }

  for (const auto& plan : plans) {
    const Pvm& pvm = *plan.pvm;
    std::vector<std::size_t> elements;
    for (std::size_t k = 0; k < pvm.size(); ++k) {
      if (plan.eliminated && k == *plan.eliminated) continue;
      elements.push_back(cs.add_node(pvm[k], pvm.name() + ":" + pvm.label(k), NodeRole::Element));
    }
    if (!plan.dec) {
      cs.add_resolution(elements);
      continue;
    }
    const std::string lp = pvm.name() + ":" + pvm.label(*plan.one);
    const std::size_t np = cs.find(pvm[*plan.one]).value();
    std::vector<std::size_t> parts;
    if (!plan.dec->q.is_zero()) parts.push_back(cs.add_node(plan.dec->q, "q(" + lp + ")", NodeRole::PostOrthogonal));
    if (!plan.dec->r.is_zero()) parts.push_back(cs.add_node(plan.dec->r, "r(" + lp + ")", NodeRole::PreOrthogonal));
    std::vector<std::size_t> refined{np};
    refined.insert(refined.end(), parts.begin(), parts.end());
    if (plan.eliminated) {
      b.eliminate(pvm[*plan.eliminated], pvm.name() + ":" + pvm.label(*plan.eliminated), parts);
    } else {
      cs.add_resolution(elements);
      if (parts.size() >= 2) {
        const Projector comp = pvm[*plan.one].complement();
        std::optional<std::size_t> whole = cs.find(comp);
        cs.sums.push_back({whole, comp, "I-" + lp, parts});
      }
    }
    cs.add_resolution(refined);
  }

  for (const auto& v : verdict.violations) b.encode(v);

  cs.compute_exclusions();
  cs.validate();
  return std::move(cs);
}

// ---------------------------------------------------------------------------
// Certain outcomes

struct Lemma2Check {
  bool holds = false;
  int expected = 0;                 // value every admissible assignment must give the element
  std::uint64_t admissible = 0;     // assignments with v(pre) = v(post) = 1
  std::size_t nodes = 0;
};

/// Single-PVM system with the q/r refinement, checked by enumerating every
/// assignment: does each admissible one give element k its ABL value?
inline Lemma2Check lemma2_check(const Scenario& s, const Pvm& pvm, std::size_t k) {
  const double p = abl_probability(s, pvm, k);
  const auto rounded = detail::round_logical(p);
  if (!rounded) {
    throw Error(ErrorCode::PreconditionViolated,
                "ABL probability " + std::to_string(p) + " of " + pvm.name() + ":" + pvm.label(k) + " is not 0 or 1");
  }
  ConstraintSystem cs(s.dim());
  cs.fix(cs.add_node(s.pre(), "pre", NodeRole::Pre), 1);
  cs.fix(cs.add_node(s.post(), "post", NodeRole::Post), 1);
  std::vector<std::size_t> elements;
  for (std::size_t j = 0; j < pvm.size(); ++j) {
    elements.push_back(cs.add_node(pvm[j], pvm.name() + ":" + pvm.label(j), NodeRole::Element));
  }
  cs.add_resolution(elements);
  const std::size_t target = elements[k];
  const std::string lk = pvm.name() + ":" + pvm.label(k);

  // Value 1: I - P = Q + R. Value 0: P = Q' + R' from the split of I - (I - P).
  const Projector split_of = *rounded == 1 ? pvm[k] : pvm[k].complement();
  const Decomposition dec = lemma1_decompose(s, split_of);
  std::vector<std::size_t> parts;
  if (!dec.q.is_zero()) parts.push_back(cs.add_node(dec.q, "q(" + lk + ")", NodeRole::PostOrthogonal));
  if (!dec.r.is_zero()) parts.push_back(cs.add_node(dec.r, "r(" + lk + ")", NodeRole::PreOrthogonal));
  if (*rounded == 1) {
    std::vector<std::size_t> refined{target};
    refined.insert(refined.end(), parts.begin(), parts.end());
    cs.add_resolution(refined);
    const Projector comp = pvm[k].complement();
    if (parts.size() >= 2) cs.sums.push_back({cs.find(comp), comp, "I-" + lk, parts});
  } else if (parts.size() >= 2) {
    cs.sums.push_back({target, pvm[k], lk, parts});
  }
  cs.compute_exclusions();
  cs.validate();

  Lemma2Check out;
  out.expected = *rounded;
  out.nodes = cs.size();
  bool all = true;
  out.admissible = enumerate_models(cs, [&](const std::vector<int>& w) {
    if (w[target] != *rounded) all = false;
  });
  out.holds = all;
  return out;
}

inline bool verify_lemma2(const Scenario& s, const Pvm& pvm, std::size_t k) { return lemma2_check(s, pvm, k).holds; }

// ---------------------------------------------------------------------------
// Orthogonality graph export

/// Ray label: first nonzero component scaled to +1, 6 significant digits.
inline std::string ray_label(const Projector& p) {
  const ColVector v = canonical_ray(p);
  auto num = [](double x) {
    if (std::abs(x) < 1e-9) x = 0.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x + 0.0);
    return std::string(buf);
  };
  std::string out = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    const double re = v[i].real(), im = v[i].imag();
    if (std::abs(im) < 1e-9) {
      out += num(re);
    } else if (std::abs(re) < 1e-9) {
      out += num(im) + "i";
    } else {
      out += num(re) + (im > 0 ? "+" : "-") + num(std::abs(im)) + "i";
    }
  }
  return out + ")";
}

struct GraphDocument {
  std::string dot;
  std::vector<std::string> notes;  // RankTooHigh notes for nodes that are not rays
};

inline std::string graph_node_label(const ConstraintSystem& cs, std::size_t i) {
  const CsNode& n = cs.node(i);
  if (n.projector.rank() == 1) return ray_label(n.projector);
  return "rank-" + std::to_string(n.projector.rank()) + " " + n.label;
}

/// DOT text: one node per constraint-system node in system order, one edge
/// per exclusion, and resolutions/fixed values as trailing comments.
inline GraphDocument export_orthogonality_graph(const ConstraintSystem& cs) {
  GraphDocument g;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    labels.push_back(graph_node_label(cs, i));
    if (cs.node(i).projector.rank() != 1) {
      g.notes.push_back("RankTooHigh: node " + std::to_string(i) + " (" + cs.node(i).label + ") has rank " +
                        std::to_string(cs.node(i).projector.rank()));
    }
  }
  std::ostringstream os;
  os << "graph {\n";
  for (const auto& l : labels) os << "  \"" << l << "\";\n";
  for (const auto& [a, b] : cs.exclusions) os << "  \"" << labels[a] << "\" -- \"" << labels[b] << "\";\n";
  os << "}\n";
  for (const auto& [n, v] : cs.fixed) os << "// fixed: \"" << labels[n] << "\" = " << v << "\n";
  for (const auto& r : cs.resolutions) {
    os << "// resolution:";
    for (auto n : r) os << " \"" << labels[n] << "\"";
    os << "\n";
  }
  for (const auto& note : g.notes) os << "// note: " << note << "\n";
  g.dot = os.str();
  return g;
}

}  // namespace ppsctx
