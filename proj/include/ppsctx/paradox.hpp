#pragma once

// Logical PPS paradox detection: round ABL probabilities to 0/1, then close
// the assignment under complement, commuting product and commuting join until
// one of the classical algebraic conditions fails.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ppsctx/linalg.hpp"
#include "ppsctx/measurement.hpp"

namespace ppsctx {

namespace tol {
inline constexpr double logic = 1e-7;
}

/// The algebraic conditions a noncontextual assignment obeys on commuting projectors.
enum class AlgebraicCondition {
  Bounds,        // ac0: 0 <= p(P) <= 1
  Complement,    // ac1: p(I-P) = 1 - p(P)
  Constants,     // ac2: p(I) = 1, p(0) = 0
  ProductBound,  // ac3: p(PQ) <= p(P), p(PQ) <= p(Q)
  Join,          // ac4: p(P+Q-PQ) = p(P) + p(Q) - p(PQ)
};

constexpr std::string_view to_string(AlgebraicCondition c) {
  switch (c) {
    case AlgebraicCondition::Bounds: return "ac0";
    case AlgebraicCondition::Complement: return "ac1";
    case AlgebraicCondition::Constants: return "ac2";
    case AlgebraicCondition::ProductBound: return "ac3";
    case AlgebraicCondition::Join: return "ac4";
  }
  return "?";
}

enum class Provenance { AblDirect, ClosureDerived, ForcedConstant };

constexpr std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::AblDirect: return "abl-direct";
    case Provenance::ClosureDerived: return "closure-derived";
    case Provenance::ForcedConstant: return "forced-constant";
  }
  return "?";
}

/// How a closure-derived entry was obtained from earlier entries.
enum class Derivation { None, Complement, Product, Join };

struct AssignmentEntry {
  Projector projector;
  int value = 0;
  Provenance provenance = Provenance::AblDirect;
  Derivation derivation = Derivation::None;
  std::vector<std::size_t> operands;  // indices of the entries it was derived from
  std::string label;
  std::string pvm;                    // AblDirect only
  std::size_t element = 0;            // AblDirect only
};

/// 0/1 values keyed by projector (deduplicated up to tol::proj), in insertion order.
class LogicalAssignment {
 public:
  const std::vector<AssignmentEntry>& entries() const noexcept { return entries_; }
  const AssignmentEntry& operator[](std::size_t i) const { return entries_.at(i); }
  std::size_t size() const noexcept { return entries_.size(); }

  std::optional<std::size_t> find(const Projector& p) const { return index_.find(p); }
  std::optional<int> value(const Projector& p) const {
    if (auto i = find(p)) return entries_[*i].value;
    return std::nullopt;
  }

  /// Adds a new entry; the projector must not be present yet.
  std::size_t add(AssignmentEntry e) {
    auto [i, inserted] = index_.insert(e.projector);
    if (!inserted) throw Error(ErrorCode::InvalidArgument, "projector already assigned: " + e.label);
    entries_.push_back(std::move(e));
    return i;
  }

  /// Same projector reached with two different ABL values (labels of both sightings).
  std::vector<std::pair<std::string, std::string>> conflicts;

 private:
  std::vector<AssignmentEntry> entries_;
  ProjectorIndex index_;
};

struct NonExtremalEntry {
  std::string pvm;
  std::size_t element = 0;
  double probability = 0.0;
};

struct NotLogical {
  std::vector<NonExtremalEntry> offending;
};

enum class ViolationKind {
  ValueConflict,       // one projector, two ABL values
  ConstantMismatch,    // I valued 0 or 0 valued 1
  ComplementMismatch,  // p(I-P) != 1 - p(P)
  ProductExceedsFactor,
  JoinOutOfRange,
  JoinMismatch,
};

constexpr std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::ValueConflict: return "value-conflict";
    case ViolationKind::ConstantMismatch: return "constant-mismatch";
    case ViolationKind::ComplementMismatch: return "complement-mismatch";
    case ViolationKind::ProductExceedsFactor: return "product-exceeds-factor";
    case ViolationKind::JoinOutOfRange: return "join-out-of-range";
    case ViolationKind::JoinMismatch: return "join-mismatch";
  }
  return "?";
}

struct CitedProjector {
  std::string role;   // "P", "Q", "PQ", "P+Q-PQ", "I-P", "X"
  std::string label;
  Projector projector;
  std::optional<int> value;
  std::optional<std::size_t> entry;  // index into the assignment, when it has one
};

/// A failed algebraic condition, self-contained so it can be re-evaluated.
struct Violation {
  ViolationKind kind = ViolationKind::JoinOutOfRange;
  std::vector<AlgebraicCondition> conditions;
  std::vector<CitedProjector> projectors;
  int derived_value = 0;  // what the condition arithmetic yields
  std::string message;
  LogicalAssignment context;  // the assignment as extended when the condition failed

  const CitedProjector* cited(std::string_view role) const {
    for (const auto& c : projectors) {
      if (c.role == role) return &c;
    }
    return nullptr;
  }
};

namespace detail {

inline std::optional<int> round_logical(double p) {
  if (std::abs(p) <= tol::logic) return 0;
  if (std::abs(p - 1.0) <= tol::logic) return 1;
  return std::nullopt;
}

inline bool is_identity(const Projector& p) { return p.rank() == p.dim() && approx_equal(p, Projector::identity(p.dim())); }

inline CitedProjector cite(const LogicalAssignment& a, std::string role, std::size_t i) {
  return {std::move(role), a[i].label, a[i].projector, a[i].value, i};
}

// Existing entry for p, inserting I or 0 as forced constants on first sight.
inline std::optional<std::size_t> lookup_or_constant(LogicalAssignment& a, const Projector& p) {
  if (auto i = a.find(p)) return i;
  if (p.is_zero()) {
    return a.add({Projector::zero(p.dim()), 0, Provenance::ForcedConstant, Derivation::None, {}, "0", {}, 0});
  }
  if (is_identity(p)) {
    return a.add({Projector::identity(p.dim()), 1, Provenance::ForcedConstant, Derivation::None, {}, "I", {}, 0});
  }
  return std::nullopt;
}

}  // namespace detail

/// Rounds every ABL entry to 0/1, or names the entries that are not extremal.
inline std::variant<LogicalAssignment, NotLogical> logical_assignment(const AblTable& table, const Scenario& s) {
  NotLogical bad;
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < row.probabilities.size(); ++k) {
      if (!detail::round_logical(row.probabilities[k])) bad.offending.push_back({row.pvm, k, row.probabilities[k]});
    }
  }
  if (!bad.offending.empty()) return bad;

  LogicalAssignment a;
  for (const auto& row : table.rows) {
    if (row.probabilities.empty()) continue;
    const Pvm& pvm = s.pvm(row.pvm);
    for (std::size_t k = 0; k < pvm.size(); ++k) {
      const int v = *detail::round_logical(row.probabilities[k]);
      const std::string label = pvm.name() + ":" + pvm.label(k);
      if (auto i = a.find(pvm[k])) {
        if (a[*i].value != v) a.conflicts.emplace_back(a[*i].label, label);
        continue;
      }
      a.add({pvm[k], v, Provenance::AblDirect, Derivation::None, {}, label, pvm.name(), k});
    }
  }
  return a;
}

/// Saturates the assignment for up to `depth` rounds. Each round adds I-P for
/// every entry, and PQ and P+Q-PQ for every commuting pair present at the
/// start of the round. Returns the first violated condition, if any.
inline std::variant<LogicalAssignment, Violation> closure_extend(LogicalAssignment a, int depth = 3) {
  using AC = AlgebraicCondition;
  if (!a.conflicts.empty()) {
    Violation v;
    v.kind = ViolationKind::ValueConflict;
    v.conditions = {AC::Bounds};
    v.message = "projector " + a.conflicts.front().first + " = " + a.conflicts.front().second +
                " received two different ABL values";
    v.context = std::move(a);
    return v;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& e = a[i];
    if ((e.projector.is_zero() && e.value != 0) || (detail::is_identity(e.projector) && e.value != 1)) {
      Violation v;
      v.kind = ViolationKind::ConstantMismatch;
      v.conditions = {AC::Constants};
      v.projectors = {detail::cite(a, "X", i)};
      v.derived_value = e.projector.is_zero() ? 0 : 1;
      v.message = e.label + " must have value " + std::to_string(v.derived_value);
      v.context = std::move(a);
      return v;
    }
  }

  for (int round = 0; round < depth; ++round) {
    const std::size_t n0 = a.size();

    for (std::size_t i = 0; i < n0; ++i) {
      if (a[i].provenance == Provenance::ForcedConstant) continue;
      const Projector c = a[i].projector.complement();
      const int want = 1 - a[i].value;
      if (auto j = detail::lookup_or_constant(a, c)) {
        if (a[*j].value != want) {
          Violation v;
          v.kind = ViolationKind::ComplementMismatch;
          v.conditions = {AC::Complement};
          v.projectors = {detail::cite(a, "P", i), detail::cite(a, "I-P", *j)};
          v.derived_value = want;
          v.message = "p(" + a[*j].label + ") = " + std::to_string(a[*j].value) + " but 1 - p(" + a[i].label +
                      ") = " + std::to_string(want);
          v.context = std::move(a);
          return v;
        }
      } else {
        a.add({c, want, Provenance::ClosureDerived, Derivation::Complement, {i}, "~(" + a[i].label + ")", {}, 0});
      }
    }

    for (std::size_t i = 0; i < n0; ++i) {
      if (a[i].provenance == Provenance::ForcedConstant) continue;
      for (std::size_t j = i + 1; j < n0; ++j) {
        if (a[j].provenance == Provenance::ForcedConstant) continue;
        const Projector p = a[i].projector;
        const Projector q = a[j].projector;
        if (!commutes(p, q)) continue;
        const int vp = a[i].value;
        const int vq = a[j].value;

        const Projector pq = commuting_product(p, q);
        int vpq = vp * vq;
        std::size_t ipq = 0;
        if (auto k = detail::lookup_or_constant(a, pq)) {
          ipq = *k;
          vpq = a[ipq].value;
          if (vpq > std::min(vp, vq)) {
            Violation v;
            v.kind = ViolationKind::ProductExceedsFactor;
            v.conditions = {AC::ProductBound};
            v.projectors = {detail::cite(a, "P", i), detail::cite(a, "Q", j), detail::cite(a, "PQ", ipq)};
            v.derived_value = std::min(vp, vq);
            v.message = "p(" + a[ipq].label + ") = " + std::to_string(vpq) + " exceeds p(" + a[i].label +
                        ") or p(" + a[j].label + ")";
            v.context = std::move(a);
            return v;
          }
        } else {
          ipq = a.add({pq, vpq, Provenance::ClosureDerived, Derivation::Product, {i, j},
                       "(" + a[i].label + ")&(" + a[j].label + ")", {}, 0});
        }

        const int vjoin = vp + vq - vpq;
        const Projector join = Projector::from_operator(p.op() + q.op() - pq.op());
        if (vjoin < 0 || vjoin > 1) {
          Violation v;
          v.kind = ViolationKind::JoinOutOfRange;
          v.conditions = {AC::Bounds, AC::Join};
          v.projectors = {detail::cite(a, "P", i), detail::cite(a, "Q", j), detail::cite(a, "PQ", ipq),
                          {"P+Q-PQ", "(" + a[i].label + ")|(" + a[j].label + ")", join, std::nullopt, std::nullopt}};
          v.derived_value = vjoin;
          v.message = "p(" + a[i].label + ") + p(" + a[j].label + ") - p(PQ) = " + std::to_string(vjoin) +
                      " lies outside [0, 1]";
          v.context = std::move(a);
          return v;
        }
        if (auto k = detail::lookup_or_constant(a, join)) {
          if (a[*k].value != vjoin) {
            Violation v;
            v.kind = ViolationKind::JoinMismatch;
            v.conditions = {AC::Join};
            v.projectors = {detail::cite(a, "P", i), detail::cite(a, "Q", j), detail::cite(a, "PQ", ipq),
                            detail::cite(a, "P+Q-PQ", *k)};
            v.derived_value = vjoin;
            v.message = "p(" + a[*k].label + ") = " + std::to_string(a[*k].value) + " but the join rule gives " +
                        std::to_string(vjoin);
            v.context = std::move(a);
            return v;
          }
        } else {
          a.add({join, vjoin, Provenance::ClosureDerived, Derivation::Join, {i, j},
                 "(" + a[i].label + ")|(" + a[j].label + ")", {}, 0});
        }
      }
    }

    if (a.size() == n0) break;
  }
  return a;
}

/// Re-evaluates a violation from its cited projectors and values alone.
/// True iff the cited condition really fails.
inline bool recheck_violation(const Violation& v) {
  auto get = [&](std::string_view role) { return v.cited(role); };
  switch (v.kind) {
    case ViolationKind::ValueConflict:
      return true;
    case ViolationKind::ConstantMismatch: {
      const auto* x = get("X");
      if (!x || !x->value) return false;
      if (x->projector.is_zero()) return *x->value != 0;
      return detail::is_identity(x->projector) && *x->value != 1;
    }
    case ViolationKind::ComplementMismatch: {
      const auto* p = get("P");
      const auto* c = get("I-P");
      if (!p || !c || !p->value || !c->value) return false;
      return approx_equal(c->projector, p->projector.complement()) && *c->value != 1 - *p->value;
    }
    default:
      break;
  }
  const auto* p = get("P");
  const auto* q = get("Q");
  const auto* pq = get("PQ");
  if (!p || !q || !pq || !p->value || !q->value || !pq->value) return false;
  if (!commutes(p->projector, q->projector)) return false;
  if (!approx_equal(pq->projector.matrix(), p->projector.matrix() * q->projector.matrix())) return false;
  // The product entry must itself be admissible: a zero product can only carry 0.
  if (pq->projector.is_zero() && *pq->value != 0) return false;
  const int vp = *p->value, vq = *q->value, vpq = *pq->value;
  switch (v.kind) {
    case ViolationKind::ProductExceedsFactor:
      return vpq > vp || vpq > vq;
    case ViolationKind::JoinOutOfRange: {
      const int j = vp + vq - vpq;
      return j < 0 || j > 1;
    }
    case ViolationKind::JoinMismatch: {
      const auto* join = get("P+Q-PQ");
      if (!join || !join->value) return false;
      const Matrix expect = p->projector.matrix() + q->projector.matrix() - pq->projector.matrix();
      return approx_equal(join->projector.matrix(), expect) && *join->value != vp + vq - vpq;
    }
    default:
      return false;
  }
}

struct ParadoxVerdict {
  bool is_logical = false;
  bool is_paradox = false;
  bool pre_post_nonorthogonal = false;
  double pre_post_overlap = 0.0;  // Tr(Πpost Πpre) / (Tr Πpre Tr Πpost)
  int depth = 3;
  AblTable table;
  LogicalAssignment assignment;   // rounded ABL values, extended by closure when consistent
  std::vector<NonExtremalEntry> non_extremal;
  std::vector<Violation> violations;
};

inline ParadoxVerdict detect_paradox(const Scenario& s, int depth = 3) {
  ParadoxVerdict v;
  v.depth = depth;
  v.pre_post_overlap = s.relative_overlap();
  v.pre_post_nonorthogonal = s.pre_post_nonorthogonal();
  v.table = abl_table(s);
  if (!v.table.rows.empty() &&
      std::all_of(v.table.rows.begin(), v.table.rows.end(), [](const AblRow& r) { return r.probabilities.empty(); })) {
    throw Error(ErrorCode::ImpossiblePostselection, "post-selection can never succeed for any PVM");
  }
  auto la = logical_assignment(v.table, s);
  if (auto* nl = std::get_if<NotLogical>(&la)) {
    v.non_extremal = std::move(nl->offending);
    return v;
  }
  v.is_logical = true;
  LogicalAssignment base = std::get<LogicalAssignment>(std::move(la));
  auto closed = closure_extend(base, depth);
  if (auto* viol = std::get_if<Violation>(&closed)) {
    v.is_paradox = true;
    v.assignment = viol->context;
    v.violations.push_back(std::move(*viol));
  } else {
    v.assignment = std::get<LogicalAssignment>(std::move(closed));
  }
  return v;
}

}  // namespace ppsctx
