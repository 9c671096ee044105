#pragma once

// Sharp measurements, pre/post-selected scenarios, the ABL rule and a
// Lüders-rule Monte-Carlo sampler used as an independent frequency oracle.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ppsctx/linalg.hpp"
#include "ppsctx/random.hpp"

namespace ppsctx {

namespace tol {
inline constexpr double prob = 1e-9;
}

/// A projector-valued measure: pairwise orthogonal projectors summing to I.
class Pvm {
 public:
  Pvm(std::string name, std::vector<Projector> elements, std::vector<std::string> labels = {})
      : name_(std::move(name)), elements_(std::move(elements)), labels_(std::move(labels)) {
    if (elements_.size() < 2) {
      throw Error(ErrorCode::InvalidPvm, "PVM '" + name_ + "' needs at least 2 elements");
    }
    const int d = elements_.front().dim();
    Matrix sum = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < elements_.size(); ++i) {
      const Projector& e = elements_[i];
      if (e.dim() != d) {
        throw Error(ErrorCode::DimensionMismatch, "PVM '" + name_ + "' element " + std::to_string(i) +
                                                      " has dimension " + std::to_string(e.dim()));
      }
      if (e.is_zero()) {
        throw Error(ErrorCode::InvalidPvm, "PVM '" + name_ + "' element " + std::to_string(i) + " is zero");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (!is_orthogonal(elements_[j], e)) {
          throw Error(ErrorCode::InvalidPvm, "PVM '" + name_ + "' elements " + std::to_string(j) + " and " +
                                                 std::to_string(i) + " are not orthogonal");
        }
      }
      sum += e.matrix();
    }
    if (!approx_equal(sum, Matrix::Identity(d, d))) {
      throw Error(ErrorCode::InvalidPvm, "PVM '" + name_ + "' elements do not sum to the identity");
    }
    if (labels_.empty()) {
      for (std::size_t i = 0; i < elements_.size(); ++i) labels_.push_back(std::to_string(i));
    } else if (labels_.size() != elements_.size()) {
      throw Error(ErrorCode::InvalidPvm, "PVM '" + name_ + "' label count does not match element count");
    }
  }

  const std::string& name() const noexcept { return name_; }
  int dim() const noexcept { return elements_.front().dim(); }
  std::size_t size() const noexcept { return elements_.size(); }
  const std::vector<Projector>& elements() const noexcept { return elements_; }
  const Projector& operator[](std::size_t k) const { return elements_.at(k); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(std::size_t k) const { return labels_.at(k); }

 private:
  std::string name_;
  std::vector<Projector> elements_;
  std::vector<std::string> labels_;
};

/// Pre-selection, post-selection and the alternative intermediate measurements.
class Scenario {
 public:
  Scenario(Projector pre, Projector post, std::vector<Pvm> measurements)
      : pre_(std::move(pre)), post_(std::move(post)), measurements_(std::move(measurements)) {
    const int d = pre_.dim();
    if (post_.dim() != d) throw Error(ErrorCode::DimensionMismatch, "pre and post have different dimensions");
    if (pre_.rank() < 1) throw Error(ErrorCode::InvalidScenario, "pre-selection projector has rank 0");
    if (post_.rank() < 1) throw Error(ErrorCode::InvalidScenario, "post-selection projector has rank 0");
    for (std::size_t i = 0; i < measurements_.size(); ++i) {
      const Pvm& m = measurements_[i];
      if (m.dim() != d) {
        throw Error(ErrorCode::DimensionMismatch, "PVM '" + m.name() + "' has dimension " + std::to_string(m.dim()));
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (measurements_[j].name() == m.name()) {
          throw Error(ErrorCode::InvalidScenario, "duplicate PVM name '" + m.name() + "'");
        }
      }
    }
  }

  int dim() const noexcept { return pre_.dim(); }
  const Projector& pre() const noexcept { return pre_; }
  const Projector& post() const noexcept { return post_; }
  const std::vector<Pvm>& measurements() const noexcept { return measurements_; }

  const Pvm& pvm(const std::string& name) const {
    for (const auto& m : measurements_) {
      if (m.name() == name) return m;
    }
    throw Error(ErrorCode::UnknownPvm, "no PVM named '" + name + "'");
  }

  /// Tr(Πpost Πpre) / (Tr Πpre · Tr Πpost); zero iff pre and post are orthogonal.
  double relative_overlap() const {
    return (post_.op() * pre_.op()).trace().real() / (static_cast<double>(pre_.rank()) * post_.rank());
  }
  bool pre_post_nonorthogonal() const { return relative_overlap() > tol::prob; }

 private:
  Projector pre_;
  Projector post_;
  std::vector<Pvm> measurements_;
};

/// Tr(Πpost Pk Πpre Pk) for every k, computed as ||Πpost Pk Πpre||_F^2.
inline std::vector<double> abl_numerators(const Scenario& s, const Pvm& pvm) {
  if (pvm.dim() != s.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "PVM '" + pvm.name() + "' does not match the scenario dimension");
  }
  std::vector<double> out;
  out.reserve(pvm.size());
  for (const auto& e : pvm.elements()) {
    out.push_back((s.post().matrix() * e.matrix() * s.pre().matrix()).squaredNorm());
  }
  return out;
}

namespace detail {
inline double relative_denominator(const Scenario& s, double denominator) {
  return denominator / (static_cast<double>(s.pre().rank()) * s.post().rank());
}
}  // namespace detail

/// ABL probability of outcome k of `pvm` given the scenario's pre- and post-selection.
inline double abl_probability(const Scenario& s, const Pvm& pvm, std::size_t k) {
  if (k >= pvm.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "PVM '" + pvm.name() + "' has no element " + std::to_string(k));
  }
  const auto num = abl_numerators(s, pvm);
  double den = 0.0;
  for (double x : num) den += x;
  if (detail::relative_denominator(s, den) <= tol::prob) {
    throw Error(ErrorCode::ImpossiblePostselection,
                "post-selection can never succeed after measuring '" + pvm.name() + "'");
  }
  return num[k] / den;
}

struct AblRow {
  std::string pvm;
  double weight = 0.0;                 // Σj Tr(Πpost Pj Πpre Pj) / Tr(Πpre)
  std::vector<double> probabilities;   // empty when the weight vanishes
};

class AblTable {
 public:
  std::vector<AblRow> rows;

  const AblRow* row(const std::string& name) const {
    for (const auto& r : rows) {
      if (r.pvm == name) return &r;
    }
    return nullptr;
  }
  std::optional<double> probability(const std::string& name, std::size_t k) const {
    const AblRow* r = row(name);
    if (r == nullptr || k >= r->probabilities.size()) return std::nullopt;
    return r->probabilities[k];
  }
  double weight(const std::string& name) const {
    const AblRow* r = row(name);
    return r == nullptr ? 0.0 : r->weight;
  }
};

inline AblTable abl_table(const Scenario& s) {
  AblTable t;
  for (const auto& pvm : s.measurements()) {
    const auto num = abl_numerators(s, pvm);
    double den = 0.0;
    for (double x : num) den += x;
    AblRow row{pvm.name(), 0.0, {}};
    if (detail::relative_denominator(s, den) > tol::prob) {
      row.weight = den / static_cast<double>(s.pre().rank());
      for (double x : num) row.probabilities.push_back(x / den);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Hermitian, positive semidefinite, unit trace, all within tol::proj.
inline void check_density_operator(const Operator& rho) {
  const Matrix& m = rho.matrix();
  if (norm_inf(m - m.adjoint()) > tol::proj) throw Error(ErrorCode::NotADensityOperator, "rho is not Hermitian");
  if (std::abs(m.trace() - Complex(1.0)) > tol::proj) {
    throw Error(ErrorCode::NotADensityOperator, "rho does not have unit trace");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es((m + m.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol::proj) {
    throw Error(ErrorCode::NotADensityOperator, "rho has a negative eigenvalue");
  }
}

/// Lüders rule: rho -> P rho P / Tr(P rho).
inline Operator luders_update(const Operator& rho, const Projector& p) {
  Operator::check_same_dim(rho, p.op());
  check_density_operator(rho);
  const double pr = (p.matrix() * rho.matrix()).trace().real();
  if (pr <= tol::prob) throw Error(ErrorCode::ZeroProbabilityOutcome, "outcome has probability " + std::to_string(pr));
  return Operator(p.matrix() * rho.matrix() * p.matrix() / pr);
}

struct SimulationResult {
  std::uint64_t samples = 0;
  std::uint64_t accepted = 0;          // runs passing both pre- and post-selection
  std::vector<std::uint64_t> counts;   // per element, among accepted runs
  std::vector<double> frequencies;     // counts / accepted

  std::pair<double, std::uint64_t> operator[](std::size_t k) const { return {frequencies.at(k), counts.at(k)}; }
};

/// Samples the full three-measurement sequence starting from I/d, keeping runs
/// where both the pre- and post-selection succeed. Sample i draws from
/// substream i of the seed, so the result does not depend on `workers`.
inline SimulationResult simulate_frequencies(const Scenario& s, const Pvm& pvm, std::uint64_t samples,
                                             std::uint64_t seed, unsigned workers = 1) {
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "samples must be at least 1");
  if (pvm.dim() != s.dim()) throw Error(ErrorCode::DimensionMismatch, "PVM does not match the scenario dimension");
  const int d = s.dim();

  const Operator mixed(Matrix::Identity(d, d) / static_cast<double>(d));
  const double p_pre = (s.pre().matrix() * mixed.matrix()).trace().real();
  const Operator rho_pre = luders_update(mixed, s.pre());

  const std::size_t n = pvm.size();
  std::vector<double> cumulative(n);
  std::vector<double> p_post(n, 0.0);
  double acc = 0.0;
  std::size_t last_possible = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double pj = (pvm[j].matrix() * rho_pre.matrix()).trace().real();
    acc += std::max(pj, 0.0);
    cumulative[j] = acc;
    if (pj > tol::prob) {
      last_possible = j;
      const Operator rho_j = luders_update(rho_pre, pvm[j]);
      p_post[j] = (s.post().matrix() * rho_j.matrix()).trace().real();
    }
  }

  const CounterRng base(seed);
  auto run_range = [&](std::uint64_t begin, std::uint64_t end, std::vector<std::uint64_t>& counts) {
    for (std::uint64_t i = begin; i < end; ++i) {
      CounterRng rng = base.substream(i);
      if (rng.uniform() >= p_pre) continue;
      const double u = rng.uniform() * acc;
      std::size_t j = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                               cumulative.begin());
      if (j >= n) j = last_possible;
      if (rng.uniform() >= p_post[j]) continue;
      ++counts[j];
    }
  };

  workers = std::max(1u, workers);
  std::vector<std::vector<std::uint64_t>> partial(workers, std::vector<std::uint64_t>(n, 0));
  if (workers == 1) {
    run_range(0, samples, partial[0]);
  } else {
    std::vector<std::jthread> pool;
    const std::uint64_t chunk = (samples + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint64_t b = std::min<std::uint64_t>(samples, w * chunk);
      const std::uint64_t e = std::min<std::uint64_t>(samples, b + chunk);
      pool.emplace_back([&, b, e, w] { run_range(b, e, partial[w]); });
    }
  }

  SimulationResult r;
  r.samples = samples;
  r.counts.assign(n, 0);
  for (const auto& part : partial) {
    for (std::size_t j = 0; j < n; ++j) r.counts[j] += part[j];
  }
  for (auto c : r.counts) r.accepted += c;
  if (r.accepted == 0) {
    throw Error(ErrorCode::NoAcceptedRuns, "no run passed both pre- and post-selection in " +
                                               std::to_string(samples) + " samples");
  }
  for (auto c : r.counts) r.frequencies.push_back(static_cast<double>(c) / static_cast<double>(r.accepted));
  return r;
}

/// Conjugates every projector of the scenario by a unitary.
inline Projector conjugate(const Projector& p, const Matrix& u) {
  return Projector::from_operator(Operator(u * p.matrix() * u.adjoint()));
}

inline Scenario conjugate(const Scenario& s, const Matrix& u) {
  std::vector<Pvm> ms;
  for (const auto& m : s.measurements()) {
    std::vector<Projector> es;
    for (const auto& e : m.elements()) es.push_back(conjugate(e, u));
    ms.emplace_back(m.name(), std::move(es), m.labels());
  }
  return Scenario(conjugate(s.pre(), u), conjugate(s.post(), u), std::move(ms));
}

}  // namespace ppsctx
