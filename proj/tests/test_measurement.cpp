#include <gtest/gtest.h>

#include <cmath>

#include "ppsctx/ppsctx.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace ppsctx;
namespace t = ppsctx::testing;

namespace {

Scenario repeated_measurement() {
  const Projector e1 = builtins::ray({1, 0});
  const Projector e2 = builtins::ray({0, 1});
  std::vector<Pvm> ms;
  ms.emplace_back("E", std::vector<Projector>{e1, e2});
  return Scenario(e1, e1, std::move(ms));
}

Scenario three_box_with_basis() {
  const Scenario s = builtins::three_box();
  std::vector<Pvm> ms = s.measurements();
  ms.emplace_back("B", std::vector<Projector>{builtins::ray({1, 0, 0}), builtins::ray({0, 1, 0}), builtins::ray({0, 0, 1})});
  return Scenario(s.pre(), s.post(), std::move(ms));
}

ColVector col(std::initializer_list<Complex> v) {
  ColVector c(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (auto x : v) c[i++] = x;
  return c;
}

}  // namespace

TEST(Pvm, Validation) {
  const Projector e1 = builtins::ray({1, 0});
  const Projector e2 = builtins::ray({0, 1});
  EXPECT_THROW(Pvm("one", {Projector::identity(2)}), Error);
  EXPECT_THROW(Pvm("short", {e1, e1}), Error);                       // not orthogonal
  EXPECT_THROW(Pvm("sum", {e1, builtins::ray({0, 1, 0})}), Error);   // dimension
  EXPECT_THROW(Pvm("zero", {Projector::identity(2), Projector::zero(2)}), Error);
  EXPECT_THROW(Pvm("labels", {e1, e2}, {"a"}), Error);
  const Pvm ok("ok", {e1, e2});
  EXPECT_EQ(ok.label(1), "1");
}

TEST(Scenario, Validation) {
  const Scenario s = builtins::three_box();
  EXPECT_EQ(s.dim(), 3);
  EXPECT_EQ(s.measurements().size(), 2u);
  EXPECT_EQ(s.pvm("E1")[1].rank(), 2);
  try {
    s.pvm("E9");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownPvm);
  }
  std::vector<Pvm> dup{s.pvm("E1"), s.pvm("E1")};
  EXPECT_THROW(Scenario(s.pre(), s.post(), dup), Error);
  EXPECT_THROW(Scenario(Projector::zero(3), s.post(), {}), Error);
}

TEST(Abl, ThreeBoxCertainties) {
  const Scenario s = builtins::three_box();
  EXPECT_NEAR(abl_probability(s, s.pvm("E1"), 0), 1.0, 1e-9);
  EXPECT_NEAR(abl_probability(s, s.pvm("E1"), 1), 0.0, 1e-9);
  EXPECT_NEAR(abl_probability(s, s.pvm("E2"), 0), 1.0, 1e-9);
  EXPECT_NEAR(abl_probability(s, s.pvm("E2"), 1), 0.0, 1e-9);
}

TEST(Abl, RepeatedMeasurement) {
  const Scenario s = repeated_measurement();
  EXPECT_NEAR(abl_probability(s, s.pvm("E"), 0), 1.0, 1e-12);
}

TEST(Abl, BasisPvmMatchesRankOneFormula) {
  const Scenario s = three_box_with_basis();
  const auto oracle = t::abl_rank_one(col({1, 1, 1}), col({1, 1, -1}), s.pvm("B"));
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(oracle[k], 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(abl_probability(s, s.pvm("B"), k), oracle[k], 1e-12);
  }
}

TEST(Abl, Errors) {
  const Scenario s = builtins::three_box();
  try {
    abl_probability(s, s.pvm("E1"), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndexOutOfRange);
  }
  // Post orthogonal to every P_k pre direction.
  const Projector e1 = builtins::ray({1, 0});
  const Projector e2 = builtins::ray({0, 1});
  std::vector<Pvm> ms;
  ms.emplace_back("E", std::vector<Projector>{e1, e2});
  const Scenario z(e1, e2, std::move(ms));
  try {
    abl_probability(z, z.pvm("E"), 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ImpossiblePostselection);
  }
  const AblTable table = abl_table(z);
  EXPECT_EQ(table.weight("E"), 0.0);
  EXPECT_TRUE(table.row("E")->probabilities.empty());
  EXPECT_FALSE(table.probability("E", 0).has_value());
}

TEST(AblTable, ThreeBox) {
  const AblTable t = abl_table(builtins::three_box());
  EXPECT_NEAR(*t.probability("E1", 0), 1.0, 1e-9);
  EXPECT_NEAR(*t.probability("E1", 1), 0.0, 1e-9);
  EXPECT_NEAR(*t.probability("E2", 0), 1.0, 1e-9);
  EXPECT_NEAR(*t.probability("E2", 1), 0.0, 1e-9);
}

TEST(Luders, Examples) {
  const Scenario s = builtins::three_box();
  const Operator mixed(Matrix::Identity(3, 3) / 3.0);
  EXPECT_TRUE(approx_equal(luders_update(mixed, s.pvm("E1")[0]).matrix(), s.pvm("E1")[0].matrix()));

  const Operator rho(s.pre().matrix());  // |phi><phi|/3
  const Operator out = luders_update(rho, s.pvm("E1")[1]);
  const ColVector v = col({0, 1, 1}) / std::sqrt(2.0);
  EXPECT_TRUE(approx_equal(out.matrix(), v * v.adjoint()));

  const Operator inside(builtins::ray({0, 1, 1}).matrix());
  EXPECT_TRUE(approx_equal(luders_update(inside, s.pvm("E1")[1]).matrix(), inside.matrix()));

  try {
    luders_update(Operator(s.pvm("E1")[0].matrix()), s.pvm("E2")[0]);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroProbabilityOutcome);
  }
  EXPECT_THROW(luders_update(Operator::identity(3), s.pvm("E1")[0]), Error);  // trace 3
}

TEST(Simulate, ThreeBoxIsCertainAndDeterministic) {
  const Scenario s = builtins::three_box();
  const auto a = simulate_frequencies(s, s.pvm("E1"), 200000, 42);
  const auto b = simulate_frequencies(s, s.pvm("E1"), 200000, 42, 3);
  EXPECT_GT(a.accepted, 0u);
  EXPECT_LT(std::abs(a.frequencies[0] - 1.0), 0.005);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_EQ(a.accepted, b.accepted);
}

TEST(Simulate, RepeatedMeasurementExact) {
  const Scenario s = repeated_measurement();
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    const auto r = simulate_frequencies(s, s.pvm("E"), 5000, seed);
    EXPECT_EQ(r.frequencies[0], 1.0);
    EXPECT_EQ(r.counts[1], 0u);
  }
}

TEST(Simulate, NoAcceptedRuns) {
  const Projector e1 = builtins::ray({1, 0});
  const Projector e2 = builtins::ray({0, 1});
  std::vector<Pvm> ms;
  ms.emplace_back("E", std::vector<Projector>{e1, e2});
  const Scenario z(e1, e2, std::move(ms));
  try {
    simulate_frequencies(z, z.pvm("E"), 1000, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoAcceptedRuns);
  }
}

TEST(Simulate, RandomScenarioWithinFiveSigma) {
  CounterRng rng(3);
  const Scenario s = t::random_scenario(3, rng);
  const Pvm& m = s.measurements().front();
  const auto r = simulate_frequencies(s, m, 1000000, 7);
  for (std::size_t k = 0; k < m.size(); ++k) {
    const double p = abl_probability(s, m, k);
    const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(r.accepted));
    EXPECT_LE(std::abs(r.frequencies[k] - p), 5 * sigma + 1e-12) << k;
  }
}

// ---------------------------------------------------------------------------
// Invariants over seeded random scenarios

class AblProperty : public ::testing::TestWithParam<int> {};

TEST_P(AblProperty, TableMatchesTraceOracleAndIsNormalized) {
  CounterRng rng = CounterRng(21).substream(static_cast<std::uint64_t>(GetParam()));
  const int d = 2 + static_cast<int>(rng.below(4));
  const Scenario s = t::random_scenario(d, rng);
  const AblTable table = abl_table(s);
  for (const auto& m : s.measurements()) {
    const auto oracle = t::abl_trace(s, m);
    double sum = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      const double p = *table.probability(m.name(), k);
      EXPECT_NEAR(p, oracle[k], 1e-9);
      EXPECT_NEAR(p, abl_probability(s, m, k), 1e-15);
      sum += p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST_P(AblProperty, RankOneMatchesAmplitudeFormulaAndIgnoresScale) {
  CounterRng rng = CounterRng(22).substream(static_cast<std::uint64_t>(GetParam()));
  const int d = 2 + static_cast<int>(rng.below(4));
  const ColVector phi = t::random_vector(d, rng);
  const ColVector psi = t::random_vector(d, rng);
  const Pvm m = t::random_pvm(d, 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(d - 1))), "M", rng);
  const Complex scale = t::random_complex(rng) * 10.0;
  const Scenario a(projector_from_vector(Vector(phi)), projector_from_vector(Vector(psi)), {m});
  const Scenario b(projector_from_vector(Vector(ColVector(phi * scale))), projector_from_vector(Vector(psi)), {m});
  const auto oracle = t::abl_rank_one(phi, psi, m);
  for (std::size_t k = 0; k < m.size(); ++k) {
    EXPECT_NEAR(abl_probability(a, m, k), oracle[k], 1e-9);
    EXPECT_NEAR(abl_probability(b, m, k), oracle[k], 1e-9);
  }
}

TEST_P(AblProperty, UnitaryCovarianceAndTimeSymmetry) {
  CounterRng rng = CounterRng(23).substream(static_cast<std::uint64_t>(GetParam()));
  const int d = 2 + static_cast<int>(rng.below(4));
  const Scenario s = t::random_scenario(d, rng);
  const Scenario rotated = conjugate(s, t::random_unitary(d, rng));
  const Scenario swapped(s.post(), s.pre(), s.measurements());
  const AblTable a = abl_table(s), b = abl_table(rotated), c = abl_table(swapped);
  for (const auto& m : s.measurements()) {
    EXPECT_NEAR(a.weight(m.name()), b.weight(m.name()), 1e-9);
    for (std::size_t k = 0; k < m.size(); ++k) {
      EXPECT_NEAR(*a.probability(m.name(), k), *b.probability(m.name(), k), 1e-9);
      EXPECT_NEAR(*a.probability(m.name(), k), *c.probability(m.name(), k), 1e-9);
    }
  }
}

TEST_P(AblProperty, LudersUpdateIsDensityOperatorInsideRange) {
  CounterRng rng = CounterRng(24).substream(static_cast<std::uint64_t>(GetParam()));
  const int d = 2 + static_cast<int>(rng.below(4));
  const Matrix u = t::random_unitary(d, rng);
  Matrix diag = Matrix::Zero(d, d);
  double total = 0.0;
  for (int i = 0; i < d; ++i) {
    diag(i, i) = rng.uniform() + 0.01;
    total += diag(i, i).real();
  }
  const Operator rho(u * diag * u.adjoint() / total);
  const Projector p = t::random_projector(d, 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(d))), rng);
  const Operator out = luders_update(rho, p);
  EXPECT_NO_THROW(check_density_operator(out));
  EXPECT_TRUE(approx_equal(p.matrix() * out.matrix(), out.matrix()));
}

INSTANTIATE_TEST_SUITE_P(Seeded, AblProperty, ::testing::Range(0, 100));
