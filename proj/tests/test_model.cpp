#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mapgate/errors.hpp"
#include "mapgate/model.hpp"

using namespace mapgate;

namespace {

// Ladder operator built from its matrix elements, independent of the model's space helper.
Eigen::MatrixXd ladder(int d) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

Eigen::MatrixXd kron_real(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

DeviceParams device(double j_mhz) {
  DeviceParams p = DeviceParams::paper_default();
  p.coupling = units::mhz(j_mhz);
  return p;
}

}  // namespace

TEST(Model, UncoupledDiagonalEntry) {
  DeviceParams p = device(10.0);
  p.coupling = 0.0;
  p.coherence.reset();
  EXPECT_THROW(p.validate(), ConfigError);  // J must be positive
  const auto h = build_static_hamiltonian(p);
  const auto i11 = h.space.index({1, 1});
  EXPECT_DOUBLE_EQ(h.entries(i11, i11).real(), p.omega1 + p.omega2);
}

TEST(Model, DefaultDetuning12to03) {
  const DeviceParams p = DeviceParams::paper_default();
  const auto h = build_static_hamiltonian(p);
  const LevelPair lp = level_pair(h, p, {1, 2}, {0, 3});
  EXPECT_NEAR(units::to_mhz(lp.detuning), -62.0, 1e-9);
}

TEST(Model, MatrixElementsMatchLadderConstruction) {
  const DeviceParams p = device(7.3);
  const auto h = build_static_hamiltonian(p);
  const Eigen::MatrixXd a1 = kron_real(ladder(p.levels1), Eigen::MatrixXd::Identity(p.levels2, p.levels2));
  const Eigen::MatrixXd a2 = kron_real(Eigen::MatrixXd::Identity(p.levels1, p.levels1), ladder(p.levels2));
  const Eigen::MatrixXd exchange = p.coupling * (a1.transpose() * a2 + a1 * a2.transpose());
  const double j = p.coupling;
  for (int n = 0; n < p.levels1 - 1; ++n) {
    for (int m = 1; m < p.levels2; ++m) {
      const auto r = h.space.index({n + 1, m - 1});
      const auto c = h.space.index({n, m});
      EXPECT_NEAR(h.entries(r, c).real(), exchange(r, c), 1e-12 * j);
      EXPECT_NEAR(h.entries(r, c).real(), j * std::sqrt((n + 1.0) * m), 1e-12 * j);
    }
  }
  EXPECT_NEAR(level_pair(h, p, {1, 2}, {0, 3}).matrix_element, std::sqrt(3.0) * j, 1e-12 * j);
  EXPECT_NEAR(level_pair(h, p, {1, 1}, {2, 0}).matrix_element, std::sqrt(2.0) * j, 1e-12 * j);
  EXPECT_NEAR(level_pair(h, p, {1, 1}, {0, 2}).matrix_element, std::sqrt(2.0) * j, 1e-12 * j);
}

TEST(Model, HermitianAndExcitationConserving) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    DeviceParams p = DeviceParams::paper_default();
    p.coupling = units::mhz(1.0 + 20.0 * u(rng));
    p.omega1 = units::ghz(5.0 + 0.5 * u(rng));
    p.levels1 = 2 + trial % 3;
    p.levels2 = 4 + trial % 2;
    const auto h = build_static_hamiltonian(p);
    const double norm = h.entries.norm();
    EXPECT_LE((h.entries - h.entries.adjoint()).cwiseAbs().maxCoeff(), 1e-12 * norm);
    const CMatrix n = h.space.number1() + h.space.number2();
    EXPECT_LE((h.entries * n - n * h.entries).cwiseAbs().maxCoeff(), 1e-12 * norm);
  }
}

TEST(Model, DimensionLimitIsExplicit) {
  DeviceParams p = DeviceParams::paper_default();
  p.levels1 = 9;
  p.levels2 = 9;
  try {
    build_static_hamiltonian(p, 64);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("64"), std::string::npos);
  }
}

TEST(Model, SplittingXiClosedForms) {
  EXPECT_DOUBLE_EQ(splitting_xi(units::mhz(3.0), 0.0), units::mhz(3.0));
  EXPECT_DOUBLE_EQ(splitting_xi(0.0, units::mhz(40.0)), units::mhz(40.0));
  EXPECT_DOUBLE_EQ(splitting_xi(0.0, units::mhz(-40.0)), 0.0);
}

TEST(Model, SplittingXiMatchesTwoLevelEigensolve) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> jd(0.1, 30.0), dd(-300.0, 300.0);
  for (int k = 0; k < 200; ++k) {
    const long double j = units::mhz(jd(rng));
    const long double d = units::mhz(dd(rng));
    Eigen::Matrix<long double, 2, 2> block;
    block << d, j, j, 0.0L;  // bare |12>, |03> with E(03) as reference
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<long double, 2, 2>> es(block);
    const long double upper = es.eigenvalues()(1);
    const double xi = splitting_xi(static_cast<double>(j), static_cast<double>(d));
    EXPECT_NEAR(xi, static_cast<double>(upper), 1e-12 * std::abs(static_cast<double>(upper)));
  }
}

TEST(Model, PerturbativeRateAtZeroDriveAndZeroCoupling) {
  const DeviceParams p = DeviceParams::paper_default();
  const auto r0 = zeta_perturbative(p, units::ghz(5.43), 0.0);
  EXPECT_EQ(r0.zeta, r0.zeta0);

  DeviceParams q = p;
  q.coupling = 0.0;
  const auto r = zeta_perturbative(q, units::ghz(5.43), units::mhz(5.0));
  EXPECT_EQ(r.zeta0, 0.0);
  EXPECT_EQ(r.zeta2, 0.0);
  EXPECT_EQ(r.zeta, 0.0);
}

TEST(Model, PerturbativeRateAlgebraicForm) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 3; ++k) {
    DeviceParams p = DeviceParams::paper_default();
    p.coupling = units::mhz(2.0 + 10.0 * u(rng));
    const double wd = units::ghz(5.38 + 0.04 * u(rng));
    const double amp = units::mhz(1.0 + 4.0 * u(rng));
    const auto h = build_static_hamiltonian(p);
    auto bare = [&](int n, int m) { return bare_energy(p, {n, m}); };
    const double j = p.coupling;
    const double d1120 = bare(1, 1) - bare(2, 0);
    const double d1102 = bare(1, 1) - bare(0, 2);
    const double zeta0 = 2.0 * j * j / d1120 + 2.0 * j * j / d1102;
    const double delta_d = (bare(1, 2) - bare(1, 1)) - wd;
    const double zeta2 = 3.0 * j * j / (3.0 * j * j + delta_d * (wd - (bare(0, 3) - bare(1, 1))));
    const auto r = zeta_perturbative(p, wd, amp);
    EXPECT_NEAR(r.zeta0, zeta0, 1e-9 * std::abs(zeta0));
    EXPECT_NEAR(r.drive_detuning, delta_d, 1e-6 * std::abs(delta_d));
    EXPECT_NEAR(r.zeta2, zeta2, 1e-9 * std::abs(zeta2));
    EXPECT_NEAR(r.zeta, zeta0 + amp * amp / (2.0 * delta_d) * zeta2, 1e-9 * std::abs(r.zeta));
    (void)h;
  }
}

TEST(Model, PerturbativeRateResonanceFloor) {
  const DeviceParams p = DeviceParams::paper_default();
  const double e12_11 = bare_energy(p, {1, 2}) - bare_energy(p, {1, 1});
  EXPECT_THROW(zeta_perturbative(p, e12_11 + units::khz(10.0), units::mhz(1.0)), ResonanceError);
}

TEST(Model, MapConditionWithoutCoupling) {
  DeviceParams p = DeviceParams::paper_default();
  p.coupling = 0.0;
  const auto r = map_condition_report(p);
  EXPECT_NEAR(r.conditional_anharmonicity, 0.0, 1e-12 * p.omega2);
}

TEST(Model, MapConditionMatchesDenseEigensolve) {
  const DeviceParams p = DeviceParams::paper_default();
  const auto r = map_condition_report(p);
  const auto h = build_static_hamiltonian(p);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h.entries);
  auto energy_of = [&](const Ket& k) {
    const auto i = h.space.index(k);
    Eigen::Index best = 0;
    es.eigenvectors().row(i).cwiseAbs2().maxCoeff(&best);
    return es.eigenvalues()(best);
  };
  EXPECT_NEAR(r.e_a, energy_of({0, 2}) - energy_of({0, 1}), 1e-3);
  EXPECT_NEAR(r.e_b, energy_of({1, 2}) - energy_of({1, 1}), 1e-3);
  EXPECT_NEAR(r.conditional_anharmonicity, r.e_b - r.e_a, 1e-9);
  EXPECT_LT(r.conditional_anharmonicity, 0.0);
}

TEST(Model, MapConditionOnResonanceNearSqrt3J) {
  DeviceParams p = DeviceParams::paper_default();
  p.coupling = units::mhz(2.0);
  p.omega1 = p.omega2 + 2.0 * p.delta2;  // D(12, 03) = 0
  const auto r = map_condition_report(p);
  EXPECT_NEAR(r.delta12_03, 0.0, 1e-3);
  EXPECT_NEAR(std::abs(r.conditional_anharmonicity) / (std::sqrt(3.0) * p.coupling), 1.0, 0.1);
}

TEST(Model, ViolationsAreCollected) {
  DeviceParams p = DeviceParams::paper_default();
  p.levels2 = 3;
  p.delta1 = units::mhz(10.0);
  p.coherence->t2_q1 = 3.0 * p.coherence->t1_q1;
  const auto v = p.violations(true);
  ASSERT_GE(v.size(), 3u);
  bool t2 = false, map = false;
  for (const auto& s : v) {
    t2 = t2 || s.find("T2 exceeds 2*T1") != std::string::npos;
    map = map || s.find("|03>") != std::string::npos;
  }
  EXPECT_TRUE(t2);
  EXPECT_TRUE(map);
  EXPECT_TRUE(DeviceParams::paper_default().violations(true).empty());
}

TEST(Model, HybridLineCalibrationHitsTargets) {
  const DeviceParams p =
      calibrate_hybrid_lines(DeviceParams::paper_default(), units::ghz(5.443), units::ghz(5.466));
  const LeakageWindow w = leakage_window(p);
  int hits = 0;
  for (double f : w.transitions) {
    if (std::abs(f - units::ghz(5.443)) < units::khz(10.0) || std::abs(f - units::ghz(5.466)) < units::khz(10.0)) ++hits;
  }
  EXPECT_EQ(hits, 2);
  EXPECT_EQ(p.omega2, DeviceParams::paper_default().omega2);
}
