#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "mapgate/dynamics.hpp"
#include "mapgate/errors.hpp"
#include "mapgate/fitting.hpp"

using namespace mapgate;

namespace {

constexpr double kPi = std::numbers::pi;

DeviceParams closed_default() {
  DeviceParams p = DeviceParams::paper_default();
  p.coherence.reset();
  return p;
}

// Two two-level systems with negligible coupling.
DeviceParams qubit_pair() {
  DeviceParams p = DeviceParams::paper_default();
  p.levels1 = 2;
  p.levels2 = 2;
  p.coupling = units::khz(1.0);
  return p;
}

DrivePulse map_pulse(double duration, double amplitude_mhz) {
  DrivePulse d;
  d.port = DrivePort::Q2;
  d.omega_d = units::ghz(5.43);
  d.amplitude = units::mhz(amplitude_mhz);
  d.duration = duration;
  d.rise_fall = units::ns(20.0);
  return d;
}

CMatrix frame_rotation(const Simulator& sim, double t) {
  const CMatrix g = sim.qubit_frame().q1 * sim.space().number1() + sim.qubit_frame().q2 * sim.space().number2();
  return expm_hermitian(g, -t);
}

}  // namespace

TEST(Frames, BareFrameWithoutCouplingLeavesAnharmonicity) {
  DeviceParams p = closed_default();
  p.coupling = 0.0;
  const auto h = build_static_hamiltonian(p);
  const auto r = to_rotating_frame(h, p.omega1, p.omega2);
  for (Eigen::Index i = 0; i < h.space.dim(); ++i) {
    const Ket k = h.space.ket(i);
    const double expected = 0.5 * p.delta1 * k.q1 * (k.q1 - 1) + 0.5 * p.delta2 * k.q2 * (k.q2 - 1);
    EXPECT_NEAR(r.h(i, i).real(), expected, 1e-3);
  }
  EXPECT_LE((r.h - CMatrix(r.h.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Frames, EqualRatesKeepExchangeStatic) {
  const DeviceParams p = closed_default();
  const auto h = build_static_hamiltonian(p);
  const auto r = to_rotating_frame(h, units::ghz(5.43), units::ghz(5.43));
  EXPECT_EQ(r.exchange_beat, 0.0);
  const auto i10 = h.space.index({1, 0});
  const auto i01 = h.space.index({0, 1});
  EXPECT_DOUBLE_EQ(r.h(i10, i01).real(), h.entries(i10, i01).real());
  const auto skew = to_rotating_frame(h, p.omega1, p.omega2);
  EXPECT_NEAR(std::abs(skew.exchange_beat), std::abs(p.omega1 - p.omega2), 1e-3);
}

TEST(Propagation, EmptySequenceIsIdentity) {
  const Simulator sim(closed_default());
  const auto r = sim.propagate_unitary(PulseSequence{});
  EXPECT_LE(max_abs(*r.propagator - sim.space().identity()), 0.0);
  const auto z = sim.propagate_unitary(PulseSequence({Idle{0.0}}));
  EXPECT_LE(max_abs(*z.propagator - sim.space().identity()), 1e-14);
}

TEST(Propagation, FreeEvolutionIsDressedPhases) {
  const Simulator sim(closed_default());
  const double t = units::ns(137.0);
  const CMatrix u = *sim.propagate_unitary(PulseSequence({Idle{t}})).propagator;
  const CMatrix oracle = frame_rotation(sim, t) * expm_hermitian(sim.hamiltonian().entries, t);
  EXPECT_LE(max_abs(u - oracle), 1e-9);
}

TEST(Propagation, ResonantHalfPiOnTwoLevelSystem) {
  const DeviceParams p = qubit_pair();
  const Simulator sim(p);
  DrivePulse d;
  d.port = DrivePort::Q2;
  d.omega_d = sim.qubit_frame().q2;
  d.amplitude = units::mhz(10.0);
  d.shape = EnvelopeShape::Square;
  d.rise_fall = 0.0;
  d.duration = 0.5 * kPi / d.amplitude;
  const CVector psi = *sim.evolve(sim.basis_state({0, 0}), PulseSequence({d})).state;
  const auto pops = sim.computational_populations(psi);
  EXPECT_NEAR(pops[1], 0.5, 1e-6);
}

TEST(Propagation, UnitarityAndStateConsistency) {
  const Simulator sim(closed_default());
  const DrivePulse a = map_pulse(units::ns(160.0), 10.0);
  DrivePulse b = map_pulse(units::ns(90.0), 6.0);
  b.phase = 0.7;
  const Rotation x{Target::Both, Axis::X, kPi, units::ns(40.0)};
  const auto all = sim.propagate_unitary(PulseSequence({a, x, b}));
  EXPECT_LE(unitarity_error(*all.propagator), 1e-8);
  EXPECT_LE(all.diagnostics.unitarity_error, 1e-8);
  // Segments do not compose from t = 0: the frame and the drive phase run on a global clock.
  const CVector psi = sim.basis_state({1, 1});
  const CVector evolved = *sim.evolve(psi, PulseSequence({a, x, b})).state;
  EXPECT_LE((evolved - *all.propagator * psi).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Propagation, StateNormIsPreserved) {
  const Simulator sim(closed_default());
  const auto r = sim.evolve(sim.basis_state({1, 1}), PulseSequence({map_pulse(units::ns(300.0), 15.0)}),
                            units::ns(10.0));
  EXPECT_NEAR(r.state->norm(), 1.0, 1e-8);
  ASSERT_FALSE(r.samples.empty());
  for (const auto& s : r.samples) {
    double total = s.leakage;
    for (double x : s.computational) total += x;
    EXPECT_NEAR(total, 1.0, 1e-8);
  }
}

TEST(Propagation, TightToleranceOrExplicitFailure) {
  SimulatorOptions o;
  o.tolerance = 1e-15;
  o.max_steps = 4;
  const Simulator sim(closed_default(), o);
  EXPECT_THROW(sim.propagate_unitary(PulseSequence({map_pulse(units::ns(200.0), 10.0)})), NumericalError);
}

TEST(Propagation, LabFrameAgreesWithRotatingFrame) {
  const Simulator sim(closed_default());
  for (double amp : {5.0, 10.0}) {
    const DrivePulse d = map_pulse(units::ns(200.0), amp);
    for (const Ket k : {Ket{0, 1}, Ket{1, 1}}) {
      const CVector psi0 = sim.basis_state(k);
      const auto rwa = sim.computational_populations(*sim.evolve(psi0, PulseSequence({d})).state);
      const auto lab = sim.computational_populations(sim.evolve_lab_frame(psi0, d, units::ns(0.002)));
      for (int i = 0; i < 4; ++i) EXPECT_NEAR(rwa[i], lab[i], 0.02) << "amp " << amp << " state " << to_string(k);
    }
  }
}

TEST(Lindblad, T1DecayOfSingleExcitation) {
  DeviceParams p = qubit_pair();
  const Simulator sim(p);
  const CVector psi = sim.basis_state({1, 0});
  const auto r = sim.evolve_lindblad(psi * psi.adjoint(), PulseSequence({Idle{p.coherence->t1_q1}}));
  const auto pops = sim.computational_populations(*r.density);
  EXPECT_NEAR(pops[2] / std::exp(-1.0), 1.0, 0.01);
  EXPECT_LE(r.diagnostics.trace_drift, 1e-8);
  EXPECT_GE(r.diagnostics.min_eigenvalue, -1e-8);
}

TEST(Lindblad, ClosedLimitMatchesUnitary) {
  DeviceParams p = closed_default();
  p.coherence = Coherence{1e6, 1e6, 1e6, 1e6};
  const Simulator sim(p);
  const PulseSequence seq({map_pulse(units::ns(150.0), 10.0), Rotation{Target::Both, Axis::X, kPi, units::ns(40.0)},
                           map_pulse(units::ns(150.0), 10.0)});
  const CVector psi = (sim.basis_state({0, 1}) + sim.basis_state({1, 1})).normalized();
  const CVector out = *sim.evolve(psi, seq).state;
  const auto r = sim.evolve_lindblad(psi * psi.adjoint(), seq);
  const double fidelity = (out.adjoint() * *r.density * out)(0, 0).real();
  EXPECT_NEAR(fidelity, 1.0, 1e-6);
  EXPECT_TRUE(is_hermitian(*r.density, 1e-10));
}

TEST(Lindblad, RamseyCoherenceDecaysWithT2) {
  const DeviceParams p = qubit_pair();
  const Simulator sim(p);
  const CVector psi = sim.rotation_unitary({Target::Q2, Axis::X, 0.5 * kPi, 0.0}) * sim.basis_state({0, 0});
  const auto i00 = sim.space().index({0, 0});
  const auto i01 = sim.space().index({0, 1});
  std::vector<double> t, log_coh;
  for (double ns : {0.0, 1000.0, 2000.0, 3000.0, 4000.0, 6000.0, 8000.0}) {
    const auto r = sim.evolve_lindblad(psi * psi.adjoint(), PulseSequence({Idle{units::ns(ns)}}));
    t.push_back(units::ns(ns));
    log_coh.push_back(std::log(2.0 * std::abs((*r.density)(i00, i01))));
  }
  const double t2 = -1.0 / fit_line(t, log_coh).slope;
  EXPECT_NEAR(t2 / p.coherence->t2_q2, 1.0, 0.05);
}

TEST(DressedEnergies, ZeroDriveIsUndrivenSpectrum) {
  const DeviceParams p = closed_default();
  const auto e = driven_dressed_energies(p, units::ghz(5.43), 0.0);
  const auto h = build_static_hamiltonian(p);
  const auto s = dressed_spectrum(h);
  const double zeta = s.energy(h.space, {1, 1}) - s.energy(h.space, {0, 1}) - s.energy(h.space, {1, 0}) +
                      s.energy(h.space, {0, 0});
  EXPECT_NEAR(e.zeta, zeta, 1e-3);
  EXPECT_NEAR(e.zeta, zeta_perturbative(p, units::ghz(5.43), 0.0).zeta0, 0.1 * std::abs(zeta));
}

TEST(DressedEnergies, WeakDriveAgreesWithPerturbation) {
  const DeviceParams p = closed_default();
  for (double amp : {1.0, 2.0, 5.0}) {
    const double wd = units::ghz(5.43);
    const double num = driven_dressed_energies(p, wd, units::mhz(amp)).zeta;
    const double pert = zeta_perturbative(p, wd, units::mhz(amp)).zeta;
    EXPECT_LE(std::abs(pert - num) / std::abs(num), 0.10) << amp << " MHz";
  }
}

TEST(DressedEnergies, RateSaturatesWithDrivePower) {
  const DeviceParams p = closed_default();
  std::vector<double> power, rate;
  for (double a2 = 0.0; a2 <= 3600.0; a2 += 400.0) {
    power.push_back(a2);
    rate.push_back(std::abs(driven_dressed_energies(p, units::ghz(5.43), units::mhz(std::sqrt(a2))).zeta));
  }
  // Slope in the first step exceeds every later one, and the later slopes do not increase.
  std::vector<double> slope;
  for (std::size_t i = 1; i < rate.size(); ++i) slope.push_back((rate[i] - rate[i - 1]) / (power[i] - power[i - 1]));
  for (std::size_t i = 2; i < slope.size(); ++i) EXPECT_LE(slope[i], slope[i - 1] * (1.0 + 1e-9));
  EXPECT_LT(slope.back(), 0.1 * slope.front());
}

TEST(DressedEnergies, TruncationConverges) {
  const DeviceParams p = closed_default();
  DeviceParams bigger = p;
  bigger.levels1 += 1;
  bigger.levels2 += 1;
  for (double amp : {0.0, 5.0, 10.0, 20.0}) {
    const double a = driven_dressed_energies(p, units::ghz(5.43), units::mhz(amp)).zeta;
    const double b = driven_dressed_energies(bigger, units::ghz(5.43), units::mhz(amp)).zeta;
    EXPECT_LT(std::abs(a - b) / std::abs(b), 0.01) << amp << " MHz";
  }
}
