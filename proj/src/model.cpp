#include "mapgate/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "mapgate/errors.hpp"

namespace mapgate {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::ostringstream out;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    if (i) out << "; ";
    out << problems[i];
  }
  return out.str();
}

CMatrix ladder(int levels) {
  CMatrix a = CMatrix::Zero(levels, levels);
  for (int n = 1; n < levels; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

DeviceParams DeviceParams::paper_default() {
  DeviceParams p;
  p.omega1 = units::ghz(5.166);
  p.omega2 = units::ghz(5.668);
  p.delta1 = units::mhz(-220.0);
  p.delta2 = units::mhz(-220.0);
  p.coupling = units::mhz(10.0);
  p.levels1 = 3;
  p.levels2 = 5;
  p.coherence = Coherence{units::us(6.0), units::us(6.0), units::us(4.0), units::us(4.0)};
  return p;
}

std::vector<std::string> DeviceParams::violations(bool require_map, bool allow_uncoupled) const {
  std::vector<std::string> out;
  auto finite = [](double x) { return std::isfinite(x); };
  if (!finite(omega1) || omega1 <= 0.0) out.push_back("omega1 must be a positive frequency");
  if (!finite(omega2) || omega2 <= 0.0) out.push_back("omega2 must be a positive frequency");
  if (!finite(delta1) || delta1 >= 0.0) out.push_back("delta1 must be negative (transmon anharmonicity)");
  if (!finite(delta2) || delta2 >= 0.0) out.push_back("delta2 must be negative (transmon anharmonicity)");
  if (!finite(coupling) || coupling < 0.0 || (coupling == 0.0 && !allow_uncoupled)) out.push_back("J must be positive");
  if (levels1 < 2) out.push_back("levels1 must be >= 2");
  if (levels2 < 2) out.push_back("levels2 must be >= 2");
  if (require_map && levels2 < 4) {
    out.push_back("levels2 must be >= 4 to hold the |03> state required for MAP analysis");
  }
  if (coherence) {
    const auto& c = *coherence;
    auto check = [&](const char* name, double t1, double t2) {
      if (!(t1 > 0.0) || !finite(t1)) out.push_back(std::string("T1 of ") + name + " must be positive");
      if (!(t2 > 0.0) || !finite(t2)) out.push_back(std::string("T2 of ") + name + " must be positive");
      if (t1 > 0.0 && t2 > 2.0 * t1) out.push_back(std::string("T2 exceeds 2*T1 for ") + name);
    };
    check("Q1", c.t1_q1, c.t2_q1);
    check("Q2", c.t1_q2, c.t2_q2);
  }
  return out;
}

void DeviceParams::validate(bool require_map, bool allow_uncoupled) const {
  auto problems = violations(require_map, allow_uncoupled);
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

std::string to_string(const Ket& k) {
  return "|" + std::to_string(k.q1) + std::to_string(k.q2) + ">";
}

TwoTransmonSpace::TwoTransmonSpace(int levels1, int levels2) : d1_(levels1), d2_(levels2) {
  if (levels1 < 1 || levels2 < 1) throw ConfigError("transmon truncation must be positive");
  const CMatrix i1 = CMatrix::Identity(d1_, d1_);
  const CMatrix i2 = CMatrix::Identity(d2_, d2_);
  a1_ = kron(ladder(d1_), i2);
  a2_ = kron(i1, ladder(d2_));
  n1_ = a1_.adjoint() * a1_;
  n2_ = a2_.adjoint() * a2_;
}

Eigen::Index TwoTransmonSpace::index(const Ket& k) const {
  if (!contains(k)) throw ConfigError(to_string(k) + " lies outside the truncated space");
  return static_cast<Eigen::Index>(k.q1) * d2_ + k.q2;
}

Ket TwoTransmonSpace::ket(Eigen::Index index) const {
  return Ket{static_cast<int>(index / d2_), static_cast<int>(index % d2_)};
}

bool TwoTransmonSpace::is_computational(Eigen::Index index) const {
  const Ket k = ket(index);
  return k.q1 < 2 && k.q2 < 2;
}

std::array<Eigen::Index, 4> TwoTransmonSpace::computational_indices() const {
  return {index({0, 0}), index({0, 1}), index({1, 0}), index({1, 1})};
}

OperatorMatrix build_static_hamiltonian(const DeviceParams& params, std::size_t max_dimension) {
  params.validate(false, true);
  const auto dim = static_cast<std::size_t>(params.levels1) * static_cast<std::size_t>(params.levels2);
  if (dim > max_dimension) {
    throw ConfigError("Hilbert-space dimension " + std::to_string(dim) + " exceeds the limit of " +
                      std::to_string(max_dimension));
  }
  TwoTransmonSpace space(params.levels1, params.levels2);
  const CMatrix id = space.identity();
  const CMatrix& n1 = space.number1();
  const CMatrix& n2 = space.number2();
  const CMatrix& a1 = space.lowering1();
  const CMatrix& a2 = space.lowering2();
  CMatrix h = params.omega1 * n1 + params.omega2 * n2 + 0.5 * params.delta1 * n1 * (n1 - id) +
              0.5 * params.delta2 * n2 * (n2 - id) +
              params.coupling * (a1.adjoint() * a2 + a1 * a2.adjoint());
  return OperatorMatrix{std::move(space), std::move(h)};
}

double bare_energy(const DeviceParams& p, const Ket& k) {
  const double n = k.q1;
  const double m = k.q2;
  return n * p.omega1 + 0.5 * p.delta1 * n * (n - 1.0) + m * p.omega2 + 0.5 * p.delta2 * m * (m - 1.0);
}

LevelPair level_pair(const OperatorMatrix& h, const DeviceParams& params, const Ket& a, const Ket& b) {
  const auto& space = h.space;
  LevelPair pair{a, b, std::abs(h.entries(space.index(a), space.index(b))),
                 bare_energy(params, a) - bare_energy(params, b)};
  return pair;
}

double splitting_xi(double j12_03, double delta12_03) {
  const double root = std::hypot(2.0 * j12_03, delta12_03);
  if (delta12_03 >= 0.0) return 0.5 * (root + delta12_03);
  // (root + D)/2 == 2 J^2 / (root - D), exact and free of cancellation for D < 0.
  return 2.0 * j12_03 * j12_03 / (root - delta12_03);
}

PerturbativeRate zeta_perturbative(const DeviceParams& params, double omega_d, double amplitude,
                                   double resonance_floor) {
  if (params.levels2 < 4) {
    DeviceParams padded = params;
    padded.levels2 = 4;
    return zeta_perturbative(padded, omega_d, amplitude, resonance_floor);
  }
  DeviceParams p = params;
  p.levels1 = std::max(p.levels1, 3);
  p.coherence.reset();
  const auto h = build_static_hamiltonian(p);
  const auto p11_20 = level_pair(h, p, {1, 1}, {2, 0});
  const auto p11_02 = level_pair(h, p, {1, 1}, {0, 2});
  const auto p12_03 = level_pair(h, p, {1, 2}, {0, 3});
  const double delta12_11 = bare_energy(p, {1, 2}) - bare_energy(p, {1, 1});
  const double delta03_11 = bare_energy(p, {0, 3}) - bare_energy(p, {1, 1});

  PerturbativeRate r;
  r.zeta0 = p11_20.matrix_element * p11_02.matrix_element *
            (1.0 / p11_20.detuning + 1.0 / p11_02.detuning);
  r.drive_detuning = delta12_11 - omega_d;
  if (std::abs(r.drive_detuning) < resonance_floor) {
    throw ResonanceError("drive within " + std::to_string(units::to_mhz(resonance_floor)) +
                         " MHz of the |11>-|12> transition; perturbative rate undefined");
  }
  const double j2 = p12_03.matrix_element * p12_03.matrix_element;
  const double denominator = j2 + r.drive_detuning * (omega_d - delta03_11);
  if (std::abs(denominator) < resonance_floor * resonance_floor) {
    throw ResonanceError("drive resonant with a dressed |11> -> |12>/|03> transition");
  }
  r.zeta2 = j2 / denominator;
  r.zeta = r.zeta0 + amplitude * amplitude / (2.0 * r.drive_detuning) * r.zeta2;
  return r;
}

DressedSpectrum dressed_spectrum(const OperatorMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h.entries);
  DressedSpectrum s;
  s.energies = solver.eigenvalues();
  s.vectors = solver.eigenvectors();
  const Eigen::Index n = s.energies.size();
  // Greedy global assignment, largest overlaps first; ties resolve toward
  // lower bare index then lower energy.
  std::vector<std::tuple<double, Eigen::Index, Eigen::Index>> candidates;
  candidates.reserve(static_cast<std::size_t>(n * n));
  for (Eigen::Index b = 0; b < n; ++b) {
    for (Eigen::Index d = 0; d < n; ++d) candidates.emplace_back(std::norm(s.vectors(b, d)), b, d);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& x, const auto& y) { return std::get<0>(x) > std::get<0>(y); });
  s.dressed_of_bare.assign(static_cast<std::size_t>(n), -1);
  s.overlap_of_bare.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  for (const auto& [overlap, b, d] : candidates) {
    auto bi = static_cast<std::size_t>(b);
    auto di = static_cast<std::size_t>(d);
    if (s.dressed_of_bare[bi] >= 0 || used[di]) continue;
    s.dressed_of_bare[bi] = d;
    s.overlap_of_bare[bi] = overlap;
    used[di] = true;
  }
  return s;
}

MapConditionReport map_condition_report(const DeviceParams& params) {
  params.validate(true, true);
  DeviceParams p = params;
  p.levels1 = std::max(p.levels1, 3);
  const auto h = build_static_hamiltonian(p);
  const auto spectrum = dressed_spectrum(h);
  const auto& space = h.space;
  MapConditionReport r;
  r.delta12_03 = bare_energy(p, {1, 2}) - bare_energy(p, {0, 3});
  r.j12_03 = level_pair(h, p, {1, 2}, {0, 3}).matrix_element;
  r.xi = splitting_xi(r.j12_03, r.delta12_03);
  r.e_a = spectrum.energy(space, {0, 2}) - spectrum.energy(space, {0, 1});
  r.e_b = spectrum.energy(space, {1, 2}) - spectrum.energy(space, {1, 1});
  r.conditional_anharmonicity = r.e_b - r.e_a;
  return r;
}

QubitFrequencies dressed_qubit_frequencies(const DeviceParams& params) {
  const auto h = build_static_hamiltonian(params);
  const auto s = dressed_spectrum(h);
  const double e00 = s.energy(h.space, {0, 0});
  return {s.energy(h.space, {1, 0}) - e00, s.energy(h.space, {0, 1}) - e00};
}

namespace {

// Transitions from dressed |11> into the hybridised |12>/|03> pair, ascending.
std::vector<double> hybrid_lines(const DeviceParams& params) {
  DeviceParams p = params;
  p.levels1 = std::max(p.levels1, 3);
  const auto h = build_static_hamiltonian(p);
  const auto& space = h.space;
  const auto s = dressed_spectrum(h);
  const double e11 = s.energy(space, {1, 1});
  const auto i12 = space.index({1, 2});
  const auto i03 = space.index({0, 3});
  std::vector<double> out;
  for (Eigen::Index d = 0; d < s.energies.size(); ++d) {
    const double weight = std::norm(s.vectors(i12, d)) + std::norm(s.vectors(i03, d));
    if (weight >= 0.1) out.push_back(s.energies(d) - e11);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

LeakageWindow leakage_window(const DeviceParams& params) {
  params.validate(true);
  DeviceParams p = params;
  p.levels1 = std::max(p.levels1, 3);
  const auto h = build_static_hamiltonian(p);
  const auto s = dressed_spectrum(h);
  LeakageWindow w;
  w.transitions = hybrid_lines(params);
  w.transitions.push_back(s.energy(h.space, {0, 2}) - s.energy(h.space, {0, 1}));
  std::sort(w.transitions.begin(), w.transitions.end());
  w.low = w.transitions.front();
  w.high = w.transitions.back();
  return w;
}

DeviceParams calibrate_hybrid_lines(const DeviceParams& base, double low, double high, double tolerance) {
  base.validate(true);
  if (!(high > low)) throw ConfigError("hybrid-line targets must satisfy low < high");
  // Two-level estimate: lines centred on ((E12 - E11) + (E03 - E11)) / 2,
  // split by sqrt(D^2 + 12 J^2) with D = E12 - E03.
  const double a = base.omega2 + base.delta2;
  const double centre = 0.5 * (low + high);
  const double b = 2.0 * centre - a;
  const double d = a - b;
  const double split = high - low;
  if (split <= std::abs(d)) throw ConfigError("hybrid-line targets are closer than the bare |12>/|03> detuning");
  DeviceParams p = base;
  p.omega1 = 2.0 * base.omega2 + 3.0 * base.delta2 - b;
  p.coupling = std::sqrt((split * split - d * d) / 12.0);

  auto residual = [&](const DeviceParams& q) {
    const auto lines = hybrid_lines(q);
    if (lines.size() != 2) throw NumericalError("expected two hybridised |12>/|03> lines");
    return Eigen::Vector2d(lines[0] - low, lines[1] - high);
  };
  const double step = units::khz(10.0);
  for (int iter = 0; iter < 50; ++iter) {
    const Eigen::Vector2d r = residual(p);
    if (r.cwiseAbs().maxCoeff() <= tolerance) return p;
    Eigen::Matrix2d jac;
    DeviceParams q = p;
    q.omega1 += step;
    jac.col(0) = (residual(q) - r) / step;
    q = p;
    q.coupling += step;
    jac.col(1) = (residual(q) - r) / step;
    const Eigen::Vector2d delta = jac.fullPivLu().solve(-r);
    p.omega1 += delta(0);
    p.coupling = std::max(p.coupling + delta(1), 0.5 * p.coupling);
  }
  throw NumericalError("hybrid-line calibration did not converge");
}

}  // namespace mapgate
