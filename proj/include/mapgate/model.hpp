#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mapgate/linalg.hpp"
#include "mapgate/units.hpp"

namespace mapgate {

/// Relaxation and coherence times of both transmons, in seconds.
struct Coherence {
  double t1_q1 = 0.0;
  double t1_q2 = 0.0;
  double t2_q1 = 0.0;
  double t2_q2 = 0.0;
};

/// Two fixed-frequency transmons modelled as Duffing oscillators with an
/// effective exchange coupling. Frequencies in rad/s.
struct DeviceParams {
  double omega1 = 0.0;
  double omega2 = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double coupling = 0.0;
  int levels1 = 3;
  int levels2 = 5;
  std::optional<Coherence> coherence;

  /// Design values of the published device: 5.166 / 5.668 GHz, identical
  /// -220 MHz anharmonicities, J = 10 MHz (calibrated), T1 = 6 us, T2 = 4 us.
  static DeviceParams paper_default();

  /// All invariant violations; empty when valid. `require_map` additionally
  /// demands levels2 >= 4 so that |03> exists. `allow_uncoupled` accepts
  /// J = 0, the limit the numerics handle but a device config may not use.
  std::vector<std::string> violations(bool require_map = false, bool allow_uncoupled = false) const;

  /// Throws ConfigError listing every violation.
  void validate(bool require_map = false, bool allow_uncoupled = false) const;
};

/// Two-transmon product state |n m>: n excitations in Q1, m in Q2.
struct Ket {
  int q1 = 0;
  int q2 = 0;
  friend bool operator==(const Ket&, const Ket&) = default;
};

std::string to_string(const Ket& k);

/// Truncated product Hilbert space, basis ordered row-major: index = n * d2 + m.
class TwoTransmonSpace {
 public:
  TwoTransmonSpace(int levels1, int levels2);

  int levels1() const { return d1_; }
  int levels2() const { return d2_; }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(d1_) * d2_; }
  Eigen::Index index(const Ket& k) const;
  Ket ket(Eigen::Index index) const;
  bool contains(const Ket& k) const { return k.q1 >= 0 && k.q2 >= 0 && k.q1 < d1_ && k.q2 < d2_; }
  /// True for |00>, |01>, |10>, |11>.
  bool is_computational(Eigen::Index index) const;
  /// Indices of |00>, |01>, |10>, |11> in that order.
  std::array<Eigen::Index, 4> computational_indices() const;

  const CMatrix& lowering1() const { return a1_; }
  const CMatrix& lowering2() const { return a2_; }
  const CMatrix& number1() const { return n1_; }
  const CMatrix& number2() const { return n2_; }
  CMatrix identity() const { return CMatrix::Identity(dim(), dim()); }

 private:
  int d1_;
  int d2_;
  CMatrix a1_, a2_, n1_, n2_;
};

/// Dense operator on the two-transmon space.
struct OperatorMatrix {
  TwoTransmonSpace space;
  CMatrix entries;
};

inline constexpr std::size_t kDefaultMaxDimension = 64;

/// H = sum_i w_i n_i + (d_i / 2) n_i (n_i - 1) + J (a1^dag a2 + a1 a2^dag).
OperatorMatrix build_static_hamiltonian(const DeviceParams& params,
                                        std::size_t max_dimension = kDefaultMaxDimension);

/// Uncoupled energy of |n m>.
double bare_energy(const DeviceParams& params, const Ket& k);

/// Coupling matrix element and bare detuning between two product levels.
struct LevelPair {
  Ket upper;
  Ket lower;
  double matrix_element = 0.0;  ///< |<upper|H|lower>|
  double detuning = 0.0;        ///< E_bare(upper) - E_bare(lower)
};

LevelPair level_pair(const OperatorMatrix& hamiltonian, const DeviceParams& params, const Ket& a,
                     const Ket& b);

/// Half-splitting of the coupled |12>/|03> levels:
/// xi = (sqrt(4 J^2 + D^2) + D) / 2 with D = E(12) - E(03).
/// Evaluated without cancellation for D < 0.
double splitting_xi(double j12_03, double delta12_03);

struct PerturbativeRate {
  double zeta0 = 0.0;            ///< always-on part
  double zeta2 = 0.0;            ///< drive-activated factor
  double drive_detuning = 0.0;   ///< (E12 - E11) - omega_d
  double zeta = 0.0;             ///< zeta0 + amplitude^2 / (2 drive_detuning) * zeta2
};

inline constexpr double kDefaultResonanceFloor = units::khz(100.0);

/// Second-order conditional-phase rate under a drive near the |11>-|12>
/// transition. Throws ResonanceError near the poles.
PerturbativeRate zeta_perturbative(const DeviceParams& params, double omega_d, double amplitude,
                                   double resonance_floor = kDefaultResonanceFloor);

/// Eigenstates of a Hermitian operator with a one-to-one assignment to bare
/// product states by maximum overlap.
struct DressedSpectrum {
  RVector energies;            ///< ascending
  CMatrix vectors;             ///< columns are eigenvectors
  std::vector<Eigen::Index> dressed_of_bare;
  std::vector<double> overlap_of_bare;  ///< |<bare|dressed>|^2 of the assignment

  double energy(const TwoTransmonSpace& space, const Ket& k) const {
    return energies(dressed_of_bare[space.index(k)]);
  }
};

DressedSpectrum dressed_spectrum(const OperatorMatrix& h);

struct MapConditionReport {
  double delta12_03 = 0.0;  ///< bare E(12) - E(03)
  double j12_03 = 0.0;
  double xi = 0.0;
  double e_a = 0.0;         ///< dressed E(02) - E(01)
  double e_b = 0.0;         ///< dressed E(12) - E(11)
  double conditional_anharmonicity = 0.0;  ///< e_b - e_a
};

MapConditionReport map_condition_report(const DeviceParams& params);

/// Dressed transition frequencies of the undriven system.
struct QubitFrequencies {
  double q1 = 0.0;  ///< E(10) - E(00)
  double q2 = 0.0;  ///< E(01) - E(00)
};

QubitFrequencies dressed_qubit_frequencies(const DeviceParams& params);

/// Frequency band spanned by the transitions a Q2-side drive can drive
/// directly into the second and third excitation manifolds: |01>->|02>,
/// and |11> into the hybridised |12>/|03> pair.
struct LeakageWindow {
  double low = 0.0;
  double high = 0.0;
  std::vector<double> transitions;
  bool contains(double omega, double guard = 0.0) const {
    return omega >= low - guard && omega <= high + guard;
  }
};

LeakageWindow leakage_window(const DeviceParams& params);

/// Adjusts omega1 and J so that the two transitions from dressed |11> into
/// the hybridised |12>/|03> pair land at `low` and `high`. Other fields are
/// kept. Starts from the two-level estimate and refines by Newton steps.
DeviceParams calibrate_hybrid_lines(const DeviceParams& base, double low, double high,
                                    double tolerance = units::khz(1.0));

}  // namespace mapgate
