#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <tuple>
#include <vector>

#include "mapgate/linalg.hpp"
#include "mapgate/model.hpp"
#include "mapgate/pulses.hpp"

namespace mapgate {

/// How Rotation segments are realised: as instantaneous ideal unitaries
/// centred in their gate window, or as resonant square pulses.
enum class RotationMode { Ideal, Pulsed };

struct SimulatorOptions {
  /// Target max-norm error of each time-dependent piece's propagator.
  double tolerance = 1e-8;
  /// Cap on integration steps for a single time-dependent piece.
  std::size_t max_steps = 200000;
  /// Initial subdivision of time-dependent pieces before error control.
  double initial_step = units::ns(1.0);
  /// Open-system ramps: coherent part as above, dissipator integrated in its
  /// interaction picture. Error target, initial and minimum chunk length, and
  /// quadrature spacing. Chunks stop bisecting at the minimum length; the
  /// achieved step-doubling error is reported in the diagnostics.
  double open_tolerance = 1e-6;
  double open_chunk = units::ns(20.0);
  double open_min_chunk = units::ns(10.0);
  double open_quadrature_step = units::ns(0.25);
  RotationMode rotation_mode = RotationMode::Ideal;
  std::size_t max_dimension = kDefaultMaxDimension;
};

/// H - f1 n1 - f2 n2. With f1 != f2 the exchange term keeps a residual
/// time dependence exp(+-i exchange_beat t); it is frame-invariant when the
/// two rates are equal.
struct RotatingFrameHamiltonian {
  CMatrix h;
  double exchange_beat = 0.0;
};

RotatingFrameHamiltonian to_rotating_frame(const OperatorMatrix& h_static, double frame_q1,
                                           double frame_q2);

struct PopulationSample {
  double time = 0.0;
  std::array<double, 4> computational{};  ///< P00, P01, P10, P11
  double leakage = 0.0;
};

struct PropagationDiagnostics {
  std::size_t steps = 0;
  double max_step_error = 0.0;
  double unitarity_error = 0.0;  ///< closed system propagators
  double norm_drift = 0.0;       ///< closed system states
  double trace_drift = 0.0;      ///< open system
  double min_eigenvalue = 0.0;   ///< open system final state
};

struct PropagationResult {
  std::optional<CVector> state;
  std::optional<CMatrix> density;
  /// Unitary (closed) or column-stacking superoperator (open), in the
  /// frame co-rotating with the dressed qubit frequencies.
  std::optional<CMatrix> propagator;
  std::vector<PopulationSample> samples;
  PropagationDiagnostics diagnostics;
};

/// Pulse-level propagation of the driven two-transmon system.
///
/// States and propagators are expressed in the frame rotating at the dressed
/// qubit frequencies (E10 - E00 on Q1, E01 - E00 on Q2), where ideal
/// single-qubit rotations are defined. Every segment is integrated in a frame
/// rotating at a single rate on n1 + n2 (the drive frequency for drive pulses),
/// which keeps the exchange term static, and then mapped exactly into the
/// qubit frame. Drives use the rotating-wave approximation; constant-envelope
/// intervals are exponentiated exactly, ramps with adaptive fourth-order
/// Magnus steps under step-doubling error control. With dissipation, ramps
/// are split into chunks whose superoperator is the coherent propagator times
/// the exponential of the interaction-picture dissipator integral.
class Simulator {
 public:
  explicit Simulator(const DeviceParams& params, SimulatorOptions options = {});
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  const DeviceParams& params() const { return params_; }
  const SimulatorOptions& options() const { return options_; }
  const OperatorMatrix& hamiltonian() const { return hamiltonian_; }
  const TwoTransmonSpace& space() const { return hamiltonian_.space; }
  const QubitFrequencies& qubit_frame() const { return frame_; }

  CVector basis_state(const Ket& k) const;
  /// Lowering operator coupled to a drive port (a1, a2 or a1 + a2).
  CMatrix drive_operator(DrivePort port) const;
  /// Ideal rotation embedded in the transmon space.
  CMatrix rotation_unitary(const Rotation& r) const;
  /// Embeds a computational-subspace unitary; identity on other levels.
  CMatrix embed(const Eigen::Matrix4cd& u) const;
  /// Static Hamiltonian with constant RWA drive, in the frame rotating at
  /// omega_d on both transmons.
  CMatrix driven_hamiltonian(double omega_d, double amplitude, DrivePort port, double phase = 0.0) const;

  PropagationResult propagate_unitary(const PulseSequence& seq) const;
  PropagationResult evolve(const CVector& psi0, const PulseSequence& seq, double sample_interval = 0.0) const;

  /// Open-system propagation; requires coherence times in the parameters.
  PropagationResult propagate_lindblad(const PulseSequence& seq) const;
  PropagationResult evolve_lindblad(const CMatrix& rho0, const PulseSequence& seq,
                                    double sample_interval = 0.0) const;
  /// Dissipative part of the Liouvillian (column-stacking convention):
  /// collapse sqrt(1/T1) a_i and pure dephasing sqrt(2/T_phi) n_i with
  /// 1/T_phi = 1/T2 - 1/(2 T1).
  CMatrix dissipator() const;

  /// Reference check outside the rotating-wave approximation: integrates a
  /// single drive pulse with the counter-rotating terms kept, using RK4 with
  /// step `dt`. Returns the final state in the qubit frame.
  CVector evolve_lab_frame(const CVector& psi0, const DrivePulse& pulse, double dt) const;

  std::array<double, 4> computational_populations(const CVector& psi) const;
  std::array<double, 4> computational_populations(const CMatrix& rho) const;

 private:
  struct Piece;
  friend class PieceIntegrator;

  std::vector<Piece> pieces(const PulseSequence& seq) const;
  CVector frame_phases(double frame, double t) const;

  DeviceParams params_;
  SimulatorOptions options_;
  OperatorMatrix hamiltonian_;
  QubitFrequencies frame_;
  CMatrix number_total_;
  std::vector<CMatrix> collapse_;
  CMatrix dissipator_;

  mutable std::mutex cache_mutex_;
  mutable std::map<std::tuple<int, int, double, double, double, double, double, double, double>, CMatrix>
      ramp_cache_;
};

/// Exact dressed energies of the computational states under a constant drive,
/// in the frame rotating at omega_d on both transmons.
struct DrivenDressedEnergies {
  double e00 = 0.0, e01 = 0.0, e10 = 0.0, e11 = 0.0;
  double zeta = 0.0;  ///< e11 - e01 - e10 + e00
  double min_overlap = 1.0;
  double non_computational_weight = 0.0;  ///< max weight outside the qubit subspace
  std::size_t continuation_steps = 0;
};

struct ContinuationOptions {
  double max_step = units::mhz(0.25);
  double min_step = units::khz(1.0);
  DrivePort port = DrivePort::Q2;
};

/// Labels dressed states by continuation in the drive amplitude from zero,
/// requiring every successive overlap to exceed 0.5; otherwise throws
/// LeakageRegionError.
DrivenDressedEnergies driven_dressed_energies(const DeviceParams& params, double omega_d, double amplitude,
                                              const ContinuationOptions& options = {});

}  // namespace mapgate
