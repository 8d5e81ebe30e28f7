#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mapgate/dynamics.hpp"
#include "mapgate/model.hpp"
#include "mapgate/pulses.hpp"

namespace mapgate {

/// Control qubit prepared in |0> or |1> before a Ramsey experiment on the
/// measured qubit. With the default roles these are |00> and |10>.
enum class InitState { ControlGround, ControlExcited };

std::string init_label(InitState init, Target measured);

/// The MAP drive tone used by the tune-up protocols.
struct MapDrive {
  DrivePort port = DrivePort::Q2;
  double omega_d = 0.0;
  double amplitude = 0.0;
  double rise_fall = units::ns(80.0);
  EnvelopeShape shape = EnvelopeShape::FlatTop;
  double phase = 0.0;

  /// Pulse of the given length; the ramps shrink to half the length when
  /// the pulse is too short for them.
  DrivePulse pulse(double duration) const;
};

/// Drive for `duration`.
PulseSequence direct_gate(const MapDrive& drive, double duration);

/// Drive, X_pi on both qubits, drive. `total` includes the refocusing gate;
/// each drive lasts (total - refocus_length) / 2. Implements
/// (X x X) exp(-+ i pi/4 Z x Z) at the calibrated total time.
PulseSequence refocused_gate(const MapDrive& drive, double total, double refocus_length);

struct RamseyOptions {
  /// Qubit whose phase is read out; the other one is the control.
  Target measured = Target::Q2;
  double refocus_length = units::ns(40.0);
  /// Lindblad propagation; requires coherence times.
  bool open_system = false;
  /// Finite-shot binomial readout; exact populations when unset.
  std::optional<std::uint64_t> shots;
  std::uint64_t seed = 0;
  /// Cosine fits with rms residual above this are flagged.
  double fit_residual_threshold = 0.05;
  std::size_t workers = 1;
};

/// One Ramsey trace. Each point is read out after both an X_pi/2 and a
/// Y_pi/2 analysis pulse, giving the measured qubit's phase directly.
struct FringeRecord {
  std::string sweep_variable = "time_ns";
  std::string init_label;
  Target measured = Target::Q2;
  std::vector<double> x;           ///< sweep values, seconds
  std::vector<double> p1;          ///< P(measured = 1) after X_pi/2
  std::vector<double> p1_y;        ///< P(measured = 1) after Y_pi/2
  std::vector<double> phase;       ///< unwrapped coherence phase, rad
  std::vector<double> leakage;     ///< population outside the qubit subspace
  double fitted_phase = 0.0;       ///< cosine fit of p1, rad
  double fitted_contrast = 0.0;    ///< peak-to-peak of the fit, clipped to [0, 1]
  double fitted_frequency = 0.0;   ///< rad/s, unsigned
  double fit_residual = 0.0;
  bool fit_ok = false;
  double phase_rate = 0.0;         ///< signed slope of `phase`, rad/s
  double phase_rate_residual = 0.0;
};

/// X_pi/2 on the measured qubit, MAP drive for each dt, analysis pulse.
FringeRecord ramsey_map_direct(const Simulator& sim, const MapDrive& drive, const std::vector<double>& dt_grid,
                               InitState init, const RamseyOptions& options = {});
FringeRecord ramsey_map_direct(const DeviceParams& params, const MapDrive& drive,
                               const std::vector<double>& dt_grid, InitState init,
                               const RamseyOptions& options = {});

/// X_pi/2, refocused gate of each total time, X_pi on both, analysis pulse.
FringeRecord ramsey_map_refocused(const Simulator& sim, const MapDrive& drive,
                                  const std::vector<double>& total_grid, InitState init,
                                  const RamseyOptions& options = {});
FringeRecord ramsey_map_refocused(const DeviceParams& params, const MapDrive& drive,
                                  const std::vector<double>& total_grid, InitState init,
                                  const RamseyOptions& options = {});

struct ConditionalPhase {
  std::vector<double> x;
  std::vector<double> phase;         ///< phase(control excited) - phase(control ground), unwrapped
  std::vector<double> single_qubit;  ///< mean of the two phases
  std::vector<double> leakage;       ///< max of the two traces
};

/// Requires both records on the same grid.
ConditionalPhase conditional_phase(const FringeRecord& ground, const FringeRecord& excited);

enum class Protocol { Direct, Refocused };
std::string to_string(Protocol p);

struct GateTimeOptions {
  Protocol protocol = Protocol::Refocused;
  RamseyOptions ramsey;
  double time_step = units::ns(10.0);
  double horizon = units::us(5.0);
  /// Diverged when the leakage at the crossing exceeds this.
  double leakage_threshold = 0.05;
  /// Also run dressed-state continuation and mark labeling failures.
  bool check_labeling = true;
  /// Keep sampling up to this time after the crossing, for phase maps.
  double sample_until = 0.0;
};

struct GateTimeResult {
  double omega_d = 0.0;
  double amplitude = 0.0;
  std::optional<double> t_zzpi;  ///< absent when diverged
  bool diverged = false;
  std::string reason;
  double leakage_at_crossing = 0.0;
  std::vector<double> times;
  std::vector<double> phase;
  std::vector<double> single_qubit;
  std::vector<double> leakage;
};

/// First time |conditional phase| reaches pi, linearly interpolated. Times
/// are pulse lengths (direct) or total gate times (refocused). Three short
/// lengths with shrunken ramps anchor the phase unwrapping; from the
/// shortest length holding both full ramps the grid steps by `time_step`.
GateTimeResult find_gate_time(const Simulator& sim, const MapDrive& drive, const GateTimeOptions& options = {});

/// Grid index order: omega_d major, amplitude minor.
std::vector<GateTimeResult> sweep_gate_time(const DeviceParams& params, const MapDrive& base,
                                            const std::vector<double>& omega_d_grid,
                                            const std::vector<double>& amplitude_grid,
                                            const GateTimeOptions& options = {},
                                            const SimulatorOptions& simulator = {});

/// Second-order rate against the exact dressed-state rate at one drive point.
struct PerturbativeComparison {
  double omega_d = 0.0;
  double amplitude = 0.0;
  std::optional<double> zeta_pert;
  std::optional<double> zeta_numeric;
  std::optional<double> relative_error;
  double non_computational_weight = 0.0;
  /// "ok"; "diverged" when the relative error exceeds the tolerance;
  /// "resonance" at a pole of the perturbative rate; "labeling" when the
  /// dressed-state continuation fails.
  std::string flag = "ok";
  bool flagged() const { return flag != "ok"; }
};

PerturbativeComparison compare_perturbative(const DeviceParams& params, double omega_d, double amplitude,
                                            DrivePort port = DrivePort::Q2, double tolerance = 0.10);

struct SpectroscopyMap {
  std::vector<double> frequencies;  ///< rad/s
  std::vector<double> amplitudes;   ///< rad/s
  double pulse_length = 0.0;
  /// excitation(a, f) = 1 - P(|00>) after a square pulse at amplitude a, frequency f.
  RMatrix excitation;
};

/// Square pulses from |00>. The default bus-like port reaches both transmons.
SpectroscopyMap rabi_spectroscopy(const DeviceParams& params, const std::vector<double>& frequencies,
                                  const std::vector<double>& amplitudes, double pulse_length,
                                  DrivePort port = DrivePort::Both, std::size_t workers = 1,
                                  const SimulatorOptions& simulator = {});

struct TransitionLine {
  std::string label;       ///< e.g. "Q2 f02/2"
  double predicted = 0.0;  ///< Duffing ladder estimate, rad/s
  std::optional<double> fitted;
  double amplitude = 0.0;  ///< drive amplitude of the row it was taken from
};

/// Locates f01, f02/2 and f03/3 of each transmon (where the truncation holds
/// the level): searches +-|delta|/4 around the ladder estimate, takes the
/// weakest drive row whose peak exceeds `threshold`, and refines the peak by
/// a parabola through three samples.
std::vector<TransitionLine> extract_transition_lines(const SpectroscopyMap& map, const DeviceParams& params,
                                                     double threshold = 0.3);

}  // namespace mapgate
