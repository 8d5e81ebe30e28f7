#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mapgate/dynamics.hpp"
#include "mapgate/model.hpp"
#include "mapgate/protocols.hpp"

namespace mapgate {

enum class Experiment { Spectroscopy, RamseyDirect, RamseyRefocused, Sweep, PertCompare, Qpt };

std::string to_string(Experiment e);
/// Accepts the CLI subcommand names: spectroscopy, ramsey-direct,
/// ramsey-refocused, sweep, pert-compare, qpt.
std::optional<Experiment> parse_experiment(const std::string& name);
bool is_map_experiment(Experiment e);

/// Everything a run needs, in internal units (rad/s, s).
///
/// JSON layout (units are part of every dimensioned key):
///
///   experiment            string
///   device                omega1_GHz, omega2_GHz, delta1_MHz, delta2_MHz, J_MHz,
///                         levels1, levels2, T1_q1_us, T1_q2_us, T2_q1_us, T2_q2_us
///                         (the four coherence keys together or not at all)
///   drive                 port (Q1|Q2|both), omega_d_GHz, Omega_MHz, rise_fall_ns,
///                         shape (flat-top|square|gaussian), phase_rad
///   protocol              measured (Q1|Q2), rotation_length_ns, rotation_mode (ideal|pulsed),
///                         open_system, leakage_threshold, time_step_ns, horizon_us,
///                         sample_until_ns, fit_residual_threshold, gate_protocol
///                         (direct|refocused), gate_time_ns, relative_tolerance
///   spectroscopy          port, pulse_length_ns, line_threshold
///   grids                 time_ns, omega_d_GHz, Omega_MHz, frequency_GHz; each either a
///                         list or {start, stop, step} / {start, stop, count}
///   numerics              tolerance, max_steps, initial_step_ns, open_tolerance,
///                         open_chunk_ns, open_min_chunk_ns, open_quadrature_step_ns,
///                         max_dimension, shots (integer or "inf"), seed, workers
///   output                directory, time_series, sample_interval_ns
struct ExperimentConfig {
  std::optional<Experiment> experiment;
  DeviceParams device = DeviceParams::paper_default();
  MapDrive drive;
  RamseyOptions ramsey;
  GateTimeOptions gate;
  SimulatorOptions simulator;
  std::optional<double> gate_time;
  double relative_tolerance = 0.10;

  DrivePort spectroscopy_port = DrivePort::Both;
  double spectroscopy_pulse = units::ns(2000.0);
  double line_threshold = 0.3;

  std::vector<double> time_grid;
  std::vector<double> omega_d_grid;
  std::vector<double> amplitude_grid;
  std::vector<double> frequency_grid;

  std::optional<std::uint64_t> shots;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  std::filesystem::path output_directory = "out";
  bool time_series = false;
  double sample_interval = units::ns(5.0);

  /// The JSON text the config was parsed from, normalised.
  std::string snapshot;

  ExperimentConfig();
};

/// Parses and checks a configuration. Every problem found (unknown keys,
/// wrong types, invalid values) is collected and thrown together as one
/// ConfigError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// All invariant violations for the chosen experiment; empty when valid.
std::vector<std::string> validate(const ExperimentConfig& config);

}  // namespace mapgate
