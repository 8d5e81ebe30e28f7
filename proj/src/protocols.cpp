#include "mapgate/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>

#include "mapgate/errors.hpp"
#include "mapgate/fitting.hpp"
#include "mapgate/parallel.hpp"

namespace mapgate {
namespace {

constexpr double kPi = std::numbers::pi;

Target control_of(Target measured) {
  if (measured == Target::Both) throw ConfigError("the measured qubit must be Q1 or Q2");
  return measured == Target::Q1 ? Target::Q2 : Target::Q1;
}

// Populations of the measured qubit after an analysis pulse, restricted to
// the computational subspace.
struct Readout {
  double p0 = 0.0;
  double p1 = 0.0;
};

struct PointResult {
  Readout x, y;
  double leakage = 0.0;
};

Readout marginal(const std::array<double, 4>& pops, Target measured) {
  // pops: P00, P01, P10, P11 with the Q1 bit first.
  Readout r;
  if (measured == Target::Q2) {
    r.p0 = pops[0] + pops[2];
    r.p1 = pops[1] + pops[3];
  } else {
    r.p0 = pops[0] + pops[1];
    r.p1 = pops[2] + pops[3];
  }
  return r;
}

// Prepares the control, runs X_pi/2 on the measured qubit, the core
// sequence, the optional closing X_pi on both, and reads out both
// quadratures. The core propagator is computed once for all inits.
class RamseyEvaluator {
 public:
  RamseyEvaluator(const Simulator& sim, const RamseyOptions& options, bool closing_pi)
      : sim_(sim), options_(options), closing_pi_(closing_pi) {
    const Target measured = options.measured;
    control_ = control_of(measured);
    prep_ = sim.rotation_unitary({measured, Axis::X, 0.5 * kPi, 0.0});
    flip_ = sim.rotation_unitary({control_, Axis::X, kPi, 0.0});
    close_ = sim.rotation_unitary({Target::Both, Axis::X, kPi, 0.0});
    analysis_x_ = sim.rotation_unitary({measured, Axis::X, 0.5 * kPi, 0.0});
    analysis_y_ = sim.rotation_unitary({measured, Axis::Y, 0.5 * kPi, 0.0});
  }

  std::vector<PointResult> run(const PulseSequence& core, const std::vector<InitState>& inits) const {
    std::vector<PointResult> out;
    const CVector ground = sim_.basis_state({0, 0});
    if (options_.open_system) {
      const auto n = sim_.space().dim();
      const CMatrix s = *sim_.propagate_lindblad(core).propagator;
      for (InitState init : inits) {
        CVector psi = prep_ * (init == InitState::ControlExcited ? CVector(flip_ * ground) : ground);
        CMatrix rho = unvec(s * vec(psi * psi.adjoint()), n);
        if (closing_pi_) rho = close_ * rho * close_.adjoint();
        out.push_back(readout(rho));
      }
    } else {
      const CMatrix u = *sim_.propagate_unitary(core).propagator;
      for (InitState init : inits) {
        CVector psi = u * (prep_ * (init == InitState::ControlExcited ? CVector(flip_ * ground) : ground));
        if (closing_pi_) psi = close_ * psi;
        out.push_back(readout(CMatrix(psi * psi.adjoint())));
      }
    }
    return out;
  }

 private:
  PointResult readout(const CMatrix& rho) const {
    PointResult r;
    const auto before = sim_.computational_populations(rho);
    r.leakage = std::max(0.0, rho.trace().real() - (before[0] + before[1] + before[2] + before[3]));
    r.x = marginal(sim_.computational_populations(CMatrix(analysis_x_ * rho * analysis_x_.adjoint())),
                   options_.measured);
    r.y = marginal(sim_.computational_populations(CMatrix(analysis_y_ * rho * analysis_y_.adjoint())),
                   options_.measured);
    return r;
  }

  const Simulator& sim_;
  RamseyOptions options_;
  bool closing_pi_;
  Target control_;
  CMatrix prep_, flip_, close_, analysis_x_, analysis_y_;
};

double sample_shots(double p, std::uint64_t shots, std::mt19937_64& rng) {
  std::binomial_distribution<std::uint64_t> dist(shots, std::clamp(p, 0.0, 1.0));
  return static_cast<double>(dist(rng)) / static_cast<double>(shots);
}

// Coherence phase theta of the measured qubit, with the state written as
// |0> - i e^{i theta} |1> after the X_pi/2 preparation:
// P1 after X_pi/2 = (1 + cos theta) / 2, after Y_pi/2 = (1 + sin theta) / 2.
double phase_of(double px, double py) { return std::atan2(2.0 * py - 1.0, 2.0 * px - 1.0); }

double normalised(const Readout& r, double p1) {
  const double total = r.p0 + r.p1;
  return total > 0.0 ? p1 / total : 0.5;
}

FringeRecord run_ramsey(const Simulator& sim, const std::vector<double>& grid, InitState init,
                        const RamseyOptions& options, bool closing_pi,
                        const std::function<PulseSequence(double)>& core_of) {
  if (grid.empty()) throw ConfigError("Ramsey grid is empty");
  if (sim.space().levels2() < 4) throw ConfigError("MAP protocols need at least 4 levels in Q2 to hold |03>");
  if (options.shots && *options.shots == 0) throw ConfigError("shot count must be positive");
  const RamseyEvaluator evaluator(sim, options, closing_pi);
  const std::size_t n = grid.size();
  std::vector<PointResult> points(n);
  parallel_for(n, options.workers, [&](std::size_t i) { points[i] = evaluator.run(core_of(grid[i]), {init})[0]; });

  FringeRecord rec;
  rec.init_label = init_label(init, options.measured);
  rec.measured = options.measured;
  rec.x = grid;
  std::vector<double> wrapped(n);
  for (std::size_t i = 0; i < n; ++i) {
    double px = points[i].x.p1;
    double py = points[i].y.p1;
    if (options.shots) {
      std::seed_seq seq{options.seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(init)};
      std::mt19937_64 rng(seq);
      px = sample_shots(px, *options.shots, rng);
      py = sample_shots(py, *options.shots, rng);
    }
    rec.p1.push_back(std::clamp(px, 0.0, 1.0));
    rec.p1_y.push_back(std::clamp(py, 0.0, 1.0));
    rec.leakage.push_back(points[i].leakage);
    wrapped[i] = phase_of(normalised(points[i].x, px), normalised(points[i].y, py));
  }
  rec.phase = unwrap(wrapped);

  if (n >= 5) {
    const CosineFit fit = fit_cosine(rec.x, rec.p1);
    rec.fitted_phase = fit.phase;
    rec.fitted_frequency = fit.frequency;
    rec.fitted_contrast = std::clamp(2.0 * fit.amplitude, 0.0, 1.0);
    rec.fit_residual = fit.residual_rms;
    rec.fit_ok = fit.converged && fit.residual_rms <= options.fit_residual_threshold;
  }
  if (n >= 2) {
    const LineFit line = fit_line(rec.x, rec.phase);
    rec.phase_rate = line.slope;
    rec.phase_rate_residual = line.residual_rms;
  }
  return rec;
}

}  // namespace

std::string init_label(InitState init, Target measured) {
  const bool excited = init == InitState::ControlExcited;
  if (measured == Target::Q1) return excited ? "|01>" : "|00>";
  return excited ? "|10>" : "|00>";
}

std::string to_string(Protocol p) { return p == Protocol::Direct ? "direct" : "refocused"; }

DrivePulse MapDrive::pulse(double duration) const {
  DrivePulse p;
  p.port = port;
  p.omega_d = omega_d;
  p.amplitude = amplitude;
  p.phase = phase;
  p.duration = duration;
  p.shape = shape;
  p.rise_fall = std::min(rise_fall, 0.5 * duration);
  return p;
}

PulseSequence direct_gate(const MapDrive& drive, double duration) {
  if (duration < 0.0) throw ConfigError("gate duration must be >= 0");
  return PulseSequence({drive.pulse(duration)});
}

PulseSequence refocused_gate(const MapDrive& drive, double total, double refocus_length) {
  const double half = 0.5 * (total - refocus_length);
  if (half < 0.0) throw ConfigError("refocused gate time is shorter than the refocusing pulse");
  PulseSequence seq;
  seq.add(drive.pulse(half));
  seq.add(Rotation{Target::Both, Axis::X, kPi, refocus_length});
  seq.add(drive.pulse(half));
  return seq;
}

FringeRecord ramsey_map_direct(const Simulator& sim, const MapDrive& drive, const std::vector<double>& dt_grid,
                               InitState init, const RamseyOptions& options) {
  return run_ramsey(sim, dt_grid, init, options, false, [&](double dt) { return direct_gate(drive, dt); });
}

FringeRecord ramsey_map_direct(const DeviceParams& params, const MapDrive& drive,
                               const std::vector<double>& dt_grid, InitState init, const RamseyOptions& options) {
  const Simulator sim(params);
  return ramsey_map_direct(sim, drive, dt_grid, init, options);
}

FringeRecord ramsey_map_refocused(const Simulator& sim, const MapDrive& drive,
                                  const std::vector<double>& total_grid, InitState init,
                                  const RamseyOptions& options) {
  return run_ramsey(sim, total_grid, init, options, true,
                    [&](double t) { return refocused_gate(drive, t, options.refocus_length); });
}

FringeRecord ramsey_map_refocused(const DeviceParams& params, const MapDrive& drive,
                                  const std::vector<double>& total_grid, InitState init,
                                  const RamseyOptions& options) {
  const Simulator sim(params);
  return ramsey_map_refocused(sim, drive, total_grid, init, options);
}

ConditionalPhase conditional_phase(const FringeRecord& ground, const FringeRecord& excited) {
  if (ground.x != excited.x) throw ConfigError("conditional phase needs both fringes on the same grid");
  ConditionalPhase out;
  out.x = ground.x;
  for (std::size_t i = 0; i < ground.x.size(); ++i) {
    out.phase.push_back(excited.phase[i] - ground.phase[i]);
    out.single_qubit.push_back(0.5 * (excited.phase[i] + ground.phase[i]));
    out.leakage.push_back(std::max(ground.leakage[i], excited.leakage[i]));
  }
  return out;
}

GateTimeResult find_gate_time(const Simulator& sim, const MapDrive& drive, const GateTimeOptions& options) {
  if (!(options.time_step > 0.0)) throw ConfigError("gate-time step must be positive");
  if (!(options.horizon > 0.0)) throw ConfigError("gate-time horizon must be positive");
  GateTimeResult res;
  res.omega_d = drive.omega_d;
  res.amplitude = drive.amplitude;

  if (options.check_labeling) {
    try {
      ContinuationOptions c;
      c.port = drive.port;
      driven_dressed_energies(sim.params(), drive.omega_d, drive.amplitude, c);
    } catch (const LeakageRegionError& e) {
      res.diverged = true;
      res.reason = "labeling";
      return res;
    }
  }

  const bool refocused = options.protocol == Protocol::Refocused;
  const double overhead = refocused ? options.ramsey.refocus_length : 0.0;
  const double ramps = drive.shape == EnvelopeShape::FlatTop ? 2.0 * drive.rise_fall : 0.0;
  const double full = overhead + (refocused ? 2.0 : 1.0) * ramps;
  const RamseyEvaluator evaluator(sim, options.ramsey, refocused);
  auto core = [&](double t) {
    return refocused ? refocused_gate(drive, t, overhead) : direct_gate(drive, t);
  };

  std::vector<double> times;
  for (int j = 1; j <= 3 && full > overhead; ++j) times.push_back(overhead + (full - overhead) * j / 4.0);
  for (double t = std::max(full, overhead + options.time_step); t <= options.horizon + 1e-15;
       t += options.time_step) {
    times.push_back(t);
  }

  double previous = 0.0;
  bool have_previous = false;
  const double stop_after = std::max(options.sample_until, 0.0);
  for (double t : times) {
    const auto pts = evaluator.run(core(t), {InitState::ControlGround, InitState::ControlExcited});
    const double g = phase_of(normalised(pts[0].x, pts[0].x.p1), normalised(pts[0].y, pts[0].y.p1));
    const double e = phase_of(normalised(pts[1].x, pts[1].x.p1), normalised(pts[1].y, pts[1].y.p1));
    double cond = wrap_phase(e - g);
    if (have_previous) cond = previous + wrap_phase(cond - previous);
    previous = cond;
    have_previous = true;
    res.times.push_back(t);
    res.phase.push_back(cond);
    res.single_qubit.push_back(0.5 * (e + g));
    res.leakage.push_back(std::max(pts[0].leakage, pts[1].leakage));
    if (!res.t_zzpi) {
      const auto crossing = first_crossing(res.times, res.phase, kPi);
      if (crossing) {
        res.t_zzpi = *crossing;
        const std::size_t k = res.times.size() - 1;
        res.leakage_at_crossing = k > 0 ? std::max(res.leakage[k], res.leakage[k - 1]) : res.leakage[k];
      }
    }
    if (res.t_zzpi && t >= stop_after) break;
  }

  if (!res.t_zzpi) {
    res.diverged = true;
    res.reason = "horizon";
  } else if (res.leakage_at_crossing > options.leakage_threshold) {
    res.diverged = true;
    res.reason = "leakage";
    res.t_zzpi.reset();
  }
  return res;
}

std::vector<GateTimeResult> sweep_gate_time(const DeviceParams& params, const MapDrive& base,
                                            const std::vector<double>& omega_d_grid,
                                            const std::vector<double>& amplitude_grid,
                                            const GateTimeOptions& options, const SimulatorOptions& simulator) {
  if (omega_d_grid.empty() || amplitude_grid.empty()) throw ConfigError("sweep grids must be nonempty");
  params.validate(true);
  const Simulator sim(params, simulator);
  const std::size_t na = amplitude_grid.size();
  std::vector<GateTimeResult> out(omega_d_grid.size() * na);
  GateTimeOptions inner = options;
  inner.ramsey.workers = 1;
  parallel_for(out.size(), options.ramsey.workers, [&](std::size_t i) {
    MapDrive drive = base;
    drive.omega_d = omega_d_grid[i / na];
    drive.amplitude = amplitude_grid[i % na];
    try {
      out[i] = find_gate_time(sim, drive, inner);
    } catch (const NumericalError& e) {
      throw NumericalError("at omega_d = " + std::to_string(units::to_ghz(drive.omega_d)) + " GHz, Omega = " +
                           std::to_string(units::to_mhz(drive.amplitude)) + " MHz: " + e.what());
    }
  });
  return out;
}

PerturbativeComparison compare_perturbative(const DeviceParams& params, double omega_d, double amplitude,
                                            DrivePort port, double tolerance) {
  PerturbativeComparison out;
  out.omega_d = omega_d;
  out.amplitude = amplitude;
  try {
    out.zeta_pert = zeta_perturbative(params, omega_d, amplitude).zeta;
  } catch (const ResonanceError&) {
    out.flag = "resonance";
  }
  try {
    ContinuationOptions c;
    c.port = port;
    const auto e = driven_dressed_energies(params, omega_d, amplitude, c);
    out.zeta_numeric = e.zeta;
    out.non_computational_weight = e.non_computational_weight;
  } catch (const LeakageRegionError&) {
    out.flag = "labeling";
  }
  if (out.zeta_pert && out.zeta_numeric) {
    out.relative_error = std::abs(*out.zeta_pert - *out.zeta_numeric) / std::abs(*out.zeta_numeric);
    if (!(*out.relative_error <= tolerance)) out.flag = "diverged";
  }
  return out;
}

SpectroscopyMap rabi_spectroscopy(const DeviceParams& params, const std::vector<double>& frequencies,
                                  const std::vector<double>& amplitudes, double pulse_length, DrivePort port,
                                  std::size_t workers, const SimulatorOptions& simulator) {
  if (frequencies.empty() || amplitudes.empty()) throw ConfigError("spectroscopy grids must be nonempty");
  const double slowest = *std::min_element(frequencies.begin(), frequencies.end());
  if (!(slowest > 0.0)) throw ConfigError("spectroscopy frequencies must be positive");
  if (!(pulse_length >= 5.0 * units::kTwoPi / slowest)) {
    throw ConfigError("spectroscopy pulse must last at least 5 drive periods");
  }
  params.validate(false, true);
  const Simulator sim(params, simulator);
  SpectroscopyMap map;
  map.frequencies = frequencies;
  map.amplitudes = amplitudes;
  map.pulse_length = pulse_length;
  map.excitation = RMatrix::Zero(static_cast<Eigen::Index>(amplitudes.size()),
                                 static_cast<Eigen::Index>(frequencies.size()));
  const auto ground = sim.space().index({0, 0});
  parallel_for(frequencies.size(), workers, [&](std::size_t j) {
    for (std::size_t i = 0; i < amplitudes.size(); ++i) {
      const CMatrix h = sim.driven_hamiltonian(frequencies[j], amplitudes[i], port);
      const CMatrix u = expm_hermitian(h, pulse_length);
      map.excitation(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          1.0 - std::norm(u(ground, ground));
    }
  });
  return map;
}

std::vector<TransitionLine> extract_transition_lines(const SpectroscopyMap& map, const DeviceParams& params,
                                                     double threshold) {
  std::vector<TransitionLine> lines;
  auto add = [&](const std::string& name, double omega, double delta, int levels) {
    for (int k = 1; k <= 3 && k < levels; ++k) {
      TransitionLine line;
      line.label = name + (k == 1 ? " f01" : " f0" + std::to_string(k) + "/" + std::to_string(k));
      line.predicted = omega + 0.5 * delta * (k - 1);
      lines.push_back(line);
    }
    return std::abs(delta) / 4.0;
  };
  const double w1 = add("Q1", params.omega1, params.delta1, params.levels1);
  const std::size_t split = lines.size();
  const double w2 = add("Q2", params.omega2, params.delta2, params.levels2);

  const auto& f = map.frequencies;
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(map.excitation.rows()));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  std::sort(rows.begin(), rows.end(), [&](Eigen::Index a, Eigen::Index b) {
    return map.amplitudes[static_cast<std::size_t>(a)] < map.amplitudes[static_cast<std::size_t>(b)];
  });
  for (std::size_t l = 0; l < lines.size(); ++l) {
    auto& line = lines[l];
    const double half = l < split ? w1 : w2;
    for (const Eigen::Index a : rows) {
      if (line.fitted) break;
      std::optional<std::size_t> best;
      for (std::size_t j = 0; j < f.size(); ++j) {
        if (std::abs(f[j] - line.predicted) > half) continue;
        if (!best || map.excitation(a, static_cast<Eigen::Index>(j)) >
                         map.excitation(a, static_cast<Eigen::Index>(*best))) {
          best = j;
        }
      }
      if (!best || map.excitation(a, static_cast<Eigen::Index>(*best)) < threshold) continue;
      const std::size_t j = *best;
      double pos = f[j];
      if (j > 0 && j + 1 < f.size()) {
        const double ym = map.excitation(a, static_cast<Eigen::Index>(j - 1));
        const double y0 = map.excitation(a, static_cast<Eigen::Index>(j));
        const double yp = map.excitation(a, static_cast<Eigen::Index>(j + 1));
        const double denom = ym - 2.0 * y0 + yp;
        if (denom < 0.0) {
          const double shift = std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5);
          pos = f[j] + shift * 0.5 * (f[j + 1] - f[j - 1]);
        }
      }
      line.fitted = pos;
      line.amplitude = map.amplitudes[static_cast<std::size_t>(a)];
    }
  }
  return lines;
}

}  // namespace mapgate
