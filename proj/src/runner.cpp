#include "mapgate/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include <json.hpp>

#include "mapgate/errors.hpp"
#include "mapgate/io.hpp"
#include "mapgate/parallel.hpp"
#include "mapgate/protocols.hpp"
#include "mapgate/tomography.hpp"

namespace mapgate {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kPi = std::numbers::pi;

std::string file_label(const std::string& ket) {
  std::string out;
  for (char c : ket) {
    if (c != '|' && c != '>') out.push_back(c);
  }
  return out;
}

class Context {
 public:
  Context(const ExperimentConfig& config, RunManifest& manifest) : config_(config), manifest_(manifest) {}

  fs::path path(const std::string& name) {
    written_.insert(name);
    return manifest_.directory / name;
  }
  fs::path stem(const std::string& name) const { return manifest_.directory / name; }
  void warn(std::string w) { manifest_.warnings.push_back(std::move(w)); }

  template <class Fn>
  auto timed(const std::string& stage, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    auto finish = [&] {
      const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start;
      manifest_.timings.emplace_back(stage, d.count());
    };
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      finish();
    } else {
      auto out = fn();
      finish();
      return out;
    }
  }

  const ExperimentConfig& config() const { return config_; }
  const std::set<std::string>& written() const { return written_; }

 private:
  const ExperimentConfig& config_;
  RunManifest& manifest_;
  std::set<std::string> written_;
};

RamseyOptions ramsey_options(const ExperimentConfig& c) {
  RamseyOptions o = c.ramsey;
  o.shots = c.shots;
  o.seed = c.seed;
  o.workers = c.workers;
  return o;
}

GateTimeOptions gate_options(const ExperimentConfig& c) {
  GateTimeOptions o = c.gate;
  o.ramsey = ramsey_options(c);
  return o;
}

// Time series of the state entering the gate: the Ramsey preparation, or
// |++> for process tomography.
void write_gate_time_series(Context& ctx, const Simulator& sim, const PulseSequence& gate, const CVector& psi0,
                            bool open, const std::string& name) {
  const double dt = ctx.config().sample_interval;
  PropagationResult r;
  if (open) {
    r = sim.evolve_lindblad(psi0 * psi0.adjoint(), gate, dt);
  } else {
    r = sim.evolve(psi0, gate, dt);
  }
  write_time_series(ctx.path(name), r.samples);
}

void write_fringe(Context& ctx, const FringeRecord& rec, const std::string& name) {
  CsvWriter csv(ctx.path(name), {rec.sweep_variable, "p1_x", "p1_y", "phase_rad", "leakage"});
  for (std::size_t i = 0; i < rec.x.size(); ++i) {
    csv.cell(units::to_ns(rec.x[i])).cell(rec.p1[i]).cell(rec.p1_y[i]).cell(rec.phase[i]).cell(rec.leakage[i]);
    csv.end_row();
  }
}

void run_spectroscopy(Context& ctx) {
  const auto& c = ctx.config();
  const SpectroscopyMap map = ctx.timed("spectroscopy", [&] {
    return rabi_spectroscopy(c.device, c.frequency_grid, c.amplitude_grid, c.spectroscopy_pulse,
                             c.spectroscopy_port, c.workers, c.simulator);
  });
  {
    CsvWriter csv(ctx.path("spectroscopy.csv"), {"frequency_GHz", "Omega_MHz", "excitation"});
    for (std::size_t a = 0; a < map.amplitudes.size(); ++a) {
      for (std::size_t f = 0; f < map.frequencies.size(); ++f) {
        csv.cell(units::to_ghz(map.frequencies[f]))
            .cell(units::to_mhz(map.amplitudes[a]))
            .cell(map.excitation(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(f)));
        csv.end_row();
      }
    }
  }
  const auto lines = extract_transition_lines(map, c.device, c.line_threshold);
  CsvWriter csv(ctx.path("lines.csv"), {"line", "predicted_GHz", "fitted_GHz", "Omega_MHz"});
  for (const auto& l : lines) {
    csv.cell(l.label).cell(units::to_ghz(l.predicted));
    if (l.fitted) {
      csv.cell(units::to_ghz(*l.fitted)).cell(units::to_mhz(l.amplitude));
    } else {
      csv.cell(std::string("nan")).cell(std::string("nan"));
      ctx.warn("spectroscopy: no peak above threshold for " + l.label);
    }
    csv.end_row();
  }
}

void run_ramsey(Context& ctx, bool refocused) {
  const auto& c = ctx.config();
  const Simulator sim(c.device, c.simulator);
  const RamseyOptions opts = ramsey_options(c);
  if (opts.open_system && !c.device.coherence) throw ConfigError("open_system needs coherence times");

  std::vector<FringeRecord> records;
  for (auto init : {InitState::ControlGround, InitState::ControlExcited}) {
    const std::string stage = "ramsey " + init_label(init, opts.measured);
    records.push_back(ctx.timed(stage, [&] {
      return refocused ? ramsey_map_refocused(sim, c.drive, c.time_grid, init, opts)
                       : ramsey_map_direct(sim, c.drive, c.time_grid, init, opts);
    }));
  }
  for (const auto& rec : records) {
    write_fringe(ctx, rec, "fringe_" + file_label(rec.init_label) + ".csv");
    if (rec.x.size() >= 5 && !rec.fit_ok) {
      ctx.warn("fringe " + rec.init_label + ": cosine fit residual " + format_number(rec.fit_residual) +
               (rec.fitted_frequency > 0.0 ? "" : " (no fit)"));
    }
    const double leak = *std::max_element(rec.leakage.begin(), rec.leakage.end());
    if (leak > c.gate.leakage_threshold) {
      ctx.warn("fringe " + rec.init_label + ": leakage up to " + format_number(leak));
    }
  }
  const ConditionalPhase cp = conditional_phase(records[0], records[1]);
  {
    CsvWriter csv(ctx.path("conditional_phase.csv"),
                  {"time_ns", "phase_diff_rad", "single_qubit_rad", "leakage"});
    for (std::size_t i = 0; i < cp.x.size(); ++i) {
      csv.cell(units::to_ns(cp.x[i])).cell(cp.phase[i]).cell(cp.single_qubit[i]).cell(cp.leakage[i]);
      csv.end_row();
    }
  }
  std::optional<double> crossing;
  for (std::size_t i = 1; i < cp.x.size(); ++i) {
    const double a = std::abs(cp.phase[i - 1]);
    const double b = std::abs(cp.phase[i]);
    if (a < kPi && b >= kPi) {
      crossing = cp.x[i - 1] + (kPi - a) / (b - a) * (cp.x[i] - cp.x[i - 1]);
      break;
    }
  }
  {
    std::ofstream out(ctx.path("report.txt"));
    out << "protocol " << (refocused ? "refocused" : "direct") << "\n";
    out << "measured " << (opts.measured == Target::Q1 ? "Q1" : "Q2") << "\n";
    for (const auto& rec : records) {
      out << "init " << rec.init_label << "\n";
      out << "  phase_rate_MHz " << format_number(units::to_mhz(rec.phase_rate)) << "\n";
      out << "  phase_rate_residual_rad " << format_number(rec.phase_rate_residual) << "\n";
      out << "  fit_frequency_MHz " << format_number(units::to_mhz(rec.fitted_frequency)) << "\n";
      out << "  fit_phase_rad " << format_number(rec.fitted_phase) << "\n";
      out << "  fit_contrast " << format_number(rec.fitted_contrast) << "\n";
      out << "  fit_residual " << format_number(rec.fit_residual) << "\n";
      out << "  fit_ok " << (rec.fit_ok ? "true" : "false") << "\n";
    }
    out << "conditional_rate_MHz "
        << format_number(units::to_mhz(records[1].phase_rate - records[0].phase_rate)) << "\n";
    out << "t_zzpi_ns " << (crossing ? format_number(units::to_ns(*crossing)) : std::string("none")) << "\n";
  }
  if (c.time_series) {
    const double t = *std::max_element(c.time_grid.begin(), c.time_grid.end());
    const PulseSequence gate = refocused ? refocused_gate(c.drive, t, opts.refocus_length) : direct_gate(c.drive, t);
    const Target control = opts.measured == Target::Q1 ? Target::Q2 : Target::Q1;
    for (auto init : {InitState::ControlGround, InitState::ControlExcited}) {
      CVector psi = sim.rotation_unitary({opts.measured, Axis::X, 0.5 * kPi, 0.0}) * sim.basis_state({0, 0});
      if (init == InitState::ControlExcited) psi = sim.rotation_unitary({control, Axis::X, kPi, 0.0}) * psi;
      ctx.timed("time series", [&] {
        write_gate_time_series(ctx, sim, gate, psi, opts.open_system,
                               "timeseries_" + file_label(init_label(init, opts.measured)) + ".csv");
      });
    }
  }
}

void run_sweep(Context& ctx) {
  const auto& c = ctx.config();
  const auto results = ctx.timed("sweep", [&] {
    return sweep_gate_time(c.device, c.drive, c.omega_d_grid, c.amplitude_grid, gate_options(c), c.simulator);
  });
  CsvWriter csv(ctx.path("sweep.csv"),
                {"omega_d_GHz", "Omega_MHz", "phase_diff_rad", "t_zzpi_ns", "diverged", "reason"});
  CsvWriter map(ctx.path("phase_map.csv"),
                {"omega_d_GHz", "Omega_MHz", "time_ns", "phase_diff_rad", "single_qubit_rad", "leakage"});
  std::size_t diverged = 0;
  for (const auto& r : results) {
    csv.cell(units::to_ghz(r.omega_d)).cell(units::to_mhz(r.amplitude));
    csv.cell(r.phase.empty() ? std::string("nan") : format_number(r.phase.back()));
    csv.cell(r.t_zzpi ? format_number(units::to_ns(*r.t_zzpi)) : std::string("nan"));
    csv.cell(r.diverged).cell(r.reason.empty() ? std::string("ok") : r.reason);
    csv.end_row();
    for (std::size_t i = 0; i < r.times.size(); ++i) {
      map.cell(units::to_ghz(r.omega_d)).cell(units::to_mhz(r.amplitude)).cell(units::to_ns(r.times[i]));
      map.cell(r.phase[i]).cell(r.single_qubit[i]).cell(r.leakage[i]);
      map.end_row();
    }
    if (r.diverged) ++diverged;
  }
  if (diverged) ctx.warn("sweep: " + std::to_string(diverged) + " of " + std::to_string(results.size()) + " points diverged");
}

void run_pert_compare(Context& ctx) {
  const auto& c = ctx.config();
  const std::vector<double> freqs = c.omega_d_grid.empty() ? std::vector<double>{c.drive.omega_d} : c.omega_d_grid;
  const std::size_t n = freqs.size() * c.amplitude_grid.size();
  std::vector<PerturbativeComparison> rows(n);
  ctx.timed("pert-compare", [&] {
    parallel_for(n, c.workers, [&](std::size_t k) {
      const double wd = freqs[k / c.amplitude_grid.size()];
      const double amp = c.amplitude_grid[k % c.amplitude_grid.size()];
      try {
        rows[k] = compare_perturbative(c.device, wd, amp, c.drive.port, c.relative_tolerance);
      } catch (const NumericalError& e) {
        throw NumericalError("at omega_d = " + format_number(units::to_ghz(wd)) + " GHz, Omega = " +
                             format_number(units::to_mhz(amp)) + " MHz: " + e.what());
      }
    });
  });
  auto mhz_or_nan = [](const std::optional<double>& v) {
    return v ? format_number(units::to_mhz(*v)) : std::string("nan");
  };
  CsvWriter csv(ctx.path("pert_compare.csv"), {"omega_d_GHz", "Omega_MHz", "zeta_pert_MHz", "zeta_numeric_MHz",
                                               "rel_error", "non_computational_weight", "flag"});
  std::size_t flagged = 0;
  for (const auto& r : rows) {
    csv.cell(units::to_ghz(r.omega_d)).cell(units::to_mhz(r.amplitude));
    csv.cell(mhz_or_nan(r.zeta_pert)).cell(mhz_or_nan(r.zeta_numeric));
    csv.cell(r.relative_error ? format_number(*r.relative_error) : std::string("nan"));
    csv.cell(r.non_computational_weight).cell(r.flag);
    csv.end_row();
    if (r.flagged()) ++flagged;
  }
  if (flagged) ctx.warn("pert-compare: " + std::to_string(flagged) + " of " + std::to_string(n) + " points flagged");
}

void run_qpt(Context& ctx) {
  const auto& c = ctx.config();
  const Simulator sim(c.device, c.simulator);
  const bool refocused = c.gate.protocol == Protocol::Refocused;
  double total = 0.0;
  if (c.gate_time) {
    total = *c.gate_time;
  } else {
    GateTimeOptions g = gate_options(c);
    g.time_step = std::min(g.time_step, units::ns(5.0));
    const GateTimeResult found = ctx.timed("gate time", [&] { return find_gate_time(sim, c.drive, g); });
    if (!found.t_zzpi) {
      throw NumericalError("no conditional-phase crossing at omega_d = " + format_number(units::to_ghz(c.drive.omega_d)) +
                           " GHz, Omega = " + format_number(units::to_mhz(c.drive.amplitude)) +
                           " MHz: " + found.reason);
    }
    total = *found.t_zzpi;
  }
  ContinuationOptions cont;
  cont.port = c.drive.port;
  const double zeta = driven_dressed_energies(c.device, c.drive.omega_d, c.drive.amplitude, cont).zeta;
  const int sign = zeta > 0.0 ? -1 : 1;
  const PulseSequence gate = refocused ? refocused_gate(c.drive, total, c.ramsey.refocus_length)
                                       : direct_gate(c.drive, total);
  const Matrix4c target = ideal_zz_pi(sign, refocused);

  QptOptions q;
  q.tomography.shots = c.shots;
  q.tomography.seed = c.seed;
  q.workers = c.workers;
  q.open_system = c.device.coherence.has_value();
  const ProcessResult res = ctx.timed("qpt", [&] { return qpt_pipeline(sim, gate, target, q); });
  std::optional<ProcessResult> closed;
  if (res.open_system) {
    QptOptions qc = q;
    qc.open_system = false;
    closed = ctx.timed("qpt closed", [&] { return qpt_pipeline(sim, gate, target, qc); });
  }

  write_ptm(ctx.path("ptm_raw.csv"), res.r_raw);
  write_ptm(ctx.path("ptm_phys.csv"), res.r_phys);
  for (const auto& p : write_complex_matrix(ctx.stem("choi_raw"), res.choi_raw)) ctx.path(p.filename().string());
  for (const auto& p : write_complex_matrix(ctx.stem("choi"), res.choi)) ctx.path(p.filename().string());
  const CMatrix u = *sim.propagate_unitary(gate).propagator;
  for (const auto& p : write_complex_matrix(ctx.stem("propagator"), u)) ctx.path(p.filename().string());

  {
    std::ofstream out(ctx.path("qpt_report.txt"));
    out << "protocol " << to_string(c.gate.protocol) << "\n";
    out << "gate_time_ns " << format_number(units::to_ns(total)) << "\n";
    out << "target " << (refocused ? "XX " : "") << "exp(" << (sign > 0 ? "+" : "-") << "i pi/4 ZZ)\n";
    out << "open_system " << (res.open_system ? "true" : "false") << "\n";
    out << "shots " << (c.shots ? std::to_string(*c.shots) : std::string("inf")) << "\n";
    out << "F_raw " << format_number(res.f_raw) << "\n";
    out << "F_proj " << format_number(res.f_proj) << "\n";
    out << "F_pro_raw " << format_number(res.f_pro_raw) << "\n";
    out << "F_pro_proj " << format_number(res.f_pro_proj) << "\n";
    out << "eta " << format_number(res.eta) << "\n";
    out << "projection_iterations " << res.projection_iterations << "\n";
    out << "leakage_max " << format_number(res.max_leakage) << "\n";
    out << "leakage_mean " << format_number(res.mean_leakage) << "\n";
    if (closed) {
      out << "closed_F_raw " << format_number(closed->f_raw) << "\n";
      out << "closed_F_proj " << format_number(closed->f_proj) << "\n";
    }
  }
  for (const auto& w : res.warnings) ctx.warn("qpt: " + w);

  if (c.time_series) {
    const CVector psi = sim.rotation_unitary({Target::Both, Axis::Y, 0.5 * kPi, 0.0}) * sim.basis_state({0, 0});
    ctx.timed("time series", [&] { write_gate_time_series(ctx, sim, gate, psi, res.open_system, "timeseries.csv"); });
  }
}

// Files of an earlier run listed in its manifest are replaced; anything else
// in the directory is left alone and makes the run refuse.
void prepare_directory(const fs::path& dir) {
  fs::create_directories(dir);
  std::set<std::string> previous;
  const fs::path manifest = dir / "manifest.json";
  if (fs::exists(manifest)) {
    std::ifstream in(manifest);
    try {
      const json m = json::parse(in);
      for (const auto& f : m.at("files")) previous.insert(f.get<std::string>());
    } catch (const std::exception&) {
      throw ConfigError("output directory " + dir.string() + " holds an unreadable manifest.json");
    }
  }
  std::vector<std::string> foreign;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (!previous.count(name)) foreign.push_back(name);
  }
  if (!foreign.empty()) {
    std::sort(foreign.begin(), foreign.end());
    throw ConfigError("output directory " + dir.string() + " contains files from elsewhere, e.g. " + foreign.front());
  }
  for (const auto& name : previous) fs::remove(dir / name);
}

json grid_json(const std::vector<double>& grid, double scale) {
  json a = json::array();
  for (double x : grid) a.push_back(x / scale);
  return a;
}

}  // namespace

std::string resolved_config_json(const ExperimentConfig& c) {
  json j;
  if (c.experiment) j["experiment"] = to_string(*c.experiment);
  const auto& p = c.device;
  json d{{"omega1_GHz", units::to_ghz(p.omega1)}, {"omega2_GHz", units::to_ghz(p.omega2)},
         {"delta1_MHz", units::to_mhz(p.delta1)}, {"delta2_MHz", units::to_mhz(p.delta2)},
         {"J_MHz", units::to_mhz(p.coupling)},     {"levels1", p.levels1},
         {"levels2", p.levels2}};
  if (p.coherence) {
    d["T1_q1_us"] = units::to_us(p.coherence->t1_q1);
    d["T1_q2_us"] = units::to_us(p.coherence->t1_q2);
    d["T2_q1_us"] = units::to_us(p.coherence->t2_q1);
    d["T2_q2_us"] = units::to_us(p.coherence->t2_q2);
  }
  j["device"] = d;
  j["drive"] = {{"port", to_string(c.drive.port)},
                {"omega_d_GHz", units::to_ghz(c.drive.omega_d)},
                {"Omega_MHz", units::to_mhz(c.drive.amplitude)},
                {"rise_fall_ns", units::to_ns(c.drive.rise_fall)},
                {"shape", to_string(c.drive.shape)},
                {"phase_rad", c.drive.phase}};
  json pr{{"measured", c.ramsey.measured == Target::Q1 ? "Q1" : "Q2"},
          {"rotation_length_ns", units::to_ns(c.ramsey.refocus_length)},
          {"rotation_mode", c.simulator.rotation_mode == RotationMode::Ideal ? "ideal" : "pulsed"},
          {"open_system", c.ramsey.open_system},
          {"leakage_threshold", c.gate.leakage_threshold},
          {"time_step_ns", units::to_ns(c.gate.time_step)},
          {"horizon_us", units::to_us(c.gate.horizon)},
          {"sample_until_ns", units::to_ns(c.gate.sample_until)},
          {"fit_residual_threshold", c.ramsey.fit_residual_threshold},
          {"gate_protocol", to_string(c.gate.protocol)},
          {"relative_tolerance", c.relative_tolerance}};
  if (c.gate_time) pr["gate_time_ns"] = units::to_ns(*c.gate_time);
  j["protocol"] = pr;
  j["spectroscopy"] = {{"port", to_string(c.spectroscopy_port)},
                       {"pulse_length_ns", units::to_ns(c.spectroscopy_pulse)},
                       {"line_threshold", c.line_threshold}};
  json g = json::object();
  if (!c.time_grid.empty()) g["time_ns"] = grid_json(c.time_grid, 1e-9);
  if (!c.omega_d_grid.empty()) g["omega_d_GHz"] = grid_json(c.omega_d_grid, units::ghz(1.0));
  if (!c.amplitude_grid.empty()) g["Omega_MHz"] = grid_json(c.amplitude_grid, units::mhz(1.0));
  if (!c.frequency_grid.empty()) g["frequency_GHz"] = grid_json(c.frequency_grid, units::ghz(1.0));
  j["grids"] = g;
  const auto& s = c.simulator;
  json n{{"tolerance", s.tolerance},
         {"max_steps", s.max_steps},
         {"initial_step_ns", units::to_ns(s.initial_step)},
         {"open_tolerance", s.open_tolerance},
         {"open_chunk_ns", units::to_ns(s.open_chunk)},
         {"open_min_chunk_ns", units::to_ns(s.open_min_chunk)},
         {"open_quadrature_step_ns", units::to_ns(s.open_quadrature_step)},
         {"max_dimension", s.max_dimension},
         {"seed", c.seed},
         {"workers", c.workers}};
  if (c.shots) {
    n["shots"] = *c.shots;
  } else {
    n["shots"] = "inf";
  }
  j["numerics"] = n;
  j["output"] = {{"directory", c.output_directory.string()},
                 {"time_series", c.time_series},
                 {"sample_interval_ns", units::to_ns(c.sample_interval)}};
  return j.dump(2);
}

RunManifest run(const ExperimentConfig& config) {
  if (auto problems = validate(config); !problems.empty()) throw ConfigError(std::move(problems));
  RunManifest manifest;
  manifest.experiment = to_string(*config.experiment);
  manifest.config_snapshot = resolved_config_json(config);
  manifest.directory = config.output_directory;
  prepare_directory(manifest.directory);

  Context ctx(config, manifest);
  const auto start = std::chrono::steady_clock::now();
  switch (*config.experiment) {
    case Experiment::Spectroscopy: run_spectroscopy(ctx); break;
    case Experiment::RamseyDirect: run_ramsey(ctx, false); break;
    case Experiment::RamseyRefocused: run_ramsey(ctx, true); break;
    case Experiment::Sweep: run_sweep(ctx); break;
    case Experiment::PertCompare: run_pert_compare(ctx); break;
    case Experiment::Qpt: run_qpt(ctx); break;
  }
  const std::chrono::duration<double> total = std::chrono::steady_clock::now() - start;
  manifest.timings.emplace_back("total", total.count());

  manifest.files.assign(ctx.written().begin(), ctx.written().end());
  manifest.files.push_back("manifest.json");
  std::sort(manifest.files.begin(), manifest.files.end());

  json m;
  m["experiment"] = manifest.experiment;
  m["version"] = manifest.version;
  m["config"] = json::parse(manifest.config_snapshot);
  json t = json::array();
  for (const auto& [stage, seconds] : manifest.timings) t.push_back({{"stage", stage}, {"seconds", seconds}});
  m["timings"] = t;
  m["files"] = manifest.files;
  m["warnings"] = manifest.warnings;
  std::ofstream out(manifest.directory / "manifest.json");
  out << m.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write manifest.json");
  return manifest;
}

}  // namespace mapgate
