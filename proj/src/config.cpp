#include "mapgate/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mapgate/errors.hpp"

namespace mapgate {
namespace {

using nlohmann::json;

// Typed accessors over one JSON object. Records every key read so that the
// remaining ones can be reported as unknown.
class Section {
 public:
  Section(const json* node, std::string path, std::vector<std::string>& errors)
      : node_(node), path_(std::move(path)), errors_(errors) {
    if (node_ && !node_->is_object()) {
      errors_.push_back(path_ + ": expected an object");
      node_ = nullptr;
    }
  }

  bool present() const { return node_ != nullptr; }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    if (!node_) return nullptr;
    const auto it = node_->find(key);
    if (it == node_->end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::optional<double> number(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) {
      error(key, "expected a number");
      return std::nullopt;
    }
    const double x = v->get<double>();
    if (!std::isfinite(x)) {
      error(key, "must be finite");
      return std::nullopt;
    }
    return x;
  }

  std::optional<std::int64_t> integer(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) {
      error(key, "expected an integer");
      return std::nullopt;
    }
    return v->get<std::int64_t>();
  }

  std::optional<std::string> text(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) {
      error(key, "expected a string");
      return std::nullopt;
    }
    return v->get<std::string>();
  }

  std::optional<bool> flag(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) {
      error(key, "expected true or false");
      return std::nullopt;
    }
    return v->get<bool>();
  }

  Section child(const std::string& key) { return Section(raw(key), path_ + "." + key, errors_); }

  void error(const std::string& key, const std::string& what) { errors_.push_back(path_ + "." + key + ": " + what); }

  void finish() {
    if (!node_) return;
    for (const auto& [key, value] : node_->items()) {
      if (!seen_.count(key)) errors_.push_back(path_ + "." + key + ": unknown key");
    }
  }

  const std::string& path() const { return path_; }
  std::vector<std::string>& errors() { return errors_; }

 private:
  const json* node_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

// A grid is a list of numbers or {start, stop, step} / {start, stop, count}.
std::optional<std::vector<double>> read_grid(Section& s, const std::string& key, double scale) {
  const json* v = s.raw(key);
  if (!v) return std::nullopt;
  std::vector<double> out;
  if (v->is_array()) {
    for (const auto& x : *v) {
      if (!x.is_number()) {
        s.error(key, "grid entries must be numbers");
        return std::nullopt;
      }
      out.push_back(x.get<double>() * scale);
    }
    if (out.empty()) s.error(key, "grid must not be empty");
    return out;
  }
  Section range(v, s.path() + "." + key, s.errors());
  const auto start = range.number("start");
  const auto stop = range.number("stop");
  const auto step = range.number("step");
  const auto count = range.integer("count");
  range.finish();
  if (!start || !stop || (step.has_value() == count.has_value())) {
    s.error(key, "range needs start, stop and exactly one of step or count");
    return std::nullopt;
  }
  if (step) {
    if (!(*step > 0.0) || *stop < *start) {
      s.error(key, "range needs step > 0 and stop >= start");
      return std::nullopt;
    }
    const auto n = static_cast<std::size_t>(std::floor((*stop - *start) / *step + 1e-9)) + 1;
    for (std::size_t i = 0; i < n; ++i) out.push_back((*start + *step * static_cast<double>(i)) * scale);
  } else {
    if (*count < 1 || (*count == 1 && *stop != *start)) {
      s.error(key, "range count must be >= 1 (and 1 only when start == stop)");
      return std::nullopt;
    }
    for (std::int64_t i = 0; i < *count; ++i) {
      const double t = *count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(*count - 1);
      out.push_back((*start + t * (*stop - *start)) * scale);
    }
  }
  return out;
}

template <class T, class Parse>
void assign_parsed(Section& s, const std::string& key, T& target, Parse parse) {
  if (auto v = s.text(key)) {
    try {
      target = parse(*v);
    } catch (const std::exception& e) {
      s.error(key, e.what());
    }
  }
}

}  // namespace

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::Spectroscopy: return "spectroscopy";
    case Experiment::RamseyDirect: return "ramsey-direct";
    case Experiment::RamseyRefocused: return "ramsey-refocused";
    case Experiment::Sweep: return "sweep";
    case Experiment::PertCompare: return "pert-compare";
    case Experiment::Qpt: return "qpt";
  }
  return "unknown";
}

std::optional<Experiment> parse_experiment(const std::string& name) {
  for (auto e : {Experiment::Spectroscopy, Experiment::RamseyDirect, Experiment::RamseyRefocused,
                 Experiment::Sweep, Experiment::PertCompare, Experiment::Qpt}) {
    if (to_string(e) == name) return e;
  }
  return std::nullopt;
}

bool is_map_experiment(Experiment e) { return e != Experiment::Spectroscopy; }

ExperimentConfig::ExperimentConfig() {
  drive.port = DrivePort::Q2;
  drive.omega_d = units::ghz(5.43);
  drive.amplitude = units::mhz(10.0);
  drive.rise_fall = units::ns(80.0);
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  std::vector<std::string> errors;
  ExperimentConfig c;
  Section top(&root, "config", errors);

  if (auto name = top.text("experiment")) {
    c.experiment = parse_experiment(*name);
    if (!c.experiment) top.error("experiment", "unknown experiment '" + *name + "'");
  }

  {
    Section d = top.child("device");
    auto& p = c.device;
    if (auto v = d.number("omega1_GHz")) p.omega1 = units::ghz(*v);
    if (auto v = d.number("omega2_GHz")) p.omega2 = units::ghz(*v);
    if (auto v = d.number("delta1_MHz")) p.delta1 = units::mhz(*v);
    if (auto v = d.number("delta2_MHz")) p.delta2 = units::mhz(*v);
    if (auto v = d.number("J_MHz")) p.coupling = units::mhz(*v);
    if (auto v = d.integer("levels1")) p.levels1 = static_cast<int>(*v);
    if (auto v = d.integer("levels2")) p.levels2 = static_cast<int>(*v);
    const auto t1a = d.number("T1_q1_us");
    const auto t1b = d.number("T1_q2_us");
    const auto t2a = d.number("T2_q1_us");
    const auto t2b = d.number("T2_q2_us");
    const int given = t1a.has_value() + t1b.has_value() + t2a.has_value() + t2b.has_value();
    if (given == 4) {
      p.coherence = Coherence{units::us(*t1a), units::us(*t1b), units::us(*t2a), units::us(*t2b)};
    } else if (given > 0) {
      errors.push_back("config.device: give all four of T1_q1_us, T1_q2_us, T2_q1_us, T2_q2_us or none");
    } else if (d.present()) {
      p.coherence.reset();
    }
    d.finish();
  }

  {
    Section d = top.child("drive");
    assign_parsed(d, "port", c.drive.port, parse_drive_port);
    if (auto v = d.number("omega_d_GHz")) c.drive.omega_d = units::ghz(*v);
    if (auto v = d.number("Omega_MHz")) c.drive.amplitude = units::mhz(*v);
    if (auto v = d.number("rise_fall_ns")) c.drive.rise_fall = units::ns(*v);
    assign_parsed(d, "shape", c.drive.shape, parse_envelope);
    if (auto v = d.number("phase_rad")) c.drive.phase = *v;
    d.finish();
  }

  {
    Section s = top.child("protocol");
    if (auto v = s.text("measured")) {
      if (*v == "Q1") {
        c.ramsey.measured = Target::Q1;
      } else if (*v == "Q2") {
        c.ramsey.measured = Target::Q2;
      } else {
        s.error("measured", "expected Q1 or Q2");
      }
    }
    if (auto v = s.number("rotation_length_ns")) c.ramsey.refocus_length = units::ns(*v);
    if (auto v = s.text("rotation_mode")) {
      if (*v == "ideal") {
        c.simulator.rotation_mode = RotationMode::Ideal;
      } else if (*v == "pulsed") {
        c.simulator.rotation_mode = RotationMode::Pulsed;
      } else {
        s.error("rotation_mode", "expected ideal or pulsed");
      }
    }
    if (auto v = s.flag("open_system")) c.ramsey.open_system = *v;
    if (auto v = s.number("leakage_threshold")) c.gate.leakage_threshold = *v;
    if (auto v = s.number("time_step_ns")) c.gate.time_step = units::ns(*v);
    if (auto v = s.number("horizon_us")) c.gate.horizon = units::us(*v);
    if (auto v = s.number("sample_until_ns")) c.gate.sample_until = units::ns(*v);
    if (auto v = s.number("fit_residual_threshold")) c.ramsey.fit_residual_threshold = *v;
    if (auto v = s.text("gate_protocol")) {
      if (*v == "direct") {
        c.gate.protocol = Protocol::Direct;
      } else if (*v == "refocused") {
        c.gate.protocol = Protocol::Refocused;
      } else {
        s.error("gate_protocol", "expected direct or refocused");
      }
    }
    if (auto v = s.number("gate_time_ns")) c.gate_time = units::ns(*v);
    if (auto v = s.number("relative_tolerance")) c.relative_tolerance = *v;
    s.finish();
  }

  {
    Section s = top.child("spectroscopy");
    assign_parsed(s, "port", c.spectroscopy_port, parse_drive_port);
    if (auto v = s.number("pulse_length_ns")) c.spectroscopy_pulse = units::ns(*v);
    if (auto v = s.number("line_threshold")) c.line_threshold = *v;
    s.finish();
  }

  {
    Section g = top.child("grids");
    if (auto v = read_grid(g, "time_ns", 1e-9)) c.time_grid = *v;
    if (auto v = read_grid(g, "omega_d_GHz", units::ghz(1.0))) c.omega_d_grid = *v;
    if (auto v = read_grid(g, "Omega_MHz", units::mhz(1.0))) c.amplitude_grid = *v;
    if (auto v = read_grid(g, "frequency_GHz", units::ghz(1.0))) c.frequency_grid = *v;
    g.finish();
  }

  {
    Section n = top.child("numerics");
    auto& o = c.simulator;
    if (auto v = n.number("tolerance")) o.tolerance = *v;
    if (auto v = n.integer("max_steps")) {
      if (*v < 1) n.error("max_steps", "must be >= 1");
      else o.max_steps = static_cast<std::size_t>(*v);
    }
    if (auto v = n.number("initial_step_ns")) o.initial_step = units::ns(*v);
    if (auto v = n.number("open_tolerance")) o.open_tolerance = *v;
    if (auto v = n.number("open_chunk_ns")) o.open_chunk = units::ns(*v);
    if (auto v = n.number("open_min_chunk_ns")) o.open_min_chunk = units::ns(*v);
    if (auto v = n.number("open_quadrature_step_ns")) o.open_quadrature_step = units::ns(*v);
    if (auto v = n.integer("max_dimension")) {
      if (*v < 4) n.error("max_dimension", "must be >= 4");
      else o.max_dimension = static_cast<std::size_t>(*v);
    }
    if (const json* v = n.raw("shots")) {
      if (v->is_string() && v->get<std::string>() == "inf") {
        c.shots.reset();
      } else if (v->is_number_integer() && v->get<std::int64_t>() > 0) {
        c.shots = static_cast<std::uint64_t>(v->get<std::int64_t>());
      } else {
        n.error("shots", "expected a positive integer or \"inf\"");
      }
    }
    if (const json* v = n.raw("seed")) {
      if (v->is_number_unsigned()) {
        c.seed = v->get<std::uint64_t>();
      } else {
        n.error("seed", "expected a non-negative integer");
      }
    }
    if (auto v = n.integer("workers")) {
      if (*v < 1) n.error("workers", "must be >= 1");
      else c.workers = static_cast<std::size_t>(*v);
    }
    n.finish();
  }

  {
    Section o = top.child("output");
    if (auto v = o.text("directory")) c.output_directory = *v;
    if (auto v = o.flag("time_series")) c.time_series = *v;
    if (auto v = o.number("sample_interval_ns")) c.sample_interval = units::ns(*v);
    o.finish();
  }

  top.finish();
  if (!errors.empty()) throw ConfigError(std::move(errors));
  c.snapshot = root.dump(2);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> out;
  if (!c.experiment) {
    out.push_back("no experiment selected");
    return out;
  }
  const Experiment e = *c.experiment;
  for (auto& v : c.device.violations(is_map_experiment(e))) out.push_back("device: " + v);
  const std::size_t dim = static_cast<std::size_t>(std::max(c.device.levels1, 0)) *
                          static_cast<std::size_t>(std::max(c.device.levels2, 0));
  if (dim > c.simulator.max_dimension) {
    out.push_back("device: dimension " + std::to_string(dim) + " exceeds max_dimension " +
                  std::to_string(c.simulator.max_dimension));
  }
  auto need = [&](const std::vector<double>& grid, const char* name) {
    if (grid.empty()) out.push_back(std::string("grids.") + name + " is required for " + to_string(e));
  };
  auto positive = [&](const std::vector<double>& grid, const char* name) {
    for (double x : grid) {
      if (!(x > 0.0)) {
        out.push_back(std::string("grids.") + name + " entries must be positive");
        return;
      }
    }
  };
  if (!(c.drive.amplitude >= 0.0)) out.push_back("drive.Omega_MHz must be >= 0");
  if (!(c.drive.omega_d > 0.0)) out.push_back("drive.omega_d_GHz must be positive");
  if (!(c.drive.rise_fall >= 0.0)) out.push_back("drive.rise_fall_ns must be >= 0");
  if (!(c.ramsey.refocus_length >= 0.0)) out.push_back("protocol.rotation_length_ns must be >= 0");
  if (!(c.gate.time_step > 0.0)) out.push_back("protocol.time_step_ns must be positive");
  if (!(c.gate.horizon > 0.0)) out.push_back("protocol.horizon_us must be positive");
  if (!(c.gate.leakage_threshold > 0.0)) out.push_back("protocol.leakage_threshold must be positive");
  if (!(c.simulator.tolerance > 0.0)) out.push_back("numerics.tolerance must be positive");
  if (!(c.simulator.open_tolerance > 0.0)) out.push_back("numerics.open_tolerance must be positive");
  if (!(c.simulator.initial_step > 0.0)) out.push_back("numerics.initial_step_ns must be positive");
  if (!(c.simulator.open_chunk > 0.0) || !(c.simulator.open_min_chunk > 0.0) ||
      !(c.simulator.open_quadrature_step > 0.0)) {
    out.push_back("numerics open-system chunk and quadrature lengths must be positive");
  }
  if (c.time_series && !(c.sample_interval > 0.0)) out.push_back("output.sample_interval_ns must be positive");
  const bool open = (e == Experiment::Qpt) || c.ramsey.open_system;
  if (c.ramsey.open_system && !c.device.coherence) {
    out.push_back("protocol.open_system needs T1/T2 in the device block");
  }
  (void)open;

  switch (e) {
    case Experiment::Spectroscopy:
      need(c.frequency_grid, "frequency_GHz");
      need(c.amplitude_grid, "Omega_MHz");
      positive(c.frequency_grid, "frequency_GHz");
      if (!(c.spectroscopy_pulse > 0.0)) out.push_back("spectroscopy.pulse_length_ns must be positive");
      break;
    case Experiment::RamseyDirect:
    case Experiment::RamseyRefocused:
      need(c.time_grid, "time_ns");
      for (double t : c.time_grid) {
        if (t < 0.0 || (e == Experiment::RamseyRefocused && t < c.ramsey.refocus_length)) {
          out.push_back(e == Experiment::RamseyRefocused
                            ? "grids.time_ns entries must be at least the refocusing gate length"
                            : "grids.time_ns entries must be >= 0");
          break;
        }
      }
      break;
    case Experiment::Sweep:
      need(c.omega_d_grid, "omega_d_GHz");
      need(c.amplitude_grid, "Omega_MHz");
      positive(c.omega_d_grid, "omega_d_GHz");
      break;
    case Experiment::PertCompare:
      need(c.amplitude_grid, "Omega_MHz");
      positive(c.omega_d_grid, "omega_d_GHz");
      if (!(c.relative_tolerance > 0.0)) out.push_back("protocol.relative_tolerance must be positive");
      break;
    case Experiment::Qpt:
      if (c.gate_time && *c.gate_time < c.ramsey.refocus_length) {
        out.push_back("protocol.gate_time_ns must be at least the refocusing gate length");
      }
      break;
  }
  for (double a : c.amplitude_grid) {
    if (a < 0.0) {
      out.push_back("grids.Omega_MHz entries must be >= 0");
      break;
    }
  }
  return out;
}

}  // namespace mapgate
