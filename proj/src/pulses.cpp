#include "mapgate/pulses.hpp"

#include <cmath>
#include <numbers>

#include "mapgate/errors.hpp"

namespace mapgate {

std::string to_string(DrivePort port) {
  switch (port) {
    case DrivePort::Q1: return "Q1";
    case DrivePort::Q2: return "Q2";
    case DrivePort::Both: return "both";
  }
  return "?";
}

std::string to_string(EnvelopeShape shape) {
  switch (shape) {
    case EnvelopeShape::FlatTop: return "flat-top";
    case EnvelopeShape::Square: return "square";
    case EnvelopeShape::Gaussian: return "gaussian";
  }
  return "?";
}

DrivePort parse_drive_port(const std::string& text) {
  if (text == "Q1") return DrivePort::Q1;
  if (text == "Q2") return DrivePort::Q2;
  if (text == "both") return DrivePort::Both;
  throw ConfigError("unknown drive port '" + text + "' (expected Q1, Q2 or both)");
}

EnvelopeShape parse_envelope(const std::string& text) {
  if (text == "flat-top") return EnvelopeShape::FlatTop;
  if (text == "square") return EnvelopeShape::Square;
  if (text == "gaussian") return EnvelopeShape::Gaussian;
  throw ConfigError("unknown envelope '" + text + "' (expected flat-top, square or gaussian)");
}

double DrivePulse::envelope(double t) const {
  if (t < 0.0 || t > duration) return 0.0;
  switch (shape) {
    case EnvelopeShape::Square:
      return 1.0;
    case EnvelopeShape::FlatTop: {
      if (rise_fall <= 0.0) return 1.0;
      const double edge = std::min(t, duration - t);
      if (edge >= rise_fall) return 1.0;
      return 0.5 * (1.0 - std::cos(std::numbers::pi * edge / rise_fall));
    }
    case EnvelopeShape::Gaussian: {
      // Peak at the centre, sigma = duration / 4, offset so the edges are 0.
      const double sigma = duration / 4.0;
      const double x = (t - 0.5 * duration) / sigma;
      const double edge = std::exp(-2.0);
      return (std::exp(-0.5 * x * x) - edge) / (1.0 - edge);
    }
  }
  return 0.0;
}

std::pair<double, double> DrivePulse::flat_interval() const {
  switch (shape) {
    case EnvelopeShape::Square: return {0.0, duration};
    case EnvelopeShape::FlatTop: return {rise_fall, duration - rise_fall};
    case EnvelopeShape::Gaussian: return {0.0, 0.0};
  }
  return {0.0, 0.0};
}

void DrivePulse::validate() const {
  std::vector<std::string> problems;
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) problems.push_back("drive amplitude must be >= 0");
  if (!(duration >= 0.0) || !std::isfinite(duration)) problems.push_back("drive duration must be >= 0");
  if (!std::isfinite(omega_d)) problems.push_back("drive frequency must be finite");
  if (shape == EnvelopeShape::FlatTop) {
    if (rise_fall < 0.0) problems.push_back("rise/fall time must be >= 0");
    if (duration < 2.0 * rise_fall) problems.push_back("flat-top duration must be at least twice the rise/fall time");
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

double segment_duration(const Segment& s) {
  struct {
    double operator()(const DrivePulse& p) const { return p.duration; }
    double operator()(const Rotation& r) const { return r.gate_length; }
    double operator()(const Idle& i) const { return i.duration; }
    double operator()(const QubitGate&) const { return 0.0; }
  } visitor;
  return std::visit(visitor, s);
}

double PulseSequence::total_duration() const {
  double total = 0.0;
  for (const auto& s : segments_) total += segment_duration(s);
  return total;
}

}  // namespace mapgate
