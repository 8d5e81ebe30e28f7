#pragma once

#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mapgate/units.hpp"

namespace mapgate {

/// Which transmon a microwave drive couples to. `Both` is a bus-like drive
/// acting on a1 + a2 with equal strength.
enum class DrivePort { Q1, Q2, Both };

enum class EnvelopeShape { FlatTop, Square, Gaussian };

std::string to_string(DrivePort port);
std::string to_string(EnvelopeShape shape);
DrivePort parse_drive_port(const std::string& text);
EnvelopeShape parse_envelope(const std::string& text);

/// Microwave tone Omega(t) cos(omega_d t + phase) on `port`. `amplitude` is
/// the resonant 0-1 Rabi rate (rad/s) it produces on the driven transmon;
/// in the frame of the drive the coupling term is
/// amplitude * envelope / 2 * (a^dag e^{-i phase} + a e^{i phase}).
struct DrivePulse {
  DrivePort port = DrivePort::Q2;
  double omega_d = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;
  double duration = 0.0;
  double rise_fall = units::ns(10.0);
  EnvelopeShape shape = EnvelopeShape::FlatTop;

  /// Envelope value in [0, 1] at time `t` after the pulse starts.
  double envelope(double t) const;
  /// Time interval [begin, end) with envelope == 1, empty for Gaussian.
  std::pair<double, double> flat_interval() const;
  void validate() const;
};

enum class Axis { X, Y };
enum class Target { Q1, Q2, Both };

/// Single-qubit rotation by `angle` about X or Y, acting on the lowest two
/// levels of each targeted transmon. Occupies `gate_length` of wall time.
struct Rotation {
  Target target = Target::Q2;
  Axis axis = Axis::X;
  double angle = 0.0;
  double gate_length = 0.0;
};

struct Idle {
  double duration = 0.0;
};

/// Instantaneous unitary on the computational subspace |00>,|01>,|10>,|11>;
/// identity elsewhere.
struct QubitGate {
  Eigen::Matrix4cd unitary = Eigen::Matrix4cd::Identity();
  std::string label;
};

using Segment = std::variant<DrivePulse, Rotation, Idle, QubitGate>;

double segment_duration(const Segment& s);

class PulseSequence {
 public:
  PulseSequence() = default;
  explicit PulseSequence(std::vector<Segment> segments) : segments_(std::move(segments)) {}

  PulseSequence& add(Segment s) {
    segments_.push_back(std::move(s));
    return *this;
  }
  PulseSequence& append(const PulseSequence& other) {
    segments_.insert(segments_.end(), other.segments_.begin(), other.segments_.end());
    return *this;
  }
  const std::vector<Segment>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }
  double total_duration() const;

 private:
  std::vector<Segment> segments_;
};

}  // namespace mapgate
