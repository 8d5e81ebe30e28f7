#pragma once

#include <optional>
#include <vector>

namespace mapgate {

/// y ~ offset + amplitude * cos(frequency * x + phase), amplitude >= 0.
struct CosineFit {
  double offset = 0.0;
  double amplitude = 0.0;
  double frequency = 0.0;  ///< rad per unit of x
  double phase = 0.0;      ///< wrapped to (-pi, pi]
  double residual_rms = 0.0;
  bool converged = false;
};

/// Least-squares cosine fit with all four parameters free. Seeded from a
/// periodogram scan and refined with Levenberg-Marquardt.
CosineFit fit_cosine(const std::vector<double>& x, const std::vector<double>& y);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

double wrap_phase(double phi);

/// Removes 2 pi jumps between consecutive samples.
std::vector<double> unwrap(const std::vector<double>& phases);

/// First x at which |y| reaches `level`, linearly interpolated between the
/// bracketing samples; nullopt when never reached.
std::optional<double> first_crossing(const std::vector<double>& x, const std::vector<double>& y, double level);

}  // namespace mapgate
