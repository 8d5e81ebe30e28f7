#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mapgate {

/// Invalid user input: device parameters, grids, configuration keys.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// A numerical contract could not be met (tolerance, convergence, rank).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// The perturbative rate expression is evaluated too close to a pole.
class ResonanceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Dressed-state labeling broke down: the drive sits on an avoided crossing
/// with a non-computational level.
class LeakageRegionError : public NumericalError {
 public:
  LeakageRegionError(const std::string& what, double omega_d, double amplitude)
      : NumericalError(what), omega_d_(omega_d), amplitude_(amplitude) {}
  double omega_d() const { return omega_d_; }
  double amplitude() const { return amplitude_; }

 private:
  double omega_d_;
  double amplitude_;
};

}  // namespace mapgate
