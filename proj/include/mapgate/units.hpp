#pragma once

#include <numbers>

// All internal quantities use hbar = 1, angular frequencies in rad/s and
// times in seconds. Conversions happen only at I/O boundaries.
namespace mapgate::units {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double ghz(double f) { return kTwoPi * f * 1e9; }
constexpr double mhz(double f) { return kTwoPi * f * 1e6; }
constexpr double khz(double f) { return kTwoPi * f * 1e3; }

constexpr double to_ghz(double w) { return w / kTwoPi * 1e-9; }
constexpr double to_mhz(double w) { return w / kTwoPi * 1e-6; }

constexpr double ns(double t) { return t * 1e-9; }
constexpr double us(double t) { return t * 1e-6; }

constexpr double to_ns(double t) { return t * 1e9; }
constexpr double to_us(double t) { return t * 1e6; }

}  // namespace mapgate::units
