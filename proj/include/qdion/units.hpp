#pragma once

#include <numbers>

// Frequencies and rates are stored as ordinary frequencies in MHz. Times are
// in microseconds unless a name says otherwise, so 2*pi*f[MHz]*t[us] is a
// phase in radians.
namespace qdion::units {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Angular rate in 1/us for an ordinary frequency in MHz.
constexpr double angular(double mhz) { return two_pi * mhz; }

constexpr double ns_to_us(double ns) { return ns * 1e-3; }
constexpr double per_s_to_per_us(double rate) { return rate * 1e-6; }

}  // namespace qdion::units
