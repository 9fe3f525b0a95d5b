#pragma once

#include <array>
#include <cstdint>
#include <random>

namespace gatepilot {

using Vec3 = std::array<double, 3>;
using Vec4 = std::array<double, 4>;

/// Every stochastic component draws from an explicitly owned stream of this type.
using Rng = std::mt19937_64;

/// Closed interval [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const { return v >= lo && v <= hi; }
    double width() const { return hi - lo; }
};

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace gatepilot
