#pragma once

#include <string_view>
#include <stdexcept>
#include <string>

namespace slcn {

/// Double-well potential F(phi) = (phi^2 - 1)^2 / 4 with quadratic growth
/// outside [-2, 2]. The extension matches value, first and second derivative
/// at +-2, so F is C^2 and f = F' is globally Lipschitz.
namespace double_well {

inline constexpr double truncation = 2.0;

/// Bound on |f'|: max of 3 phi^2 - 1 on [-2, 2], and the constant slope outside.
inline constexpr double lipschitz = 11.0;
/// Bound on |f''|: max of |6 phi| on [-2, 2]; zero outside.
inline constexpr double lipschitz2 = 12.0;

inline double F(double phi)
{
    if (phi > truncation) {
        const double s = phi - truncation;
        return 5.5 * s * s + 6.0 * s + 2.25;
    }
    if (phi < -truncation) {
        const double s = phi + truncation;
        return 5.5 * s * s - 6.0 * s + 2.25;
    }
    const double q = phi * phi - 1.0;
    return 0.25 * q * q;
}

inline double f(double phi)
{
    if (phi > truncation) {
        return 11.0 * (phi - truncation) + 6.0;
    }
    if (phi < -truncation) {
        return 11.0 * (phi + truncation) - 6.0;
    }
    return phi * phi * phi - phi;
}

inline double fprime(double phi)
{
    if (phi > truncation || phi < -truncation) {
        return 11.0;
    }
    return 3.0 * phi * phi - 1.0;
}

inline double fsecond(double phi)
{
    if (phi > truncation || phi < -truncation) {
        return 0.0;
    }
    return 6.0 * phi;
}

} // namespace double_well

struct LipschitzBounds {
    double L;
    double L2;
};

inline constexpr LipschitzBounds lipschitz_bounds() { return {double_well::lipschitz, double_well::lipschitz2}; }

/// Which nonlinearity the stepper evaluates.
///
/// `truncated` is the default. `quartic` is the raw double well; it is not
/// globally Lipschitz, so the stability thresholds do not apply to it.
/// `none` drops the nonlinear term entirely (f = F = 0) and turns the scheme
/// into a linear one, which is what the linearity and order self-tests use.
enum class Nonlinearity { truncated, quartic, none };

inline double potential_F(Nonlinearity kind, double phi)
{
    switch (kind) {
    case Nonlinearity::truncated:
        return double_well::F(phi);
    case Nonlinearity::quartic: {
        const double q = phi * phi - 1.0;
        return 0.25 * q * q;
    }
    case Nonlinearity::none:
        return 0.0;
    }
    return 0.0;
}

inline double potential_f(Nonlinearity kind, double phi)
{
    switch (kind) {
    case Nonlinearity::truncated:
        return double_well::f(phi);
    case Nonlinearity::quartic:
        return phi * phi * phi - phi;
    case Nonlinearity::none:
        return 0.0;
    }
    return 0.0;
}

inline std::string_view to_string(Nonlinearity kind)
{
    switch (kind) {
    case Nonlinearity::truncated:
        return "truncated";
    case Nonlinearity::quartic:
        return "quartic";
    case Nonlinearity::none:
        return "none";
    }
    return "?";
}

inline Nonlinearity nonlinearity_from_string(std::string_view name)
{
    if (name == "truncated") {
        return Nonlinearity::truncated;
    }
    if (name == "quartic") {
        return Nonlinearity::quartic;
    }
    if (name == "none") {
        return Nonlinearity::none;
    }
    throw std::invalid_argument("unknown nonlinearity: " + std::string(name));
}

} // namespace slcn
