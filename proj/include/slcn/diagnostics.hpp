#pragma once

#include "slcn/field2d.hpp"
#include "slcn/stepper.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace slcn {

struct ErrorTriple {
    double h_minus1 = 0.0;
    double l2 = 0.0;
    double h1 = 0.0;
};

/// Thrown when two solutions that should conserve the same mass do not.
class MassMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// H^-1, L2 and full H1 norms of phi - phi_ref.
inline ErrorTriple error_norms(const Field2D& phi, const Field2D& phi_ref)
{
    Field2D e = phi - phi_ref;
    const double drift = mean(e);
    if (std::abs(drift) > 1e-8) {
        throw MassMismatch("error_norms: solutions differ in mean by " + std::to_string(drift));
    }
    // Remove the (sub-tolerance) drift so the H^-1 norm is defined.
    e = remove_mean(std::move(e));
    const double l2 = l2_norm(e);
    const double semi = h1_seminorm(e);
    return {h_minus1_norm(e), l2, std::sqrt(l2 * l2 + semi * semi)};
}

/// Observed orders log(e_{k-1}/e_k) / log(tau_{k-1}/tau_k), one per
/// consecutive pair.
inline std::vector<double> convergence_orders(std::span<const double> errors, std::span<const double> taus)
{
    if (errors.size() != taus.size() || errors.size() < 2) {
        throw std::invalid_argument("convergence_orders: need two or more (error, tau) pairs");
    }
    for (std::size_t k = 0; k < errors.size(); ++k) {
        if (!(errors[k] > 0.0)) {
            throw std::domain_error("convergence_orders: errors must be positive");
        }
        if (k > 0 && !(taus[k] < taus[k - 1])) {
            throw std::invalid_argument("convergence_orders: taus must be strictly decreasing");
        }
    }
    std::vector<double> orders;
    orders.reserve(errors.size() - 1);
    for (std::size_t k = 1; k < errors.size(); ++k) {
        orders.push_back(std::log(errors[k - 1] / errors[k]) / std::log(taus[k - 1] / taus[k]));
    }
    return orders;
}

struct EnergyRecord {
    double t = 0.0;
    double E = 0.0;
    double E_CN = 0.0;
    double mass = 0.0;
    double dt_norm = 0.0;
};

using EnergyTrace = std::vector<EnergyRecord>;

/// Appends the record for the current state (t = n tau).
inline void record(const StepperState& state, const SchemeParams& params, EnergyTrace& trace)
{
    const double inc = l2_norm(state.phi_n - state.phi_nm1);
    const double e = energy(state.phi_n, params);
    trace.push_back({static_cast<double>(state.n) * params.tau, e,
                     e + discrete_energy_prefactor(params) * inc * inc, mean(state.phi_n), inc});
}

/// Same as above for an Integrator, without leaving eigen-coordinates.
inline void record(const Integrator& it, const SchemeParams& params, EnergyTrace& trace)
{
    const double inc = it.increment_norm();
    const double e = it.energy();
    trace.push_back({it.time(), e, e + discrete_energy_prefactor(params) * inc * inc, it.mean(), inc});
}

} // namespace slcn
