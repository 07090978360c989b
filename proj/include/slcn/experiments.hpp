#pragma once

#include "slcn/diagnostics.hpp"
#include "slcn/field2d.hpp"
#include "slcn/stepper.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace slcn {

enum class ExperimentKind { evolve, convergence, stability_sweep, energy_trace };

enum class InitialData {
    phi0, ///< uniform random nodal values, projected
    phi1  ///< phi0 evolved for 64 eps^3
};

/// Thrown for incomplete or inconsistent experiment configurations.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct SweepConfig {
    std::vector<double> gammas{0.0025, 1.0};
    std::vector<double> taus{10.0, 1.0, 0.1, 0.01, 1e-3, 1e-4, 1e-5, 1e-6};
    /// B values held fixed while searching the A ladder.
    std::vector<double> fixed_B{0.0, 10.0};
    /// A values held fixed while searching the B ladder.
    std::vector<double> fixed_A{0.0, 4.0};
    long steps = 4096;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::evolve;
    int M = 63;
    double epsilon = 0.05;
    double gamma = 0.0025;
    double A = 0.1;
    double B = 40.0;
    std::vector<double> taus{0.16, 0.08, 0.04, 0.02, 0.01, 0.005};
    double reference_tau = 1e-3;
    double T = 12.8;
    std::uint64_t seed = 20180101;
    long steps_cap = 0; ///< 0 means no cap beyond T
    InitialData initial = InitialData::phi1;
    Nonlinearity nonlinearity = Nonlinearity::truncated;
    /// Mobility used while preparing phi1 from phi0.
    double prep_gamma = 1.0;
    SweepConfig sweep;
    std::string out_dir = ".";

    SchemeParams scheme(double tau) const { return {epsilon, gamma, tau, A, B, nonlinearity}; }

    /// Kind-specific completeness checks.
    void validate() const
    {
        if (M < 3) {
            throw ConfigError("config: M must be at least 3");
        }
        if (!(epsilon > 0.0) || !(gamma > 0.0) || !(prep_gamma > 0.0)) {
            throw ConfigError("config: epsilon, gamma and prep_gamma must be positive");
        }
        if (!(A >= 0.0) || !(B >= 0.0)) {
            throw ConfigError("config: stabilizers must be non-negative");
        }
        if (!std::isfinite(T) || T <= 0.0) {
            throw ConfigError("config: T must be positive");
        }
        if (steps_cap < 0) {
            throw ConfigError("config: steps_cap must be non-negative");
        }
        for (double t : taus) {
            if (!(t > 0.0) || !std::isfinite(t)) {
                throw ConfigError("config: every tau must be positive");
            }
        }
        switch (kind) {
        case ExperimentKind::convergence:
            if (taus.size() < 2) {
                throw ConfigError("config: convergence needs at least two taus");
            }
            if (!(reference_tau > 0.0)) {
                throw ConfigError("config: convergence needs a positive reference tau");
            }
            for (std::size_t k = 1; k < taus.size(); ++k) {
                if (!(taus[k] < taus[k - 1])) {
                    throw ConfigError("config: convergence taus must be strictly decreasing");
                }
            }
            if (!(reference_tau < taus.back())) {
                throw ConfigError("config: reference tau must be smaller than every study tau");
            }
            break;
        case ExperimentKind::stability_sweep:
            if (sweep.gammas.empty() || sweep.taus.empty() || sweep.steps < 2) {
                throw ConfigError("config: sweep needs gammas, taus and at least two steps");
            }
            break;
        case ExperimentKind::evolve:
        case ExperimentKind::energy_trace:
            if (taus.empty()) {
                throw ConfigError("config: at least one tau is required");
            }
            break;
        }
    }
};

/// Defaults for each experiment kind, mirroring the reference study setup.
inline ExperimentConfig default_config(ExperimentKind kind)
{
    ExperimentConfig c;
    c.kind = kind;
    switch (kind) {
    case ExperimentKind::convergence:
        c.A = 0.1;
        c.B = 40.0;
        break;
    case ExperimentKind::energy_trace:
        c.A = 1.0;
        c.B = 20.0;
        c.taus = {0.1, 0.01, 0.001};
        c.T = 1.0;
        break;
    case ExperimentKind::evolve:
        c.A = 1.0;
        c.B = 20.0;
        c.taus = {0.01};
        c.T = 1.0;
        break;
    case ExperimentKind::stability_sweep:
        c.initial = InitialData::phi0;
        c.A = 0.0;
        c.B = 0.0;
        break;
    }
    return c;
}

/// Number of steps of size tau that reach T; throws if T/tau is not integral.
inline long steps_to(double T, double tau)
{
    const double ratio = T / tau;
    const double n = std::round(ratio);
    if (n < 1.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
        throw ConfigError("config: T = " + std::to_string(T) + " is not an integer multiple of tau = " +
                          std::to_string(tau));
    }
    return static_cast<long>(n);
}

// ---------------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------------

/// Name of the generator behind random_initial; part of the output provenance.
inline constexpr const char* prng_name = "mt19937_64/u53-open-v1";

/// Uniform(-1, 1) nodal values at the 2M x 2M dealiasing nodes.
///
/// Draws come from std::mt19937_64 seeded with `seed`; each 64-bit output x
/// maps to 2 * ((x >> 11) + 0.5) * 2^-53 - 1, which lies strictly inside
/// (-1, 1). Nodes are filled with the x index outer, y index inner.
inline NodalGrid2D random_nodal(std::uint64_t seed, const BasisPtr& basis)
{
    std::mt19937_64 gen(seed);
    const int n = basis->grid_size();
    Matrix values(n, n);
    constexpr double scale = 1.0 / 9007199254740992.0; // 2^-53
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double u = (static_cast<double>(gen() >> 11) + 0.5) * scale;
            values(i, j) = 2.0 * u - 1.0;
        }
    }
    return {basis, std::move(values)};
}

/// L2 projection of random_nodal onto V_M.
inline Field2D random_initial(std::uint64_t seed, const BasisPtr& basis) { return analyze(random_nodal(seed, basis)); }

/// Duration of the phi1 preparation run: 64 eps^3.
inline double preparation_time(double epsilon) { return 64.0 * epsilon * epsilon * epsilon; }

/// Evolves phi0 for 64 eps^3 with step eps^3 (64 steps). Only tau is
/// overridden in `params`; the mobility is whatever the caller passes.
/// Throws Divergence with a hint when the preparation blows up.
inline Field2D prepare_phi1(const Field2D& phi0, SchemeParams params)
{
    params.tau = params.epsilon * params.epsilon * params.epsilon;
    const long steps = 64;
    const StepOperator op(params, phi0.basis());
    try {
        Integrator it = Integrator::from_initial(op, phi0);
        while (it.n() < steps) {
            it.advance();
        }
        return it.phi_n();
    } catch (const Divergence& d) {
        throw Divergence(std::string("prepare_phi1: ") + d.what() + "; raise A or B for the preparation run",
                         d.step());
    }
}

/// Stabilizers for the preparation run: the configured A and B, raised to the
/// unconditional-stability thresholds for prep_gamma. Random data is as rough
/// as inputs get, so the preparation never runs below them.
inline SchemeParams preparation_params(const ExperimentConfig& cfg)
{
    SchemeParams prep{cfg.epsilon, cfg.prep_gamma, 1.0, cfg.A, cfg.B, cfg.nonlinearity};
    const StabilityThresholds t = stability_thresholds(prep, double_well::lipschitz);
    prep.A = std::max(prep.A, t.A_min);
    prep.B = std::max(prep.B, t.B_min);
    return prep;
}

inline Field2D make_initial(const ExperimentConfig& cfg, const BasisPtr& basis)
{
    Field2D phi0 = random_initial(cfg.seed, basis);
    if (cfg.initial == InitialData::phi0) {
        return phi0;
    }
    return prepare_phi1(phi0, preparation_params(cfg));
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

struct RunOutcome {
    bool diverged = false;
    long steps_done = 0;
    std::string message;
    Field2D phi;      ///< last accepted phi^n
    double max_mass_drift = 0.0;
    bool energy_monotone = true;
    double worst_energy_increase = 0.0; ///< max over steps of (E_CN^{n+1} - E_CN^n) / |E_CN^1|
};

struct RunOptions {
    bool monitor_energy = false;
    /// Relative tolerance on E_CN increases, scaled by |E_CN^1|.
    double energy_tolerance = 1e-10;
    EnergyTrace* trace = nullptr;
};

/// Runs `steps` steps from phi0 (bootstrap included), optionally monitoring
/// mass and discrete energy at every step. Divergence is captured, not thrown.
inline RunOutcome run(const Field2D& phi0, const SchemeParams& params, long steps, const RunOptions& opts = {})
{
    RunOutcome out;
    const StepOperator op(params, phi0.basis());
    const double mass0 = mean(phi0);
    const bool monitor = opts.monitor_energy || opts.trace != nullptr;
    try {
        Integrator it = Integrator::from_initial(op, phi0);
        double e_prev = 0.0;
        double e_first = 0.0;
        auto observe = [&]() {
            out.max_mass_drift = std::max(out.max_mass_drift, std::abs(it.mean() - mass0));
            if (!monitor) {
                return;
            }
            const double inc = it.increment_norm();
            const double e = it.energy();
            const double e_cn = e + discrete_energy_prefactor(params) * inc * inc;
            if (opts.trace != nullptr) {
                opts.trace->push_back({it.time(), e, e_cn, it.mean(), inc});
            }
            if (it.n() == 1) {
                e_first = e_cn;
            } else {
                const double rel = (e_cn - e_prev) / std::max(std::abs(e_first), std::numeric_limits<double>::min());
                out.worst_energy_increase = std::max(out.worst_energy_increase, rel);
                if (rel > opts.energy_tolerance) {
                    out.energy_monotone = false;
                }
            }
            e_prev = e_cn;
        };
        observe();
        while (it.n() < steps) {
            it.advance();
            observe();
        }
        out.steps_done = it.n();
        out.phi = it.phi_n();
    } catch (const Divergence& d) {
        out.diverged = true;
        out.steps_done = d.step();
        out.message = d.what();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Convergence study
// ---------------------------------------------------------------------------

struct ConvergenceRow {
    double tau = 0.0;
    long steps = 0;
    ErrorTriple error;
    std::optional<ErrorTriple> order; ///< relative to the previous row; empty if either error is zero
};

struct ConvergenceResult {
    std::vector<ConvergenceRow> rows;
    double reference_tau = 0.0;
    double max_mass_drift = 0.0;
    bool aborted = false;
    std::string diagnostic;
};

/// Runs the reference solution and each tau to T, then tabulates errors
/// and observed orders in the H^-1, L2 and H1 norms.
inline ConvergenceResult run_convergence_study(const ExperimentConfig& cfg, const Field2D& initial)
{
    ConvergenceResult result;
    result.reference_tau = cfg.reference_tau;

    const long ref_steps = steps_to(cfg.T, cfg.reference_tau);
    std::vector<long> steps;
    for (double tau : cfg.taus) {
        steps.push_back(steps_to(cfg.T, tau));
    }

    const RunOutcome ref = run(initial, cfg.scheme(cfg.reference_tau), ref_steps);
    if (ref.diverged) {
        result.aborted = true;
        result.diagnostic = "reference run diverged: " + ref.message;
        return result;
    }
    result.max_mass_drift = ref.max_mass_drift;

    for (std::size_t k = 0; k < cfg.taus.size(); ++k) {
        const RunOutcome r = run(initial, cfg.scheme(cfg.taus[k]), steps[k]);
        if (r.diverged) {
            result.aborted = true;
            result.diagnostic = "run with tau = " + std::to_string(cfg.taus[k]) + " diverged: " + r.message;
            return result;
        }
        result.max_mass_drift = std::max(result.max_mass_drift, r.max_mass_drift);
        ConvergenceRow row{cfg.taus[k], steps[k], error_norms(r.phi, ref.phi), std::nullopt};
        const auto positive = [](const ErrorTriple& e) { return e.h_minus1 > 0.0 && e.l2 > 0.0 && e.h1 > 0.0; };
        // No order against an exact match (e.g. tau equal to the reference).
        if (!result.rows.empty() && positive(result.rows.back().error) && positive(row.error)) {
            const ConvergenceRow& prev = result.rows.back();
            const std::vector<double> taus{prev.tau, row.tau};
            auto order_of = [&](double a, double b) {
                const std::vector<double> e{a, b};
                return convergence_orders(e, taus).front();
            };
            row.order = ErrorTriple{order_of(prev.error.h_minus1, row.error.h_minus1),
                                    order_of(prev.error.l2, row.error.l2), order_of(prev.error.h1, row.error.h1)};
        }
        result.rows.push_back(row);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Stability sweep
// ---------------------------------------------------------------------------

enum class Stabilizer { A, B };

/// One cell: search the ladder of `searched` with the other stabilizer fixed.
struct SweepCell {
    double gamma = 0.0;
    double tau = 0.0;
    Stabilizer searched = Stabilizer::A;
    double fixed_value = 0.0;
    /// Smallest stable ladder value; infinity when none is stable.
    double min_value = std::numeric_limits<double>::infinity();
    int runs = 0;
};

/// {0, 2^i, i = 0..7}, scaled by gamma for A.
inline std::vector<double> stabilizer_ladder(Stabilizer which, double gamma)
{
    const double scale = which == Stabilizer::A ? gamma : 1.0;
    std::vector<double> ladder{0.0};
    for (int i = 0; i <= 7; ++i) {
        ladder.push_back(scale * std::ldexp(1.0, i));
    }
    return ladder;
}

/// Fills min_value by scanning the ladder upward; the first value that runs
/// the full step count without blowing up wins.
inline void evaluate_cell(SweepCell& cell, const ExperimentConfig& cfg, const Field2D& phi0, long steps)
{
    cell.min_value = std::numeric_limits<double>::infinity();
    cell.runs = 0;
    for (double v : stabilizer_ladder(cell.searched, cell.gamma)) {
        SchemeParams p = cfg.scheme(cell.tau);
        p.gamma = cell.gamma;
        p.A = cell.searched == Stabilizer::A ? v : cell.fixed_value;
        p.B = cell.searched == Stabilizer::B ? v : cell.fixed_value;
        ++cell.runs;
        if (!run(phi0, p, steps).diverged) {
            cell.min_value = v;
            return;
        }
    }
}

struct SweepResult {
    std::vector<SweepCell> cells;
};

inline std::vector<SweepCell> sweep_cells(const SweepConfig& s)
{
    std::vector<SweepCell> cells;
    for (double tau : s.taus) {
        for (double g : s.gammas) {
            for (double b : s.fixed_B) {
                cells.push_back({g, tau, Stabilizer::A, b});
            }
        }
        for (double g : s.gammas) {
            for (double a : s.fixed_A) {
                cells.push_back({g, tau, Stabilizer::B, a});
            }
        }
    }
    return cells;
}

inline SweepResult run_stability_sweep(const ExperimentConfig& cfg, const Field2D& phi0)
{
    SweepResult result;
    result.cells = sweep_cells(cfg.sweep);
    for (SweepCell& cell : result.cells) {
        evaluate_cell(cell, cfg, phi0, cfg.sweep.steps);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Energy traces
// ---------------------------------------------------------------------------

struct TraceResult {
    double tau = 0.0;
    EnergyTrace trace;
    bool diverged = false;
    std::string message;
};

inline long trace_steps(const ExperimentConfig& cfg, double tau)
{
    long n = static_cast<long>(std::llround(std::floor(cfg.T / tau + 1e-9)));
    if (cfg.steps_cap > 0) {
        n = std::min(n, cfg.steps_cap);
    }
    return std::max(n, 1L);
}

inline TraceResult run_energy_trace(const ExperimentConfig& cfg, double tau, const Field2D& initial)
{
    TraceResult r;
    r.tau = tau;
    RunOptions opts;
    opts.trace = &r.trace;
    const RunOutcome o = run(initial, cfg.scheme(tau), trace_steps(cfg, tau), opts);
    r.diverged = o.diverged;
    r.message = o.message;
    return r;
}

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v)
{
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// Fixed two-decimal formatting used for observed orders.
inline std::string format_order(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
    return std::string(buf, res.ptr);
}

inline std::string to_string(ExperimentKind k)
{
    switch (k) {
    case ExperimentKind::evolve:
        return "evolve";
    case ExperimentKind::convergence:
        return "convergence";
    case ExperimentKind::stability_sweep:
        return "stability_sweep";
    case ExperimentKind::energy_trace:
        return "energy_trace";
    }
    return "?";
}

inline std::string to_string(InitialData d) { return d == InitialData::phi0 ? "phi0" : "phi1"; }

} // namespace slcn
