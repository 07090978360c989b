// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include "slcn/diagnostics.hpp"
#include "slcn/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using slcn::Field2D;
using slcn::Matrix;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

// Mass drift collected across criterion 1 and 2 runs for criterion 3.
struct MassLedger {
    double worst = 0.0;
    int runs = 0;
    void add(double drift)
    {
        worst = std::max(worst, drift);
        ++runs;
    }
};

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

Matrix kron(const Matrix& a, const Matrix& b)
{
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Eigen::VectorXd vec(const Matrix& c)
{
    Eigen::VectorXd v(c.size());
    for (Eigen::Index j = 0; j < c.rows(); ++j) {
        for (Eigen::Index k = 0; k < c.cols(); ++k) {
            v(j * c.cols() + k) = c(j, k);
        }
    }
    return v;
}

Matrix unvec(const Eigen::VectorXd& v, Eigen::Index m)
{
    Matrix c(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index k = 0; k < m; ++k) {
            c(j, k) = v(j * m + k);
        }
    }
    return c;
}

// Pointwise value of a field, straight from the basis polynomials.
double point_value(const Field2D& u, double x, double y)
{
    const slcn::Basis1D& b = u.basis_ref();
    double s = 0.0;
    for (int j = 0; j < b.dimension(); ++j) {
        const double pj = b.eval(j, x);
        for (int k = 0; k < b.dimension(); ++k) {
            s += u.coeffs()(j, k) * pj * b.eval(k, y);
        }
    }
    return s;
}

// Load of g(u) using an n-point Gauss rule and pointwise basis evaluation.
Matrix load_by_quadrature(const Field2D& u, int n, const std::function<double(double)>& g)
{
    const slcn::Basis1D& b = u.basis_ref();
    const int m = b.dimension();
    const auto rule = slcn::gauss_rule(n);
    Matrix out = Matrix::Zero(m, m);
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l < n; ++l) {
            const double xi = rule.nodes(i);
            const double yl = rule.nodes(l);
            const double w = rule.weights(i) * rule.weights(l) * g(point_value(u, xi, yl));
            for (int j = 0; j < m; ++j) {
                const double pj = b.eval(j, xi);
                for (int k = 0; k < m; ++k) {
                    out(j, k) += w * pj * b.eval(k, yl);
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

Outcome convergence_orders(MassLedger& mass)
{
    const slcn::ExperimentConfig cfg = slcn::default_config(slcn::ExperimentKind::convergence);
    auto basis = slcn::make_basis(cfg.M);
    const Field2D phi1 = slcn::make_initial(cfg, basis);
    const slcn::ConvergenceResult r = slcn::run_convergence_study(cfg, phi1);
    if (r.aborted) {
        return {false, r.diagnostic};
    }
    mass.add(r.max_mass_drift);
    bool ok = true;
    std::ostringstream os;
    os << "M=63 A=0.1 B=40 T=12.8 ref tau=1e-3, orders (H-1/L2/H1):";
    for (const slcn::ConvergenceRow& row : r.rows) {
        if (row.tau > 0.02 + 1e-12 || !row.order) {
            continue;
        }
        const slcn::ErrorTriple& o = *row.order;
        os << " tau=" << row.tau << ": " << slcn::format_order(o.h_minus1) << "/" << slcn::format_order(o.l2) << "/"
           << slcn::format_order(o.h1);
        for (double v : {o.h_minus1, o.l2, o.h1}) {
            ok = ok && v >= 1.8 && v <= 2.2;
        }
    }
    return {ok, os.str()};
}

Outcome energy_stability(MassLedger& mass)
{
    const long steps = 4096;
    auto basis = slcn::make_basis(63);
    slcn::ExperimentConfig cfg;
    cfg.initial = slcn::InitialData::phi0;
    const Field2D phi0 = slcn::make_initial(cfg, basis);
    bool ok = true;
    double worst = 0.0;
    int runs = 0;
    std::ostringstream fails;
    for (double gamma : {0.0025, 1.0}) {
        for (double tau : {1e-3, 1e-2, 0.1, 1.0, 10.0}) {
            slcn::SchemeParams p = cfg.scheme(tau);
            p.gamma = gamma;
            const slcn::StabilityThresholds t = slcn::stability_thresholds(p, slcn::double_well::lipschitz);
            p.A = t.A_min;
            p.B = t.B_min;
            slcn::RunOptions opts;
            opts.monitor_energy = true;
            opts.energy_tolerance = 1e-10;
            const slcn::RunOutcome r = slcn::run(phi0, p, steps, opts);
            ++runs;
            mass.add(r.max_mass_drift);
            worst = std::max(worst, r.worst_energy_increase);
            if (r.diverged || !r.energy_monotone || r.steps_done != steps) {
                ok = false;
                fails << " [gamma=" << gamma << " tau=" << tau << (r.diverged ? " blew up" : " E_CN increased") << "]";
            }
        }
    }
    return {ok, std::to_string(runs) + " runs x 4096 steps at thresholds, M=63, worst relative E_CN increase " +
                    fmt(worst) + fails.str()};
}

Outcome mass_conservation(const MassLedger& mass)
{
    return {mass.runs > 0 && mass.worst <= 1e-10,
            "max |mean(phi^n) - mean(phi^0)| = " + fmt(mass.worst) + " over " + std::to_string(mass.runs) +
                " runs"};
}

Outcome sweep_pattern()
{
    slcn::ExperimentConfig cfg = slcn::default_config(slcn::ExperimentKind::stability_sweep);
    cfg.M = 31;
    auto basis = slcn::make_basis(cfg.M);
    const Field2D phi0 = slcn::make_initial(cfg, basis);
    const long steps = cfg.sweep.steps;
    auto cell = [&](double gamma, double tau, slcn::Stabilizer s, double fixed) {
        slcn::SweepCell c{gamma, tau, s, fixed};
        slcn::evaluate_cell(c, cfg, phi0, steps);
        return c.min_value;
    };
    using slcn::Stabilizer;
    std::ostringstream os;
    os << "M=31:";

    const double a_b = cell(1.0, 10.0, Stabilizer::B, 0.0);
    const bool a_ok = a_b <= 16.0;
    os << " (a) gamma=1 A=0 tau=10 min B=" << slcn::format_double(a_b) << (a_ok ? " ok;" : " want <=16;");

    bool b_ok = true;
    os << " (b) tau=1e-6";
    for (double gamma : {0.0025, 1.0}) {
        const double ma = cell(gamma, 1e-6, Stabilizer::A, 0.0);
        const double mb = cell(gamma, 1e-6, Stabilizer::B, 0.0);
        b_ok = b_ok && ma == 0.0 && mb == 0.0;
        os << " gamma=" << gamma << " min A=" << slcn::format_double(ma) << " min B=" << slcn::format_double(mb);
    }
    os << (b_ok ? " ok;" : " want all 0;");

    bool c_ok = true;
    os << " (c) gamma=1 min A (B=0 -> B=10)";
    for (double tau : {0.1, 0.01}) {
        const double a0 = cell(1.0, tau, Stabilizer::A, 0.0);
        const double a10 = cell(1.0, tau, Stabilizer::A, 10.0);
        c_ok = c_ok && a10 < a0;
        os << " tau=" << tau << ": " << slcn::format_double(a0) << " -> " << slcn::format_double(a10);
    }
    os << (c_ok ? " ok" : " want a decrease");
    return {a_ok && b_ok && c_ok, os.str()};
}

Outcome fast_vs_dense()
{
    const int m = 8;
    auto basis = slcn::make_basis(m);
    slcn::SchemeParams p;
    p.tau = 0.01;
    p.A = 0.1;
    p.B = 40.0;
    const slcn::StepOperator op(p, basis);
    const Field2D phi_nm1 = slcn::random_initial(11, basis);
    const Field2D phi_n = slcn::random_initial(12, basis);
    const slcn::StepResult fast = slcn::step({phi_n, phi_nm1, 1, Field2D(basis)}, op);

    const Matrix M2 = kron(basis->mass(), basis->mass());
    const Matrix K2 = kron(basis->stiff(), basis->mass()) + kron(basis->mass(), basis->stiff());
    const int n = m * m;
    Matrix sys = Matrix::Zero(2 * n, 2 * n);
    sys.topLeftCorner(n, n) = M2 / p.tau;
    sys.topRightCorner(n, n) = p.gamma * K2;
    sys.bottomLeftCorner(n, n) = -(0.5 * p.epsilon + p.A * p.tau) * K2 - p.B * M2;
    sys.bottomRightCorner(n, n) = M2;

    const Field2D ext = phi_n * 1.5 - phi_nm1 * 0.5;
    const Matrix b = load_by_quadrature(ext, 2 * m, [](double v) { return slcn::double_well::f(v); });
    const Eigen::VectorXd cn = vec(phi_n.coeffs());
    const Eigen::VectorXd cnm1 = vec(phi_nm1.coeffs());
    Eigen::VectorXd rhs(2 * n);
    rhs.head(n) = M2 * cn / p.tau;
    rhs.tail(n) =
        (0.5 * p.epsilon - p.A * p.tau) * (K2 * cn) + vec(b) / p.epsilon + p.B * (M2 * (cnm1 - 2.0 * cn));
    const Eigen::VectorXd sol = sys.fullPivLu().solve(rhs);
    const Matrix phi_ref = unvec(sol.head(n), m);
    const Matrix mu_ref = unvec(sol.tail(n), m);

    const double e_phi = (fast.state.phi_n.coeffs() - phi_ref).norm() / phi_ref.norm();
    const double e_mu = (fast.mu.coeffs() - mu_ref).norm() / mu_ref.norm();
    return {e_phi <= 1e-10 && e_mu <= 1e-10,
            "M=8 relative difference phi " + fmt(e_phi) + ", mu " + fmt(e_mu)};
}

Outcome h_minus1_oracle()
{
    auto basis = slcn::make_basis(32);
    const auto& x = basis->quad().nodes;
    Matrix v(x.size(), x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            v(i, j) = std::cos(M_PI * (x(i) + 1.0) / 2.0);
        }
    }
    const Field2D u = slcn::analyze({basis, v});
    const double got = slcn::h_minus1_norm(u);
    const double want = 2.0 / M_PI * std::sqrt(2.0);
    const double err = std::abs(got - want);
    return {err <= 1e-8, "M=32 norm " + slcn::format_double(got) + ", error " + fmt(err)};
}

Outcome dealiasing()
{
    auto basis = slcn::make_basis(6);
    const Field2D u = slcn::random_initial(5, basis);
    slcn::NodalGrid2D g = slcn::synthesize(u);
    g.values = g.values.array().cube().matrix();
    const Matrix fast = slcn::galerkin_load(g);
    const Matrix ref = load_by_quadrature(u, 4 * 6, [](double s) { return s * s * s; });
    const double err = (fast - ref).cwiseAbs().maxCoeff();
    return {err <= 1e-12, "M=6 max load difference " + fmt(err) + " (max entry " + fmt(ref.cwiseAbs().maxCoeff()) + ")"};
}

Outcome potential_certificate()
{
    namespace dw = slcn::double_well;
    double max_fp = 0.0;
    double max_fs = 0.0;
    const int n = 1000000;
    for (int i = 0; i <= n; ++i) {
        const double x = -10.0 + 20.0 * i / n;
        if (std::abs(std::abs(x) - 2.0) < 1e-12) {
            continue;
        }
        max_fp = std::max(max_fp, std::abs(dw::fprime(x)));
        max_fs = std::max(max_fs, std::abs(dw::fsecond(x)));
    }
    // The grid never lands closer than its spacing to +-2, where |f''| attains
    // its supremum as a one-sided limit. Add those limits to the grid maximum.
    const double grid_fs = max_fs;
    double jump = 0.0;
    for (double s : {-2.0, 2.0}) {
        const double lo = std::nextafter(s, -10.0);
        const double hi = std::nextafter(s, 10.0);
        jump = std::max({jump, std::abs(dw::F(hi) - dw::F(lo)), std::abs(dw::f(hi) - dw::f(lo)),
                         std::abs(dw::fprime(hi) - dw::fprime(lo))});
        max_fp = std::max({max_fp, std::abs(dw::fprime(lo)), std::abs(dw::fprime(hi))});
        max_fs = std::max({max_fs, std::abs(dw::fsecond(lo)), std::abs(dw::fsecond(hi))});
    }
    const bool ok = std::abs(max_fp - 11.0) <= 1e-9 && std::abs(max_fs - 12.0) <= 1e-9 && jump <= 1e-12 &&
                    std::abs(dw::lipschitz - max_fp) <= 1e-9 && std::abs(dw::lipschitz2 - max_fs) <= 1e-9;
    return {ok, "max|f'| = " + slcn::format_double(max_fp) + ", max|f''| = " + slcn::format_double(max_fs) +
                    " (grid alone " + slcn::format_double(grid_fs) + ")" +
                    ", largest junction jump in F, f, f' = " + fmt(jump)};
}

Outcome steady_state()
{
    // Smooth single-interface data settles in a few thousand steps; random
    // data would spend most of the run coarsening.
    auto basis = slcn::make_basis(31);
    const auto& x = basis->quad().nodes;
    Matrix v(x.size(), x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            v(i, j) = 0.6 * std::cos(0.5 * M_PI * (x(i) + 1.0)) + 0.2 * std::cos(M_PI * (x(j) + 1.0)) + 0.1;
        }
    }
    const Field2D phi0 = slcn::analyze({basis, v});
    slcn::SchemeParams p;
    p.epsilon = 0.05;
    p.gamma = 0.0025;
    p.tau = 0.1;
    const slcn::StabilityThresholds t = slcn::stability_thresholds(p, slcn::double_well::lipschitz);
    p.A = t.A_min;
    p.B = t.B_min;
    const long cap = 50000;
    const slcn::StepOperator op(p, basis);
    auto it = slcn::Integrator::from_initial(op, phi0);
    while (it.n() < cap) {
        it.advance();
        const double inc = it.increment_norm();
        const double gap = std::abs(it.discrete_energy() - it.energy());
        if (inc <= 1e-8 && gap <= 1e-8) {
            return {true, "M=31 eps=0.05 gamma=0.0025 tau=0.1 at thresholds: |dt phi| = " + fmt(inc) +
                              ", E_CN - E = " + fmt(gap) + " at step " + std::to_string(it.n()) + " of " +
                              std::to_string(cap)};
        }
    }
    return {false, "not settled after " + std::to_string(cap) + " steps, |dt phi| = " + fmt(it.increment_norm())};
}

} // namespace

int main()
{
    MassLedger mass;
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "convergence orders", [&] { return convergence_orders(mass); }},
        {2, "energy stability at thresholds", [&] { return energy_stability(mass); }},
        {3, "mass conservation", [&] { return mass_conservation(mass); }},
        {4, "stability sweep pattern", sweep_pattern},
        {5, "fast solver vs dense solve", fast_vs_dense},
        {6, "H^-1 norm oracle", h_minus1_oracle},
        {7, "dealiased cubic load", dealiasing},
        {8, "potential certificate", potential_certificate},
        {9, "steady state", steady_state},
    };

    int failed = 0;
    for (const Criterion& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
