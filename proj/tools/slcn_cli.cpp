// Command-line driver for SL-CN Cahn-Hilliard experiments.
//
//   slcn evolve   --tau 0.01 --T 1 --out run/
//   slcn converge --config conv.json --out conv/
//   slcn sweep    --m 31 --out sweep/
//   slcn trace    --tau 0.1 --tau 0.01 --out trace/
//
// Exit codes: 0 success, 2 configuration error, 3 blow-up (not for sweep).

#include "slcn/config_io.hpp"
#include "slcn/snapshot.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;

namespace {

constexpr int exit_config = 2;
constexpr int exit_blowup = 3;

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::vector<double> taus;
    std::optional<std::string> out;
    std::optional<int> M;
    std::optional<double> epsilon, gamma, A, B, T, reference_tau, prep_gamma;
    std::optional<long> steps_cap;
    std::optional<std::string> initial;
    std::optional<std::string> nonlinearity;
    bool unsafe_potential = false;
    std::string snapshot_in;
};

void add_common_options(CLI::App* sub, Overrides& o)
{
    sub->add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "64-bit seed for the random initial data");
    sub->add_option("--tau", o.taus, "time step(s); repeat or list for several");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--m", o.M, "basis dimension per direction");
    sub->add_option("--epsilon", o.epsilon, "interface thickness");
    sub->add_option("--gamma", o.gamma, "mobility");
    sub->add_option("--stab-a", o.A, "stabilizer A");
    sub->add_option("--stab-b", o.B, "stabilizer B");
    sub->add_option("--T", o.T, "final time");
    sub->add_option("--steps-cap", o.steps_cap, "maximum number of steps (trace)");
    sub->add_option("--initial", o.initial, "initial data: phi0 or phi1");
    sub->add_option("--prep-gamma", o.prep_gamma, "mobility used to prepare phi1");
    sub->add_option("--nonlinearity", o.nonlinearity, "truncated (default), quartic, none");
    sub->add_flag("--unsafe-potential", o.unsafe_potential, "use the untruncated quartic double well");
}

slcn::ExperimentConfig resolve(slcn::ExperimentKind kind, const Overrides& o)
{
    slcn::ExperimentConfig cfg = slcn::default_config(kind);
    if (!o.config_path.empty()) {
        slcn::apply_json(cfg, slcn::load_json_file(o.config_path));
        cfg.kind = kind;
    }
    if (o.seed) cfg.seed = *o.seed;
    if (!o.taus.empty()) cfg.taus = o.taus;
    if (o.out) cfg.out_dir = *o.out;
    if (o.M) cfg.M = *o.M;
    if (o.epsilon) cfg.epsilon = *o.epsilon;
    if (o.gamma) cfg.gamma = *o.gamma;
    if (o.A) cfg.A = *o.A;
    if (o.B) cfg.B = *o.B;
    if (o.T) cfg.T = *o.T;
    if (o.reference_tau) cfg.reference_tau = *o.reference_tau;
    if (o.prep_gamma) cfg.prep_gamma = *o.prep_gamma;
    if (o.steps_cap) cfg.steps_cap = *o.steps_cap;
    if (o.initial) cfg.initial = slcn::initial_from_string(*o.initial);
    try {
        if (o.nonlinearity) cfg.nonlinearity = slcn::nonlinearity_from_string(*o.nonlinearity);
    } catch (const std::invalid_argument& e) {
        throw slcn::ConfigError(e.what());
    }
    if (o.unsafe_potential) cfg.nonlinearity = slcn::Nonlinearity::quartic;
    cfg.validate();
    return cfg;
}

void write_json(const fs::path& path, const slcn::json& j)
{
    std::ofstream os(path);
    os << j.dump(2) << '\n';
}

template <typename Fn>
void write_text(const fs::path& path, Fn&& fn)
{
    std::ofstream os(path);
    if (!os) {
        throw std::runtime_error("cannot write " + path.string());
    }
    fn(os);
}

int cmd_evolve(const slcn::ExperimentConfig& cfg, const Overrides& o)
{
    auto basis = slcn::make_basis(cfg.M);
    const slcn::Field2D initial =
        o.snapshot_in.empty() ? slcn::make_initial(cfg, basis) : slcn::snapshot_read(o.snapshot_in, basis);
    const double tau = cfg.taus.front();
    long steps = static_cast<long>(std::llround(std::floor(cfg.T / tau + 1e-9)));
    if (cfg.steps_cap > 0) steps = std::min(steps, cfg.steps_cap);
    steps = std::max(steps, 1L);

    slcn::RunOptions opts;
    opts.monitor_energy = true;
    const slcn::RunOutcome r = slcn::run(initial, cfg.scheme(tau), steps, opts);

    slcn::json summary{{"config", slcn::to_json(cfg)},
                       {"tau", tau},
                       {"steps", r.steps_done},
                       {"diverged", r.diverged},
                       {"message", r.message},
                       {"max_mass_drift", r.max_mass_drift},
                       {"energy_monotone", r.energy_monotone},
                       {"initial_energy", slcn::energy(initial, cfg.scheme(tau))}};
    if (!r.diverged) {
        summary["final_energy"] = slcn::energy(r.phi, cfg.scheme(tau));
        summary["final_mean"] = slcn::mean(r.phi);
        slcn::snapshot_write(r.phi, fs::path(cfg.out_dir) / "evolve_final.chsl");
    }
    write_json(fs::path(cfg.out_dir) / "evolve_summary.json", summary);
    std::cout << summary.dump(2) << '\n';
    return r.diverged ? exit_blowup : 0;
}

int cmd_converge(const slcn::ExperimentConfig& cfg)
{
    auto basis = slcn::make_basis(cfg.M);
    const slcn::Field2D initial = slcn::make_initial(cfg, basis);
    const slcn::ConvergenceResult r = slcn::run_convergence_study(cfg, initial);
    write_text(fs::path(cfg.out_dir) / "convergence.csv",
               [&](std::ostream& os) { slcn::write_convergence_csv(os, cfg, r); });
    write_json(fs::path(cfg.out_dir) / "convergence.json", slcn::convergence_summary(cfg, r));
    slcn::write_convergence_csv(std::cout, cfg, r);
    return r.aborted ? exit_blowup : 0;
}

int cmd_sweep(const slcn::ExperimentConfig& cfg)
{
    auto basis = slcn::make_basis(cfg.M);
    const slcn::Field2D phi0 = slcn::make_initial(cfg, basis);
    const slcn::SweepResult r = slcn::run_stability_sweep(cfg, phi0);
    write_text(fs::path(cfg.out_dir) / "sweep.csv", [&](std::ostream& os) { slcn::write_sweep_csv(os, cfg, r); });
    slcn::json cells = slcn::json::array();
    for (const auto& c : r.cells) {
        cells.push_back({{"tau", c.tau},
                         {"gamma", c.gamma},
                         {"searched", c.searched == slcn::Stabilizer::A ? "A" : "B"},
                         {"fixed_value", c.fixed_value},
                         {"min_value", slcn::format_double(c.min_value)}});
    }
    write_json(fs::path(cfg.out_dir) / "sweep.json", {{"config", slcn::to_json(cfg)}, {"cells", cells}});
    slcn::write_sweep_csv(std::cout, cfg, r);
    return 0;
}

int cmd_trace(const slcn::ExperimentConfig& cfg)
{
    auto basis = slcn::make_basis(cfg.M);
    const slcn::Field2D initial = slcn::make_initial(cfg, basis);
    std::vector<slcn::TraceResult> traces;
    bool diverged = false;
    for (double tau : cfg.taus) {
        traces.push_back(slcn::run_energy_trace(cfg, tau, initial));
        diverged = diverged || traces.back().diverged;
    }
    write_text(fs::path(cfg.out_dir) / "trace.csv",
               [&](std::ostream& os) { slcn::write_trace_csv(os, cfg, traces); });
    std::cout << "wrote " << (fs::path(cfg.out_dir) / "trace.csv").string() << '\n';
    return diverged ? exit_blowup : 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Stabilized linear Crank-Nicolson Cahn-Hilliard experiments"};
    app.require_subcommand(1);

    Overrides o;
    auto* evolve = app.add_subcommand("evolve", "run one simulation and write the final snapshot");
    auto* converge = app.add_subcommand("converge", "temporal convergence study against a fine reference");
    auto* sweep = app.add_subcommand("sweep", "minimal stabilizer sweep over (gamma, tau)");
    auto* trace = app.add_subcommand("trace", "per-step energy, discrete energy and mass traces");
    for (auto* sub : {evolve, converge, sweep, trace}) {
        add_common_options(sub, o);
    }
    evolve->add_option("--snapshot-in", o.snapshot_in, "start from a snapshot instead of random data")
        ->check(CLI::ExistingFile);
    converge->add_option("--ref-tau", o.reference_tau, "reference time step");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try {
        slcn::ExperimentKind kind = slcn::ExperimentKind::evolve;
        if (*converge) kind = slcn::ExperimentKind::convergence;
        if (*sweep) kind = slcn::ExperimentKind::stability_sweep;
        if (*trace) kind = slcn::ExperimentKind::energy_trace;

        const slcn::ExperimentConfig cfg = resolve(kind, o);
        fs::create_directories(cfg.out_dir);

        switch (kind) {
        case slcn::ExperimentKind::evolve:
            return cmd_evolve(cfg, o);
        case slcn::ExperimentKind::convergence:
            return cmd_converge(cfg);
        case slcn::ExperimentKind::stability_sweep:
            return cmd_sweep(cfg);
        case slcn::ExperimentKind::energy_trace:
            return cmd_trace(cfg);
        }
    } catch (const slcn::Divergence& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_blowup;
    } catch (const slcn::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const slcn::snapshot::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const slcn::BasisMismatch& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    }
    return 0;
}
