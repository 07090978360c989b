#pragma once

// JSON configuration and CSV/JSON result serialization for the experiment
// driver. Requires nlohmann/json.

#include "slcn/experiments.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

namespace slcn {

using json = nlohmann::json;

inline ExperimentKind kind_from_string(const std::string& s)
{
    if (s == "evolve") {
        return ExperimentKind::evolve;
    }
    if (s == "convergence" || s == "converge") {
        return ExperimentKind::convergence;
    }
    if (s == "stability_sweep" || s == "sweep") {
        return ExperimentKind::stability_sweep;
    }
    if (s == "energy_trace" || s == "trace") {
        return ExperimentKind::energy_trace;
    }
    throw ConfigError("config: unknown experiment kind '" + s + "'");
}

inline InitialData initial_from_string(const std::string& s)
{
    if (s == "phi0") {
        return InitialData::phi0;
    }
    if (s == "phi1") {
        return InitialData::phi1;
    }
    throw ConfigError("config: initial must be phi0 or phi1, got '" + s + "'");
}

/// Overlays keys present in `j` onto `cfg`. Unknown keys are rejected so
/// typos do not silently fall back to defaults.
inline void apply_json(ExperimentConfig& cfg, const json& j)
{
    if (!j.is_object()) {
        throw ConfigError("config: top level must be a JSON object");
    }
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "kind") {
                cfg.kind = kind_from_string(value.get<std::string>());
            } else if (key == "M") {
                cfg.M = value.get<int>();
            } else if (key == "epsilon") {
                cfg.epsilon = value.get<double>();
            } else if (key == "gamma") {
                cfg.gamma = value.get<double>();
            } else if (key == "A") {
                cfg.A = value.get<double>();
            } else if (key == "B") {
                cfg.B = value.get<double>();
            } else if (key == "taus") {
                cfg.taus = value.get<std::vector<double>>();
            } else if (key == "tau") {
                cfg.taus = {value.get<double>()};
            } else if (key == "reference_tau") {
                cfg.reference_tau = value.get<double>();
            } else if (key == "T") {
                cfg.T = value.get<double>();
            } else if (key == "seed") {
                cfg.seed = value.get<std::uint64_t>();
            } else if (key == "steps_cap") {
                cfg.steps_cap = value.get<long>();
            } else if (key == "initial") {
                cfg.initial = initial_from_string(value.get<std::string>());
            } else if (key == "nonlinearity") {
                cfg.nonlinearity = nonlinearity_from_string(value.get<std::string>());
            } else if (key == "prep_gamma") {
                cfg.prep_gamma = value.get<double>();
            } else if (key == "prng") {
                // Present in emitted configs; only the built-in generator is accepted.
                if (value.get<std::string>() != prng_name) {
                    throw ConfigError("config: unsupported prng '" + value.get<std::string>() + "'");
                }
            } else if (key == "out") {
                cfg.out_dir = value.get<std::string>();
            } else if (key == "sweep") {
                for (const auto& [skey, svalue] : value.items()) {
                    if (skey == "gammas") {
                        cfg.sweep.gammas = svalue.get<std::vector<double>>();
                    } else if (skey == "taus") {
                        cfg.sweep.taus = svalue.get<std::vector<double>>();
                    } else if (skey == "fixed_B") {
                        cfg.sweep.fixed_B = svalue.get<std::vector<double>>();
                    } else if (skey == "fixed_A") {
                        cfg.sweep.fixed_A = svalue.get<std::vector<double>>();
                    } else if (skey == "steps") {
                        cfg.sweep.steps = svalue.get<long>();
                    } else {
                        throw ConfigError("config: unknown sweep key '" + skey + "'");
                    }
                }
            } else {
                throw ConfigError("config: unknown key '" + key + "'");
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

inline json load_json_file(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) {
        throw ConfigError("config: cannot open " + path.string());
    }
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

inline json to_json(const ExperimentConfig& cfg)
{
    return json{
        {"kind", to_string(cfg.kind)},
        {"M", cfg.M},
        {"epsilon", cfg.epsilon},
        {"gamma", cfg.gamma},
        {"A", cfg.A},
        {"B", cfg.B},
        {"taus", cfg.taus},
        {"reference_tau", cfg.reference_tau},
        {"T", cfg.T},
        {"seed", cfg.seed},
        {"steps_cap", cfg.steps_cap},
        {"initial", to_string(cfg.initial)},
        {"nonlinearity", std::string(to_string(cfg.nonlinearity))},
        {"prep_gamma", cfg.prep_gamma},
        {"prng", prng_name},
        {"sweep",
         {{"gammas", cfg.sweep.gammas},
          {"taus", cfg.sweep.taus},
          {"fixed_B", cfg.sweep.fixed_B},
          {"fixed_A", cfg.sweep.fixed_A},
          {"steps", cfg.sweep.steps}}},
    };
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

// Provenance columns carried by every emitted row.
inline const char* provenance_header = "seed,M,epsilon,gamma,initial,nonlinearity";

inline std::string provenance_cells(const ExperimentConfig& cfg)
{
    std::ostringstream os;
    os << cfg.seed << ',' << cfg.M << ',' << format_double(cfg.epsilon) << ',' << format_double(cfg.gamma) << ','
       << to_string(cfg.initial) << ',' << to_string(cfg.nonlinearity);
    return os.str();
}

inline void write_convergence_csv(std::ostream& os, const ExperimentConfig& cfg, const ConvergenceResult& r)
{
    os << "tau,steps,err_hm1,order_hm1,err_l2,order_l2,err_h1,order_h1,reference_tau,A,B," << provenance_header
       << '\n';
    for (const ConvergenceRow& row : r.rows) {
        auto order = [&](double ErrorTriple::*field) {
            return row.order ? format_order((*row.order).*field) : std::string();
        };
        os << format_double(row.tau) << ',' << row.steps << ',' << format_double(row.error.h_minus1) << ','
           << order(&ErrorTriple::h_minus1) << ',' << format_double(row.error.l2) << ',' << order(&ErrorTriple::l2)
           << ',' << format_double(row.error.h1) << ',' << order(&ErrorTriple::h1) << ','
           << format_double(r.reference_tau) << ',' << format_double(cfg.A) << ',' << format_double(cfg.B) << ','
           << provenance_cells(cfg) << '\n';
    }
    if (r.aborted) {
        os << "# aborted: " << r.diagnostic << '\n';
    }
}

inline json convergence_summary(const ExperimentConfig& cfg, const ConvergenceResult& r)
{
    json rows = json::array();
    for (const ConvergenceRow& row : r.rows) {
        json jr{{"tau", row.tau},
                {"steps", row.steps},
                {"error", {{"hm1", row.error.h_minus1}, {"l2", row.error.l2}, {"h1", row.error.h1}}}};
        if (row.order) {
            jr["order"] = {{"hm1", row.order->h_minus1}, {"l2", row.order->l2}, {"h1", row.order->h1}};
        }
        rows.push_back(jr);
    }
    return json{{"config", to_json(cfg)},
                {"rows", rows},
                {"max_mass_drift", r.max_mass_drift},
                {"aborted", r.aborted},
                {"diagnostic", r.diagnostic}};
}

inline void write_sweep_csv(std::ostream& os, const ExperimentConfig& cfg, const SweepResult& r)
{
    os << "tau,cell_gamma,searched,fixed_name,fixed_value,min_value,runs,steps," << provenance_header << '\n';
    for (const SweepCell& c : r.cells) {
        const bool a = c.searched == Stabilizer::A;
        os << format_double(c.tau) << ',' << format_double(c.gamma) << ',' << (a ? "A" : "B") << ','
           << (a ? "B" : "A") << ',' << format_double(c.fixed_value) << ',' << format_double(c.min_value) << ','
           << c.runs << ',' << cfg.sweep.steps << ',' << provenance_cells(cfg) << '\n';
    }
}

inline void write_trace_csv(std::ostream& os, const ExperimentConfig& cfg, const std::vector<TraceResult>& traces)
{
    os << "tau,t,E,E_CN,mass,dt_norm,status,A,B," << provenance_header << '\n';
    const std::string tail =
        format_double(cfg.A) + ',' + format_double(cfg.B) + ',' + provenance_cells(cfg);
    for (const TraceResult& tr : traces) {
        for (const EnergyRecord& rec : tr.trace) {
            os << format_double(tr.tau) << ',' << format_double(rec.t) << ',' << format_double(rec.E) << ','
               << format_double(rec.E_CN) << ',' << format_double(rec.mass) << ',' << format_double(rec.dt_norm)
               << ",ok," << tail << '\n';
        }
        if (tr.diverged) {
            const double t = tr.trace.empty() ? 0.0 : tr.trace.back().t;
            os << format_double(tr.tau) << ',' << format_double(t) << ",nan,nan,nan,nan,blowup," << tail << '\n';
        }
    }
}

} // namespace slcn
