#pragma once

#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "filtfb/cli/config.hpp"
#include "filtfb/filtfb.hpp"

namespace filtfb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

namespace detail {

inline void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
}

inline ProtocolParams protocol_params(const RunConfig& c) {
    if (!c.protocol) throw ConfigError("--protocol is required");
    const auto kind = parse_protocol(*c.protocol);
    if (!kind) throw ConfigError("unknown protocol '" + *c.protocol + "' (lowpass1|lowpass2|lowpass3|bandpass)");
    if (!c.gamma) throw ConfigError("--gamma is required");
    ProtocolParams p;
    p.kind = *kind;
    p.lambda = c.lambda;
    p.omega = c.omega;
    p.gamma = *c.gamma;
    if (*kind != ProtocolKind::LowPass1) {
        if (!c.Omega) throw ConfigError("--Omega is required for " + *c.protocol);
        p.Omega = *c.Omega;
    }
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return p;
}

inline std::string bool_text(bool b) { return b ? "true" : "false"; }

inline void filter_response(const RunConfig& c, std::ostream& os) {
    if (!c.filter) throw ConfigError("--filter is required");
    FilterModel model;
    if (*c.filter == "lowpass") {
        if (c.gammas.empty()) throw ConfigError("--gammas is required for a low-pass cascade");
        for (double g : c.gammas) require_positive(g, "gammas");
        model = lowpass_cascade(c.gammas);
    } else if (*c.filter == "bandpass") {
        if (!c.gamma || !c.Omega) throw ConfigError("--gamma and --Omega are required for a band-pass filter");
        require_positive(*c.gamma, "gamma");
        if (!(*c.Omega >= 0.0) || !std::isfinite(*c.Omega)) throw ConfigError("Omega must be nonnegative");
        model = bandpass(*c.gamma, *c.Omega);
    } else if (*c.filter == "kernel") {
        if (c.coeffs.empty()) throw ConfigError("--coeffs is required for a kernel filter");
        if (c.coeffs.size() != c.derivs.size()) throw ConfigError("--derivs needs one value per coefficient");
        model = kernel_filter({c.coeffs, c.derivs});
    } else {
        throw ConfigError("unknown filter '" + *c.filter + "' (lowpass|bandpass|kernel)");
    }
    require_positive(c.tmax, "tmax");
    if (c.npoints < 2) throw ConfigError("npoints must be at least 2");

    os << 't';
    for (std::size_t i = 1; i <= model.dim(); ++i) os << ",h_" << i;
    os << '\n';
    for (std::size_t k = 0; k < c.npoints; ++k) {
        const double t = c.tmax * static_cast<double>(k) / static_cast<double>(c.npoints - 1);
        os << csv::format_number(t);
        for (double h : impulse_response(model, t)) os << ',' << csv::format_number(h);
        os << '\n';
    }
}

inline int steady_state_cmd(const RunConfig& c, std::ostream& os, std::ostream& err) {
    const ProtocolParams p = protocol_params(c);
    const SteadyState ss = steady_state(build_moment_system(p));
    os << "protocol,lambda,omega,gamma,Omega,energy,stable,physical\n";
    os << to_string(p.kind) << ',' << csv::format_number(p.lambda) << ',' << csv::format_number(p.omega) << ','
       << csv::format_number(p.gamma) << ',' << csv::format_number(p.Omega) << ','
       << csv::format_number(ss.energy_over_hw) << ',' << bool_text(ss.stable) << ',' << bool_text(ss.physical)
       << '\n';
    if (!ss.stable) {
        err << "warning: the moment system is unstable at this point; the energy is a formal fixed point\n";
        if (c.require_stable) return kExitNumerical;
    }
    return kExitOk;
}

inline void evolve_cmd(const RunConfig& c, std::ostream& os) {
    const ProtocolParams p = protocol_params(c);
    require_positive(c.dt, "dt");
    if (c.stride < 1) throw ConfigError("stride must be at least 1");
    if (!(c.E0 >= 0.5) || !std::isfinite(c.E0)) throw ConfigError("E0 must be at least 0.5");
    const MomentSystem sys = build_moment_system(p);
    const auto xs = evolve(sys, default_initial_moments(sys, c.E0), c.dt, c.steps);

    os << 't';
    for (const auto& l : sys.labels) os << ',' << l;
    os << '\n';
    for (std::size_t k = 0; k < xs.size(); k += c.stride) {
        os << csv::format_number(static_cast<double>(k) * c.dt);
        for (double v : xs[k]) os << ',' << csv::format_number(v);
        os << '\n';
    }
}

inline void trajectory_cmd(const RunConfig& c, std::ostream& os, std::ostream& err) {
    const ProtocolParams p = protocol_params(c);
    if (!c.seed) throw ConfigError("--seed is required for trajectory runs");
    require_positive(c.dt, "dt");
    if (c.ntraj < 1) throw ConfigError("ntraj must be at least 1");
    if (c.fock < 3) throw ConfigError("fock must be at least 3");
    if (c.stride < 1) throw ConfigError("stride must be at least 1");

    const SystemModel model = cooling_model(p, c.fock);
    const std::size_t tap = protocol_filter(p).tap;
    TrajectoryConfig tc;
    tc.dt = c.dt;
    tc.n_steps = c.steps;
    tc.n_traj = c.ntraj;
    tc.base_seed = *c.seed;
    tc.record_stride = c.stride;
    tc.workers = c.threads;
    const TrajectoryRecord rec = run_ensemble(model, tc);

    os << "t,mean_energy,stderr_energy,mean_Dx,var_Dx,mean_Dp,var_Dp\n";
    for (std::size_t r = 0; r < rec.times.size(); ++r) {
        os << csv::format_number(rec.times[r]) << ',' << csv::format_number(rec.energy_mean[r]) << ','
           << csv::format_number(rec.energy_stderr[r]);
        for (std::size_t ch = 0; ch < 2; ++ch)
            os << ',' << csv::format_number(rec.signal_mean[ch][tap][r]) << ','
               << csv::format_number(rec.signal_var[ch][tap][r]);
        os << '\n';
    }
    if (rec.truncation_warning) {
        err << "warning: Fock truncation at " << c.fock << " levels reached top-level population "
            << csv::format_number(rec.max_top_population) << " in " << rec.flagged_trajectories.size()
            << " trajectories; increase --fock\n";
    }
}

inline void phase_diagram_cmd(const RunConfig& c, std::ostream& os) {
    if (c.grid < 2) throw ConfigError("grid must be at least 2");
    require_positive(c.lambda, "lambda");
    require_positive(c.omega, "omega");
    require_positive(c.gamma_min, "gamma-min");
    require_positive(c.Omega_min, "Omega-min");
    if (!(c.gamma_max > c.gamma_min)) throw ConfigError("gamma-max must exceed gamma-min");
    if (!(c.Omega_max > c.Omega_min)) throw ConfigError("Omega-max must exceed Omega-min");
    GridSpec g;
    g.lambda = c.lambda;
    g.omega = c.omega;
    g.gamma_axis = log_axis(c.gamma_min, c.gamma_max, c.grid);
    g.Omega_axis = log_axis(c.Omega_min, c.Omega_max, c.grid);
    SweepOptions opts;
    opts.workers = c.threads;
    if (c.seed) opts.spot_check_seed = *c.seed;
    write_phase_csv(sweep(g, opts), os);
}

inline std::optional<std::string> find_config_path(const std::vector<std::string>& args) {
    std::optional<std::string> path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw ConfigError("--config needs a file path");
            path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        }
    }
    return path;
}

}  // namespace detail

/// Runs the command line `args` (program name excluded). CSV goes to `out` unless
/// --output names a file; diagnostics go to `err`.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    try {
        if (const auto path = detail::find_config_path(args)) cfg = load_config(*path);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    CLI::App app{"Feedback cooling with filtered continuous measurement", "filtfb"};
    app.require_subcommand(1);
    std::string config_path;

    // Options bound to optional fields are captured in locals and copied afterwards
    // so that a value from the config file survives when the flag is absent.
    std::string protocol, filter;
    double gamma = 0.0, Omega = 0.0;
    std::uint64_t seed = 0;
    std::vector<CLI::Option*> proto_opts, gamma_opts, Omega_opts, seed_opts, filter_opts;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON file of settings; flags override it");
        sub->add_option("-o,--output", cfg.output, "write CSV here instead of stdout");
    };
    auto rates = [&](CLI::App* sub) {
        sub->add_option("--lambda", cfg.lambda, "measurement strength");
        sub->add_option("--omega", cfg.omega, "oscillator frequency");
        gamma_opts.push_back(sub->add_option("--gamma", gamma, "first filter rate"));
        Omega_opts.push_back(sub->add_option("--Omega", Omega, "second rate or band-pass centre"));
    };
    auto proto = [&](CLI::App* sub) {
        proto_opts.push_back(sub->add_option("--protocol", protocol, "lowpass1|lowpass2|lowpass3|bandpass"));
        rates(sub);
    };

    auto* fr = app.add_subcommand("filter-response", "impulse response of a filter");
    common(fr);
    filter_opts.push_back(fr->add_option("--filter", filter, "lowpass|bandpass|kernel"));
    fr->add_option("--gammas", cfg.gammas, "cascade rates")->delimiter(',');
    fr->add_option("--coeffs", cfg.coeffs, "kernel ODE coefficients a_0..a_{n-1}")->delimiter(',');
    fr->add_option("--derivs", cfg.derivs, "kernel f(0)..f^(n-1)(0)")->delimiter(',');
    gamma_opts.push_back(fr->add_option("--gamma", gamma, "band-pass rate"));
    Omega_opts.push_back(fr->add_option("--Omega", Omega, "band-pass centre frequency"));
    fr->add_option("--tmax", cfg.tmax, "last time");
    fr->add_option("--npoints", cfg.npoints, "number of time samples");

    auto* ss = app.add_subcommand("steady-state", "asymptotic ensemble energy of a protocol");
    common(ss);
    proto(ss);
    ss->add_flag("--require-stable", cfg.require_stable, "exit 3 when the point is unstable");

    auto* ev = app.add_subcommand("evolve", "integrate the moment equations");
    common(ev);
    proto(ev);
    ev->add_option("--dt", cfg.dt, "time step");
    ev->add_option("--steps", cfg.steps, "number of steps");
    ev->add_option("--stride", cfg.stride, "print every stride-th step");
    ev->add_option("--E0", cfg.E0, "initial energy in units of hbar*omega");

    auto* tr = app.add_subcommand("trajectory", "Monte Carlo ensemble of conditioned trajectories");
    common(tr);
    proto(tr);
    tr->add_option("--dt", cfg.dt, "time step");
    tr->add_option("--steps", cfg.steps, "number of steps");
    tr->add_option("--ntraj", cfg.ntraj, "number of trajectories");
    seed_opts.push_back(tr->add_option("--seed", seed, "base seed"));
    tr->add_option("--fock", cfg.fock, "Fock-space cutoff");
    tr->add_option("--stride", cfg.stride, "record every stride-th step");
    tr->add_option("--threads", cfg.threads, "worker threads (0: all cores)");

    auto* pd = app.add_subcommand("phase-diagram", "best protocol over a (gamma, Omega) grid");
    common(pd);
    pd->add_option("--lambda", cfg.lambda, "measurement strength");
    pd->add_option("--omega", cfg.omega, "oscillator frequency");
    pd->add_option("--grid", cfg.grid, "points per axis");
    pd->add_option("--gamma-min", cfg.gamma_min, "smallest gamma on the log axis");
    pd->add_option("--gamma-max", cfg.gamma_max, "largest gamma on the log axis");
    pd->add_option("--Omega-min", cfg.Omega_min, "smallest Omega on the log axis");
    pd->add_option("--Omega-max", cfg.Omega_max, "largest Omega on the log axis");
    pd->add_option("--threads", cfg.threads, "worker threads (0: all cores)");
    seed_opts.push_back(pd->add_option("--seed", seed, "seed for the spot-check sample"));

    std::vector<const char*> argv{"filtfb"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return kExitOk;
        }
        err << "error: " << e.what() << '\n';
        const auto parsed = app.get_subcommands();
        err << (parsed.empty() ? app.help() : parsed.front()->help());
        return kExitUsage;
    }

    auto given = [](const std::vector<CLI::Option*>& opts) {
        for (const auto* o : opts)
            if (o->count() > 0) return true;
        return false;
    };
    if (given(proto_opts)) cfg.protocol = protocol;
    if (given(filter_opts)) cfg.filter = filter;
    if (given(gamma_opts)) cfg.gamma = gamma;
    if (given(Omega_opts)) cfg.Omega = Omega;
    if (given(seed_opts)) cfg.seed = seed;
    CLI::App* sub = app.get_subcommands().front();
    cfg.subcommand = sub->get_name();

    std::ostringstream buf;
    int code = kExitOk;
    try {
        if (sub == fr) {
            detail::filter_response(cfg, buf);
        } else if (sub == ss) {
            code = detail::steady_state_cmd(cfg, buf, err);
        } else if (sub == ev) {
            detail::evolve_cmd(cfg, buf);
        } else if (sub == tr) {
            detail::trajectory_cmd(cfg, buf, err);
        } else {
            detail::phase_diagram_cmd(cfg, buf);
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n' << sub->help();
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n' << sub->help();
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }

    if (cfg.output.empty()) {
        out << buf.str();
    } else {
        std::ofstream f(cfg.output, std::ios::binary);
        if (!f) {
            err << "error: cannot write '" << cfg.output << "'\n";
            return kExitUsage;
        }
        f << buf.str();
    }
    return code;
}

}  // namespace filtfb::cli
