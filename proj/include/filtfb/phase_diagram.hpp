#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "filtfb/analytics.hpp"
#include "filtfb/csv.hpp"
#include "filtfb/moment_systems.hpp"
#include "filtfb/protocol.hpp"

namespace filtfb {

/// Strictly increasing log-spaced axis with `n` points from lo to hi inclusive.
inline RealVector log_axis(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 1) throw std::invalid_argument("log_axis: need 0 < lo < hi and n >= 1");
    if (n == 1) return {lo};
    RealVector out(n);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

struct GridSpec {
    RealVector gamma_axis;
    RealVector Omega_axis;
    double lambda = 1.0;
    double omega = 1.0;
    std::vector<ProtocolKind> protocols{kAllProtocols.begin(), kAllProtocols.end()};

    void validate() const {
        auto check_axis = [](const RealVector& ax, const char* name) {
            if (ax.empty()) throw std::invalid_argument(std::string(name) + " axis is empty");
            for (std::size_t i = 0; i < ax.size(); ++i) {
                if (!(ax[i] > 0.0) || !std::isfinite(ax[i])) {
                    throw std::invalid_argument(std::string(name) + " axis must be positive");
                }
                if (i > 0 && !(ax[i] > ax[i - 1])) {
                    throw std::invalid_argument(std::string(name) + " axis must be strictly increasing");
                }
            }
        };
        check_axis(gamma_axis, "gamma");
        check_axis(Omega_axis, "Omega");
        if (!(lambda > 0.0) || !(omega > 0.0)) throw std::invalid_argument("lambda and omega must be positive");
        if (protocols.empty()) throw std::invalid_argument("no protocols selected");
    }

    [[nodiscard]] bool includes(ProtocolKind k) const {
        return std::find(protocols.begin(), protocols.end(), k) != protocols.end();
    }

    [[nodiscard]] GridSpec rescaled(double factor) const {
        GridSpec g = *this;
        for (auto& v : g.gamma_axis) v *= factor;
        for (auto& v : g.Omega_axis) v *= factor;
        g.lambda *= factor;
        g.omega *= factor;
        return g;
    }
};

/// γ/λ ∈ [0.1, 100] × Ω/λ ∈ [0.1, 1000], 200 × 200 log-spaced, λ = ω = 1.
inline GridSpec default_grid(std::size_t resolution = 200) {
    GridSpec g;
    g.gamma_axis = log_axis(0.1, 100.0, resolution);
    g.Omega_axis = log_axis(0.1, 1000.0, resolution);
    return g;
}

enum class CellFlag { Ok, Unstable, Unphysical, NotApplicable };

inline const char* to_string(CellFlag f) {
    switch (f) {
        case CellFlag::Ok: return "ok";
        case CellFlag::Unstable: return "unstable";
        case CellFlag::Unphysical: return "unphysical";
        case CellFlag::NotApplicable: return "na";
    }
    return "?";
}

inline std::optional<CellFlag> parse_cell_flag(std::string_view s) {
    for (auto f : {CellFlag::Ok, CellFlag::Unstable, CellFlag::Unphysical, CellFlag::NotApplicable})
        if (s == to_string(f)) return f;
    return std::nullopt;
}

inline std::size_t protocol_index(ProtocolKind k) { return static_cast<std::size_t>(k); }

struct PhaseCell {
    double gamma = 0.0;
    double Omega = 0.0;
    std::array<EnergyResult, 4> energies{};
    std::array<bool, 4> stable{};
    std::array<CellFlag, 4> flags{CellFlag::NotApplicable, CellFlag::NotApplicable, CellFlag::NotApplicable,
                                  CellFlag::NotApplicable};
    std::optional<ProtocolKind> winner;
};

struct PhaseGridResult {
    GridSpec spec;
    /// Row-major: row = Omega index, column = gamma index.
    std::vector<PhaseCell> cells;
    std::size_t spot_checks = 0;
    double spot_check_max_rel_error = 0.0;

    [[nodiscard]] const PhaseCell& at(std::size_t i_gamma, std::size_t i_Omega) const {
        return cells[i_Omega * spec.gamma_axis.size() + i_gamma];
    }
};

/// Relative energy difference below which two protocols count as tied.
inline constexpr double kTieTolerance = 1e-9;

/// Lowest-energy protocol among candidates flagged ok; ties go to the smaller filter.
inline std::optional<ProtocolKind> select_winner(const std::array<EnergyResult, 4>& e,
                                                 const std::array<CellFlag, 4>& flags) {
    std::optional<ProtocolKind> best;
    for (auto k : kAllProtocols) {
        const std::size_t i = protocol_index(k);
        if (flags[i] != CellFlag::Ok) continue;
        if (!best) {
            best = k;
            continue;
        }
        const double eb = e[protocol_index(*best)].energy_over_hw;
        const double ek = e[i].energy_over_hw;
        const double tol = kTieTolerance * std::max(std::abs(eb), std::abs(ek));
        if (ek < eb - tol) {
            best = k;
        } else if (std::abs(ek - eb) <= tol && filter_dimension(k) < filter_dimension(*best)) {
            best = k;
        }
    }
    return best;
}

inline PhaseCell evaluate_cell(const GridSpec& spec, double gamma, double Omega) {
    PhaseCell cell;
    cell.gamma = gamma;
    cell.Omega = Omega;
    for (auto k : kAllProtocols) {
        const std::size_t i = protocol_index(k);
        if (!spec.includes(k)) continue;
        const ProtocolParams p{spec.lambda, spec.omega, gamma, Omega, k};
        cell.energies[i] = protocol_energy(p);
        const MomentSystem sys = build_moment_system(p);
        cell.stable[i] = is_stable(sys.A, eigenvalues(sys.A));
        if (!cell.energies[i].applicable()) {
            cell.flags[i] = CellFlag::NotApplicable;
        } else if (!cell.stable[i]) {
            cell.flags[i] = CellFlag::Unstable;
        } else if (!cell.energies[i].physical) {
            cell.flags[i] = CellFlag::Unphysical;
        } else {
            cell.flags[i] = CellFlag::Ok;
        }
    }
    cell.winner = select_winner(cell.energies, cell.flags);
    return cell;
}

struct SweepOptions {
    std::size_t spot_checks = 50;
    std::uint64_t spot_check_seed = 1;
    unsigned workers = 0;
};

/// Evaluates every (γ, Ω) cell from the closed forms, classifies stability from the
/// moment-system spectrum, and cross-checks a sample of cells against steady-state solves.
inline PhaseGridResult sweep(const GridSpec& spec, const SweepOptions& opts = {}) {
    spec.validate();
    const std::size_t ng = spec.gamma_axis.size();
    const std::size_t nO = spec.Omega_axis.size();
    PhaseGridResult res;
    res.spec = spec;
    res.cells.resize(ng * nO);

    unsigned workers = opts.workers != 0 ? opts.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, nO));
    auto do_rows = [&](std::size_t first, std::size_t stride) {
        for (std::size_t r = first; r < nO; r += stride)
            for (std::size_t c = 0; c < ng; ++c)
                res.cells[r * ng + c] = evaluate_cell(spec, spec.gamma_axis[c], spec.Omega_axis[r]);
    };
    if (workers <= 1) {
        do_rows(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(do_rows, w, workers);
        for (auto& t : pool) t.join();
    }

    std::mt19937_64 rng(opts.spot_check_seed);
    std::uniform_int_distribution<std::size_t> pick(0, res.cells.size() - 1);
    for (std::size_t s = 0; s < opts.spot_checks; ++s) {
        const PhaseCell& cell = res.cells[pick(rng)];
        for (auto k : spec.protocols) {
            const std::size_t i = protocol_index(k);
            if (!cell.stable[i] || !cell.energies[i].applicable()) continue;
            const ProtocolParams p{spec.lambda, spec.omega, cell.gamma, cell.Omega, k};
            const SteadyState ss = steady_state(build_moment_system(p));
            const double ref = cell.energies[i].energy_over_hw;
            res.spot_check_max_rel_error =
                std::max(res.spot_check_max_rel_error, std::abs(ss.energy_over_hw - ref) / std::abs(ref));
            ++res.spot_checks;
        }
    }
    return res;
}

inline std::string winner_name(const std::optional<ProtocolKind>& w) {
    return w ? std::string(to_string(*w)) : std::string("none");
}

inline constexpr const char* kPhaseCsvHeader = "gamma,Omega,E1,E2,E3,Ebp,winner,flags";

inline void write_phase_csv(const PhaseGridResult& res, std::ostream& os) {
    os << kPhaseCsvHeader << '\n';
    for (const auto& cell : res.cells) {
        os << csv::format_number(cell.gamma) << ',' << csv::format_number(cell.Omega);
        for (const auto& e : cell.energies) os << ',' << csv::format_number(e.energy_over_hw);
        os << ',' << winner_name(cell.winner) << ',';
        for (std::size_t i = 0; i < 4; ++i) os << (i ? ";" : "") << to_string(cell.flags[i]);
        os << '\n';
    }
}

inline void export_phase_csv(const PhaseGridResult& res, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_phase_csv(res, f);
    if (!f) throw std::runtime_error("failed writing '" + path + "'");
}

struct PhaseCsvRow {
    double gamma = 0.0;
    double Omega = 0.0;
    std::array<double, 4> energies{};
    std::string winner;
    std::array<CellFlag, 4> flags{};
};

inline std::vector<PhaseCsvRow> read_phase_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kPhaseCsvHeader) throw std::runtime_error("phase CSV: bad header");
    std::vector<PhaseCsvRow> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = csv::split(line);
        if (f.size() != 8) throw std::runtime_error("phase CSV: wrong field count on line " + std::to_string(lineno));
        PhaseCsvRow r;
        r.gamma = csv::parse_number(f[0]);
        r.Omega = csv::parse_number(f[1]);
        for (std::size_t i = 0; i < 4; ++i) r.energies[i] = csv::parse_number(f[2 + i]);
        r.winner = f[6];
        const auto fl = csv::split(f[7], ';');
        if (fl.size() != 4) throw std::runtime_error("phase CSV: expected four flags on line " + std::to_string(lineno));
        for (std::size_t i = 0; i < 4; ++i) {
            const auto parsed = parse_cell_flag(fl[i]);
            if (!parsed) throw std::runtime_error("phase CSV: unknown flag '" + fl[i] + "'");
            r.flags[i] = *parsed;
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace filtfb
