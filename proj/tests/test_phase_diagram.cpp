#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "filtfb/filtfb.hpp"

using namespace filtfb;
using Catch::Matchers::WithinRel;

namespace {

// first γ of the given winner along a single-Ω grid row
double first_gamma_with(const PhaseGridResult& res, std::size_t iO, ProtocolKind k) {
    for (std::size_t ig = 0; ig < res.spec.gamma_axis.size(); ++ig)
        if (res.at(ig, iO).winner == k) return res.spec.gamma_axis[ig];
    return 0.0;
}

GridSpec row_spec(double Omega, std::size_t n) {
    GridSpec g;
    g.gamma_axis = log_axis(0.5, 20.0, n);
    g.Omega_axis = {Omega};
    return g;
}

}  // namespace

TEST_CASE("log axis") {
    const RealVector a = log_axis(0.1, 1000.0, 5);
    REQUIRE(a.size() == 5);
    CHECK(a.front() == 0.1);
    CHECK(a.back() == 1000.0);
    CHECK_THAT(a[2], WithinRel(10.0, 1e-14));
    CHECK(log_axis(2.0, 5.0, 1) == RealVector{2.0});
    CHECK_THROWS_AS(log_axis(-1.0, 1.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(log_axis(1.0, 10.0, 0), std::invalid_argument);
}

TEST_CASE("grid validation") {
    GridSpec g = default_grid(10);
    CHECK_NOTHROW(g.validate());
    g.gamma_axis = {1.0, 1.0};
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g = default_grid(10);
    g.Omega_axis.clear();
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g = default_grid(10);
    g.protocols.clear();
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("flag names round-trip") {
    for (auto f : {CellFlag::Ok, CellFlag::Unstable, CellFlag::Unphysical, CellFlag::NotApplicable})
        CHECK(parse_cell_flag(to_string(f)) == f);
    CHECK_FALSE(parse_cell_flag("maybe").has_value());
}

TEST_CASE("winner selection") {
    std::array<EnergyResult, 4> e{EnergyResult::from_value(0.7), EnergyResult::from_value(0.6),
                                  EnergyResult::from_value(0.65), EnergyResult::from_value(0.55)};
    std::array<CellFlag, 4> ok{CellFlag::Ok, CellFlag::Ok, CellFlag::Ok, CellFlag::Ok};
    CHECK(select_winner(e, ok) == ProtocolKind::BandPass);
    ok[3] = CellFlag::Unstable;
    CHECK(select_winner(e, ok) == ProtocolKind::LowPass2);

    // equal energies: fewer layers wins
    e = {EnergyResult::from_value(0.6), EnergyResult::from_value(0.6), EnergyResult::from_value(0.6),
         EnergyResult::from_value(0.6 * (1 - 1e-12))};
    ok = {CellFlag::Unphysical, CellFlag::Ok, CellFlag::Ok, CellFlag::Ok};
    CHECK(select_winner(e, ok) == ProtocolKind::LowPass2);
    ok[0] = CellFlag::Ok;
    CHECK(select_winner(e, ok) == ProtocolKind::LowPass1);

    const std::array<CellFlag, 4> none{CellFlag::Unstable, CellFlag::Unphysical, CellFlag::NotApplicable,
                                       CellFlag::Unstable};
    CHECK_FALSE(select_winner(e, none).has_value());
}

TEST_CASE("cell with no qualifying candidate has no winner") {
    GridSpec g = default_grid(2);
    g.protocols = {ProtocolKind::BandPass};
    const PhaseCell c = evaluate_cell(g, 1.0, 2.0);
    CHECK(c.flags[protocol_index(ProtocolKind::BandPass)] == CellFlag::Unstable);
    CHECK(c.flags[protocol_index(ProtocolKind::LowPass1)] == CellFlag::NotApplicable);
    CHECK_FALSE(c.winner.has_value());
    CHECK(winner_name(c.winner) == "none");
}

TEST_CASE("cell flags") {
    const GridSpec g = default_grid(2);
    const PhaseCell good = evaluate_cell(g, 1.0, 0.5);
    for (auto f : good.flags) CHECK(f == CellFlag::Ok);
    CHECK(good.winner.has_value());
    // band-pass resonance 4γ² + ω² = 4Ω²
    const PhaseCell res = evaluate_cell(g, 1.0, std::sqrt(1.25));
    CHECK(res.flags[protocol_index(ProtocolKind::BandPass)] == CellFlag::NotApplicable);
}

TEST_CASE("large-Omega row switches at the analytic thresholds") {
    const PhaseGridResult res = sweep(row_spec(1e4, 200));
    const double cell = res.spec.gamma_axis[1] / res.spec.gamma_axis[0];
    const double b12 = first_gamma_with(res, 0, ProtocolKind::LowPass2);
    const double b23 = first_gamma_with(res, 0, ProtocolKind::LowPass3);
    const double t12 = 2.0 * std::numbers::sqrt2, t23 = 4.0;
    CHECK(b12 >= t12);
    CHECK(b12 <= t12 * cell);
    CHECK(b23 >= t23);
    CHECK(b23 <= t23 * cell);
    CHECK(res.at(0, 0).winner == ProtocolKind::LowPass1);
}

TEST_CASE("threshold locations are stable under grid refinement") {
    const PhaseGridResult coarse = sweep(row_spec(1e3, 100));
    const PhaseGridResult fine = sweep(row_spec(1e3, 199));
    const double cell = coarse.spec.gamma_axis[1] / coarse.spec.gamma_axis[0];
    for (auto k : {ProtocolKind::LowPass2, ProtocolKind::LowPass3}) {
        const double a = first_gamma_with(coarse, 0, k), b = first_gamma_with(fine, 0, k);
        CHECK(std::max(a / b, b / a) < cell);
    }
}

TEST_CASE("band-pass never wins as Omega vanishes") {
    GridSpec g;
    g.gamma_axis = log_axis(0.1, 100.0, 60);
    g.Omega_axis = {1e-6};
    const PhaseGridResult res = sweep(g);
    for (const auto& c : res.cells) CHECK(c.winner != ProtocolKind::BandPass);
}

TEST_CASE("winner map is invariant under a common time rescaling") {
    const GridSpec g = default_grid(40);
    const PhaseGridResult a = sweep(g), b = sweep(g.rescaled(2.0));
    REQUIRE(a.cells.size() == b.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        REQUIRE(a.cells[i].winner == b.cells[i].winner);
        REQUIRE(a.cells[i].flags == b.cells[i].flags);
        for (std::size_t k = 0; k < 4; ++k) {
            const double x = a.cells[i].energies[k].energy_over_hw, y = b.cells[i].energies[k].energy_over_hw;
            REQUIRE(((std::isnan(x) && std::isnan(y)) || x == y));
        }
    }
}

TEST_CASE("spot checks agree with moment-system solves") {
    const PhaseGridResult res = sweep(default_grid(50));
    CHECK(res.spot_checks > 0);
    CHECK(res.spot_check_max_rel_error <= 1e-9);
}

TEST_CASE("sweep output does not depend on the worker count") {
    const GridSpec g = default_grid(30);
    std::ostringstream a, b;
    write_phase_csv(sweep(g, {50, 1, 1}), a);
    write_phase_csv(sweep(g, {50, 1, 4}), b);
    CHECK(a.str() == b.str());
}

TEST_CASE("phase CSV header and single-cell round trip") {
    GridSpec g;
    g.gamma_axis = {1.25};
    g.Omega_axis = {3.5};
    const PhaseGridResult res = sweep(g);
    std::ostringstream os;
    write_phase_csv(res, os);
    CHECK(os.str().substr(0, os.str().find('\n')) == "gamma,Omega,E1,E2,E3,Ebp,winner,flags");
    std::istringstream is(os.str());
    const auto rows = read_phase_csv(is);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].gamma == 1.25);
    CHECK(rows[0].Omega == 3.5);
    for (std::size_t k = 0; k < 4; ++k)
        CHECK_THAT(rows[0].energies[k], WithinRel(res.cells[0].energies[k].energy_over_hw, 1e-11));
    CHECK(rows[0].winner == winner_name(res.cells[0].winner));
    CHECK(rows[0].flags == res.cells[0].flags);
}

TEST_CASE("re-read winners match the argmin of re-read energies") {
    const PhaseGridResult res = sweep(default_grid(60));
    std::ostringstream os;
    write_phase_csv(res, os);
    std::istringstream is(os.str());
    for (const auto& r : read_phase_csv(is)) {
        std::optional<std::size_t> best;
        for (std::size_t k = 0; k < 4; ++k) {
            if (r.flags[k] != CellFlag::Ok) continue;
            if (!best || r.energies[k] < r.energies[*best] * (1 - 1e-9)) best = k;
        }
        REQUIRE(r.winner == (best ? std::string(to_string(kAllProtocols[*best])) : "none"));
    }
}

TEST_CASE("export writes a file and reports I/O failure") {
    GridSpec g;
    g.gamma_axis = {1.0, 2.0};
    g.Omega_axis = {1.0};
    const PhaseGridResult res = sweep(g);
    const auto path = std::filesystem::temp_directory_path() / "filtfb_phase_test.csv";
    export_phase_csv(res, path.string());
    std::ifstream f(path);
    CHECK(read_phase_csv(f).size() == 2);
    std::filesystem::remove(path);
    CHECK_THROWS(export_phase_csv(res, "/nonexistent-dir/x.csv"));
}

TEST_CASE("malformed phase CSV is rejected") {
    std::istringstream bad_header("gamma,Omega\n");
    CHECK_THROWS(read_phase_csv(bad_header));
    std::istringstream bad_flags("gamma,Omega,E1,E2,E3,Ebp,winner,flags\n1,1,1,1,1,1,lowpass1,ok;ok\n");
    CHECK_THROWS(read_phase_csv(bad_flags));
}
