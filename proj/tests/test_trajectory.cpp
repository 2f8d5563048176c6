#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "filtfb/filtfb.hpp"

using namespace filtfb;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
    return d;
}

// coherent state |α⟩ truncated to n levels
QuantumState coherent(std::size_t n, Complex alpha) {
    ComplexVector psi(n);
    Complex c = 1.0;
    double fact = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) {
            c *= alpha;
            fact *= static_cast<double>(k);
        }
        psi[k] = std::exp(-0.5 * std::norm(alpha)) * c / std::sqrt(fact);
    }
    return QuantumState::pure(psi);
}

}  // namespace

TEST_CASE("truncated oscillator operators") {
    const std::size_t n = 12;
    const auto o = build_truncated_oscillator(n, 1.7);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            CHECK(o.x(i, j).imag() == 0.0);
            CHECK(o.x(i, j) == o.x(j, i));
            CHECK(o.p(i, j).real() == 0.0);
            CHECK(o.p(i, j) == -o.p(j, i));
        }
    const ComplexMatrix comm = o.x * o.p - o.p * o.x;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i >= n - 2 && j >= n - 2) continue;
            const Complex expect = i == j ? Complex(0.0, 1.0) : Complex(0.0);
            CHECK(std::abs(comm(i, j) - expect) < 1e-14);
        }
    // the last level of the truncated x² + p² is spurious and lands mid-spectrum, so match by nearest eigenvalue
    const RealVector ev = hermitian_eigenvalues(o.H0);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        const double level = 1.7 * (static_cast<double>(k) + 0.5);
        double nearest = ev[0];
        for (double e : ev)
            if (std::abs(e - level) < std::abs(nearest - level)) nearest = e;
        CHECK_THAT(nearest, WithinRel(level, 1e-12));
    }
    CHECK_THROWS_AS(build_truncated_oscillator(2, 1.0), std::invalid_argument);
}

TEST_CASE("banded operators multiply like dense ones") {
    const auto o = build_truncated_oscillator(9, 1.0);
    const BandedOperator bx(o.x), bh(o.H0);
    CHECK(bx.lower_bandwidth() == 1);
    CHECK(bx.upper_bandwidth() == 1);
    CHECK(bh.lower_bandwidth() == 0);  // x² + p² is diagonal in the Fock basis
    const BandedOperator bx2(o.x * o.x);
    CHECK(bx2.lower_bandwidth() == 2);
    std::mt19937_64 rng(51);
    std::normal_distribution<double> nd;
    ComplexMatrix r(9, 9);
    for (auto& v : r.data()) v = Complex(nd(rng), nd(rng));
    ComplexMatrix out(9, 9);
    bh.left_multiply(r, out);
    CHECK(max_abs_diff(out, o.H0 * r) < 1e-12);
    bx.right_multiply(r, out);
    CHECK(max_abs_diff(out, r * o.x) < 1e-12);
    const QuantumState s = coherent(9, {0.4, -0.3});
    CHECK_THAT(bx.expectation(s.rho), WithinAbs((o.x * s.rho).trace().real(), 1e-14));
}

TEST_CASE("shifted trap feedback") {
    const auto o = build_truncated_oscillator(10, 1.3);
    SignalState g = SignalState::zeros(2, 2);
    CHECK(max_abs_diff(shifted_trap_feedback(o, g, 1), o.H0) == 0.0);

    std::mt19937_64 rng(52);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        for (auto& ch : g.channels)
            for (auto& v : ch) v = nd(rng);
        const double gx = g.channels[0][1], gp = g.channels[1][1];
        const ComplexMatrix h = shifted_trap_feedback(o, g, 1);
        const ComplexMatrix id = ComplexMatrix::identity(10);
        const ComplexMatrix xs = o.x - Complex(gx) * id, ps = o.p - Complex(gp) * id;
        const ComplexMatrix direct = Complex(0.5 * 1.3) * (ps * ps + xs * xs);
        CHECK(max_abs_diff(h, direct) < 1e-12);
        CHECK(is_hermitian(h));
    }
    CHECK_THROWS_AS(shifted_trap_feedback(o, g, 2), std::invalid_argument);
}

TEST_CASE("protocol filters and taps") {
    CHECK(protocol_filter({1, 1, 2, 0, ProtocolKind::LowPass1}).tap == 0);
    const auto p2 = protocol_filter({1, 1, 2, 3, ProtocolKind::LowPass2});
    CHECK(p2.tap == 1);
    CHECK(p2.filter.M == lowpass_cascade({2.0, 3.0}).M);
    const auto p3 = protocol_filter({1, 1, 2, 3, ProtocolKind::LowPass3});
    CHECK(p3.tap == 2);
    CHECK(p3.filter.M == lowpass_cascade({2.0, 3.0, 3.0}).M);
    const auto bp = protocol_filter({1, 1, 2, 3, ProtocolKind::BandPass});
    CHECK(bp.tap == 0);
    CHECK(bp.filter.M == bandpass(2.0, 3.0).M);
}

TEST_CASE("a Hamiltonian-only step conserves energy") {
    auto m = measured_oscillator(15, 1.0, 0.0, lowpass_cascade({1.0}));
    StepWorkspace ws(m);
    QuantumState s = coherent(15, {0.8, 0.2});
    SignalState g = SignalState::zeros(2, 1);
    const BandedOperator h(m.H0);
    const double e0 = h.expectation(s.rho);
    const RealVector dw{0.0, 0.0};
    for (int i = 0; i < 100; ++i) ws.step(s, g, 1e-3, dw);
    CHECK_THAT(h.expectation(s.rho), WithinAbs(e0, 1e-10));
    CHECK(g.channels[0][0] == 0.0);
}

TEST_CASE("each step keeps the state Hermitian with unit trace") {
    auto m = cooling_model({1.0, 1.0, 2.0, 0.0, ProtocolKind::LowPass1}, 12);
    StepWorkspace ws(m);
    QuantumState s = ground_state(m.H0);
    SignalState g = SignalState::zeros(2, 1);
    NoiseStream noise(5, 0);
    for (int i = 0; i < 200; ++i) {
        ws.step(s, g, 1e-3, noise);
        REQUIRE(hermiticity_defect(s.rho) == 0.0);
        REQUIRE_THAT(s.trace(), WithinAbs(1.0, 1e-14));
    }
    // Euler–Maruyama is not positivity preserving; negative eigenvalues stay at integrator-error size
    CHECK(s.min_eigenvalue() > -5e-3);
    CHECK(s.purity() <= 1.0 + 1e-12);
}

TEST_CASE("purity of a monitored pure state is preserved up to integrator error") {
    // Each Euler–Maruyama step moves the purity by 2λVar(A)(dW² − dt), a zero-mean walk of size
    // O(√(T dt)), so the bound is checked on the path average. Coarse increments are pair sums of
    // the fine ones, so both resolutions follow the same Brownian path.
    auto defect = [](double dt, const RealVector& dw) {
        auto m = measured_oscillator(20, 1.0, 1.0, lowpass_cascade({1.0}));
        m.measured_ops.resize(1);
        StepWorkspace ws(m);
        QuantumState s = coherent(20, {0.5, 0.5});
        SignalState g = SignalState::zeros(1, 1);
        double worst = 0.0;
        for (std::size_t i = 0; i < dw.size(); ++i) {
            ws.step(s, g, dt, std::span<const double>(dw.data() + i, 1));
            worst = std::max(worst, 1.0 - s.purity());
        }
        return worst;
    };
    const int paths = 16;
    double coarse_sum = 0.0, fine_sum = 0.0;
    for (int seed = 0; seed < paths; ++seed) {
        NoiseStream noise(17, static_cast<std::uint64_t>(seed));
        const double fine_dt = 5e-5;
        RealVector fine(2000), coarse(1000);
        for (auto& w : fine) w = std::sqrt(fine_dt) * noise.gaussian();
        for (std::size_t i = 0; i < coarse.size(); ++i) coarse[i] = fine[2 * i] + fine[2 * i + 1];
        coarse_sum += defect(2.0 * fine_dt, coarse);
        fine_sum += defect(fine_dt, fine);
    }
    CHECK(coarse_sum / paths <= 5e-3);
    CHECK(fine_sum < coarse_sum);
}

TEST_CASE("ground state of the bare oscillator") {
    const auto o = build_truncated_oscillator(10, 2.0);
    const QuantumState g = ground_state(o.H0);
    CHECK_THAT(BandedOperator(o.H0).expectation(g.rho), WithinAbs(1.0, 1e-12));
    CHECK_THAT(g.purity(), WithinAbs(1.0, 1e-12));
}

TEST_CASE("ensembles are reproducible and independent of worker count") {
    auto m = cooling_model({1.0, 1.0, 2.0, 2.0, ProtocolKind::LowPass2}, 10);
    TrajectoryConfig cfg;
    cfg.dt = 1e-3;
    cfg.n_steps = 200;
    cfg.n_traj = 6;
    cfg.base_seed = 123;
    cfg.record_stride = 20;
    cfg.workers = 1;
    const TrajectoryRecord a = run_ensemble(m, cfg);
    cfg.workers = 3;
    const TrajectoryRecord b = run_ensemble(m, cfg);
    CHECK(a.energy_mean == b.energy_mean);
    CHECK(a.energy_stderr == b.energy_stderr);
    CHECK(a.signal_var == b.signal_var);
    CHECK(a.expectation_mean == b.expectation_mean);
    CHECK(a.times.size() == 11);
    CHECK(a.times.back() == Catch::Approx(0.2));
    cfg.base_seed = 124;
    CHECK(run_ensemble(m, cfg).energy_mean != a.energy_mean);
}

TEST_CASE("config validation") {
    auto m = frozen_drive_model(lowpass_cascade({1.0}), 1.0, 0.0);
    TrajectoryConfig cfg;
    cfg.dt = 0.0;
    CHECK_THROWS_AS(run_ensemble(m, cfg), std::invalid_argument);
    cfg.dt = 1e-3;
    cfg.n_traj = 0;
    CHECK_THROWS_AS(run_ensemble(m, cfg), std::invalid_argument);
    SystemModel bad = m;
    bad.measured_ops = {ComplexMatrix{{Complex(0.0, 1.0)}}};
    cfg.n_traj = 1;
    CHECK_THROWS_AS(run_ensemble(bad, cfg), std::invalid_argument);
}

TEST_CASE("runaway signals are reported with the trajectory index") {
    auto m = frozen_drive_model(kernel_filter({{-500.0}, {1.0}}), 1.0, 0.0);
    TrajectoryConfig cfg;
    cfg.dt = 1e-2;
    cfg.n_steps = 100000;
    cfg.n_traj = 4;
    cfg.workers = 2;
    try {
        run_ensemble(m, cfg);
        FAIL("expected a numerical failure");
    } catch (const NumericalError& e) {
        REQUIRE(e.trajectory().has_value());
        CHECK(*e.trajectory() == 0);
        REQUIRE(e.step().has_value());
    }
}

TEST_CASE("frozen drive signals settle at the DC response") {
    const double a0 = 0.6, l = 1.0;
    const FilterModel f = lowpass_cascade({2.0, 3.0});
    TrajectoryConfig cfg;
    cfg.dt = 1e-3;
    cfg.n_steps = 8000;
    cfg.n_traj = 200;
    cfg.base_seed = 77;
    cfg.record_stride = cfg.n_steps;
    const TrajectoryRecord rec = run_ensemble(frozen_drive_model(f, l, a0), cfg);
    const auto st = stationary_statistics(f, l, a0);
    for (std::size_t k = 0; k < 2; ++k) {
        const double se = std::sqrt(rec.signal_var[0][k].back() / 200.0);
        CHECK(std::abs(rec.signal_mean[0][k].back() - st.mean[k]) <= 3.0 * se);
    }
}

TEST_CASE("OU variance of a single stage") {
    const double g = 4.0, l = 0.5;
    TrajectoryConfig cfg;
    cfg.dt = 1e-3;
    cfg.n_steps = 5000;
    cfg.n_traj = 300;
    cfg.base_seed = 78;
    cfg.record_stride = cfg.n_steps;
    const TrajectoryRecord rec = run_ensemble(frozen_drive_model(lowpass_cascade({g}), l, 0.0), cfg);
    CHECK(std::abs(rec.signal_var[0][0].back() - g / (8.0 * l)) <= 3.0 * rec.signal_var_stderr[0][0].back());
}

TEST_CASE("a too-small Fock space is flagged") {
    auto m = measured_oscillator(4, 1.0, 1.0, lowpass_cascade({1.0}));
    TrajectoryConfig cfg;
    cfg.dt = 1e-3;
    cfg.n_steps = 2000;
    cfg.n_traj = 4;
    cfg.base_seed = 3;
    cfg.record_stride = 100;
    const TrajectoryRecord rec = run_ensemble(m, cfg);
    CHECK(rec.truncation_warning);
    CHECK_FALSE(rec.flagged_trajectories.empty());
    CHECK(rec.max_top_population > 1e-3);
}

TEST_CASE("measurement heats the bare oscillator at rate omega lambda") {
    // short, small ensemble; the full-size check lives in the acceptance suite
    auto m = measured_oscillator(15, 1.0, 1.0, lowpass_cascade({1.0}));
    TrajectoryConfig cfg;
    cfg.dt = 1e-3;
    cfg.n_steps = 300;
    cfg.n_traj = 100;
    cfg.base_seed = 79;
    cfg.record_stride = 300;
    const TrajectoryRecord rec = run_ensemble(m, cfg);
    const double rise = rec.energy_mean.back() - rec.energy_mean.front();
    CHECK(std::abs(rise - 0.3) <= 4.0 * rec.energy_stderr.back());
}
