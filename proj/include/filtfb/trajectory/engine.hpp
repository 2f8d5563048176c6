#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Eigenvalues>

#include "filtfb/errors.hpp"
#include "filtfb/filters.hpp"
#include "filtfb/numerics/noise.hpp"
#include "filtfb/protocol.hpp"
#include "filtfb/trajectory/quantum.hpp"

namespace filtfb {

/// Filtered signal vector G for every measurement channel.
struct SignalState {
    std::vector<RealVector> channels;

    static SignalState zeros(std::size_t n_channels, std::size_t dim) {
        return {std::vector<RealVector>(n_channels, RealVector(dim, 0.0))};
    }
};

/// Maps the current signals of all channels to the Hamiltonian applied during the next step.
using FeedbackRule = std::function<ComplexMatrix(const SignalState&)>;

/// Continuously monitored system: H0, measured observables (one record channel each,
/// all sharing strength lambda and one filter realization), and a feedback rule.
struct SystemModel {
    ComplexMatrix H0;
    std::vector<ComplexMatrix> measured_ops;
    double lambda = 1.0;
    FilterModel filter;
    FeedbackRule feedback;       ///< empty: H0 throughout
    double energy_scale = 1.0;   ///< recorded energy is Tr(ρ H(G)) / energy_scale

    void validate() const {
        if (!H0.is_square()) throw std::invalid_argument("SystemModel: H0 must be square");
        if (!is_hermitian(H0)) throw std::invalid_argument("SystemModel: H0 is not Hermitian");
        if (measured_ops.empty()) throw std::invalid_argument("SystemModel: no measured operators");
        for (const auto& a : measured_ops) {
            if (a.rows() != H0.rows() || a.cols() != H0.cols()) {
                throw std::invalid_argument("SystemModel: operator dimensions differ");
            }
            if (!is_hermitian(a)) throw std::invalid_argument("SystemModel: measured operator is not Hermitian");
        }
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
            throw std::invalid_argument("SystemModel: lambda must be nonnegative");
        }
        if (filter.dim() == 0) throw std::invalid_argument("SystemModel: filter is empty");
        if (!(energy_scale > 0.0)) throw std::invalid_argument("SystemModel: energy_scale must be positive");
    }

    [[nodiscard]] ComplexMatrix hamiltonian(const SignalState& g) const { return feedback ? feedback(g) : H0; }
};

/// (ω/2)[(p − g_p)² + (x − g_x)²] with g_x, g_p read from filter component `tap`
/// of the x (channel 0) and p (channel 1) records.
inline ComplexMatrix shifted_trap_feedback(const OscillatorOperators& osc, const SignalState& g, std::size_t tap) {
    if (g.channels.size() < 2) throw std::invalid_argument("shifted_trap_feedback: needs x and p channels");
    if (tap >= g.channels[0].size() || tap >= g.channels[1].size()) {
        throw std::invalid_argument("shifted_trap_feedback: tap index " + std::to_string(tap) + " out of range");
    }
    const double gx = g.channels[0][tap];
    const double gp = g.channels[1][tap];
    ComplexMatrix h = osc.H0;
    const std::size_t n = osc.cutoff;
    const double w = osc.omega;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) h(i, j) -= w * (gx * osc.x(i, j) + gp * osc.p(i, j));
        h(i, i) += 0.5 * w * (gx * gx + gp * gp);
    }
    return h;
}

/// Filter and feedback tap used by each cooling protocol.
struct ProtocolFilter {
    FilterModel filter;
    std::size_t tap = 0;
};

inline ProtocolFilter protocol_filter(const ProtocolParams& p) {
    p.validate();
    switch (p.kind) {
        case ProtocolKind::LowPass1: return {lowpass_cascade({p.gamma}), 0};
        case ProtocolKind::LowPass2: return {lowpass_cascade({p.gamma, p.Omega}), 1};
        case ProtocolKind::LowPass3: return {lowpass_cascade({p.gamma, p.Omega, p.Omega}), 2};
        case ProtocolKind::BandPass: return {bandpass(p.gamma, p.Omega), 0};
    }
    throw std::invalid_argument("unknown protocol");
}

/// Oscillator with x and p monitored at strength λ and the protocol's shifted-trap
/// feedback. Energies are recorded in units of ħω.
inline SystemModel cooling_model(const ProtocolParams& p, std::size_t cutoff) {
    const auto pf = protocol_filter(p);
    auto osc = build_truncated_oscillator(cutoff, p.omega);
    SystemModel m;
    m.H0 = osc.H0;
    m.measured_ops = {osc.x, osc.p};
    m.lambda = p.lambda;
    m.filter = pf.filter;
    m.energy_scale = p.omega;
    m.feedback = [osc = std::move(osc), tap = pf.tap](const SignalState& g) { return shifted_trap_feedback(osc, g, tap); };
    return m;
}

/// Oscillator with x and p monitored and no feedback.
inline SystemModel measured_oscillator(std::size_t cutoff, double omega, double lambda, FilterModel filter) {
    auto osc = build_truncated_oscillator(cutoff, omega);
    SystemModel m;
    m.H0 = osc.H0;
    m.measured_ops = {osc.x, osc.p};
    m.lambda = lambda;
    m.filter = std::move(filter);
    m.energy_scale = omega;
    return m;
}

/// One-level system whose measured observable is the constant `mean_A`: the record
/// is then mean_A plus white noise and only the filter SDE is exercised.
inline SystemModel frozen_drive_model(FilterModel filter, double lambda, double mean_A) {
    SystemModel m;
    m.H0 = ComplexMatrix(1, 1);
    m.measured_ops = {ComplexMatrix{{Complex(mean_A, 0.0)}}};
    m.lambda = lambda;
    m.filter = std::move(filter);
    return m;
}

/// Operators of a SystemModel in banded form plus scratch space for one trajectory.
class StepWorkspace {
public:
    explicit StepWorkspace(const SystemModel& model) : model_(&model) {
        model.validate();
        const std::size_t n = model.H0.rows();
        for (const auto& a : model.measured_ops) {
            ops_.emplace_back(a);
            squares_.emplace_back(a * a);
        }
        static_h_ = BandedOperator(model.H0);
        for (auto* m : {&t1_, &t2_, &t3_, &drho_}) *m = ComplexMatrix(n, n);
        expectations_.resize(ops_.size());
        dw_.resize(ops_.size());
    }

    [[nodiscard]] const SystemModel& model() const noexcept { return *model_; }
    [[nodiscard]] const std::vector<BandedOperator>& ops() const noexcept { return ops_; }
    [[nodiscard]] const RealVector& expectations() const noexcept { return expectations_; }

    [[nodiscard]] BandedOperator hamiltonian(const SignalState& g) const {
        return model_->feedback ? BandedOperator(model_->feedback(g)) : static_h_;
    }

    /// Euler–Maruyama step with explicit Wiener increments dW (one per channel, variance dt).
    void step(QuantumState& state, SignalState& signals, double dt, std::span<const double> dW) {
        const SystemModel& m = *model_;
        if (dW.size() != ops_.size()) throw std::invalid_argument("step: one Wiener increment per channel");
        if (signals.channels.size() != ops_.size()) throw std::invalid_argument("step: one signal vector per channel");
        ComplexMatrix& rho = state.rho;
        const std::size_t n = rho.rows();
        const double lambda = m.lambda;
        const double sql = std::sqrt(lambda);

        const BandedOperator h = hamiltonian(signals);
        for (std::size_t k = 0; k < ops_.size(); ++k) expectations_[k] = ops_[k].expectation(rho);

        // -i[H, ρ] dt, with ρH = (Hρ)†
        h.left_multiply(rho, t1_);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                drho_(i, j) = Complex(0.0, -dt) * (t1_(i, j) - std::conj(t1_(j, i)));

        for (std::size_t k = 0; k < ops_.size(); ++k) {
            const auto& a = ops_[k];
            const double mean = expectations_[k];
            a.left_multiply(rho, t1_);  // Aρ
            // t2 = ρA = (Aρ)†
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) t2_(i, j) = std::conj(t1_(j, i));
            const double noise = sql * dW[k];
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    drho_(i, j) += noise * (t1_(i, j) + t2_(i, j) - 2.0 * mean * rho(i, j));
            a.left_multiply(t2_, t3_);  // AρA
            squares_[k].left_multiply(rho, t1_);  // A²ρ
            const double ldt = lambda * dt;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    drho_(i, j) += ldt * (t3_(i, j) - 0.5 * (t1_(i, j) + std::conj(t1_(j, i))));
        }

        for (std::size_t i = 0; i < n * n; ++i) rho.data()[i] += drho_.data()[i];
        state.hermitize_and_normalize();

        // dG = M G dt + b z dt with z dt = <A> dt + dW / sqrt(4λ); at λ = 0 there is no record
        const auto& f = m.filter;
        const std::size_t d = f.dim();
        const bool recording = lambda > 0.0;
        const double noise_gain = recording ? 1.0 / std::sqrt(4.0 * lambda) : 0.0;
        for (std::size_t k = 0; k < ops_.size(); ++k) {
            RealVector& g = signals.channels[k];
            if (g.size() != d) throw std::invalid_argument("step: signal dimension does not match filter");
            const double zdt = recording ? expectations_[k] * dt + noise_gain * dW[k] : 0.0;
            RealVector next(d);
            for (std::size_t i = 0; i < d; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < d; ++j) acc += f.M(i, j) * g[j];
                next[i] = g[i] + acc * dt + f.b[i] * zdt;
            }
            g = std::move(next);
        }
    }

    /// Same step drawing dW_k ~ N(0, dt) from `noise`.
    void step(QuantumState& state, SignalState& signals, double dt, NoiseStream& noise) {
        const double s = std::sqrt(dt);
        for (auto& w : dw_) w = s * noise.gaussian();
        step(state, signals, dt, dw_);
    }

private:
    const SystemModel* model_;
    std::vector<BandedOperator> ops_;
    std::vector<BandedOperator> squares_;
    BandedOperator static_h_;
    ComplexMatrix t1_, t2_, t3_, drho_;
    RealVector expectations_;
    RealVector dw_;
};

/// Single Euler–Maruyama step of the conditioned state and the filtered records.
inline void step(QuantumState& state, SignalState& signals, const SystemModel& model, double dt,
                 NoiseStream& noise) {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
    StepWorkspace ws(model);
    ws.step(state, signals, dt, noise);
}

struct TrajectoryConfig {
    double dt = 1e-3;
    std::size_t n_steps = 1000;
    std::size_t n_traj = 1;
    std::uint64_t base_seed = 0;
    std::size_t record_stride = 1;
    std::optional<QuantumState> initial_state;    ///< default: ground state of H0
    std::optional<SignalState> initial_signals;   ///< default: zeros
    unsigned workers = 0;                         ///< 0: hardware concurrency
    double truncation_threshold = 1e-3;           ///< warn when top-two level populations exceed it

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
        if (n_traj < 1) throw std::invalid_argument("n_traj must be at least 1");
        if (record_stride < 1) throw std::invalid_argument("record_stride must be at least 1");
    }
};

/// Ensemble statistics over trajectories at every recorded time.
///
/// Signal statistics are indexed [channel][component][record]. Variances are the
/// unbiased across-trajectory sample variance; var_stderr is the standard error of
/// that variance estimate from the fourth central moment.
struct TrajectoryRecord {
    std::size_t n_traj = 0;
    RealVector times;
    RealVector energy_mean;
    RealVector energy_stderr;
    std::vector<RealVector> expectation_mean;    ///< [channel][record]
    std::vector<RealVector> expectation_stderr;  ///< [channel][record]
    std::vector<std::vector<RealVector>> signal_mean;
    std::vector<std::vector<RealVector>> signal_var;
    std::vector<std::vector<RealVector>> signal_var_stderr;
    /// Largest population of either of the two highest levels seen in any trajectory.
    double max_top_population = 0.0;
    bool truncation_warning = false;
    std::vector<std::size_t> flagged_trajectories;
};

/// Lowest eigenvector of H0 as a density matrix.
inline QuantumState ground_state(const ComplexMatrix& h0) {
    const auto n = static_cast<Eigen::Index>(h0.rows());
    Eigen::MatrixXcd e(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) e(i, j) = h0(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(e);
    ComplexVector psi(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) psi[static_cast<std::size_t>(i)] = solver.eigenvectors()(i, 0);
    return QuantumState::pure(psi);
}

namespace detail {

struct TrajectorySamples {
    // [record][quantity]: energy, <A_k>..., G[channel][component]...
    std::vector<RealVector> rows;
    double max_top_population = 0.0;
};

inline TrajectorySamples simulate_one(const SystemModel& model, const TrajectoryConfig& cfg, std::size_t index) {
    StepWorkspace ws(model);
    NoiseStream noise(cfg.base_seed, index);
    QuantumState state = cfg.initial_state ? *cfg.initial_state : ground_state(model.H0);
    SignalState sig = cfg.initial_signals ? *cfg.initial_signals
                                          : SignalState::zeros(model.measured_ops.size(), model.filter.dim());
    const std::size_t n = state.dim();
    TrajectorySamples out;

    auto record = [&]() {
        RealVector row;
        row.push_back(ws.hamiltonian(sig).expectation(state.rho) / model.energy_scale);
        for (const auto& a : ws.ops()) row.push_back(a.expectation(state.rho));
        for (const auto& g : sig.channels) row.insert(row.end(), g.begin(), g.end());
        out.rows.push_back(std::move(row));
    };
    auto top_population = [&]() {
        if (n < 3) return 0.0;
        return std::max(state.rho(n - 1, n - 1).real(), state.rho(n - 2, n - 2).real());
    };

    record();
    out.max_top_population = top_population();
    for (std::size_t s = 1; s <= cfg.n_steps; ++s) {
        try {
            ws.step(state, sig, cfg.dt, noise);
        } catch (const std::runtime_error& e) {
            throw NumericalError(e.what(), s, index);
        }
        for (const auto& g : sig.channels)
            for (double v : g)
                if (!std::isfinite(v)) throw NumericalError("signal became non-finite", s, index);
        out.max_top_population = std::max(out.max_top_population, top_population());
        if (s % cfg.record_stride == 0) record();
    }
    return out;
}

}  // namespace detail

/// Runs n_traj independent trajectories; trajectory i draws from NoiseStream(base_seed, i).
/// Statistics are reduced in trajectory-index order, so the record does not depend on
/// the number of workers.
inline TrajectoryRecord run_ensemble(const SystemModel& model, const TrajectoryConfig& cfg) {
    cfg.validate();
    model.validate();
    const std::size_t n_traj = cfg.n_traj;
    std::vector<detail::TrajectorySamples> samples(n_traj);

    unsigned workers = cfg.workers != 0 ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_traj));
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::optional<std::size_t> failed_index;
    std::exception_ptr failure;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_traj) return;
            try {
                samples[i] = detail::simulate_one(model, cfg, i);
            } catch (...) {
                std::lock_guard lock(err_mutex);
                if (!failed_index || i < *failed_index) {
                    failed_index = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    const std::size_t n_rec = samples[0].rows.size();
    const std::size_t n_ch = model.measured_ops.size();
    const std::size_t d = model.filter.dim();
    const std::size_t n_q = samples[0].rows[0].size();
    const double nt = static_cast<double>(n_traj);

    RealMatrix mean(n_rec, n_q), var(n_rec, n_q), var_se(n_rec, n_q);
    for (std::size_t r = 0; r < n_rec; ++r) {
        for (std::size_t q = 0; q < n_q; ++q) {
            double s = 0.0;
            for (std::size_t i = 0; i < n_traj; ++i) s += samples[i].rows[r][q];
            const double mu = s / nt;
            double m2 = 0.0, m4 = 0.0;
            for (std::size_t i = 0; i < n_traj; ++i) {
                const double dv = samples[i].rows[r][q] - mu;
                m2 += dv * dv;
                m4 += dv * dv * dv * dv;
            }
            mean(r, q) = mu;
            var(r, q) = n_traj > 1 ? m2 / (nt - 1.0) : 0.0;
            const double c2 = m2 / nt, c4 = m4 / nt;
            var_se(r, q) = std::sqrt(std::max(0.0, c4 - c2 * c2) / nt);
        }
    }

    TrajectoryRecord rec;
    rec.n_traj = n_traj;
    for (std::size_t r = 0; r < n_rec; ++r) {
        rec.times.push_back(static_cast<double>(r * cfg.record_stride) * cfg.dt);
        rec.energy_mean.push_back(mean(r, 0));
        rec.energy_stderr.push_back(std::sqrt(var(r, 0) / nt));
    }
    rec.expectation_mean.assign(n_ch, RealVector(n_rec));
    rec.expectation_stderr.assign(n_ch, RealVector(n_rec));
    rec.signal_mean.assign(n_ch, std::vector<RealVector>(d, RealVector(n_rec)));
    rec.signal_var = rec.signal_mean;
    rec.signal_var_stderr = rec.signal_mean;
    for (std::size_t r = 0; r < n_rec; ++r) {
        for (std::size_t k = 0; k < n_ch; ++k) {
            rec.expectation_mean[k][r] = mean(r, 1 + k);
            rec.expectation_stderr[k][r] = std::sqrt(var(r, 1 + k) / nt);
            for (std::size_t c = 0; c < d; ++c) {
                const std::size_t q = 1 + n_ch + k * d + c;
                rec.signal_mean[k][c][r] = mean(r, q);
                rec.signal_var[k][c][r] = var(r, q);
                rec.signal_var_stderr[k][c][r] = var_se(r, q);
            }
        }
    }
    for (std::size_t i = 0; i < n_traj; ++i) {
        rec.max_top_population = std::max(rec.max_top_population, samples[i].max_top_population);
        if (samples[i].max_top_population > cfg.truncation_threshold) rec.flagged_trajectories.push_back(i);
    }
    rec.truncation_warning = !rec.flagged_trajectories.empty();
    return rec;
}

}  // namespace filtfb
