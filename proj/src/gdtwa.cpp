// gdtwa.cpp — trajectory integration, ensemble averaging, deterministic
// parallel reduction

#include "ecav/gdtwa.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ecav/ggm.hpp"

namespace ecav::gdtwa {

namespace {

constexpr double kSqrt3 = 1.7320508075688772935;
constexpr long kBlockSize = 256;  // trajectories per reduction block
constexpr double kBlowupBudget = 1e-3;

// TrajectoryState slot c takes the ggm-basis (block-ordered) entry
// kBlockIndexForSlot[c]: basis order is R21,R31,R32,I21,I31,I32,D1,D2.
constexpr int kBlockIndexForSlot[8] = {0, 3, 1, 4, 2, 5, 6, 7};

struct Coeffs {
    double delta_b, d31, d32, w1;
    double w2c[2], w2s[2];  // Omega32 cos/sin(loop phase), [0]=left [1]=right
    double g, half_g, half_kappa, kappa, delta_c, eta;
    int n_left = 0, n_total = 0;
};

Coeffs make_coeffs(const SystemParams& raw) {
    const SystemParams p = validate_params(raw);
    Coeffs c;
    c.delta_b = p.delta31 - p.delta32;
    c.d31 = p.delta31;
    c.d32 = p.delta32;
    c.w1 = p.omega31;
    c.w2c[0] = p.omega32 * std::cos(p.phi_L);
    c.w2s[0] = p.omega32 * std::sin(p.phi_L);
    c.w2c[1] = p.omega32 * std::cos(p.phi_R);
    c.w2s[1] = p.omega32 * std::sin(p.phi_R);
    c.g = p.g;
    c.half_g = 0.5 * p.g;
    c.half_kappa = 0.5 * p.kappa;
    c.kappa = p.kappa;
    c.delta_c = p.delta_c;
    c.eta = p.eta;
    c.n_left = p.n_left;
    c.n_total = p.n_left + p.n_right;
    return c;
}

struct Deriv8 {
    double v[8];
};

// The mean-field lambda equations (see gdtwa.hpp header comment). gx, gy are
// g*Re[alpha], g*Im[alpha]. Shared verbatim by the public single-trajectory
// operations and the ensemble kernel so the two paths agree bitwise.
inline Deriv8 lambda_drift(const Coeffs& c, double w2c, double w2s, double gx,
                           double gy, double r21, double i21, double r31,
                           double i31, double r32, double i32, double d1,
                           double d2) {
    const double e = kSqrt3 * d2 - d1;
    Deriv8 d;
    d.v[0] = c.delta_b * i21 + 2.0 * gy * d1 + w2c * i31 - w2s * r31 + c.w1 * i32;
    d.v[1] = -c.delta_b * r21 - 2.0 * gx * d1 - w2c * r31 - w2s * i31 + c.w1 * r32;
    d.v[2] = c.d31 * i31 - gy * r32 - gx * i32 + w2s * r21 + w2c * i21;
    d.v[3] = -c.d31 * r31 + gx * r32 - gy * i32 - w2c * r21 + w2s * i21 -
             c.w1 * (d1 + kSqrt3 * d2);
    d.v[4] = c.d32 * i32 + gy * r31 - gx * i31 + w2s * e - c.w1 * i21;
    d.v[5] = -c.d32 * r32 + gx * r31 + gy * i31 - w2c * e - c.w1 * r21;
    d.v[6] = -2.0 * gy * r21 + 2.0 * gx * i21 + w2s * r32 - w2c * i32 + c.w1 * i31;
    d.v[7] = kSqrt3 * (w2c * i32 - w2s * r32 + c.w1 * i31);
    return d;
}

inline void alpha_drift(const Coeffs& c, double x, double y, double sum_r,
                        double sum_i, double& dx, double& dy) {
    dx = c.delta_c * y - c.half_kappa * x + c.half_g * sum_i;
    dy = -c.delta_c * x - c.half_kappa * y - c.eta - c.half_g * sum_r;
}

// Component-major view used by the ensemble kernel: component k of molecule
// j lives at state[k*N + j], so the per-molecule loop below runs stride-1
// over every array. The loop body spells out the lambda_drift expressions
// verbatim on restrict-qualified arrays — molecules are independent, so the
// compiler can vectorize across j while every element still evaluates the
// exact expression tree of the scalar path (the build pins ffp-contract=off
// to keep that equivalence bitwise).
struct DriftEval {
    const Coeffs& c;
    int N;

    void operator()(const double* st, double x, double y, double* dv,
                    double& dx, double& dy) const {
        const double gx = c.g * x, gy = c.g * y;
        const double* __restrict r21 = st + kR21 * N;
        const double* __restrict i21 = st + kI21 * N;
        const double* __restrict r31 = st + kR31 * N;
        const double* __restrict i31 = st + kI31 * N;
        const double* __restrict r32 = st + kR32 * N;
        const double* __restrict i32 = st + kI32 * N;
        const double* __restrict d1 = st + kD1 * N;
        const double* __restrict d2 = st + kD2 * N;
        double* __restrict o_r21 = dv + kR21 * N;
        double* __restrict o_i21 = dv + kI21 * N;
        double* __restrict o_r31 = dv + kR31 * N;
        double* __restrict o_i31 = dv + kI31 * N;
        double* __restrict o_r32 = dv + kR32 * N;
        double* __restrict o_i32 = dv + kI32 * N;
        double* __restrict o_d1 = dv + kD1 * N;
        double* __restrict o_d2 = dv + kD2 * N;
        const double delta_b = c.delta_b, d31 = c.d31, d32 = c.d32, w1 = c.w1;

        for (int chir = 0; chir < 2; ++chir) {
            const int lo = chir == 0 ? 0 : c.n_left;
            const int hi = chir == 0 ? c.n_left : c.n_total;
            const double w2c = c.w2c[chir], w2s = c.w2s[chir];
            // The eight input and eight output slices are disjoint (hi <= N
            // by construction), which the compiler cannot prove from the
            // offsets alone; assert it so the loop vectorizes unversioned.
#pragma GCC ivdep
            for (int j = lo; j < hi; ++j) {
                const double R21 = r21[j], I21 = i21[j], R31 = r31[j],
                             I31 = i31[j], R32 = r32[j], I32 = i32[j],
                             D1 = d1[j], D2 = d2[j];
                const double e = kSqrt3 * D2 - D1;
                o_r21[j] = delta_b * I21 + 2.0 * gy * D1 + w2c * I31 -
                           w2s * R31 + w1 * I32;
                o_i21[j] = -delta_b * R21 - 2.0 * gx * D1 - w2c * R31 -
                           w2s * I31 + w1 * R32;
                o_r31[j] = d31 * I31 - gy * R32 - gx * I32 + w2s * R21 +
                           w2c * I21;
                o_i31[j] = -d31 * R31 + gx * R32 - gy * I32 - w2c * R21 +
                           w2s * I21 - w1 * (D1 + kSqrt3 * D2);
                o_r32[j] = d32 * I32 + gy * R31 - gx * I31 + w2s * e - w1 * I21;
                o_i32[j] = -d32 * R32 + gx * R31 + gy * I31 - w2c * e -
                           w1 * R21;
                o_d1[j] = -2.0 * gy * R21 + 2.0 * gx * I21 + w2s * R32 -
                          w2c * I32 + w1 * I31;
                o_d2[j] = kSqrt3 * (w2c * I32 - w2s * R32 + w1 * I31);
            }
        }
        double sum_r = 0.0, sum_i = 0.0;
        for (int j = 0; j < N; ++j) {
            sum_r += r21[j];
            sum_i += i21[j];
        }
        alpha_drift(c, x, y, sum_r, sum_i, dx, dy);
    }
};

long step_count(double t_final, double dt) {
    if (dt <= 0.0)
        throw Error(Errc::InvalidState, "gdtwa: dt must be positive");
    if (t_final < dt)
        throw Error(Errc::InvalidState, "gdtwa: t_final must be at least dt");
    return std::lround(t_final / dt);
}

} // namespace

TrajectoryState drift(const SystemParams& p, const TrajectoryState& s) {
    const Coeffs c = make_coeffs(p);
    if (static_cast<int>(s.lambdas.size()) != 8 * c.n_total)
        throw Error(Errc::LengthMismatch,
                    "drift: state has " + std::to_string(s.lambdas.size()) +
                        " lambda entries, params declare " +
                        std::to_string(8 * c.n_total));
    TrajectoryState out;
    out.lambdas.resize(s.lambdas.size());
    const double x = s.alpha.real(), y = s.alpha.imag();
    const double gx = c.g * x, gy = c.g * y;
    double sum_r = 0.0, sum_i = 0.0;
    for (int j = 0; j < c.n_total; ++j) {
        const int chir = j < c.n_left ? 0 : 1;
        const double* L = s.lambdas.data() + 8 * j;
        const Deriv8 d =
            lambda_drift(c, c.w2c[chir], c.w2s[chir], gx, gy, L[kR21], L[kI21],
                         L[kR31], L[kI31], L[kR32], L[kI32], L[kD1], L[kD2]);
        double* o = out.lambdas.data() + 8 * j;
        for (int k = 0; k < 8; ++k) o[k] = d.v[k];
        sum_r += L[kR21];
        sum_i += L[kI21];
    }
    double dx, dy;
    alpha_drift(c, x, y, sum_r, sum_i, dx, dy);
    out.alpha = {dx, dy};
    return out;
}

TrajectoryState step(const SystemParams& p, const TrajectoryState& s, double dt,
                     Rng& rng, double guard) {
    if (dt <= 0.0) throw Error(Errc::InvalidState, "step: dt must be positive");
    const TrajectoryState d = drift(p, s);
    TrajectoryState out;
    out.lambdas.resize(s.lambdas.size());
    for (std::size_t k = 0; k < s.lambdas.size(); ++k)
        out.lambdas[k] = s.lambdas[k] + dt * d.lambdas[k];
    double x = s.alpha.real() + dt * d.alpha.real();
    double y = s.alpha.imag() + dt * d.alpha.imag();
    if (p.kappa > 0.0) {
        const double amp = 0.5 * std::sqrt(p.kappa * dt);
        x += amp * rng.normal();
        y += amp * rng.normal();
    }
    if (x * x + y * y > guard * guard)
        throw Error(Errc::BlowUp,
                    "step: |alpha| = " + std::to_string(std::hypot(x, y)) +
                        " exceeds guard " + std::to_string(guard));
    out.alpha = {x, y};
    return out;
}

TrajectoryState sample_initial_trajectory(const SystemParams& p,
                                          const Eigen::Matrix3cd& mol_state,
                                          const CavityInit& cavity, Rng& rng) {
    const SystemParams vp = validate_params(p);
    const int n = vp.n_molecules();
    TrajectoryState s;
    s.lambdas.resize(8 * n);
    if (n > 0) {
        const ggm::GgmBasis basis = ggm::build_ggm_basis(3);
        const ggm::LambdaSampler sampler(basis, mol_state);
        double blk[8];
        for (int j = 0; j < n; ++j) {
            sampler.sample_into(rng, blk);
            for (int c = 0; c < 8; ++c)
                s.lambdas[8 * j + c] = blk[kBlockIndexForSlot[c]];
        }
    }
    const double cx = std::sqrt(cavity.mean_n) * std::cos(cavity.phase);
    const double cy = std::sqrt(cavity.mean_n) * std::sin(cavity.phase);
    s.alpha = {cx + 0.5 * rng.normal(), cy + 0.5 * rng.normal()};
    return s;
}

namespace {

struct Partial {
    std::vector<double> sums;  // n_times * n_streams, time-major
    long completed = 0;
    long blowups = 0;
    long first_blowup = std::numeric_limits<long>::max();
};

void merge_into(Partial& a, const Partial& b) {
    for (std::size_t i = 0; i < a.sums.size(); ++i) a.sums[i] += b.sums[i];
    a.completed += b.completed;
    a.blowups += b.blowups;
    a.first_blowup = std::min(a.first_blowup, b.first_blowup);
}

// Fixed pairwise merge tree over block order, independent of which worker
// produced which block.
void tree_merge(std::vector<Partial>& ps, long lo, long hi) {
    if (hi - lo <= 1) return;
    long span = 1;
    while (span * 2 < hi - lo) span *= 2;
    tree_merge(ps, lo, lo + span);
    tree_merge(ps, lo + span, hi);
    merge_into(ps[lo], ps[lo + span]);
}

struct KernelConfig {
    long n_steps = 0;
    long n_times = 0;
    int sample_every = 1;
    int n_streams = 4;
    double dt = 0.0;
    double guard2 = 0.0;
    double noise_amp = 0.0;  // 0.5 sqrt(kappa dt); 0 disables draws
    bool heun = false;
    bool lambdas = true;
    double cavity_x = 0.0, cavity_y = 0.0;
};

struct Workspace {
    std::vector<double> state, deriv, pred, deriv2, scratch;

    Workspace(int n, const KernelConfig& kc) {
        state.resize(8 * n);
        deriv.resize(8 * n);
        if (kc.heun) {
            pred.resize(8 * n);
            deriv2.resize(8 * n);
        }
        scratch.resize(kc.n_times * kc.n_streams);
    }
};

// Row in the sample buffer for a step index, or -1 when not sampled.
inline long sample_row(long step, long n_steps, int every, long n_times) {
    if (step % every == 0) return step / every;
    return step == n_steps ? n_times - 1 : -1;
}

// Integrates one trajectory into ws.scratch. Returns false on blow-up.
bool integrate_trajectory(const Coeffs& c, const KernelConfig& kc,
                          const ggm::LambdaSampler* sampler, std::uint64_t seed,
                          Workspace& ws) {
    const int N = c.n_total;
    Rng rng(seed);
    double blk[8];
    for (int j = 0; j < N; ++j) {
        sampler->sample_into(rng, blk);
        for (int k = 0; k < 8; ++k) ws.state[k * N + j] = blk[kBlockIndexForSlot[k]];
    }
    double x = kc.cavity_x + 0.5 * rng.normal();
    double y = kc.cavity_y + 0.5 * rng.normal();

    const DriftEval drift_eval{c, N};
    const int S = kc.n_streams;
    auto record = [&](long row) {
        double* out = ws.scratch.data() + row * S;
        const double a2 = x * x + y * y;
        out[0] = x;
        out[1] = y;
        out[2] = a2;
        out[3] = a2 * a2;
        if (kc.lambdas)
            for (int j = 0; j < N; ++j)
                for (int k = 0; k < 8; ++k) out[4 + 8 * j + k] = ws.state[k * N + j];
    };
    record(0);

    const double dt = kc.dt;
    double dx, dy, dx2, dy2;
    for (long step = 1; step <= kc.n_steps; ++step) {
        drift_eval(ws.state.data(), x, y, ws.deriv.data(), dx, dy);
        if (kc.heun) {
            for (std::size_t k = 0; k < ws.state.size(); ++k)
                ws.pred[k] = ws.state[k] + dt * ws.deriv[k];
            const double px = x + dt * dx, py = y + dt * dy;
            drift_eval(ws.pred.data(), px, py, ws.deriv2.data(), dx2, dy2);
            const double half_dt = 0.5 * dt;
            for (std::size_t k = 0; k < ws.state.size(); ++k)
                ws.state[k] += half_dt * (ws.deriv[k] + ws.deriv2[k]);
            x += half_dt * (dx + dx2);
            y += half_dt * (dy + dy2);
        } else {
            for (std::size_t k = 0; k < ws.state.size(); ++k)
                ws.state[k] += dt * ws.deriv[k];
            x += dt * dx;
            y += dt * dy;
        }
        if (kc.noise_amp > 0.0) {
            x += kc.noise_amp * rng.normal();
            y += kc.noise_amp * rng.normal();
        }
        if (x * x + y * y > kc.guard2) return false;
        const long row = sample_row(step, kc.n_steps, kc.sample_every, kc.n_times);
        if (row >= 0) record(row);
    }
    return true;
}

} // namespace

WignerMomentSeries run_ensemble(const SystemParams& p, const EnsembleConfig& cfg,
                                const Eigen::Matrix3cd& mol_state,
                                const CavityInit& cavity) {
    const Coeffs c = make_coeffs(p);
    if (cfg.n_trajectories < 1)
        throw Error(Errc::NegativeCount, "run_ensemble: need n_trajectories >= 1");
    if (cfg.sample_every < 1)
        throw Error(Errc::InvalidState, "run_ensemble: sample_every must be >= 1");
    if (cfg.guard <= 0.0)
        throw Error(Errc::InvalidState, "run_ensemble: guard must be positive");
    if (cfg.n_workers < 1)
        throw Error(Errc::InvalidState, "run_ensemble: n_workers must be >= 1");
    if (cavity.mean_n < 0.0)
        throw Error(Errc::NegativeCount, "run_ensemble: cavity mean_n < 0");

    KernelConfig kc;
    kc.dt = cfg.dt > 0.0 ? cfg.dt : default_timestep(p);
    kc.n_steps = step_count(cfg.t_final, kc.dt);
    kc.sample_every = cfg.sample_every;
    kc.n_times = kc.n_steps / cfg.sample_every + 1 +
                 (kc.n_steps % cfg.sample_every != 0 ? 1 : 0);
    kc.lambdas = cfg.accumulate_lambdas;
    kc.n_streams = 4 + (kc.lambdas ? 8 * c.n_total : 0);
    kc.guard2 = cfg.guard * cfg.guard;
    kc.noise_amp = c.kappa > 0.0 ? 0.5 * std::sqrt(c.kappa * kc.dt) : 0.0;
    kc.heun = cfg.heun;
    kc.cavity_x = std::sqrt(cavity.mean_n) * std::cos(cavity.phase);
    kc.cavity_y = std::sqrt(cavity.mean_n) * std::sin(cavity.phase);

    // An empty ensemble never reads mol_state, so only build (and validate)
    // the sampler when molecules exist — mirrors sample_initial_trajectory.
    std::optional<ggm::GgmBasis> basis;
    std::optional<ggm::LambdaSampler> sampler;
    if (c.n_total > 0) {
        basis.emplace(ggm::build_ggm_basis(3));
        sampler.emplace(*basis, mol_state);
    }

    const long n_blocks = (cfg.n_trajectories + kBlockSize - 1) / kBlockSize;
    std::vector<Partial> partials(n_blocks);

    std::atomic<long> next_block{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        try {
            Workspace ws(c.n_total, kc);
            while (true) {
                const long b = next_block.fetch_add(1);
                if (b >= n_blocks) break;
                Partial& part = partials[b];
                part.sums.assign(kc.n_times * kc.n_streams, 0.0);
                const long lo = b * kBlockSize;
                const long hi = std::min(lo + kBlockSize, cfg.n_trajectories);
                for (long t = lo; t < hi; ++t) {
                    const std::uint64_t seed = derive_seed(cfg.master_seed, t);
                    if (integrate_trajectory(c, kc, sampler ? &*sampler : nullptr,
                                             seed, ws)) {
                        for (std::size_t i = 0; i < part.sums.size(); ++i)
                            part.sums[i] += ws.scratch[i];
                        ++part.completed;
                    } else {
                        ++part.blowups;
                        part.first_blowup = std::min(part.first_blowup, t);
                    }
                }
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };

    if (cfg.n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(cfg.n_workers);
        for (int w = 0; w < cfg.n_workers; ++w) threads.emplace_back(worker);
        for (auto& th : threads) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    tree_merge(partials, 0, n_blocks);
    Partial& total = partials[0];

    if (total.blowups > kBlowupBudget * static_cast<double>(cfg.n_trajectories) ||
        total.completed == 0)
        throw Error(Errc::TooManyBlowUps,
                    "run_ensemble: " + std::to_string(total.blowups) + " of " +
                        std::to_string(cfg.n_trajectories) +
                        " trajectories exceeded the |alpha| guard " +
                        std::to_string(cfg.guard) + " (first at index " +
                        std::to_string(total.first_blowup) +
                        "); raise the guard or shrink dt");

    WignerMomentSeries series;
    series.n_requested = cfg.n_trajectories;
    series.n_effective = total.completed;
    series.n_blowups = total.blowups;
    series.times.resize(kc.n_times);
    for (long k = 0; k < kc.n_times; ++k) {
        const long step =
            k * cfg.sample_every <= kc.n_steps && k < kc.n_times - 1
                ? k * cfg.sample_every
                : kc.n_steps;
        series.times[k] = static_cast<double>(step) * kc.dt;
    }
    const double inv = 1.0 / static_cast<double>(total.completed);
    series.m_alpha.resize(kc.n_times);
    series.m_abs2.resize(kc.n_times);
    series.m_abs4.resize(kc.n_times);
    if (kc.lambdas) {
        series.lambda_means.resize(c.n_total);
        for (auto& mol : series.lambda_means)
            for (auto& compv : mol) compv.resize(kc.n_times);
    }
    for (long k = 0; k < kc.n_times; ++k) {
        const double* row = total.sums.data() + k * kc.n_streams;
        series.m_alpha[k] = {row[0] * inv, row[1] * inv};
        series.m_abs2[k] = row[2] * inv;
        series.m_abs4[k] = row[3] * inv;
        if (kc.lambdas)
            for (int j = 0; j < c.n_total; ++j)
                for (int comp = 0; comp < 8; ++comp)
                    series.lambda_means[j][comp][k] = row[4 + 8 * j + comp] * inv;
    }
    return series;
}

long equation_count(const SystemParams& p) {
    return 8L * (p.n_left + p.n_right) + 1;
}

double default_timestep(const SystemParams& p) {
    return 0.001 / max_rate(p);
}

} // namespace ecav::gdtwa
