#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "toss2d/mixed_distribution.hpp"
#include "toss2d/overlap.hpp"
#include "toss2d/powers.hpp"
#include "toss2d/quadrature.hpp"
#include "toss2d/radio.hpp"
#include "toss2d/rng.hpp"

namespace toss2d {

/// Complete evaluation setup for the fading + path-loss scenario.
struct Scenario {
    ResourceGrid grid;
    LinkBudget budget;
    PathLossModel path;
    FadingModel fading;
    CellGeometry cell;
    long n_devices = 1;  // N, including the device of interest
    int n_rep = 1;       // independent packet repetitions

    double period_s() const { return grid.period_s; }

    void validate() const {
        grid.validate();
        path.validate();
        fading.validate();
        cell.validate();
        if (n_devices < 1) throw std::invalid_argument("Scenario: n_devices must be >= 1");
        if (n_rep < 1) throw std::invalid_argument("Scenario: n_rep must be >= 1");
    }
};

struct McConfig {
    std::size_t trials = 100000;
    std::uint64_t seed = 1;
    unsigned workers = 1;  // affects wall time only, never results
};

struct OutageResult {
    double op = 0.0;
    double std_error = 0.0;
    std::size_t trials_used = 0;
};

/// Exact Binomial(n, p) draw by geometric gap skipping; O(n p + 1) expected
/// uniforms, which is what makes large-N trials cheap when collisions are
/// rare.
template <typename Rng>
long sample_binomial(Rng& rng, long n, double p) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    const double log_q = std::log1p(-p);
    long count = 0;
    long position = -1;
    while (true) {
        const double u = uniform01(rng);
        position += 1 + static_cast<long>(std::floor(std::log1p(-u) / log_q));
        if (position >= n) break;
        ++count;
    }
    return count;
}

namespace detail {

inline constexpr std::uint64_t stream_tag_op_r0 = 0x4F505230;  // per-trial streams for op_at_r0

struct TrialModel {
    // Precomputed per (scenario, r0) constants for the outage trial loop.
    double zeta_linear;
    double noise_over_tx;
    double gain_r0;
    double span_t, span_f;  // placement interval lengths T - dt, F - df
    double dt, df;
    long n_interferers;

    explicit TrialModel(const Scenario& scn, double r0) {
        zeta_linear = scn.budget.target_sinr_linear();
        noise_over_tx = scn.budget.noise_over_tx();
        gain_r0 = path_loss(scn.path, r0);
        span_t = scn.grid.period_s - scn.grid.packet_duration_s;
        span_f = scn.grid.bandwidth_hz - scn.grid.packet_bandwidth_hz;
        dt = scn.grid.packet_duration_s;
        df = scn.grid.packet_bandwidth_hz;
        n_interferers = scn.n_devices - 1;
    }
};

/// One single-shot outage trial. The tagged placement is drawn fresh, the
/// number of colliding interferers is Binomial(N-1, p_col(t0, f0)), and
/// only colliders draw an offset (inside the collision window), a radius
/// and a fading; non-colliders contribute exactly zero interference. This
/// is distributionally identical to drawing all N-1 interferers directly.
template <typename Rng>
bool outage_trial(Rng& rng, const Scenario& scn, const TrialModel& m) {
    const double h0 = sample_fading(scn.fading, rng);
    const double t0 = uniform_in(rng, 0.0, m.span_t);
    const double f0 = uniform_in(rng, 0.0, m.span_f);

    const double t_lo = std::max(t0 - m.dt, 0.0), t_hi = std::min(t0 + m.dt, m.span_t);
    const double f_lo = std::max(f0 - m.df, 0.0), f_hi = std::min(f0 + m.df, m.span_f);
    const double p_t = m.span_t > 0.0 ? (t_hi - t_lo) / m.span_t : 1.0;
    const double p_f = m.span_f > 0.0 ? (f_hi - f_lo) / m.span_f : 1.0;

    double interference = 0.0;
    const long colliders = sample_binomial(rng, m.n_interferers, p_t * p_f);
    for (long k = 0; k < colliders; ++k) {
        const double tau = std::fabs(uniform_in(rng, t_lo, t_hi) - t0) / m.dt;
        const double phi = std::fabs(uniform_in(rng, f_lo, f_hi) - f0) / m.df;
        const double x = overlap_fraction({tau, phi});
        const double r_k = sample_device_radius(scn.cell, rng);
        const double h_k = sample_fading(scn.fading, rng);
        interference += h_k * path_loss(scn.path, r_k) * x;
    }
    const double sinr = h0 * m.gain_r0 / (interference + m.noise_over_tx);
    return sinr < m.zeta_linear;
}

}  // namespace detail

/// Monte Carlo outage probability for a device at radius r0, with the
/// repetition exponent applied to the single-shot estimate:
/// OP_nrep = Pr[SINR < zeta]^nrep. Every trial derives its own rng stream
/// from (seed, operation, r0, trial index), so the result is bit-identical
/// for any worker count, and common random numbers are shared across
/// n_devices and n_rep variations of the same scenario.
inline OutageResult op_at_r0(const Scenario& scn, double r0, const McConfig& mc) {
    scn.validate();
    if (!(r0 >= scn.cell.r_min_m) || !(r0 <= scn.cell.r_max_m))
        throw std::invalid_argument("op_at_r0: r0 outside the cell");
    if (mc.trials < 1) throw std::invalid_argument("op_at_r0: trials must be >= 1");

    const detail::TrialModel model(scn, r0);
    const std::uint64_t point_tag = std::bit_cast<std::uint64_t>(r0);

    auto count_range = [&](std::size_t begin, std::size_t end) {
        std::size_t successes = 0;
        for (std::size_t trial = begin; trial < end; ++trial) {
            Xoshiro256pp rng(derive_stream(mc.seed, detail::stream_tag_op_r0, point_tag, trial));
            successes += detail::outage_trial(rng, scn, model) ? 1 : 0;
        }
        return successes;
    };

    std::size_t outages = 0;
    const unsigned workers =
        std::min<unsigned>(std::max(1u, mc.workers), static_cast<unsigned>(mc.trials));
    if (workers <= 1) {
        outages = count_range(0, mc.trials);
    } else {
        std::vector<std::size_t> partial(workers, 0);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        const std::size_t chunk = (mc.trials + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(mc.trials, begin + chunk);
            pool.emplace_back([&, begin, end, w] { partial[w] = count_range(begin, end); });
        }
        for (auto& t : pool) t.join();
        for (std::size_t s : partial) outages += s;  // fixed order
    }

    const double trials = static_cast<double>(mc.trials);
    const double q = static_cast<double>(outages) / trials;
    const double se_q = std::max(std::sqrt(q * (1.0 - q) / trials), 1.0 / trials);
    OutageResult result;
    result.op = ipow(q, static_cast<unsigned long long>(scn.n_rep));
    result.std_error =
        scn.n_rep * ipow(q, static_cast<unsigned long long>(scn.n_rep - 1)) * se_q;
    result.trials_used = mc.trials;
    return result;
}

/// Pure-Aloha outage at r0: any nonzero aggregate overlap is a loss, and a
/// collision-free packet still fades out with the no-interference
/// probability. Fully analytic:
///
///   q = (1 - (1-p_c)^(N-1)) + (1-p_c)^(N-1) * Pr[h < zeta gamma / (rho l(r0))]
///
/// The mc argument is accepted for API symmetry and ignored.
inline OutageResult op_aloha_at_r0(const Scenario& scn, double r0, const McConfig& mc = {}) {
    (void)mc;
    scn.validate();
    if (!(r0 >= scn.cell.r_min_m) || !(r0 <= scn.cell.r_max_m))
        throw std::invalid_argument("op_aloha_at_r0: r0 outside the cell");
    const double p_c = collision_probability(scn.grid);
    const double p_clear = ipow(1.0 - p_c, static_cast<unsigned long long>(scn.n_devices - 1));
    const double fade_threshold =
        scn.budget.target_sinr_linear() * scn.budget.noise_over_tx() / path_loss(scn.path, r0);
    const double q_fade = 1.0 - std::exp(-scn.fading.rate * fade_threshold);
    const double q = (1.0 - p_clear) + p_clear * q_fade;
    return {ipow(q, static_cast<unsigned long long>(scn.n_rep)), 0.0, 0};
}

/// Outage averaged over the device position, weighting by the area-uniform
/// radial density 2r/(r_max^2 - r_min^2), with fixed Gauss-Legendre nodes.
inline OutageResult global_outage(const Scenario& scn,
                                  const std::function<OutageResult(double)>& op_fn,
                                  int quadrature_nodes = 64) {
    scn.validate();
    if (quadrature_nodes < 8)
        throw std::invalid_argument("global_outage: need at least 8 quadrature nodes");
    const auto nodes = gauss_legendre(quadrature_nodes);
    const double half = 0.5 * (scn.cell.r_max_m - scn.cell.r_min_m);
    const double mid = 0.5 * (scn.cell.r_max_m + scn.cell.r_min_m);
    OutageResult total;
    double variance = 0.0;
    for (const auto& node : nodes) {
        const double r = mid + half * node.x;
        const OutageResult at_r = op_fn(r);
        const double weight = node.w * half * scn.cell.radial_density(r);
        total.op += weight * at_r.op;
        variance += weight * weight * at_r.std_error * at_r.std_error;
        total.trials_used += at_r.trials_used;
    }
    total.std_error = std::sqrt(variance);
    return total;
}

inline double global_op(const Scenario& scn, const std::function<double(double)>& op_fn,
                        int quadrature_nodes = 64) {
    return global_outage(
               scn, [&](double r) { return OutageResult{op_fn(r), 0.0, 0}; }, quadrature_nodes)
        .op;
}

/// Average number of non-repeated packets delivered per second:
/// N (1 - OP) / (T n_rep).
inline double throughput(const Scenario& scn, double global_outage_probability) {
    return static_cast<double>(scn.n_devices) * (1.0 - global_outage_probability) /
           (scn.period_s() * scn.n_rep);
}

/// Outage under perfect power control, from the aggregate overlap law:
/// OP = Pr[X_sigma >= 1/zeta - 1/SNR]^nrep. At threshold <= 0 the event is
/// read as strict positivity of the aggregate overlap (outage iff any
/// overlap), the only reading with content; a threshold beyond the law's
/// support means no outage at all.
inline double op_power_control(const Scenario& scn, const MixedDistribution& xsum_law) {
    scn.validate();
    const double theta = 1.0 / scn.budget.target_sinr_linear() - 1.0 / scn.budget.snr_linear();
    double q;
    if (theta <= 0.0)
        q = xsum_law.ccdf(0.0);
    else if (theta >= xsum_law.support_max)
        return 0.0;
    else
        q = xsum_law.ccdf(theta);
    return ipow(q, static_cast<unsigned long long>(scn.n_rep));
}

}  // namespace toss2d
