#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "toss2d/quadrature.hpp"
#include "toss2d/rng.hpp"

namespace toss2d {

/// Shared time-frequency resource [0,T]x[0,F] and the packet footprint
/// dt x df placed on it. The overlap laws depend on the grid only through
/// the ratios nt = T/dt and nf = F/df, which need not be integers.
///
/// The 1D (time-only) game is the special case df = F: the frequency
/// offset is then deterministically zero and only time overlaps matter.
struct ResourceGrid {
    double period_s = 1.0;             // T
    double bandwidth_hz = 1.0;         // F
    double packet_duration_s = 1.0;    // dt
    double packet_bandwidth_hz = 1.0;  // df

    double nt() const { return period_s / packet_duration_s; }
    double nf() const { return bandwidth_hz / packet_bandwidth_hz; }
    bool one_dim_mode() const { return packet_bandwidth_hz == bandwidth_hz; }

    void validate() const {
        if (!(packet_duration_s > 0.0) || !(packet_bandwidth_hz > 0.0))
            throw std::invalid_argument("ResourceGrid: packet footprint must be positive");
        if (period_s < packet_duration_s)
            throw std::invalid_argument("ResourceGrid: period shorter than packet duration");
        if (bandwidth_hz < packet_bandwidth_hz)
            throw std::invalid_argument("ResourceGrid: bandwidth narrower than packet bandwidth");
    }

    static ResourceGrid two_dim(double period_s, double bandwidth_hz,
                                double packet_duration_s, double packet_bandwidth_hz) {
        ResourceGrid grid{period_s, bandwidth_hz, packet_duration_s, packet_bandwidth_hz};
        grid.validate();
        return grid;
    }

    static ResourceGrid one_dim(double period_s, double packet_duration_s,
                                double bandwidth_hz = 1.0) {
        ResourceGrid grid{period_s, bandwidth_hz, packet_duration_s, bandwidth_hz};
        grid.validate();
        return grid;
    }

    /// Unit-footprint grid with the given size ratios.
    static ResourceGrid from_ratios_1d(double nt) { return one_dim(nt, 1.0); }
    static ResourceGrid from_ratios_2d(double nt, double nf) {
        return two_dim(nt, nf, 1.0, 1.0);
    }
};

/// Lower-left corner of a packet on the grid: start time in [0, T-dt],
/// lowest frequency in [0, F-df].
struct PacketPlacement {
    double t_s = 0.0;
    double f_hz = 0.0;
};

/// Packet-normalized absolute offsets tau = |t_k - t_0|/dt in [0, nt-1]
/// and phi = |f_k - f_0|/df in [0, nf-1].
struct NormalizedOffset {
    double tau = 0.0;
    double phi = 0.0;
};

template <typename Rng>
PacketPlacement sample_placement(const ResourceGrid& grid, Rng& rng) {
    grid.validate();
    return {uniform_in(rng, 0.0, grid.period_s - grid.packet_duration_s),
            uniform_in(rng, 0.0, grid.bandwidth_hz - grid.packet_bandwidth_hz)};
}

inline NormalizedOffset normalized_offset(const PacketPlacement& a, const PacketPlacement& b,
                                          const ResourceGrid& grid) {
    return {std::fabs(a.t_s - b.t_s) / grid.packet_duration_s,
            std::fabs(a.f_hz - b.f_hz) / grid.packet_bandwidth_hz};
}

/// Overlap area between two unit packets at the given offsets, normalized
/// by the packet area: (1-tau)(1-phi) when both offsets are below 1, else 0.
/// Touching edges (offset exactly 1) count as no overlap.
inline double overlap_fraction(const NormalizedOffset& offset) {
    if (offset.tau < 1.0 && offset.phi < 1.0)
        return (1.0 - offset.tau) * (1.0 - offset.phi);
    return 0.0;
}

inline double overlap_fraction(const PacketPlacement& a, const PacketPlacement& b,
                               const ResourceGrid& grid) {
    return overlap_fraction(normalized_offset(a, b, grid));
}

namespace detail {

inline void require_unit_interval(double x, const char* where) {
    if (!(x >= 0.0) || !(x < 1.0))
        throw std::invalid_argument(std::string(where) + ": x must lie in [0, 1)");
}

}  // namespace detail

/// cdf of the overlap fraction in the 1D game, uniform placements:
///
///   P(x) = 1 - (2 nt - 3 + x)(1 - x) / (nt - 1)^2
///
/// Right-continuous; P(0) is the point mass at zero overlap. The closed
/// form holds for nt >= 2; for 1 < nt < 2 the complementary probability
/// saturates at 1 once 1 - x exceeds nt - 1, so P(x) = 0 for x <= 2 - nt.
inline double cdf_overlap_1d(double x, const ResourceGrid& grid) {
    grid.validate();
    if (!grid.one_dim_mode())
        throw std::invalid_argument("cdf_overlap_1d: grid is not in 1D mode");
    const double nt = grid.nt();
    if (!(nt > 1.0))
        throw std::invalid_argument("cdf_overlap_1d: requires nt > 1");
    detail::require_unit_interval(x, "cdf_overlap_1d");
    if (x <= 2.0 - nt) return 0.0;  // only reachable when nt < 2
    const double m = nt - 1.0;
    return 1.0 - (2.0 * nt - 3.0 + x) * (1.0 - x) / (m * m);
}

/// Continuous part of the 1D law on (0, 1): p(x) = 2(nt-2+x)/(nt-1)^2,
/// zero below 2-nt when nt < 2.
inline double pdf_overlap_1d(double x, const ResourceGrid& grid) {
    grid.validate();
    const double nt = grid.nt();
    if (!(nt > 1.0))
        throw std::invalid_argument("pdf_overlap_1d: requires nt > 1");
    if (!(x > 0.0) || !(x < 1.0))
        throw std::invalid_argument("pdf_overlap_1d: x must lie in (0, 1)");
    if (x <= 2.0 - nt) return 0.0;
    const double m = nt - 1.0;
    return 2.0 * (nt - 2.0 + x) / (m * m);
}

/// Joint density of the normalized offsets (tau, phi) induced by uniform
/// independent placements: the product of two triangular |U - U'| laws,
/// p(u) = 2 (m - u) / m^2 on [0, m]. This is the density that makes the
/// generic ccdf integral reproduce the closed-form cdfs.
inline std::function<double(double, double)> uniform_offset_density(const ResourceGrid& grid) {
    grid.validate();
    const double mt = grid.nt() - 1.0;
    const double mf = grid.nf() - 1.0;
    return [mt, mf](double u, double v) -> double {
        double d = 1.0;
        if (mt > 0.0) {
            if (u < 0.0 || u > mt) return 0.0;
            d *= 2.0 * (mt - u) / (mt * mt);
        } else if (u != 0.0) {
            return 0.0;
        }
        if (mf > 0.0) {
            if (v < 0.0 || v > mf) return 0.0;
            d *= 2.0 * (mf - v) / (mf * mf);
        } else if (v != 0.0) {
            return 0.0;
        }
        return d;
    };
}

/// Pr[X > x] for an arbitrary joint offset density, by nested adaptive
/// quadrature of
///
///   Pr[X > x] = int_0^{1-x} int_0^{1 - x/(1-u)} p(u, v) dv du .
///
/// The density must integrate to 1 over [0, nt-1] x [0, nf-1]; this is
/// checked approximately (1% tolerance) before the main integral runs.
/// Throws std::runtime_error if refinement fails to converge.
inline double ccdf_overlap_numeric(double x, const std::function<double(double, double)>& joint_density,
                                   const ResourceGrid& grid, double rel_tol = 1e-6) {
    grid.validate();
    const double nt = grid.nt(), nf = grid.nf();
    if (!(nt > 1.0) || !(nf > 1.0))
        throw std::invalid_argument("ccdf_overlap_numeric: requires nt > 1 and nf > 1");
    detail::require_unit_interval(x, "ccdf_overlap_numeric");
    const double mt = nt - 1.0, mf = nf - 1.0;

    AdaptiveOptions inner_opt{0.1 * rel_tol, 1e-14, 48, 4'000'000};
    auto inner = [&](double u, double v_max) {
        if (!(v_max > 0.0)) return 0.0;
        return integrate_adaptive([&](double v) { return joint_density(u, v); },
                                  0.0, std::min(v_max, mf), inner_opt);
    };

    const double total = integrate_adaptive(
        [&](double u) { return inner(u, mf); }, 0.0, mt,
        AdaptiveOptions{1e-4, 1e-12, 48, 8'000'000});
    if (std::fabs(total - 1.0) > 0.01)
        throw std::invalid_argument(
            "ccdf_overlap_numeric: joint density does not integrate to 1 (got " +
            std::to_string(total) + ")");

    const double upper = std::min(1.0 - x, mt);
    if (!(upper > 0.0)) return 0.0;
    // At x = 0 the inner limit is 1 for every u (0/0 at u = 1 resolved by
    // continuity); writing it explicitly keeps the integrand smooth there.
    auto v_limit = [x](double u) { return x == 0.0 ? 1.0 : 1.0 - x / (1.0 - u); };
    return integrate_adaptive(
        [&](double u) { return inner(u, v_limit(u)); }, 0.0, upper,
        AdaptiveOptions{rel_tol, 1e-14, 48, 8'000'000});
}

/// cdf of the overlap fraction in the 2D game, uniform placements:
///
///   P(x) = 1 - [(a + b x)(1 - x) + 2 (c + x) x ln x] / [(nt-1)^2 (nf-1)^2]
///   a = (2 nt - 3)(2 nf - 3),  b = 9 - 2 nt - 2 nf,  c = 2 (nt - 2)(nf - 2)
///
/// obtained by integrating the joint triangular offset density over the
/// region (1-tau)(1-phi) > x. The x ln x term is evaluated as its limit 0
/// at x = 0. The closed form requires nt >= 2 and nf >= 2; below that the
/// saturating offset cdfs change the algebra, and this falls back to the
/// (much slower) numeric ccdf of the same law.
inline double cdf_overlap_2d(double x, const ResourceGrid& grid) {
    grid.validate();
    const double nt = grid.nt(), nf = grid.nf();
    if (!(nt > 1.0) || !(nf > 1.0))
        throw std::invalid_argument("cdf_overlap_2d: requires nt > 1 and nf > 1");
    detail::require_unit_interval(x, "cdf_overlap_2d");
    if (nt < 2.0 || nf < 2.0)
        return 1.0 - ccdf_overlap_numeric(x, uniform_offset_density(grid), grid, 1e-9);
    const double a = (2.0 * nt - 3.0) * (2.0 * nf - 3.0);
    const double b = 9.0 - 2.0 * nt - 2.0 * nf;
    const double c = 2.0 * (nt - 2.0) * (nf - 2.0);
    const double denom = (nt - 1.0) * (nt - 1.0) * (nf - 1.0) * (nf - 1.0);
    const double xlnx = (x > 0.0) ? x * std::log(x) : 0.0;
    return 1.0 - ((a + b * x) * (1.0 - x) + 2.0 * (c + x) * xlnx) / denom;
}

/// Continuous part of the 2D law on (0, 1):
///   p(x) = [a - b + 2 b x - 2 (c + x) - 2 (c + 2 x) ln x] / denom.
inline double pdf_overlap_2d(double x, const ResourceGrid& grid) {
    grid.validate();
    const double nt = grid.nt(), nf = grid.nf();
    if (!(nt >= 2.0) || !(nf >= 2.0))
        throw std::invalid_argument("pdf_overlap_2d: closed form requires nt >= 2 and nf >= 2");
    if (!(x > 0.0) || !(x < 1.0))
        throw std::invalid_argument("pdf_overlap_2d: x must lie in (0, 1)");
    const double a = (2.0 * nt - 3.0) * (2.0 * nf - 3.0);
    const double b = 9.0 - 2.0 * nt - 2.0 * nf;
    const double c = 2.0 * (nt - 2.0) * (nf - 2.0);
    const double denom = (nt - 1.0) * (nt - 1.0) * (nf - 1.0) * (nf - 1.0);
    return (a - b + 2.0 * b * x - 2.0 * (c + x) - 2.0 * (c + 2.0 * x) * std::log(x)) / denom;
}

/// Probability that two independently placed packets overlap at all:
/// p_c = 1 - P(0). Decreases in nt (and nf).
inline double collision_probability(const ResourceGrid& grid) {
    if (grid.one_dim_mode()) return 1.0 - cdf_overlap_1d(0.0, grid);
    return 1.0 - cdf_overlap_2d(0.0, grid);
}

/// cdf dispatching on the grid mode.
inline double cdf_overlap(double x, const ResourceGrid& grid) {
    return grid.one_dim_mode() ? cdf_overlap_1d(x, grid) : cdf_overlap_2d(x, grid);
}

inline double pdf_overlap(double x, const ResourceGrid& grid) {
    return grid.one_dim_mode() ? pdf_overlap_1d(x, grid) : pdf_overlap_2d(x, grid);
}

}  // namespace toss2d
