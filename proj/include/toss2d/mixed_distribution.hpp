#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "toss2d/format.hpp"
#include "toss2d/overlap.hpp"
#include "toss2d/powers.hpp"

namespace toss2d {

/// Law of a nonnegative random variable with a point mass at exactly zero
/// plus a continuous part stored as a histogram: bin i carries the mass of
/// (i*w, (i+1)*w] with w = support_max / mass.size(). Used for the overlap
/// fraction X_k (support_max 1) and for aggregate sums of them.
///
/// Values are immutable in practice: every operation returns a new value.
struct MixedDistribution {
    double atom0 = 1.0;
    double support_max = 0.0;
    std::vector<double> mass;

    std::size_t bins() const { return mass.size(); }
    double bin_width() const { return support_max / static_cast<double>(mass.size()); }

    double total_mass() const {
        double s = atom0;
        for (double m : mass) s += m;
        return s;
    }

    /// Degenerate law of the constant 0; the convolution identity.
    static MixedDistribution point_mass_at_zero() { return {1.0, 0.0, {}}; }

    void validate() const {
        for (double m : mass)
            if (!(m >= 0.0)) throw std::invalid_argument("MixedDistribution: negative bin mass");
        if (!(atom0 >= 0.0) || std::fabs(total_mass() - 1.0) > 1e-9)
            throw std::invalid_argument("MixedDistribution: masses do not sum to 1");
    }

    /// Pr[value > x], summing bin masses strictly above x with linear
    /// interpolation inside the straddling bin. ccdf(0) = 1 - atom0.
    double ccdf(double x) const {
        if (x < 0.0) return 1.0;
        if (mass.empty() || x >= support_max) return (x == 0.0) ? 1.0 - atom0 : 0.0;
        if (x == 0.0) return 1.0 - atom0;
        const double w = bin_width();
        auto k = static_cast<std::size_t>(x / w);
        if (k >= mass.size()) k = mass.size() - 1;
        const double upper = (static_cast<double>(k) + 1.0) * w;
        double tail = x < upper ? mass[k] * (upper - x) / w : 0.0;
        for (std::size_t j = k + 1; j < mass.size(); ++j) tail += mass[j];
        return tail;
    }

    double cdf(double x) const { return 1.0 - ccdf(x); }

    /// Two-column CSV: header row carrying the atom, then one row per bin
    /// with the bin upper edge and the cumulative probability up to it.
    void write_csv(std::ostream& out) const {
        out << "atom0," << format_double(atom0) << '\n';
        out << "bin_upper,cdf\n";
        const double w = bin_width();
        double cum = atom0;
        for (std::size_t i = 0; i < mass.size(); ++i) {
            cum += mass[i];
            out << format_double((static_cast<double>(i) + 1.0) * w) << ','
                << format_double(cum) << '\n';
        }
    }
};

/// Resolution knobs for repeated self-convolution. copies is the number of
/// i.i.d. summands (N-1 interferers); bins_per_unit bounds the input
/// resolution; max_total_bins triggers dyadic coarsening when the running
/// support grows.
struct ConvolutionPlan {
    std::size_t copies = 1;
    std::size_t bins_per_unit = 1024;
    std::size_t max_total_bins = std::size_t{1} << 22;
};

/// Histogram of the overlap-fraction law on the given grid: atom at zero
/// equal to P(0), bin masses equal to cdf increments over (0, 1].
inline MixedDistribution from_overlap_law(const ResourceGrid& grid, std::size_t bins) {
    if (bins < 16) throw std::invalid_argument("from_overlap_law: bins must be >= 16");
    MixedDistribution d;
    d.support_max = 1.0;
    d.mass.resize(bins);
    d.atom0 = cdf_overlap(0.0, grid);
    double prev = d.atom0;
    for (std::size_t i = 0; i + 1 < bins; ++i) {
        const double edge = static_cast<double>(i + 1) / static_cast<double>(bins);
        const double cur = cdf_overlap(edge, grid);
        d.mass[i] = std::max(0.0, cur - prev);
        prev = cur;
    }
    d.mass[bins - 1] = std::max(0.0, 1.0 - prev);
    return d;
}

/// Mixture with the zero constant: with probability keep draw from d, else 0.
inline MixedDistribution thin(const MixedDistribution& d, double keep) {
    if (!(keep >= 0.0 && keep <= 1.0))
        throw std::invalid_argument("thin: keep probability must lie in [0, 1]");
    MixedDistribution out = d;
    out.atom0 = (1.0 - keep) + keep * d.atom0;
    for (double& m : out.mass) m *= keep;
    return out;
}

/// Dyadic coarsening: adjacent bin pairs merge, halving the resolution.
/// An odd bin count is padded with one empty bin first.
inline MixedDistribution coarsen(const MixedDistribution& d) {
    MixedDistribution out;
    out.atom0 = d.atom0;
    std::vector<double> m = d.mass;
    double support = d.support_max;
    if (m.size() % 2 != 0) {
        support += d.bin_width();
        m.push_back(0.0);
    }
    out.support_max = support;
    out.mass.resize(m.size() / 2);
    for (std::size_t i = 0; i < out.mass.size(); ++i) out.mass[i] = m[2 * i] + m[2 * i + 1];
    return out;
}

namespace detail {

// Index past the last bin worth keeping: the dropped tail holds less than
// trim_eps of mass. The dropped mass is lumped into the last kept bin by
// the caller so nothing is lost.
inline std::size_t effective_bins(const std::vector<double>& mass, double trim_eps, double& dropped) {
    double acc = 0.0;
    std::size_t k = mass.size();
    while (k > 0 && acc + mass[k - 1] <= trim_eps) {
        acc += mass[k - 1];
        --k;
    }
    dropped = acc;
    return k;
}

inline std::vector<double> refine_bins(const std::vector<double>& mass, std::size_t factor) {
    std::vector<double> out(mass.size() * factor);
    for (std::size_t i = 0; i < mass.size(); ++i) {
        const double part = mass[i] / static_cast<double>(factor);
        for (std::size_t j = 0; j < factor; ++j) out[i * factor + j] = part;
    }
    return out;
}

}  // namespace detail

/// Law of the sum of two independent mixed variables.
///
/// The continuous x continuous part treats each bin as a uniform density
/// slab; the convolution of two slabs is a triangle spanning two output
/// bins, which splits its mass evenly between them. That rule is exact for
/// the histogram densities, conserves mass, and keeps the summation order
/// per output bin fixed.
///
/// Bin widths must match; when one width is an integer multiple of the
/// other the coarser side is refined to the common grid first (the only
/// kind of mismatch the dyadic resolution flow produces). Throws
/// std::length_error when the result would exceed max_total_bins.
inline MixedDistribution convolve(const MixedDistribution& a, const MixedDistribution& b,
                                  std::size_t max_total_bins = ConvolutionPlan{}.max_total_bins) {
    if (a.mass.empty() || b.mass.empty()) {
        // One side is a pure atom at zero: the sum keeps the other side's
        // continuous shape scaled by the atom.
        const MixedDistribution& cont = a.mass.empty() ? b : a;
        const MixedDistribution& atom = a.mass.empty() ? a : b;
        MixedDistribution out = cont;
        out.atom0 = a.atom0 * b.atom0;
        for (double& m : out.mass) m *= atom.atom0;
        out.support_max = a.support_max + b.support_max;
        return out;
    }

    std::vector<double> am = a.mass, bm = b.mass;
    const double wa = a.bin_width(), wb = b.bin_width();
    if (std::fabs(wa - wb) > 1e-12 * std::max(wa, wb)) {
        const double ratio = wa > wb ? wa / wb : wb / wa;
        const double k = std::round(ratio);
        if (std::fabs(ratio - k) > 1e-9 || k < 2.0)
            throw std::invalid_argument("convolve: incompatible bin widths");
        if (wa > wb)
            am = detail::refine_bins(am, static_cast<std::size_t>(k));
        else
            bm = detail::refine_bins(bm, static_cast<std::size_t>(k));
    }

    const std::size_t out_bins = am.size() + bm.size();
    if (out_bins > max_total_bins)
        throw std::length_error("convolve: result exceeds the bin cap; coarsen the inputs");

    constexpr double trim_eps = 1e-16;
    double dropped_a = 0.0, dropped_b = 0.0;
    const std::size_t ea = detail::effective_bins(am, trim_eps, dropped_a);
    const std::size_t eb = detail::effective_bins(bm, trim_eps, dropped_b);

    MixedDistribution out;
    out.atom0 = a.atom0 * b.atom0;
    out.support_max = a.support_max + b.support_max;
    out.mass.assign(out_bins, 0.0);

    if (ea > 0 && eb > 0) {
        std::vector<double> ae(am.begin(), am.begin() + static_cast<std::ptrdiff_t>(ea));
        std::vector<double> be(bm.begin(), bm.begin() + static_cast<std::ptrdiff_t>(eb));
        ae.back() += dropped_a;
        be.back() += dropped_b;
        std::vector<double> conv(ea + eb - 1, 0.0);
        for (std::size_t i = 0; i < ea; ++i) {
            const double ai = ae[i];
            if (ai == 0.0) continue;
            for (std::size_t j = 0; j < eb; ++j) conv[i + j] += ai * be[j];
        }
        for (std::size_t k = 0; k < conv.size(); ++k) {
            out.mass[k] += 0.5 * conv[k];
            out.mass[k + 1] += 0.5 * conv[k];
        }
    }
    for (std::size_t j = 0; j < bm.size(); ++j) out.mass[j] += a.atom0 * bm[j];
    for (std::size_t i = 0; i < am.size(); ++i) out.mass[i] += b.atom0 * am[i];
    return out;
}

/// Law of the sum of plan.copies i.i.d. draws of d, by binary
/// exponentiation of convolve. The zero atom is set to d.atom0^copies
/// exactly rather than accumulated through the products. When the running
/// bin count would exceed plan.max_total_bins both operands are coarsened
/// dyadically (they always share a width).
inline MixedDistribution convolve_power(const MixedDistribution& d, const ConvolutionPlan& plan) {
    if (plan.copies < 1) throw std::invalid_argument("convolve_power: copies must be >= 1");

    MixedDistribution base = d;
    if (base.support_max > 0.0 && !base.mass.empty()) {
        while (static_cast<double>(base.bins()) >
               2.0 * static_cast<double>(plan.bins_per_unit) * base.support_max)
            base = coarsen(base);
    }

    // Keep the two operands on a common dyadic width; coarsen the finer one
    // until the widths agree.
    auto align_widths = [](MixedDistribution& x, MixedDistribution& y) {
        if (x.mass.empty() || y.mass.empty()) return;
        while (x.bin_width() < y.bin_width() * (1.0 - 1e-9)) x = coarsen(x);
        while (y.bin_width() < x.bin_width() * (1.0 - 1e-9)) y = coarsen(y);
    };

    MixedDistribution result = MixedDistribution::point_mass_at_zero();
    std::size_t remaining = plan.copies;
    while (true) {
        if (remaining & 1) {
            align_widths(result, base);
            while (result.bins() + base.bins() > plan.max_total_bins) {
                result = coarsen(result);
                base = coarsen(base);
            }
            result = convolve(result, base, plan.max_total_bins);
        }
        remaining >>= 1;
        if (remaining == 0) break;
        while (2 * base.bins() > plan.max_total_bins) base = coarsen(base);
        base = convolve(base, base, plan.max_total_bins);
    }
    result.atom0 = ipow(d.atom0, plan.copies);
    return result;
}

}  // namespace toss2d
