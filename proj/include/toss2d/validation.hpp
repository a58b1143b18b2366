#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "toss2d/mixed_distribution.hpp"
#include "toss2d/overlap.hpp"
#include "toss2d/presets.hpp"
#include "toss2d/quadrature.hpp"
#include "toss2d/rng.hpp"
#include "toss2d/scenario.hpp"

namespace toss2d {

// Check families comparing the analytic laws against independent sampling
// oracles. Shared by the `validate` CLI command and the acceptance suite.

struct CheckResult {
    std::string name;
    bool pass = false;
    double stat = 0.0;   // measured statistic
    double limit = 0.0;  // threshold it must stay below
};

struct FamilyReport {
    std::string family;
    bool pass = true;
    std::vector<CheckResult> checks;

    void add(std::string name, double stat, double limit) {
        const bool ok = stat <= limit;
        pass = pass && ok;
        checks.push_back({std::move(name), ok, stat, limit});
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json checks_json = nlohmann::ordered_json::array();
        for (const auto& c : checks)
            checks_json.push_back(
                {{"name", c.name}, {"pass", c.pass}, {"stat", c.stat}, {"limit", c.limit}});
        return {{"family", family}, {"pass", pass}, {"checks", checks_json}};
    }
};

/// Kolmogorov-Smirnov distance between a sorted sample and a reference cdf
/// whose only discontinuity is an atom at 0 (left limit there is 0).
inline double ks_distance_sorted(const std::vector<double>& sorted,
                                 const std::function<double(double)>& cdf) {
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        const double f_left = sorted[i] == 0.0 ? 0.0 : f;
        d = std::max(d, (static_cast<double>(i) + 1.0) / n - f);
        d = std::max(d, f_left - static_cast<double>(i) / n);
    }
    return d;
}

/// n overlap fractions of independently placed packet pairs, sorted.
inline std::vector<double> sample_overlaps(const ResourceGrid& grid, std::size_t n,
                                           std::uint64_t seed) {
    Xoshiro256pp rng(derive_stream(seed, 0x4B53, std::bit_cast<std::uint64_t>(grid.nt()),
                                   std::bit_cast<std::uint64_t>(grid.nf())));
    std::vector<double> xs(n);
    for (auto& x : xs)
        x = overlap_fraction(sample_placement(grid, rng), sample_placement(grid, rng), grid);
    std::sort(xs.begin(), xs.end());
    return xs;
}

/// n draws of the aggregate overlap of `copies` interferers against one
/// tagged packet, all placements fresh per trial (so the dependence through
/// the tagged placement that the convolution neglects is present), sorted.
inline std::vector<double> sample_overlap_sums(const ResourceGrid& grid, std::size_t copies,
                                               std::size_t n, std::uint64_t seed) {
    Xoshiro256pp rng(derive_stream(seed, 0x53554D, std::bit_cast<std::uint64_t>(grid.nt()), copies));
    std::vector<double> sums(n);
    for (auto& s : sums) {
        const PacketPlacement tagged = sample_placement(grid, rng);
        double sum = 0.0;
        for (std::size_t k = 0; k < copies; ++k)
            sum += overlap_fraction(tagged, sample_placement(grid, rng), grid);
        s = sum;
    }
    std::sort(sums.begin(), sums.end());
    return sums;
}

/// O(1)-evaluable cdf of a MixedDistribution (prefix sums precomputed).
class MixedCdf {
public:
    explicit MixedCdf(const MixedDistribution& d)
        : atom_(d.atom0), width_(d.mass.empty() ? 1.0 : d.bin_width()), cum_(d.mass.size()) {
        double acc = d.atom0;
        for (std::size_t i = 0; i < d.mass.size(); ++i) {
            acc += d.mass[i];
            cum_[i] = acc;
        }
    }

    double operator()(double x) const {
        if (x < 0.0) return 0.0;
        if (cum_.empty()) return 1.0;
        if (x >= width_ * static_cast<double>(cum_.size())) return cum_.back();
        const auto k = static_cast<std::size_t>(x / width_);
        const double below = k == 0 ? atom_ : cum_[k - 1];
        const double frac = (x - static_cast<double>(k) * width_) / width_;
        const double bin_mass = cum_[k] - below;
        return below + frac * bin_mass;
    }

private:
    double atom_;
    double width_;
    std::vector<double> cum_;
};

// --- families ---------------------------------------------------------------

/// Empirical cdf of sampled 1D overlaps vs the closed form.
inline FamilyReport family_cdf1d_ks(std::uint64_t seed, std::size_t samples = 1'000'000,
                                    double tol = 0.005) {
    FamilyReport report;
    report.family = "cdf1d_ks";
    for (double nt : {2.0, 5.0, 10.0, 50.0, 100.0}) {
        const ResourceGrid grid = ResourceGrid::from_ratios_1d(nt);
        const auto xs = sample_overlaps(grid, samples, seed);
        const double d =
            ks_distance_sorted(xs, [&](double x) { return x >= 1.0 ? 1.0 : cdf_overlap_1d(x, grid); });
        std::ostringstream name;
        name << "ks_nt" << nt;
        report.add(name.str(), d, tol);
    }
    return report;
}

/// Empirical cdf of sampled 2D overlaps vs the closed form, plus the
/// x ln x term cross-checked against the generic double-integral route.
inline FamilyReport family_cdf2d_ks(std::uint64_t seed, std::size_t samples = 1'000'000,
                                    double tol = 0.005) {
    FamilyReport report;
    report.family = "cdf2d_ks";
    const double sizes[] = {2.0, 5.0, 10.0, 50.0};
    for (double nt : sizes) {
        for (double nf : sizes) {
            const ResourceGrid grid = ResourceGrid::from_ratios_2d(nt, nf);
            const auto xs = sample_overlaps(grid, samples, seed);
            const double d = ks_distance_sorted(
                xs, [&](double x) { return x >= 1.0 ? 1.0 : cdf_overlap_2d(x, grid); });
            std::ostringstream name;
            name << "ks_nt" << nt << "_nf" << nf;
            report.add(name.str(), d, tol);
        }
    }
    for (double nt : {10.0, 5.0}) {
        const ResourceGrid grid = ResourceGrid::from_ratios_2d(nt, 50.0);
        const auto density = uniform_offset_density(grid);
        for (double x : {0.01, 0.5, 0.99}) {
            const double closed = 1.0 - cdf_overlap_2d(x, grid);
            const double numeric = ccdf_overlap_numeric(x, density, grid, 1e-8);
            std::ostringstream name;
            name << "xlnx_nt" << nt << "_x" << x;
            report.add(name.str(), std::fabs(closed - numeric), 1e-4);
        }
    }
    return report;
}

/// convolve_power vs direct simulation of the aggregate overlap, plus the
/// exact zero-atom formula, on grids where the non-border approximation is
/// declared valid.
inline FamilyReport family_convolution_ks(std::uint64_t seed, std::size_t trials = 1'000'000,
                                          double ks_tol = 0.01) {
    FamilyReport report;
    report.family = "convolution_ks";
    const std::pair<double, double> grids[] = {{20.0, 20.0}, {40.0, 25.0}};
    for (const auto& [nt, nf] : grids) {
        const ResourceGrid grid = ResourceGrid::from_ratios_2d(nt, nf);
        const MixedDistribution xk = from_overlap_law(grid, 1024);
        const double p_c = collision_probability(grid);
        for (std::size_t copies : {2u, 5u, 10u}) {
            const MixedDistribution law = convolve_power(xk, {copies, 1024});
            const MixedCdf cdf(law);
            const auto sums = sample_overlap_sums(grid, copies, trials, seed);
            const double d = ks_distance_sorted(sums, [&](double x) { return cdf(x); });

            const auto zeros = static_cast<std::size_t>(
                std::lower_bound(sums.begin(), sums.end(), 1e-300) - sums.begin());
            const double atom_expected = ipow(1.0 - p_c, copies);
            const double atom_empirical = static_cast<double>(zeros) / static_cast<double>(trials);
            const double atom_se = std::max(
                std::sqrt(atom_expected * (1.0 - atom_expected) / static_cast<double>(trials)),
                1.0 / static_cast<double>(trials));

            std::ostringstream base;
            base << "nt" << nt << "_nf" << nf << "_copies" << copies;
            report.add("ks_" + base.str(), d, ks_tol);
            report.add("atom_" + base.str(), std::fabs(atom_empirical - atom_expected),
                       3.0 * atom_se);
        }
    }
    return report;
}

/// Reconstruction of the LoRaWAN table: target SINRs from sensitivities
/// plus margins (exact), ranges from the budget formula (1%), annulus
/// probabilities from the ranges (2 decimals), and the fixed nt = 100 game.
inline FamilyReport family_table3(const LoRaPreset& preset) {
    FamilyReport report;
    report.family = "table3";
    double zeta_err = 0.0;
    for (const auto& row : preset.rows)
        zeta_err = std::max(zeta_err, std::fabs(preset.derived_zeta_db(row) - row.zeta_db));
    report.add("zeta_exact", zeta_err, 0.0);

    const auto ranges = preset.derived_ranges_m();
    double range_rel_err = 0.0;
    for (std::size_t i = 0; i < preset.rows.size(); ++i)
        range_rel_err = std::max(
            range_rel_err, std::fabs(ranges[i] / (preset.rows[i].range_km * 1000.0) - 1.0));
    report.add("range_within_1pct", range_rel_err, 0.01);

    // A corrupted table can make the derived ranges non-monotone; report
    // that as a failure of the probability checks rather than aborting.
    double p_round_err = 0.0, p_sum = 0.0;
    try {
        const auto probs = annulus_probabilities(preset);
        for (std::size_t i = 0; i < probs.size(); ++i) {
            p_sum += probs[i];
            const double rounded = std::round(probs[i] * 100.0) / 100.0;
            p_round_err = std::max(p_round_err, std::fabs(rounded - preset.rows[i].p_sf));
        }
    } catch (const std::exception&) {
        p_round_err = std::numeric_limits<double>::infinity();
        p_sum = std::numeric_limits<double>::infinity();
    }
    report.add("p_sf_two_decimals", p_round_err, 0.0);
    report.add("p_sf_sums_to_one", std::fabs(p_sum - 1.0), 1e-15);
    report.add("game_nt_exact", std::fabs(preset.game_grid().nt() - 100.0), 0.0);

    double period_err = 0.0;
    for (const auto& row : preset.rows)
        period_err = std::max(
            period_err, std::fabs(row.period_s() - 100.0 * row.packet_duration_s));
    report.add("period_100dt_exact", period_err, 0.0);
    return report;
}

/// Pure Aloha dominates capture at every sampled radius (common random
/// numbers, 2 sigma slack), and the repetition exponent is exact.
inline FamilyReport family_dominance(const SigfoxPreset& preset, std::uint64_t seed,
                                     std::size_t trials = 30'000) {
    FamilyReport report;
    report.family = "dominance";
    const Scenario scn = sigfox_scenario(preset, 20'000, 1);
    const McConfig mc{trials, seed, 1};
    double worst_violation = 0.0;
    for (double frac : {0.2, 0.4, 0.6, 0.8, 1.0}) {
        const double r0 = std::max(scn.cell.r_min_m, frac * scn.cell.r_max_m);
        const OutageResult capture = op_at_r0(scn, r0, mc);
        const OutageResult aloha = op_aloha_at_r0(scn, r0);
        worst_violation =
            std::max(worst_violation, capture.op - 2.0 * capture.std_error - aloha.op);
    }
    report.add("aloha_dominates", worst_violation, 0.0);

    Scenario rep3 = scn;
    rep3.n_rep = 3;
    const double r_probe = 0.7 * scn.cell.r_max_m;
    const double op1 = op_at_r0(scn, r_probe, mc).op;
    const double op3 = op_at_r0(rep3, r_probe, mc).op;
    report.add("repetition_exponent_exact", std::fabs(op3 - ipow(op1, 3)), 0.0);
    return report;
}

/// N = 1 analytic anchors: cell-edge outage equals the no-interference
/// fading law, and the Monte Carlo global outage matches an independent
/// 1D quadrature of the same integrand.
inline FamilyReport family_anchors(const SigfoxPreset& preset, std::uint64_t seed,
                                   std::size_t edge_trials = 1'000'000,
                                   std::size_t global_trials = 4'000'000) {
    FamilyReport report;
    report.family = "anchors";
    const Scenario scn = sigfox_scenario(preset, 1, 1);

    const OutageResult edge = op_at_r0(scn, scn.cell.r_max_m, {edge_trials, seed, 2});
    const double expected = 1.0 - std::exp(-1.0);
    report.add("edge_outage_1_minus_exp", std::fabs(edge.op - expected), 3.0 * edge.std_error);

    const int nodes = 64;
    McConfig per_node{std::max<std::size_t>(1, global_trials / nodes), seed, 2};
    const OutageResult mc_global = global_outage(
        scn, [&](double r) { return op_at_r0(scn, r, per_node); }, nodes);
    const double oracle = integrate_adaptive(
        [&](double r) {
            const double threshold = scn.budget.target_sinr_linear() * scn.budget.noise_over_tx() /
                                     path_loss(scn.path, r);
            return (1.0 - std::exp(-scn.fading.rate * threshold)) * scn.cell.radial_density(r);
        },
        scn.cell.r_min_m, scn.cell.r_max_m, {1e-10, 1e-14, 48, 10'000'000});
    report.add("global_op_vs_quadrature", std::fabs(mc_global.op - oracle), 1e-3);
    return report;
}

inline std::vector<std::string> validation_family_names() {
    return {"cdf1d_ks", "cdf2d_ks", "convolution_ks", "table3", "dominance", "anchors"};
}

/// Runs the named family with its default (acceptance-grade) settings.
inline FamilyReport run_validation_family(const std::string& name, const PresetPack& presets,
                                          std::uint64_t seed) {
    if (name == "cdf1d_ks") return family_cdf1d_ks(seed);
    if (name == "cdf2d_ks") return family_cdf2d_ks(seed);
    if (name == "convolution_ks") return family_convolution_ks(seed);
    if (name == "table3") return family_table3(presets.lorawan);
    if (name == "dominance") return family_dominance(presets.sigfox, seed);
    if (name == "anchors") return family_anchors(presets.sigfox, seed);
    throw std::invalid_argument("unknown validation family '" + name + "'");
}

}  // namespace toss2d
