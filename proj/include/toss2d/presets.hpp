#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "toss2d/mixed_distribution.hpp"
#include "toss2d/overlap.hpp"
#include "toss2d/powers.hpp"
#include "toss2d/radio.hpp"
#include "toss2d/scenario.hpp"

namespace toss2d {

/// Sigfox-style ultra-narrow-band uplink: 2D game on a 40 kHz band with
/// 100 Hz packets, one message every 617 s, evaluated under the fading +
/// path-loss model.
struct SigfoxPreset {
    ResourceGrid grid = ResourceGrid::two_dim(617.0, 40000.0, 1.76, 100.0);
    LinkBudget budget{14.0, -154.0, 33.0};
    PathLossModel path{3.6, 1.0, 1.0};
    FadingModel fading{1.0};
    double cell_r_min_m = 1.0;
    int channels = 1;
    // Range quoted alongside the parameter set; the budget-derived r_max
    // (about 5.62 km) is what every computation uses.
    double reference_range_km = 5.2;

    static SigfoxPreset standard() { return {}; }

    double r_max_m() const { return r_max_from_budget(budget, path); }
    CellGeometry cell() const { return {cell_r_min_m, r_max_m()}; }
};

/// Fully wired Scenario for the Sigfox preset.
inline Scenario sigfox_scenario(const SigfoxPreset& preset, long n_devices, int n_rep) {
    Scenario scn{preset.grid, preset.budget, preset.path, preset.fading,
                 preset.cell(), n_devices, n_rep};
    scn.validate();
    return scn;
}

/// One LoRa spreading factor: link parameters and its 1D game timing.
/// The message period is pinned to 100 packet durations by the 1% duty
/// cycle, so every SF plays the same nt = 100 game.
struct SfRow {
    int sf = 6;
    double sensitivity_dbm = 0.0;
    double zeta_db = 0.0;
    double range_km = 0.0;   // printed reference; computations re-derive it
    double p_sf = 0.0;       // printed reference annulus probability
    double payload_bytes = 0.0;
    double packet_duration_s = 0.0;
    double bitrate_kbps = 0.0;

    double period_s() const { return 100.0 * packet_duration_s; }
};

enum class ChannelAssignment {
    uniform_random,  // each device picks one of the channels uniformly
    equal_split,     // exactly N_sf / channels devices per channel
};

/// LoRaWAN-style uplink: seven orthogonal 1D games (one per spreading
/// factor) over three channels, multi-annulus cell, perfect power control.
struct LoRaPreset {
    std::array<SfRow, 7> rows{};
    int channels = 3;
    double channel_bandwidth_hz = 125000.0;
    double tx_power_dbm = 14.0;
    double noise_power_dbm = -117.0;
    double shadow_margin_db = 10.0;
    double penetration_loss_db = 15.0;
    PathLossModel path{3.6, 1.0, 1.0};
    double cell_r_min_m = 1.0;
    double duty_cycle_ratio = 100.0;  // T_sf / dt_sf
    ChannelAssignment assignment = ChannelAssignment::uniform_random;

    static LoRaPreset standard() {
        LoRaPreset preset;
        preset.rows = {{
            {6, -121.0, 21.0, 1.13, 0.13, 242.0, 0.233, 8.309},
            {7, -124.0, 18.0, 1.37, 0.06, 242.0, 0.400, 4.840},
            {8, -127.0, 15.0, 1.67, 0.09, 242.0, 0.707, 2.738},
            {9, -130.0, 12.0, 2.02, 0.13, 115.0, 0.677, 1.359},
            {10, -133.0, 9.0, 2.45, 0.19, 51.0, 0.698, 0.585},
            {11, -135.0, 7.0, 2.78, 0.17, 51.0, 1.561, 0.261},
            {12, -137.0, 5.0, 3.16, 0.23, 51.0, 2.793, 0.146},
        }};
        return preset;
    }

    /// The common 1D game: nt = 100 exactly, by construction.
    ResourceGrid game_grid() const { return ResourceGrid::from_ratios_1d(duty_cycle_ratio); }

    /// Target SINR from the sensitivity plus shadow and penetration margins.
    double derived_zeta_db(const SfRow& row) const {
        return row.sensitivity_dbm - noise_power_dbm + shadow_margin_db + penetration_loss_db;
    }

    LinkBudget budget_for(const SfRow& row) const {
        return {tx_power_dbm, noise_power_dbm, row.zeta_db};
    }

    /// Per-SF communication ranges re-derived from the link budgets.
    std::array<double, 7> derived_ranges_m() const {
        std::array<double, 7> ranges{};
        for (std::size_t i = 0; i < rows.size(); ++i)
            ranges[i] = r_max_from_budget(budget_for(rows[i]), path);
        return ranges;
    }
};

/// Probability of a device landing in each annulus, proportional to its
/// area: p_i = (r_i^2 - r_{i-1}^2) / (r_last^2 - r_min^2), with r_0 := r_min.
/// The last entry absorbs the complement so the probabilities sum to one
/// to full precision.
inline std::vector<double> annulus_probabilities(std::span<const double> ranges, double r_min) {
    if (ranges.empty()) throw std::invalid_argument("annulus_probabilities: no ranges");
    double prev = r_min;
    for (double r : ranges) {
        if (!(r > prev)) throw std::invalid_argument("annulus_probabilities: ranges must increase");
        prev = r;
    }
    const double total = ranges.back() * ranges.back() - r_min * r_min;
    std::vector<double> probs(ranges.size());
    double acc = 0.0;
    prev = r_min;
    for (std::size_t i = 0; i + 1 < ranges.size(); ++i) {
        probs[i] = (ranges[i] * ranges[i] - prev * prev) / total;
        acc += probs[i];
        prev = ranges[i];
    }
    probs.back() = 1.0 - acc;
    return probs;
}

inline std::vector<double> annulus_probabilities(const LoRaPreset& preset) {
    const auto ranges = preset.derived_ranges_m();
    return annulus_probabilities(std::span<const double>(ranges), preset.cell_r_min_m);
}

namespace detail {

/// Same-channel interferer count and per-interferer collision dilution for
/// a tagged device among n_sf devices of its SF.
inline void sf_interference_terms(const LoRaPreset& preset, long n_sf, long& n_int,
                                  double& collision_scale) {
    if (preset.assignment == ChannelAssignment::uniform_random) {
        n_int = n_sf - 1;
        collision_scale = 1.0 / preset.channels;
    } else {
        n_int = std::lround(static_cast<double>(n_sf) / preset.channels) - 1;
        collision_scale = 1.0;
    }
}

}  // namespace detail

/// Per-SF outage under perfect power control with no overlap tolerance
/// (threshold zero): OP(sf) = [1 - (1 - p_c * scale)^(N_sf - 1)]^nrep with
/// N_sf = round(N p_sf). A positive per-SF threshold theta (the
/// shrunken-annuli variant) switches to the convolved aggregate law.
inline std::array<double, 7> lorawan_op_per_sf(const LoRaPreset& preset, long n_devices,
                                               int n_rep, std::span<const double> theta = {},
                                               std::size_t bins_per_unit = 1024) {
    if (n_devices < 1) throw std::invalid_argument("lorawan_op_per_sf: n_devices must be >= 1");
    if (n_rep < 1) throw std::invalid_argument("lorawan_op_per_sf: n_rep must be >= 1");
    if (!theta.empty() && theta.size() != preset.rows.size())
        throw std::invalid_argument("lorawan_op_per_sf: theta must have one entry per SF");

    const auto probs = annulus_probabilities(preset);
    const ResourceGrid game = preset.game_grid();
    const double p_c = collision_probability(game);

    std::array<double, 7> op{};
    for (std::size_t i = 0; i < preset.rows.size(); ++i) {
        const long n_sf = std::lround(static_cast<double>(n_devices) * probs[i]);
        long n_int = 0;
        double scale = 1.0;
        detail::sf_interference_terms(preset, n_sf, n_int, scale);
        if (n_int <= 0) {
            op[i] = 0.0;
            continue;
        }
        const double theta_i = theta.empty() ? 0.0 : theta[i];
        double q;
        if (theta_i <= 0.0) {
            q = 1.0 - ipow(1.0 - p_c * scale, static_cast<unsigned long long>(n_int));
        } else {
            const MixedDistribution per_interferer =
                thin(from_overlap_law(game, bins_per_unit), scale);
            const MixedDistribution aggregate = convolve_power(
                per_interferer, {static_cast<std::size_t>(n_int), bins_per_unit});
            q = aggregate.ccdf(theta_i);
        }
        op[i] = ipow(q, static_cast<unsigned long long>(n_rep));
    }
    return op;
}

/// p_sf-weighted outage over the seven games.
inline double lorawan_global_op_from(const LoRaPreset& preset, const std::array<double, 7>& op) {
    const auto probs = annulus_probabilities(preset);
    double total = 0.0;
    for (std::size_t i = 0; i < op.size(); ++i) total += probs[i] * op[i];
    return total;
}

inline double lorawan_global_op(const LoRaPreset& preset, long n_devices, int n_rep) {
    return lorawan_global_op_from(preset, lorawan_op_per_sf(preset, n_devices, n_rep));
}

struct LorawanThroughput {
    double total_msg_per_s = 0.0;
    std::array<double, 7> per_sf_msg_per_s{};
};

/// Th = sum over SF of channels * N * p_sf * (1 - OP(sf)) / (T_sf * nrep),
/// in messages per second.
inline LorawanThroughput lorawan_throughput_from(const LoRaPreset& preset, long n_devices,
                                                 int n_rep, const std::array<double, 7>& op) {
    const auto probs = annulus_probabilities(preset);
    LorawanThroughput th;
    for (std::size_t i = 0; i < preset.rows.size(); ++i) {
        th.per_sf_msg_per_s[i] = preset.channels * static_cast<double>(n_devices) * probs[i] *
                                 (1.0 - op[i]) / (preset.rows[i].period_s() * n_rep);
        th.total_msg_per_s += th.per_sf_msg_per_s[i];
    }
    return th;
}

inline LorawanThroughput lorawan_throughput(const LoRaPreset& preset, long n_devices, int n_rep) {
    return lorawan_throughput_from(preset, n_devices, n_rep,
                                   lorawan_op_per_sf(preset, n_devices, n_rep));
}

/// One Sigfox sweep point: capture and pure-Aloha global outage plus the
/// matching throughputs. mc.trials is the point budget, split evenly across
/// the radial quadrature nodes.
struct SigfoxPointResult {
    OutageResult op_bar;       // Monte Carlo, with aggregated standard error
    double op_aloha_bar = 0.0; // analytic
    double th_msg_per_s = 0.0;
    double th_aloha_msg_per_s = 0.0;
};

inline SigfoxPointResult evaluate_sigfox_point(const SigfoxPreset& preset, long n_devices,
                                               int n_rep, const McConfig& mc,
                                               int quadrature_nodes = 64) {
    const Scenario scn = sigfox_scenario(preset, n_devices, n_rep);
    McConfig per_node = mc;
    per_node.trials = std::max<std::size_t>(1, mc.trials / static_cast<std::size_t>(quadrature_nodes));
    SigfoxPointResult point;
    point.op_bar = global_outage(
        scn, [&](double r) { return op_at_r0(scn, r, per_node); }, quadrature_nodes);
    point.op_aloha_bar = global_outage(
                             scn, [&](double r) { return op_aloha_at_r0(scn, r); }, quadrature_nodes)
                             .op;
    point.th_msg_per_s = throughput(scn, point.op_bar.op);
    point.th_aloha_msg_per_s = throughput(scn, point.op_aloha_bar);
    return point;
}

// --- JSON serialization ----------------------------------------------------
//
// Presets load from and save to a JSON document with the schema below;
// unknown fields are rejected, missing fields keep their defaults.
//
// {
//   "sigfox": {
//     "grid": {"period_s", "bandwidth_hz", "packet_duration_s", "packet_bandwidth_hz"},
//     "budget": {"tx_power_dbm", "noise_power_dbm", "target_sinr_db"},
//     "path": {"exponent", "critical_distance_m", "gain"},
//     "fading": {"rate"},
//     "cell_r_min_m", "channels", "reference_range_km"
//   },
//   "lorawan": {
//     "channels", "channel_bandwidth_hz", "tx_power_dbm", "noise_power_dbm",
//     "shadow_margin_db", "penetration_loss_db", "path": {...},
//     "cell_r_min_m", "duty_cycle_ratio", "channel_assignment",
//     "rows": [{"sf", "sensitivity_dbm", "zeta_db", "range_km", "p_sf",
//               "payload_bytes", "packet_duration_s", "bitrate_kbps"}, x7]
//   }
// }

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j,
                                std::initializer_list<const char*> known, const char* where) {
    for (const auto& item : j.items()) {
        bool found = false;
        for (const char* k : known)
            if (item.key() == k) {
                found = true;
                break;
            }
        if (!found)
            throw std::invalid_argument(std::string(where) + ": unknown field '" + item.key() + "'");
    }
}

template <typename T>
void get_if_present(const nlohmann::json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const SigfoxPreset& p) {
    return {
        {"grid",
         {{"period_s", p.grid.period_s},
          {"bandwidth_hz", p.grid.bandwidth_hz},
          {"packet_duration_s", p.grid.packet_duration_s},
          {"packet_bandwidth_hz", p.grid.packet_bandwidth_hz}}},
        {"budget",
         {{"tx_power_dbm", p.budget.tx_power_dbm},
          {"noise_power_dbm", p.budget.noise_power_dbm},
          {"target_sinr_db", p.budget.target_sinr_db}}},
        {"path",
         {{"exponent", p.path.exponent},
          {"critical_distance_m", p.path.critical_distance_m},
          {"gain", p.path.gain}}},
        {"fading", {{"rate", p.fading.rate}}},
        {"cell_r_min_m", p.cell_r_min_m},
        {"channels", p.channels},
        {"reference_range_km", p.reference_range_km},
    };
}

inline PathLossModel path_loss_from_json(const nlohmann::json& j) {
    detail::reject_unknown_keys(j, {"exponent", "critical_distance_m", "gain"}, "path");
    PathLossModel model;
    detail::get_if_present(j, "exponent", model.exponent);
    detail::get_if_present(j, "critical_distance_m", model.critical_distance_m);
    detail::get_if_present(j, "gain", model.gain);
    model.validate();
    return model;
}

inline SigfoxPreset sigfox_preset_from_json(const nlohmann::json& j) {
    detail::reject_unknown_keys(j,
                                {"grid", "budget", "path", "fading", "cell_r_min_m", "channels",
                                 "reference_range_km"},
                                "sigfox");
    SigfoxPreset p = SigfoxPreset::standard();
    if (auto it = j.find("grid"); it != j.end()) {
        detail::reject_unknown_keys(
            *it, {"period_s", "bandwidth_hz", "packet_duration_s", "packet_bandwidth_hz"},
            "sigfox.grid");
        detail::get_if_present(*it, "period_s", p.grid.period_s);
        detail::get_if_present(*it, "bandwidth_hz", p.grid.bandwidth_hz);
        detail::get_if_present(*it, "packet_duration_s", p.grid.packet_duration_s);
        detail::get_if_present(*it, "packet_bandwidth_hz", p.grid.packet_bandwidth_hz);
        p.grid.validate();
    }
    if (auto it = j.find("budget"); it != j.end()) {
        detail::reject_unknown_keys(*it, {"tx_power_dbm", "noise_power_dbm", "target_sinr_db"},
                                    "sigfox.budget");
        detail::get_if_present(*it, "tx_power_dbm", p.budget.tx_power_dbm);
        detail::get_if_present(*it, "noise_power_dbm", p.budget.noise_power_dbm);
        detail::get_if_present(*it, "target_sinr_db", p.budget.target_sinr_db);
    }
    if (auto it = j.find("path"); it != j.end()) p.path = path_loss_from_json(*it);
    if (auto it = j.find("fading"); it != j.end()) {
        detail::reject_unknown_keys(*it, {"rate"}, "sigfox.fading");
        detail::get_if_present(*it, "rate", p.fading.rate);
        p.fading.validate();
    }
    detail::get_if_present(j, "cell_r_min_m", p.cell_r_min_m);
    detail::get_if_present(j, "channels", p.channels);
    detail::get_if_present(j, "reference_range_km", p.reference_range_km);
    return p;
}

inline nlohmann::ordered_json to_json(const LoRaPreset& p) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : p.rows)
        rows.push_back({{"sf", row.sf},
                        {"sensitivity_dbm", row.sensitivity_dbm},
                        {"zeta_db", row.zeta_db},
                        {"range_km", row.range_km},
                        {"p_sf", row.p_sf},
                        {"payload_bytes", row.payload_bytes},
                        {"packet_duration_s", row.packet_duration_s},
                        {"bitrate_kbps", row.bitrate_kbps}});
    return {
        {"channels", p.channels},
        {"channel_bandwidth_hz", p.channel_bandwidth_hz},
        {"tx_power_dbm", p.tx_power_dbm},
        {"noise_power_dbm", p.noise_power_dbm},
        {"shadow_margin_db", p.shadow_margin_db},
        {"penetration_loss_db", p.penetration_loss_db},
        {"path",
         {{"exponent", p.path.exponent},
          {"critical_distance_m", p.path.critical_distance_m},
          {"gain", p.path.gain}}},
        {"cell_r_min_m", p.cell_r_min_m},
        {"duty_cycle_ratio", p.duty_cycle_ratio},
        {"channel_assignment",
         p.assignment == ChannelAssignment::uniform_random ? "uniform_random" : "equal_split"},
        {"rows", rows},
    };
}

inline LoRaPreset lorawan_preset_from_json(const nlohmann::json& j) {
    detail::reject_unknown_keys(j,
                                {"channels", "channel_bandwidth_hz", "tx_power_dbm",
                                 "noise_power_dbm", "shadow_margin_db", "penetration_loss_db",
                                 "path", "cell_r_min_m", "duty_cycle_ratio", "channel_assignment",
                                 "rows"},
                                "lorawan");
    LoRaPreset p = LoRaPreset::standard();
    detail::get_if_present(j, "channels", p.channels);
    detail::get_if_present(j, "channel_bandwidth_hz", p.channel_bandwidth_hz);
    detail::get_if_present(j, "tx_power_dbm", p.tx_power_dbm);
    detail::get_if_present(j, "noise_power_dbm", p.noise_power_dbm);
    detail::get_if_present(j, "shadow_margin_db", p.shadow_margin_db);
    detail::get_if_present(j, "penetration_loss_db", p.penetration_loss_db);
    if (auto it = j.find("path"); it != j.end()) p.path = path_loss_from_json(*it);
    detail::get_if_present(j, "cell_r_min_m", p.cell_r_min_m);
    detail::get_if_present(j, "duty_cycle_ratio", p.duty_cycle_ratio);
    if (auto it = j.find("channel_assignment"); it != j.end()) {
        const std::string mode = it->get<std::string>();
        if (mode == "uniform_random")
            p.assignment = ChannelAssignment::uniform_random;
        else if (mode == "equal_split")
            p.assignment = ChannelAssignment::equal_split;
        else
            throw std::invalid_argument("lorawan.channel_assignment: unknown mode '" + mode + "'");
    }
    if (auto it = j.find("rows"); it != j.end()) {
        if (!it->is_array() || it->size() != p.rows.size())
            throw std::invalid_argument("lorawan.rows: expected exactly 7 rows");
        for (std::size_t i = 0; i < p.rows.size(); ++i) {
            const auto& rj = (*it)[i];
            detail::reject_unknown_keys(rj,
                                        {"sf", "sensitivity_dbm", "zeta_db", "range_km", "p_sf",
                                         "payload_bytes", "packet_duration_s", "bitrate_kbps"},
                                        "lorawan.rows");
            SfRow& row = p.rows[i];
            detail::get_if_present(rj, "sf", row.sf);
            detail::get_if_present(rj, "sensitivity_dbm", row.sensitivity_dbm);
            detail::get_if_present(rj, "zeta_db", row.zeta_db);
            detail::get_if_present(rj, "range_km", row.range_km);
            detail::get_if_present(rj, "p_sf", row.p_sf);
            detail::get_if_present(rj, "payload_bytes", row.payload_bytes);
            detail::get_if_present(rj, "packet_duration_s", row.packet_duration_s);
            detail::get_if_present(rj, "bitrate_kbps", row.bitrate_kbps);
        }
    }
    return p;
}

/// Both presets from a single document with optional "sigfox" / "lorawan"
/// sections. Absent sections yield the standard presets.
struct PresetPack {
    SigfoxPreset sigfox = SigfoxPreset::standard();
    LoRaPreset lorawan = LoRaPreset::standard();
};

inline PresetPack presets_from_json(const nlohmann::json& j) {
    detail::reject_unknown_keys(j, {"sigfox", "lorawan"}, "presets");
    PresetPack pack;
    if (auto it = j.find("sigfox"); it != j.end()) pack.sigfox = sigfox_preset_from_json(*it);
    if (auto it = j.find("lorawan"); it != j.end()) pack.lorawan = lorawan_preset_from_json(*it);
    return pack;
}

inline nlohmann::ordered_json to_json(const PresetPack& pack) {
    return {{"sigfox", to_json(pack.sigfox)}, {"lorawan", to_json(pack.lorawan)}};
}

}  // namespace toss2d
