// toss2d command-line front end: distribution dumps, Sigfox and LoRaWAN
// sweeps, and the self-validation suite. Outputs are CurveTable CSV/JSON
// documents carrying enough metadata to re-run bit-identically.

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "toss2d/curve_table.hpp"
#include "toss2d/format.hpp"
#include "toss2d/mixed_distribution.hpp"
#include "toss2d/overlap.hpp"
#include "toss2d/presets.hpp"
#include "toss2d/scenario.hpp"
#include "toss2d/validation.hpp"
#include "toss2d/version.hpp"

using nlohmann::ordered_json;
using namespace toss2d;

namespace {

struct RunConfig {
    std::string command;
    std::uint64_t seed = 1;
    std::size_t trials = 100000;
    unsigned workers = 1;
    std::string format = "csv";
    std::string out;  // empty = stdout

    // dist
    std::string dist_mode = "2d";
    double dist_nt = 10.0;
    double dist_nf = 10.0;
    std::size_t dist_points = 201;
    std::size_t dist_bins = 1024;
    long dist_sum = 0;  // N for the aggregate law; 0 disables

    // sigfox
    std::vector<long> sigfox_n{10000};
    std::vector<int> sigfox_nrep{1};
    int sigfox_nodes = 64;
    std::size_t profile_points = 0;

    // lorawan
    std::vector<long> lorawan_n{100};
    std::vector<int> lorawan_nrep{1};
    double lorawan_theta = 0.0;

    // validate
    std::vector<std::string> families;

    std::string preset_name;  // optional --preset {sigfox,lorawan}
    PresetPack presets;
    ordered_json presets_json;  // as loaded, for the config echo
};

// The echoed config identifies the computation; --workers and --out are
// excluded since neither affects a single result byte.
ordered_json config_to_json(const RunConfig& cfg) {
    ordered_json j;
    j["command"] = cfg.command;
    j["seed"] = cfg.seed;
    j["trials"] = cfg.trials;
    j["format"] = cfg.format;
    if (cfg.command == "dist") {
        j["dist"] = {{"mode", cfg.dist_mode}, {"nt", cfg.dist_nt},   {"nf", cfg.dist_nf},
                     {"points", cfg.dist_points}, {"bins", cfg.dist_bins}, {"sum", cfg.dist_sum}};
    } else if (cfg.command == "sigfox") {
        j["sigfox"] = {{"n", cfg.sigfox_n},
                       {"nrep", cfg.sigfox_nrep},
                       {"nodes", cfg.sigfox_nodes},
                       {"profile_points", cfg.profile_points}};
    } else if (cfg.command == "lorawan") {
        j["lorawan"] = {{"n", cfg.lorawan_n}, {"nrep", cfg.lorawan_nrep}, {"theta", cfg.lorawan_theta}};
    } else if (cfg.command == "validate") {
        j["validate"] = {{"families", cfg.families}};
    }
    if (!cfg.preset_name.empty()) j["preset"] = cfg.preset_name;
    if (!cfg.presets_json.is_null()) j["presets"] = cfg.presets_json;
    return j;
}

/// A previous JSON output is accepted directly as a config; its embedded
/// metadata.config is what gets re-run.
const nlohmann::json& resolve_config_root(const nlohmann::json& doc) {
    if (doc.contains("metadata") && doc["metadata"].contains("config"))
        return doc["metadata"]["config"];
    return doc;
}

void apply_config_json(const nlohmann::json& doc, RunConfig& cfg) {
    const nlohmann::json* root = &resolve_config_root(doc);
    detail::reject_unknown_keys(
        *root, {"command", "seed", "trials", "workers", "format", "preset", "dist", "sigfox",
                "lorawan", "validate", "presets"},
        "config");
    detail::get_if_present(*root, "command", cfg.command);
    detail::get_if_present(*root, "seed", cfg.seed);
    detail::get_if_present(*root, "trials", cfg.trials);
    detail::get_if_present(*root, "workers", cfg.workers);
    detail::get_if_present(*root, "format", cfg.format);
    detail::get_if_present(*root, "preset", cfg.preset_name);
    if (auto it = root->find("dist"); it != root->end()) {
        detail::reject_unknown_keys(*it, {"mode", "nt", "nf", "points", "bins", "sum"}, "config.dist");
        detail::get_if_present(*it, "mode", cfg.dist_mode);
        detail::get_if_present(*it, "nt", cfg.dist_nt);
        detail::get_if_present(*it, "nf", cfg.dist_nf);
        detail::get_if_present(*it, "points", cfg.dist_points);
        detail::get_if_present(*it, "bins", cfg.dist_bins);
        detail::get_if_present(*it, "sum", cfg.dist_sum);
    }
    if (auto it = root->find("sigfox"); it != root->end()) {
        detail::reject_unknown_keys(*it, {"n", "nrep", "nodes", "profile_points"}, "config.sigfox");
        detail::get_if_present(*it, "n", cfg.sigfox_n);
        detail::get_if_present(*it, "nrep", cfg.sigfox_nrep);
        detail::get_if_present(*it, "nodes", cfg.sigfox_nodes);
        detail::get_if_present(*it, "profile_points", cfg.profile_points);
    }
    if (auto it = root->find("lorawan"); it != root->end()) {
        detail::reject_unknown_keys(*it, {"n", "nrep", "theta"}, "config.lorawan");
        detail::get_if_present(*it, "n", cfg.lorawan_n);
        detail::get_if_present(*it, "nrep", cfg.lorawan_nrep);
        detail::get_if_present(*it, "theta", cfg.lorawan_theta);
    }
    if (auto it = root->find("validate"); it != root->end()) {
        detail::reject_unknown_keys(*it, {"families"}, "config.validate");
        detail::get_if_present(*it, "families", cfg.families);
    }
    if (auto it = root->find("presets"); it != root->end()) {
        cfg.presets = presets_from_json(*it);
        cfg.presets_json = ordered_json(*it);
    }
}

std::string iso_timestamp() {
    std::time_t t;
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"))
        t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    else
        t = std::time(nullptr);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// The hash fingerprints the computation, so the presentation format is
// excluded: the same run emitted as CSV and JSON shares one hash.
std::string config_hash(const ordered_json& config) {
    ordered_json identity = config;
    identity.erase("format");
    return fnv1a_hex(identity.dump());
}

void attach_metadata(CurveTable& table, const RunConfig& cfg) {
    const ordered_json config = config_to_json(cfg);
    table.add_metadata("version", version_string);
    table.add_metadata("command", cfg.command);
    table.add_metadata("seed", std::to_string(cfg.seed));
    table.add_metadata("config_hash", config_hash(config));
    table.add_metadata("timestamp", iso_timestamp());
    table.add_metadata("config", config.dump());
}

// Writes the table and reports whether every requested cell was computed;
// sweeps record per-point failures as missing cells rather than aborting,
// and the exit code carries the distinction.
int write_output(const RunConfig& cfg, const CurveTable& table) {
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!cfg.out.empty()) {
        file.open(cfg.out, std::ios::binary);
        if (!file) throw std::runtime_error("cannot open output file: " + cfg.out);
        out = &file;
    }
    if (cfg.format == "csv")
        table.write_csv(*out);
    else
        table.write_json(*out);
    for (const auto& col : table.columns)
        for (double v : col.values)
            if (std::isnan(v)) {
                std::cerr << "toss2d: some sweep points failed; cells left empty\n";
                return 2;
            }
    return 0;
}

// --- dist --------------------------------------------------------------

CurveTable cmd_dist(const RunConfig& cfg) {
    ResourceGrid grid = cfg.dist_mode == "1d" ? ResourceGrid::from_ratios_1d(cfg.dist_nt)
                                              : ResourceGrid::from_ratios_2d(cfg.dist_nt, cfg.dist_nf);
    std::string mode = cfg.dist_mode;
    // --preset swaps in the case-study grid: the Sigfox 2D game or the
    // common LoRa per-SF 1D game.
    if (cfg.preset_name == "sigfox") {
        grid = cfg.presets.sigfox.grid;
        mode = "2d";
    } else if (cfg.preset_name == "lorawan") {
        grid = cfg.presets.lorawan.game_grid();
        mode = "1d";
    }
    if (!(grid.nt() > 1.0) || (mode == "2d" && !(grid.nf() > 1.0)))
        throw std::invalid_argument("dist: closed-form laws need nt > 1 (and nf > 1 in 2d mode)");
    if (cfg.dist_points < 2) throw std::invalid_argument("dist: need at least 2 points");

    CurveTable table;
    table.x_name = "x";
    attach_metadata(table, cfg);
    table.add_metadata("mode", mode);
    table.add_metadata("nt", format_double(grid.nt()));
    table.add_metadata("nf", format_double(grid.nf()));

    if (cfg.dist_sum == 0) {
        table.add_column("cdf");
        table.add_column("pdf");
        auto& cdf_col = table.columns[0];
        auto& pdf_col = table.columns[1];
        const std::size_t n = cfg.dist_points;
        for (std::size_t i = 0; i < n; ++i) {
            double x = static_cast<double>(i) / static_cast<double>(n - 1);
            if (i + 1 == n) x = 1.0 - 1e-9;  // cdf domain is [0, 1)
            table.x.push_back(x);
            cdf_col.values.push_back(cdf_overlap(x, grid));
            // Mixed-law convention: the "density" at 0 is the atom itself.
            double pdf = std::nan("");
            try {
                pdf = x == 0.0 ? cdf_overlap(0.0, grid) : pdf_overlap(x, grid);
            } catch (const std::exception&) {
            }
            pdf_col.values.push_back(pdf);
        }
        return table;
    }

    if (cfg.dist_sum < 1) throw std::invalid_argument("dist: --sum needs N >= 1");
    const std::size_t copies = static_cast<std::size_t>(cfg.dist_sum - 1);
    const MixedDistribution law =
        copies == 0 ? MixedDistribution::point_mass_at_zero()
                    : convolve_power(from_overlap_law(grid, cfg.dist_bins), {copies, cfg.dist_bins});
    const double support = std::max(law.support_max, 1e-12);
    table.add_column("cdf_xsum");
    table.add_column("pr_xsum_zero");
    auto& cdf_col = table.columns[0];
    auto& zero_col = table.columns[1];
    for (std::size_t i = 0; i < cfg.dist_points; ++i) {
        const double x =
            support * static_cast<double>(i) / static_cast<double>(cfg.dist_points - 1);
        table.x.push_back(x);
        cdf_col.values.push_back(1.0 - law.ccdf(x));
        zero_col.values.push_back(law.atom0);
    }
    table.add_metadata("sum_atom0", format_double(law.atom0));
    return table;
}

// --- sigfox --------------------------------------------------------------

CurveTable cmd_sigfox(const RunConfig& cfg) {
    const SigfoxPreset& preset = cfg.presets.sigfox;
    const McConfig mc{cfg.trials, cfg.seed, cfg.workers};

    if (cfg.profile_points > 0) {
        if (cfg.sigfox_n.size() != 1 || cfg.sigfox_nrep.size() != 1)
            throw std::invalid_argument("sigfox: the r0 profile needs exactly one --n and one --nrep");
        const Scenario scn = sigfox_scenario(preset, cfg.sigfox_n[0], cfg.sigfox_nrep[0]);
        std::vector<double> radii;
        for (std::size_t i = 0; i < cfg.profile_points; ++i) {
            const double frac =
                static_cast<double>(i + 1) / static_cast<double>(cfg.profile_points);
            radii.push_back(scn.cell.r_min_m + frac * (scn.cell.r_max_m - scn.cell.r_min_m));
        }
        CurveTable table = sweep_table(
            "r0", radii, {"op", "op_stderr", "op_aloha"}, [&](double r0) {
                const OutageResult capture = op_at_r0(scn, r0, mc);
                const OutageResult aloha = op_aloha_at_r0(scn, r0);
                return std::vector<double>{capture.op, capture.std_error, aloha.op};
            });
        attach_metadata(table, cfg);
        return table;
    }

    const std::vector<std::string> columns{"n_rep", "op_bar",    "op_bar_stderr", "op_aloha_bar",
                                           "th",    "th_stderr", "th_aloha"};
    CurveTable table;
    table.x_name = "n";
    for (const auto& name : columns) table.add_column(name);
    for (int nrep : cfg.sigfox_nrep) {
        std::vector<double> n_values(cfg.sigfox_n.begin(), cfg.sigfox_n.end());
        const CurveTable part = sweep_table(
            "n", n_values, columns, [&](double n) {
                const long devices = static_cast<long>(n);
                const auto point =
                    evaluate_sigfox_point(preset, devices, nrep, mc, cfg.sigfox_nodes);
                // Th = N (1 - OP) / (T nrep); its stderr is the OP stderr
                // scaled by the same factor. Presented per hour.
                const double per_hour =
                    3600.0 * static_cast<double>(devices) / (preset.grid.period_s * nrep);
                return std::vector<double>{static_cast<double>(nrep),
                                           point.op_bar.op,
                                           point.op_bar.std_error,
                                           point.op_aloha_bar,
                                           3600.0 * point.th_msg_per_s,
                                           per_hour * point.op_bar.std_error,
                                           3600.0 * point.th_aloha_msg_per_s};
            });
        table.x.insert(table.x.end(), part.x.begin(), part.x.end());
        for (std::size_t c = 0; c < columns.size(); ++c)
            table.columns[c].values.insert(table.columns[c].values.end(),
                                           part.columns[c].values.begin(),
                                           part.columns[c].values.end());
    }
    attach_metadata(table, cfg);
    return table;
}

// --- lorawan ---------------------------------------------------------------

CurveTable cmd_lorawan(const RunConfig& cfg) {
    const LoRaPreset& preset = cfg.presets.lorawan;
    std::vector<std::string> columns{"n_rep", "op_bar", "th"};
    for (int sf = 6; sf <= 12; ++sf) columns.push_back("op_sf" + std::to_string(sf));
    for (int sf = 6; sf <= 12; ++sf) columns.push_back("th_sf" + std::to_string(sf));

    std::array<double, 7> theta{};
    theta.fill(cfg.lorawan_theta);
    const bool use_theta = cfg.lorawan_theta > 0.0;

    CurveTable table;
    table.x_name = "n";
    for (const auto& name : columns) table.add_column(name);
    for (int nrep : cfg.lorawan_nrep) {
        std::vector<double> n_values(cfg.lorawan_n.begin(), cfg.lorawan_n.end());
        const CurveTable part = sweep_table(
            "n", n_values, columns, [&](double n) {
                const long devices = static_cast<long>(n);
                const auto op = use_theta
                                    ? lorawan_op_per_sf(preset, devices, nrep, theta)
                                    : lorawan_op_per_sf(preset, devices, nrep);
                const auto th = lorawan_throughput_from(preset, devices, nrep, op);
                std::vector<double> row{static_cast<double>(nrep),
                                        lorawan_global_op_from(preset, op),
                                        3600.0 * th.total_msg_per_s};
                for (double v : op) row.push_back(v);
                for (double v : th.per_sf_msg_per_s) row.push_back(3600.0 * v);
                return row;
            });
        table.x.insert(table.x.end(), part.x.begin(), part.x.end());
        for (std::size_t c = 0; c < columns.size(); ++c)
            table.columns[c].values.insert(table.columns[c].values.end(),
                                           part.columns[c].values.begin(),
                                           part.columns[c].values.end());
    }
    attach_metadata(table, cfg);
    return table;
}

// --- validate ----------------------------------------------------------

int cmd_validate(const RunConfig& cfg) {
    std::vector<std::string> families = cfg.families;
    if (families.empty()) {
        if (cfg.preset_name == "sigfox")
            families = {"dominance", "anchors"};
        else if (cfg.preset_name == "lorawan")
            families = {"table3"};
        else
            families = validation_family_names();
    }
    ordered_json report;
    report["metadata"] = {{"version", version_string},
                          {"seed", cfg.seed},
                          {"config_hash", config_hash(config_to_json(cfg))},
                          {"timestamp", iso_timestamp()}};
    report["families"] = ordered_json::array();
    bool all_pass = true;
    for (const auto& name : families) {
        const FamilyReport family = run_validation_family(name, cfg.presets, cfg.seed);
        all_pass = all_pass && family.pass;
        report["families"].push_back(family.to_json());
        std::cerr << (family.pass ? "[PASS] " : "[FAIL] ") << family.family << '\n';
    }
    report["pass"] = all_pass;

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!cfg.out.empty()) {
        file.open(cfg.out, std::ios::binary);
        if (!file) throw std::runtime_error("cannot open output file: " + cfg.out);
        out = &file;
    }
    *out << report.dump(2) << '\n';
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D time-frequency random-access interference model"};
    app.require_subcommand(0, 1);

    RunConfig cfg;
    std::string config_path;
    bool seed_given = false;

    app.add_option("--config", config_path, "JSON config file (flags override it)");
    auto* seed_opt = app.add_option("--seed", cfg.seed, "Master RNG seed");
    auto* trials_opt = app.add_option("--trials", cfg.trials, "Monte Carlo trials per sweep point");
    auto* workers_opt =
        app.add_option("--workers", cfg.workers, "Worker threads (wall time only, never results)");
    auto* format_opt = app.add_option("--format", cfg.format, "Output format")
                           ->check(CLI::IsMember({"csv", "json"}));
    auto* out_opt = app.add_option("--out", cfg.out, "Output path (default: stdout)");
    auto* preset_opt = app.add_option("--preset", cfg.preset_name, "Case-study preset")
                           ->check(CLI::IsMember({"sigfox", "lorawan"}));

    auto* dist = app.add_subcommand("dist", "Overlap-fraction cdf/pdf tables");
    dist->fallthrough();
    auto* dist_mode = dist->add_option("--mode", cfg.dist_mode, "Game dimensionality")
                          ->check(CLI::IsMember({"1d", "2d"}));
    auto* dist_nt = dist->add_option("--nt", cfg.dist_nt, "Time ratio T/dt");
    auto* dist_nf = dist->add_option("--nf", cfg.dist_nf, "Frequency ratio F/df");
    auto* dist_points = dist->add_option("--points", cfg.dist_points, "Rows in the sweep");
    auto* dist_bins = dist->add_option("--bins", cfg.dist_bins, "Histogram bins per unit");
    auto* dist_sum =
        dist->add_option("--sum", cfg.dist_sum, "Also emit the aggregate law for N devices");

    auto* sigfox = app.add_subcommand("sigfox", "Sigfox-style 2D sweep (capture + pure Aloha)");
    sigfox->fallthrough();
    auto* sf_n = sigfox->add_option("--n", cfg.sigfox_n, "Device counts (repeatable)");
    auto* sf_nrep = sigfox->add_option("--nrep", cfg.sigfox_nrep, "Repetition counts (repeatable)");
    auto* sf_nodes = sigfox->add_option("--nodes", cfg.sigfox_nodes, "Radial quadrature nodes");
    auto* sf_profile = sigfox->add_option("--profile-points", cfg.profile_points,
                                          "Emit an OP(r0) profile with this many radii");

    auto* lorawan = app.add_subcommand("lorawan", "LoRaWAN-style per-SF sweep (power control)");
    lorawan->fallthrough();
    auto* lw_n = lorawan->add_option("--n", cfg.lorawan_n, "Device counts (repeatable)");
    auto* lw_nrep = lorawan->add_option("--nrep", cfg.lorawan_nrep, "Repetition counts (repeatable)");
    auto* lw_theta = lorawan->add_option("--theta", cfg.lorawan_theta,
                                         "Overlap tolerance threshold applied to every SF");

    auto* validate = app.add_subcommand("validate", "Run the analytic-vs-oracle check families");
    validate->fallthrough();
    auto* va_family = validate->add_option("--family", cfg.families, "Family filter (repeatable)");

    CLI11_PARSE(app, argc, argv);

    try {
        // Precedence: defaults < TOSS2D_SEED < config file < explicit flags.
        // `cfg` currently holds defaults overwritten by any parsed flags;
        // merge the config file underneath the flags that were not given.
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw std::runtime_error("cannot open config file: " + config_path);
            const nlohmann::json doc = nlohmann::json::parse(in);
            RunConfig merged;
            apply_config_json(doc, merged);
            seed_given = seed_opt->count() > 0 || resolve_config_root(doc).contains("seed");
            if (seed_opt->count()) merged.seed = cfg.seed;
            if (trials_opt->count()) merged.trials = cfg.trials;
            if (workers_opt->count()) merged.workers = cfg.workers;
            if (format_opt->count()) merged.format = cfg.format;
            if (out_opt->count()) merged.out = cfg.out;
            if (preset_opt->count()) merged.preset_name = cfg.preset_name;
            if (dist_mode->count()) merged.dist_mode = cfg.dist_mode;
            if (dist_nt->count()) merged.dist_nt = cfg.dist_nt;
            if (dist_nf->count()) merged.dist_nf = cfg.dist_nf;
            if (dist_points->count()) merged.dist_points = cfg.dist_points;
            if (dist_bins->count()) merged.dist_bins = cfg.dist_bins;
            if (dist_sum->count()) merged.dist_sum = cfg.dist_sum;
            if (sf_n->count()) merged.sigfox_n = cfg.sigfox_n;
            if (sf_nrep->count()) merged.sigfox_nrep = cfg.sigfox_nrep;
            if (sf_nodes->count()) merged.sigfox_nodes = cfg.sigfox_nodes;
            if (sf_profile->count()) merged.profile_points = cfg.profile_points;
            if (lw_n->count()) merged.lorawan_n = cfg.lorawan_n;
            if (lw_nrep->count()) merged.lorawan_nrep = cfg.lorawan_nrep;
            if (lw_theta->count()) merged.lorawan_theta = cfg.lorawan_theta;
            if (va_family->count()) merged.families = cfg.families;
            cfg = std::move(merged);
        } else {
            seed_given = seed_opt->count() > 0;
        }
        if (!seed_given) {
            if (const char* env_seed = std::getenv("TOSS2D_SEED"))
                cfg.seed = std::strtoull(env_seed, nullptr, 10);
        }

        if (dist->parsed()) cfg.command = "dist";
        else if (sigfox->parsed()) cfg.command = "sigfox";
        else if (lorawan->parsed()) cfg.command = "lorawan";
        else if (validate->parsed()) cfg.command = "validate";
        if (cfg.command.empty())
            throw std::invalid_argument("no subcommand given (and none found in --config)");
        if (!cfg.preset_name.empty() && (cfg.command == "sigfox" || cfg.command == "lorawan") &&
            cfg.preset_name != cfg.command)
            throw std::invalid_argument("--preset " + cfg.preset_name +
                                        " conflicts with the " + cfg.command + " command");
        if (cfg.command == "dist" && !cfg.preset_name.empty() &&
            (dist_nt->count() || dist_nf->count()))
            throw std::invalid_argument("dist: give either --preset or --nt/--nf, not both");

        if (cfg.command == "dist") return write_output(cfg, cmd_dist(cfg));
        if (cfg.command == "sigfox") return write_output(cfg, cmd_sigfox(cfg));
        if (cfg.command == "lorawan") return write_output(cfg, cmd_lorawan(cfg));
        if (cfg.command == "validate") return cmd_validate(cfg);
        throw std::invalid_argument("unknown command: " + cfg.command);
    } catch (const std::exception& e) {
        std::cerr << "toss2d: " << e.what() << '\n';
        return 1;
    }
}
