#include <catch2/catch.hpp>

#include <cmath>

#include "toss2d/presets.hpp"
#include "toss2d/rng.hpp"
#include "toss2d/validation.hpp"

using namespace toss2d;

TEST_CASE("annulus probabilities") {
    SECTION("two annuli of equal area split evenly") {
        const double ranges[] = {1.0, std::sqrt(2.0)};
        const auto p = annulus_probabilities(ranges, 1e-12);
        CHECK(p[0] == Approx(0.5).epsilon(1e-9));
        CHECK(p[1] == Approx(0.5).epsilon(1e-9));
    }
    SECTION("single ring takes everything") {
        const double ranges[] = {5.0};
        CHECK(annulus_probabilities(ranges, 0.0)[0] == 1.0);
    }
    SECTION("non-monotone ranges are rejected") {
        const double bad[] = {2.0, 1.5};
        CHECK_THROWS_AS(annulus_probabilities(bad, 1.0), std::invalid_argument);
        const double below_min[] = {0.5, 2.0};
        CHECK_THROWS_AS(annulus_probabilities(below_min, 1.0), std::invalid_argument);
    }
    SECTION("derived LoRa annuli reproduce the printed column at 2 decimals") {
        const LoRaPreset preset = LoRaPreset::standard();
        const auto p = annulus_probabilities(preset);
        double sum = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(std::llround(p[i] * 100.0) == std::llround(preset.rows[i].p_sf * 100.0));
            sum += p[i];
        }
        CHECK(sum == 1.0);
    }
}

TEST_CASE("LoRa table self-consistency") {
    const LoRaPreset preset = LoRaPreset::standard();
    SECTION("target SINR equals sensitivity plus margins, exactly") {
        for (const auto& row : preset.rows)
            CHECK(preset.derived_zeta_db(row) == row.zeta_db);
    }
    SECTION("budget ranges match the printed ranges within 1%") {
        const auto ranges = preset.derived_ranges_m();
        for (std::size_t i = 0; i < ranges.size(); ++i)
            CHECK(std::fabs(ranges[i] / (preset.rows[i].range_km * 1000.0) - 1.0) < 0.01);
    }
    SECTION("every SF plays the nt = 100 game with period 100 dt") {
        CHECK(preset.game_grid().nt() == 100.0);
        for (const auto& row : preset.rows)
            CHECK(row.period_s() == 100.0 * row.packet_duration_s);
    }
    SECTION("validation family passes and catches corruption") {
        CHECK(family_table3(preset).pass);
        LoRaPreset corrupt = preset;
        corrupt.rows[3].zeta_db += 3.0;  // negative control
        CHECK_FALSE(family_table3(corrupt).pass);
    }
}

TEST_CASE("per-SF outage under power control") {
    const LoRaPreset preset = LoRaPreset::standard();
    const double p_c = 197.0 / 9801.0;

    SECTION("a single device sees no outage anywhere") {
        for (double op : lorawan_op_per_sf(preset, 1, 1)) CHECK(op == 0.0);
    }
    SECTION("one potential interferer on SF12 dilutes by the channel count") {
        // N = 9 makes round(N p_12) = 2 on the derived annuli.
        const auto op = lorawan_op_per_sf(preset, 9, 1);
        CHECK(op[6] == Approx(p_c / 3.0).epsilon(1e-6));
    }
    SECTION("ordering follows the annulus probabilities") {
        const auto probs = annulus_probabilities(preset);
        // Descending p_sf: SF 12, 10, 11, 9, 6, 8, 7 (indices 6,4,5,3,0,2,1).
        const std::size_t order[] = {6, 4, 5, 3, 0, 2, 1};
        for (long n : {50L, 100L, 500L, 1000L}) {
            const auto op = lorawan_op_per_sf(preset, n, 1);
            for (std::size_t i = 0; i + 1 < 7; ++i) {
                INFO("n=" << n << " position " << i);
                CHECK(op[order[i]] >= op[order[i + 1]]);
            }
            CHECK(op[6] > op[1]);  // SF12 strictly worse than SF7
        }
        (void)probs;
    }
    SECTION("nondecreasing in the device count") {
        for (std::size_t sf = 0; sf < 7; ++sf) {
            double prev = -1.0;
            for (long n : {1L, 10L, 50L, 200L, 500L, 2000L}) {
                const double op = lorawan_op_per_sf(preset, n, 1)[sf];
                CHECK(op >= prev);
                prev = op;
            }
        }
    }
    SECTION("equal deterministic split uses the undiluted collision rate") {
        LoRaPreset split = preset;
        split.assignment = ChannelAssignment::equal_split;
        // N chosen so N_12 = 21: 7 per channel, 6 same-channel interferers.
        const auto op = lorawan_op_per_sf(split, 93, 1);
        const long n12 = std::lround(93.0 * annulus_probabilities(split)[6]);
        const long per_channel = std::lround(static_cast<double>(n12) / 3.0);
        CHECK(op[6] ==
              Approx(1.0 - std::pow(1.0 - p_c, static_cast<double>(per_channel - 1)))
                  .epsilon(1e-9));
    }
    SECTION("positive threshold lowers the outage") {
        std::array<double, 7> theta{};
        theta.fill(0.25);
        const auto strict = lorawan_op_per_sf(preset, 500, 1);
        const auto tolerant = lorawan_op_per_sf(preset, 500, 1, theta);
        for (std::size_t sf = 0; sf < 7; ++sf) {
            CHECK(tolerant[sf] <= strict[sf]);
            CHECK(tolerant[sf] > 0.0);
        }
    }
}

TEST_CASE("LoRa global outage") {
    const LoRaPreset preset = LoRaPreset::standard();
    CHECK(lorawan_global_op(preset, 1, 1) == 0.0);
    SECTION("constant per-SF outage passes through the weighting") {
        std::array<double, 7> op{};
        op.fill(0.42);
        CHECK(lorawan_global_op_from(preset, op) == Approx(0.42).epsilon(1e-12));
    }
    SECTION("matches a direct multinomial simulation") {
        const long n = 250;
        const double analytic = lorawan_global_op(preset, n, 1);

        const auto probs = annulus_probabilities(preset);
        const ResourceGrid game = preset.game_grid();
        Xoshiro256pp rng(4711);
        const std::size_t trials = 20'000;
        std::size_t outages = 0;
        for (std::size_t t = 0; t < trials; ++t) {
            // Tagged device: annulus by area, channel uniform.
            double u = uniform01(rng);
            std::size_t sf = 0;
            while (sf + 1 < probs.size() && u > probs[sf]) {
                u -= probs[sf];
                ++sf;
            }
            const long channel = static_cast<long>(3.0 * uniform01(rng));
            const PacketPlacement tagged = sample_placement(game, rng);
            bool hit = false;
            for (long k = 0; k + 1 < n; ++k) {
                double v = uniform01(rng);
                std::size_t sf_k = 0;
                while (sf_k + 1 < probs.size() && v > probs[sf_k]) {
                    v -= probs[sf_k];
                    ++sf_k;
                }
                if (sf_k != sf) continue;
                if (static_cast<long>(3.0 * uniform01(rng)) != channel) continue;
                if (overlap_fraction(tagged, sample_placement(game, rng), game) > 0.0) {
                    hit = true;
                    break;
                }
            }
            if (hit) ++outages;
        }
        const double empirical = static_cast<double>(outages) / trials;
        const double se = std::sqrt(empirical * (1.0 - empirical) / trials);
        CHECK(std::fabs(analytic - empirical) < 3.0 * se);
    }
}

TEST_CASE("LoRa throughput") {
    const LoRaPreset preset = LoRaPreset::standard();
    SECTION("explicit sum with no outage") {
        std::array<double, 7> op{};
        const auto th = lorawan_throughput_from(preset, 7, 1, op);
        const auto probs = annulus_probabilities(preset);
        double expected = 0.0;
        for (std::size_t i = 0; i < 7; ++i)
            expected += 3.0 * 7.0 * probs[i] / preset.rows[i].period_s();
        CHECK(th.total_msg_per_s == Approx(expected).epsilon(1e-12));
    }
    SECTION("total outage kills the throughput") {
        std::array<double, 7> op{};
        op.fill(1.0);
        CHECK(lorawan_throughput_from(preset, 100, 1, op).total_msg_per_s == 0.0);
    }
    SECTION("doubling repetitions halves throughput at fixed outage") {
        std::array<double, 7> op{};
        op.fill(0.3);
        const double t1 = lorawan_throughput_from(preset, 100, 1, op).total_msg_per_s;
        const double t2 = lorawan_throughput_from(preset, 100, 2, op).total_msg_per_s;
        CHECK(t2 == Approx(0.5 * t1).epsilon(1e-12));
    }
}

TEST_CASE("Sigfox sweep points keep the Aloha bound above the capture estimate") {
    const SigfoxPreset preset = SigfoxPreset::standard();
    for (long n : {1L, 5000L}) {
        const auto point = evaluate_sigfox_point(preset, n, 1, {20'000, 77, 2}, 16);
        INFO("n=" << n);
        const double th_se =
            static_cast<double>(n) / preset.grid.period_s * point.op_bar.std_error;
        CHECK(point.op_aloha_bar >= point.op_bar.op - 2.0 * point.op_bar.std_error);
        CHECK(point.th_aloha_msg_per_s <= point.th_msg_per_s + 2.0 * th_se);
    }
}

TEST_CASE("Sigfox preset wiring") {
    const SigfoxPreset preset = SigfoxPreset::standard();
    CHECK(preset.grid.nf() == 400.0);
    CHECK(preset.grid.nt() == Approx(617.0 / 1.76).epsilon(1e-12));
    CHECK(preset.r_max_m() == Approx(5623.413).epsilon(1e-4));
    CHECK(preset.reference_range_km == 5.2);

    const Scenario lone = sigfox_scenario(preset, 1, 1);
    const OutageResult edge = op_at_r0(lone, lone.cell.r_max_m, {100'000, 13, 2});
    CHECK(std::fabs(edge.op - (1.0 - std::exp(-1.0))) < 3.0 * edge.std_error);
}

TEST_CASE("preset JSON round trip and strictness") {
    const PresetPack pack;
    const nlohmann::ordered_json doc = to_json(pack);
    const PresetPack back = presets_from_json(doc);
    CHECK(back.sigfox.grid.period_s == pack.sigfox.grid.period_s);
    CHECK(back.sigfox.budget.noise_power_dbm == pack.sigfox.budget.noise_power_dbm);
    CHECK(back.lorawan.rows[6].packet_duration_s == pack.lorawan.rows[6].packet_duration_s);
    CHECK(back.lorawan.assignment == pack.lorawan.assignment);

    SECTION("unknown fields are rejected at every level") {
        nlohmann::json bad = nlohmann::json::parse(doc.dump());
        bad["sigfox"]["grid"]["bandwidht_hz"] = 1.0;
        CHECK_THROWS_AS(presets_from_json(bad), std::invalid_argument);
        nlohmann::json bad2 = nlohmann::json::parse(doc.dump());
        bad2["lorawan"]["rows"][0]["snr"] = 3.0;
        CHECK_THROWS_AS(presets_from_json(bad2), std::invalid_argument);
        nlohmann::json bad3 = nlohmann::json::parse(doc.dump());
        bad3["wimax"] = nlohmann::json::object();
        CHECK_THROWS_AS(presets_from_json(bad3), std::invalid_argument);
    }
    SECTION("corrupted preset fails the table family through the loader") {
        nlohmann::json tweaked = nlohmann::json::parse(doc.dump());
        tweaked["lorawan"]["rows"][2]["zeta_db"] = 18.0;  // off by 3 dB
        const PresetPack loaded = presets_from_json(tweaked);
        CHECK_FALSE(family_table3(loaded.lorawan).pass);
    }
}
