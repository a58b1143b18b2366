#include <catch2/catch.hpp>

#include <cmath>

#include "toss2d/overlap.hpp"
#include "toss2d/rng.hpp"
#include "toss2d/validation.hpp"

using namespace toss2d;

namespace {

// Frozen brute-force Monte Carlo values (10^7 independent placement pairs,
// splitmix64 stream). The closed forms must agree within the oracle noise.
constexpr double kMc1dNt10X05 = 0.892010;    // P(X <= 0.5), nt = 10
constexpr double kMc1dNt100Atom = 0.979823;  // P(X = 0), nt = 100
constexpr double kMc2d10x10Atom = 0.956000;  // P(X = 0), nt = nf = 10
constexpr double kMc2d10x10X05 = 0.992701;   // P(X <= 0.5), nt = nf = 10
// Conditional (per-placement collision window) estimator, 2*10^6 draws,
// standard error 6e-10.
constexpr double kMcSigfoxPc = 2.860104e-5;

}  // namespace

TEST_CASE("resource grid validation") {
    CHECK_THROWS_AS(ResourceGrid::two_dim(1.0, 10.0, 2.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ResourceGrid::two_dim(10.0, 1.0, 1.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(ResourceGrid::two_dim(10.0, 10.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ResourceGrid::two_dim(10.0, 10.0, 1.0, -1.0), std::invalid_argument);

    const ResourceGrid grid = ResourceGrid::two_dim(617.0, 40000.0, 1.76, 100.0);
    CHECK(grid.nt() == Approx(350.5681818).epsilon(1e-9));
    CHECK(grid.nf() == 400.0);
    CHECK_FALSE(grid.one_dim_mode());
    CHECK(ResourceGrid::one_dim(10.0, 1.0).one_dim_mode());
}

TEST_CASE("sample_placement covers the allowed rectangle") {
    SECTION("degenerate interval pins the start time") {
        ResourceGrid grid = ResourceGrid::two_dim(2.0, 2.0, 2.0, 1.0);
        Xoshiro256pp rng(1);
        for (int i = 0; i < 1000; ++i) CHECK(sample_placement(grid, rng).t_s == 0.0);
    }
    SECTION("mean of t over many draws") {
        ResourceGrid grid = ResourceGrid::two_dim(2.0, 1.0, 1.0, 1.0);  // T = 2 dt, F = df
        Xoshiro256pp rng(2);
        const std::size_t n = 1'000'000;
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += sample_placement(grid, rng).t_s;
        // t uniform on [0, dt]; mean dt/2, sigma of the mean = dt/sqrt(12 n).
        const double sigma = 1.0 / std::sqrt(12.0 * static_cast<double>(n));
        CHECK(std::fabs(sum / static_cast<double>(n) - 0.5) < 3.0 * sigma);
    }
    SECTION("Sigfox grid bounds") {
        ResourceGrid grid = ResourceGrid::two_dim(617.0, 40000.0, 1.76, 100.0);
        Xoshiro256pp rng(3);
        for (int i = 0; i < 10000; ++i) {
            const PacketPlacement p = sample_placement(grid, rng);
            CHECK(p.t_s >= 0.0);
            CHECK(p.t_s <= 615.24);
            CHECK(p.f_hz >= 0.0);
            CHECK(p.f_hz <= 39900.0);
        }
    }
}

TEST_CASE("overlap_fraction product form") {
    const ResourceGrid grid = ResourceGrid::from_ratios_2d(10.0, 10.0);
    const PacketPlacement a{3.0, 4.0};
    CHECK(overlap_fraction(a, a, grid) == 1.0);
    CHECK(overlap_fraction({0.0, 0.0}, {0.5, 0.5}, grid) == Approx(0.25));
    CHECK(overlap_fraction({0.0, 0.0}, {1.2, 0.1}, grid) == 0.0);
    // Touching edges carry no overlap.
    CHECK(overlap_fraction({0.0, 0.0}, {1.0, 0.0}, grid) == 0.0);
}

TEST_CASE("1D overlap equals 2D overlap with zero frequency offset") {
    Xoshiro256pp rng(17);
    for (int i = 0; i < 2000; ++i) {
        const double nt = 1.5 + 50.0 * uniform01(rng);
        const ResourceGrid one = ResourceGrid::from_ratios_1d(nt);
        const ResourceGrid two = ResourceGrid::from_ratios_2d(nt, 8.0);
        const double t0 = uniform_in(rng, 0.0, nt - 1.0);
        const double t1 = uniform_in(rng, 0.0, nt - 1.0);
        const double x1 = overlap_fraction({t0, 0.0}, {t1, 0.0}, one);
        const double x2 = overlap_fraction({t0, 2.5}, {t1, 2.5}, two);
        CHECK(x1 == x2);
    }
}

TEST_CASE("cdf_overlap_1d closed form against the sampling oracle") {
    CHECK(cdf_overlap_1d(0.0, ResourceGrid::from_ratios_1d(2.0)) == 0.0);
    CHECK(std::fabs(cdf_overlap_1d(0.5, ResourceGrid::from_ratios_1d(10.0)) - kMc1dNt10X05) <
          1e-3);
    CHECK(std::fabs(cdf_overlap_1d(0.0, ResourceGrid::from_ratios_1d(100.0)) - kMc1dNt100Atom) <
          1e-3);
    CHECK(cdf_overlap_1d(0.0, ResourceGrid::from_ratios_1d(100.0)) ==
          Approx(1.0 - 197.0 / 9801.0).epsilon(1e-12));

    const ResourceGrid grid = ResourceGrid::from_ratios_1d(10.0);
    CHECK_THROWS_AS(cdf_overlap_1d(-0.1, grid), std::invalid_argument);
    CHECK_THROWS_AS(cdf_overlap_1d(1.0, grid), std::invalid_argument);
    CHECK_THROWS_AS(cdf_overlap_1d(0.5, ResourceGrid::from_ratios_1d(1.0)), std::invalid_argument);
    CHECK_THROWS_AS(cdf_overlap_1d(0.5, ResourceGrid::from_ratios_2d(10.0, 10.0)),
                    std::invalid_argument);
}

TEST_CASE("cdf_overlap_1d piecewise regime below nt = 2") {
    // With nt < 2 every pair overlaps by at least 2 - nt, so the cdf
    // vanishes up to that point. Verified against direct sampling.
    const double nt = 1.5;
    const ResourceGrid grid = ResourceGrid::from_ratios_1d(nt);
    CHECK(cdf_overlap_1d(0.0, grid) == 0.0);
    CHECK(cdf_overlap_1d(0.49, grid) == 0.0);
    CHECK(cdf_overlap_1d(0.75, grid) > 0.0);
    Xoshiro256pp rng(5);
    std::size_t below = 0;
    const std::size_t n = 200'000;
    for (std::size_t i = 0; i < n; ++i) {
        const double x =
            overlap_fraction(sample_placement(grid, rng), sample_placement(grid, rng), grid);
        CHECK(x >= 0.5);
        if (x <= 0.75) ++below;
    }
    const double empirical = static_cast<double>(below) / static_cast<double>(n);
    CHECK(std::fabs(empirical - cdf_overlap_1d(0.75, grid)) < 0.005);
}

TEST_CASE("cdf_overlap_2d closed form against the sampling oracle") {
    const ResourceGrid g10 = ResourceGrid::from_ratios_2d(10.0, 10.0);
    CHECK(std::fabs(cdf_overlap_2d(0.0, g10) - kMc2d10x10Atom) < 1e-3);
    CHECK(std::fabs(cdf_overlap_2d(0.5, g10) - kMc2d10x10X05) < 1e-3);
    CHECK(cdf_overlap_2d(0.0, g10) == Approx(1.0 - 289.0 / 6561.0).epsilon(1e-12));
    CHECK(cdf_overlap_2d(0.0, ResourceGrid::from_ratios_2d(2.0, 2.0)) == 0.0);

    CHECK_THROWS_AS(cdf_overlap_2d(1.0, g10), std::invalid_argument);
    CHECK_THROWS_AS(cdf_overlap_2d(0.5, ResourceGrid::from_ratios_2d(1.0, 10.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(cdf_overlap_2d(0.5, ResourceGrid::from_ratios_2d(10.0, 1.0)),
                    std::invalid_argument);
}

TEST_CASE("collision probability") {
    CHECK(collision_probability(ResourceGrid::from_ratios_1d(100.0)) ==
          Approx(197.0 / 9801.0).epsilon(1e-12));
    CHECK(collision_probability(ResourceGrid::from_ratios_2d(2.0, 2.0)) == 1.0);
    const ResourceGrid sigfox = ResourceGrid::two_dim(617.0, 40000.0, 1.76, 100.0);
    CHECK(collision_probability(sigfox) == Approx(kMcSigfoxPc).epsilon(1e-4));

    SECTION("decreases in nt and nf") {
        double prev = 1.1;
        for (double nt : {2.0, 3.0, 5.0, 10.0, 40.0, 200.0}) {
            const double pc = collision_probability(ResourceGrid::from_ratios_1d(nt));
            CHECK(pc < prev);
            prev = pc;
        }
        prev = 1.1;
        for (double nf : {2.0, 4.0, 8.0, 32.0}) {
            const double pc = collision_probability(ResourceGrid::from_ratios_2d(12.0, nf));
            CHECK(pc < prev);
            prev = pc;
        }
    }
}

TEST_CASE("cdf sweeps stay in [0,1] and never decrease") {
    auto sweep = [](const ResourceGrid& grid) {
        double prev = -1.0;
        for (int i = 0; i < 1000; ++i) {
            const double x = static_cast<double>(i) / 1000.0;
            const double p = cdf_overlap(x, grid);
            REQUIRE(p >= 0.0);
            REQUIRE(p <= 1.0);
            REQUIRE(p >= prev);
            prev = p;
        }
    };
    sweep(ResourceGrid::from_ratios_1d(2.0));
    sweep(ResourceGrid::from_ratios_1d(5.0));
    sweep(ResourceGrid::from_ratios_1d(350.568));
    sweep(ResourceGrid::from_ratios_2d(2.0, 2.0));
    sweep(ResourceGrid::from_ratios_2d(10.0, 10.0));
    sweep(ResourceGrid::from_ratios_2d(50.0, 5.0));
    sweep(ResourceGrid::two_dim(617.0, 40000.0, 1.76, 100.0));
}

TEST_CASE("atom plus integrated density is a probability law") {
    // The density is integrated on [1e-12, 1 - 1e-12]; both clipped tails
    // are bounded by ~30 * density_scale * 1e-12, far below the tolerance.
    auto total_mass = [](const ResourceGrid& grid) {
        const double atom = cdf_overlap(0.0, grid);
        const double integral = integrate_adaptive(
            [&](double x) { return pdf_overlap(x, grid); }, 1e-12, 1.0 - 1e-12,
            {1e-12, 1e-15, 56, 20'000'000});
        return atom + integral;
    };
    CHECK(std::fabs(total_mass(ResourceGrid::from_ratios_1d(2.5)) - 1.0) < 1e-9);
    CHECK(std::fabs(total_mass(ResourceGrid::from_ratios_1d(50.0)) - 1.0) < 1e-9);
    CHECK(std::fabs(total_mass(ResourceGrid::from_ratios_2d(3.0, 3.0)) - 1.0) < 1e-9);
    CHECK(std::fabs(total_mass(ResourceGrid::from_ratios_2d(10.0, 40.0)) - 1.0) < 1e-9);
    CHECK(std::fabs(total_mass(ResourceGrid::two_dim(617.0, 40000.0, 1.76, 100.0)) - 1.0) < 1e-9);
}

TEST_CASE("empirical cdf converges to the closed forms (light)") {
    const ResourceGrid grid = ResourceGrid::from_ratios_2d(5.0, 10.0);
    const auto xs = sample_overlaps(grid, 200'000, 99);
    const double d = ks_distance_sorted(
        xs, [&](double x) { return x >= 1.0 ? 1.0 : cdf_overlap_2d(x, grid); });
    CHECK(d < 0.01);
}

TEST_CASE("ccdf_overlap_numeric agrees with the closed form for uniform placements") {
    for (auto [nt, nf] : {std::pair{10.0, 10.0}, std::pair{4.0, 25.0}}) {
        const ResourceGrid grid = ResourceGrid::from_ratios_2d(nt, nf);
        const auto density = uniform_offset_density(grid);
        for (double x : {0.0, 0.1, 0.5, 0.9}) {
            const double numeric = ccdf_overlap_numeric(x, density, grid);
            const double closed = 1.0 - cdf_overlap_2d(x, grid);
            CHECK(std::fabs(numeric - closed) < 1e-4);
        }
    }
}

TEST_CASE("ccdf_overlap_numeric degenerate densities") {
    const ResourceGrid grid = ResourceGrid::from_ratios_2d(10.0, 10.0);
    SECTION("mass concentrated at the origin forces full overlap") {
        const double width = 0.04;
        auto bump = [width](double u, double v) {
            return (u >= 0.0 && u <= width && v >= 0.0 && v <= width) ? 1.0 / (width * width)
                                                                      : 0.0;
        };
        for (double x : {0.1, 0.5, 0.9})
            CHECK(ccdf_overlap_numeric(x, bump, grid) == Approx(1.0).margin(1e-4));
    }
    SECTION("mass supported beyond tau = 1 never collides") {
        auto far = [](double u, double v) {
            return (u >= 1.5 && u <= 9.0 && v >= 0.0 && v <= 9.0) ? 1.0 / (7.5 * 9.0) : 0.0;
        };
        for (double x : {0.0, 0.5}) CHECK(ccdf_overlap_numeric(x, far, grid) == Approx(0.0).margin(1e-9));
    }
    SECTION("non-normalized densities are rejected") {
        auto half = [](double u, double v) {
            return (u <= 9.0 && v <= 9.0) ? 0.5 / 81.0 : 0.0;
        };
        CHECK_THROWS_AS(ccdf_overlap_numeric(0.5, half, grid), std::invalid_argument);
    }
    SECTION("non-convergent integrand is reported") {
        auto wild = [](double u, double v) {
            return (1.0 + std::cos(3.0e7 * u * (v + 0.3))) / 81.0;
        };
        CHECK_THROWS_AS(ccdf_overlap_numeric(0.3, wild, grid), std::runtime_error);
    }
}

TEST_CASE("pdf matches finite differences of the cdf") {
    const ResourceGrid g1 = ResourceGrid::from_ratios_1d(10.0);
    const ResourceGrid g2 = ResourceGrid::from_ratios_2d(10.0, 10.0);
    const double h = 1e-6;
    for (double x : {0.1, 0.4, 0.8}) {
        const double fd1 = (cdf_overlap_1d(x + h, g1) - cdf_overlap_1d(x - h, g1)) / (2.0 * h);
        CHECK(pdf_overlap_1d(x, g1) == Approx(fd1).epsilon(1e-6));
        const double fd2 = (cdf_overlap_2d(x + h, g2) - cdf_overlap_2d(x - h, g2)) / (2.0 * h);
        CHECK(pdf_overlap_2d(x, g2) == Approx(fd2).epsilon(1e-6));
    }
}
