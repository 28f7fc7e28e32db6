#include <doctest.h>

#include <cmath>
#include <vector>

#include "fewlabel/analytics.hpp"
#include "fewlabel/errors.hpp"
#include "fewlabel/rng.hpp"

using namespace fewlabel;
using doctest::Approx;

namespace {

DistributionStats random_stats(Philox& rng) {
    DistributionStats stats;
    stats.mean_f = rng.uniform_range(-2.0, 2.0);
    stats.var_f = rng.uniform_range(0.01, 2.0);
    stats.var_h = rng.uniform_range(0.01, 2.0);
    stats.corr_fh = rng.uniform_range(-0.95, 0.95);
    stats.cov_fh = stats.corr_fh * std::sqrt(stats.var_f * stats.var_h);
    stats.var_cov_hat = rng.uniform_range(0.0, 0.5);
    return stats;
}

std::size_t random_n(Philox& rng) { return 2 + rng.uniform_below(199); }
std::size_t random_big_n(Philox& rng) { return 10 + rng.uniform_below(100000); }

} // namespace

TEST_CASE("stochastic-lambda excess variance") {
    SUBCASE("zero lambda recovers classical") {
        RegimePoint point;
        point.n = 10;
        point.big_n = 100;
        point.stats = DistributionStats{0.5, 0.25, 0.25, 0.2, 0.8, 0.0};
        point.e_lambda = 0.0;
        point.var_lambda = 0.0;
        CHECK(excess_var_stochastic_lambda(point) == 0.0);
    }
    SUBCASE("deterministic lambda reduces to the constant-lambda expression") {
        Philox rng(501);
        for (int rep = 0; rep < 50; ++rep) {
            RegimePoint point;
            point.n = random_n(rng);
            point.big_n = random_big_n(rng);
            point.stats = random_stats(rng);
            point.e_lambda = rng.uniform_range(-2.0, 2.0);
            point.var_lambda = 0.0;
            const double inv =
                1.0 / static_cast<double>(point.big_n) + 1.0 / static_cast<double>(point.n);
            const double expected =
                point.e_lambda * point.e_lambda * inv * point.stats.var_f -
                2.0 * point.e_lambda * point.stats.cov_fh / static_cast<double>(point.n);
            CHECK(excess_var_stochastic_lambda(point) == Approx(expected).epsilon(1e-12));
        }
    }
    SUBCASE("hand-evaluated point") {
        RegimePoint point;
        point.n = 10;
        point.big_n = 1000;
        point.stats.mean_f = 0.5;
        point.stats.var_f = 0.25;
        point.stats.cov_fh = 0.2;
        point.e_lambda = 0.5;
        point.var_lambda = 0.1;
        // 0.0063125 + 0.052525 - 0.02
        CHECK(excess_var_stochastic_lambda(point) == Approx(0.0388375).epsilon(1e-12));
    }
}

TEST_CASE("ppi excess variance") {
    SUBCASE("noiseless lambda always helps") {
        DistributionStats stats{0.5, 0.25, 0.25, 0.2, 0.8, 0.0};
        const double value = ppi_excess_variance(stats, 10, 1000);
        const double expected = -0.25 * 0.64 / (1.01 * 10.0);
        CHECK(value == Approx(expected).epsilon(1e-12));
        CHECK(value <= 0.0);
    }
    SUBCASE("useless predictor with noiseless lambda is neutral") {
        DistributionStats stats{0.5, 0.25, 0.25, 0.0, 0.0, 0.0};
        CHECK(ppi_excess_variance(stats, 10, 1000) == 0.0);
    }
    SUBCASE("degenerate variance") {
        DistributionStats stats{0.5, 0.0, 0.25, 0.0, 0.0, 0.1};
        CHECK_THROWS_AS(ppi_excess_variance(stats, 10, 1000), DegenerateVarianceError);
    }
    SUBCASE("matches the stochastic formula under OLS moments") {
        Philox rng(502);
        for (int rep = 0; rep < 1000; ++rep) {
            const DistributionStats stats = random_stats(rng);
            const std::size_t n = random_n(rng);
            const std::size_t big_n = random_big_n(rng);
            const double direct = ppi_excess_variance(stats, n, big_n);

            RegimePoint point;
            point.n = n;
            point.big_n = big_n;
            point.stats = stats;
            const double ratio = 1.0 + static_cast<double>(n) / static_cast<double>(big_n);
            point.e_lambda = stats.cov_fh / (ratio * stats.var_f);
            point.var_lambda = stats.var_cov_hat / (stats.var_f * stats.var_f);
            const double via_stochastic = excess_var_stochastic_lambda(point);

            const double scale = std::abs(lambda_noise_amplification(stats, n, big_n)) /
                                     (stats.var_f * stats.var_f) +
                                 std::abs(stats.var_h) / static_cast<double>(n) + 1e-300;
            CHECK(std::abs(direct - via_stochastic) <= 1e-10 * scale);
        }
    }
    SUBCASE("strictly decreasing in var_f") {
        Philox rng(503);
        for (int rep = 0; rep < 200; ++rep) {
            DistributionStats stats = random_stats(rng);
            stats.var_cov_hat = rng.uniform_range(0.01, 0.5);
            const std::size_t n = random_n(rng);
            const std::size_t big_n = random_big_n(rng);
            DistributionStats larger = stats;
            larger.var_f = stats.var_f * rng.uniform_range(1.1, 4.0);
            larger.cov_fh = larger.corr_fh * std::sqrt(larger.var_f * larger.var_h);
            CHECK(ppi_excess_variance(larger, n, big_n) <
                  ppi_excess_variance(stats, n, big_n));
        }
    }
}

TEST_CASE("ridge excess and risk difference") {
    SUBCASE("alpha 0 equals ppi excess exactly") {
        Philox rng(504);
        for (int rep = 0; rep < 100; ++rep) {
            const DistributionStats stats = random_stats(rng);
            const std::size_t n = random_n(rng);
            const std::size_t big_n = random_big_n(rng);
            CHECK(ridge_excess_variance(stats, 0.0, n, big_n) ==
                  ppi_excess_variance(stats, n, big_n));
            CHECK(ridge_minus_ppi(stats, 0.0, n, big_n) == 0.0);
        }
    }
    SUBCASE("pure bias when lambda is noiseless") {
        DistributionStats stats{0.5, 0.25, 0.25, 0.2, 0.8, 0.0};
        CHECK(ridge_minus_ppi(stats, 0.5, 10, 1000) > 0.0);
    }
    SUBCASE("shrinkage to classical in the large-alpha limit") {
        DistributionStats stats{0.5, 0.25, 0.25, 0.2, 0.8, 0.1};
        const double value = ridge_excess_variance(stats, 1e12, 10, 1000);
        const double scale = std::abs(ppi_excess_variance(stats, 10, 1000));
        CHECK(std::abs(value) < 1e-6 * scale);
    }
    SUBCASE("sign structure and dual-path equality") {
        Philox rng(505);
        for (int rep = 0; rep < 1000; ++rep) {
            const DistributionStats stats = random_stats(rng);
            const std::size_t n = random_n(rng);
            const std::size_t big_n = random_big_n(rng);
            const double alpha = rng.uniform_range(0.0, 10.0);

            const double v = lambda_noise_amplification(stats, n, big_n);
            const double shifted = stats.var_f + alpha;
            const double reduction =
                v * (1.0 / (shifted * shifted) - 1.0 / (stats.var_f * stats.var_f));
            const double bias = stats.corr_fh * stats.corr_fh * stats.var_h * alpha * alpha /
                                (static_cast<double>(n) *
                                 (1.0 + static_cast<double>(n) / static_cast<double>(big_n)) *
                                 shifted * shifted);
            CHECK(reduction <= 0.0);
            CHECK(bias >= 0.0);

            const double direct = ridge_minus_ppi(stats, alpha, n, big_n);
            const double re = ridge_excess_variance(stats, alpha, n, big_n);
            const double pe = ppi_excess_variance(stats, n, big_n);
            const double scale = std::abs(re) + std::abs(pe) + std::abs(direct) + 1e-300;
            CHECK(std::abs(direct - (re - pe)) <= 1e-10 * scale);
        }
    }
    SUBCASE("degenerate variance") {
        DistributionStats stats{0.5, 0.0, 0.25, 0.0, 0.0, 0.1};
        CHECK_THROWS_AS(ridge_excess_variance(stats, 0.0, 10, 100), DegenerateVarianceError);
        CHECK_THROWS_AS(ridge_minus_ppi(stats, 1.0, 10, 100), DegenerateVarianceError);
        CHECK_NOTHROW(ridge_excess_variance(stats, 0.5, 10, 100));
    }
}

TEST_CASE("optimal ridge alpha") {
    SUBCASE("no lambda noise wants no shrinkage") {
        DistributionStats stats{0.5, 0.25, 0.25, 0.2, 0.8, 0.0};
        const auto alpha = optimal_ridge_alpha(stats, 10, 1000);
        REQUIRE(alpha.has_value());
        CHECK(*alpha == 0.0);
    }
    SUBCASE("zero covariance has no stationary point") {
        DistributionStats stats{0.5, 0.25, 0.25, 0.0, 0.0, 0.1};
        CHECK_FALSE(optimal_ridge_alpha(stats, 10, 1000).has_value());
    }
    SUBCASE("first-order condition holds at the stationary point") {
        Philox rng(506);
        int accepted = 0;
        while (accepted < 100) {
            DistributionStats stats = random_stats(rng);
            stats.var_cov_hat = rng.uniform_range(1e-4, 0.5);
            const std::size_t n = random_n(rng);
            const std::size_t big_n = random_big_n(rng);
            const auto alpha_star = optimal_ridge_alpha(stats, n, big_n);
            if (!alpha_star || *alpha_star <= 0.0 || !std::isfinite(*alpha_star)) {
                continue;
            }
            if (*alpha_star < 1e-3 * stats.var_f || *alpha_star > 1e3 * stats.var_f) {
                continue;
            }
            ++accepted;
            const auto fd = [&](double at) {
                const double step = 1e-6 * at;
                return (ridge_minus_ppi(stats, at + step, n, big_n) -
                        ridge_minus_ppi(stats, at - step, n, big_n)) /
                       (2.0 * step);
            };
            const double derivative_scale =
                std::max(std::abs(fd(*alpha_star / 2.0)), std::abs(fd(2.0 * *alpha_star)));
            CHECK(std::abs(fd(*alpha_star)) < 1e-6 * derivative_scale);
        }
    }
}

TEST_CASE("heatmap sweep") {
    DistributionStats base;
    base.mean_f = 0.5;
    base.var_h = 0.25;
    base.corr_fh = 0.8;

    const std::vector<double> var_f_grid{0.05, 0.1, 0.15, 0.2, 0.25};
    const std::vector<std::size_t> n_grid{5, 10, 20, 50};

    SUBCASE("noiseless lambda never hurts") {
        const SweepGrid grid = heatmap_sweep(base, var_f_grid, n_grid, 1000, VarCovRule{0.0});
        for (const auto& row : grid.cells) {
            for (const auto& cell : row) {
                REQUIRE(cell.has_value());
                CHECK(*cell <= 1.0);
            }
        }
    }
    SUBCASE("cells fall as var_f grows") {
        const SweepGrid grid = heatmap_sweep(base, var_f_grid, n_grid, 1000, VarCovRule{0.3});
        for (std::size_t j = 0; j < n_grid.size(); ++j) {
            for (std::size_t i = 1; i < var_f_grid.size(); ++i) {
                CHECK(*grid.cells[i][j] <= *grid.cells[i - 1][j]);
            }
        }
    }
    SUBCASE("single cell equals the direct transformation") {
        const SweepGrid grid = heatmap_sweep(base, {0.2}, {25}, 500, VarCovRule{0.3});
        DistributionStats stats = base;
        stats.var_f = 0.2;
        stats.cov_fh = base.corr_fh * std::sqrt(0.2 * base.var_h);
        stats.var_cov_hat = 0.3 / (25.0 * 25.0);
        const double expected = 1.0 + ppi_excess_variance(stats, 25, 500) * 25.0 / base.var_h;
        CHECK(*grid.cells[0][0] == expected);
    }
    SUBCASE("zero var_f cells are absent") {
        const SweepGrid grid = heatmap_sweep(base, {0.0, 0.1}, {10}, 1000, VarCovRule{0.3});
        CHECK_FALSE(grid.cells[0][0].has_value());
        CHECK(grid.cells[1][0].has_value());
    }
    SUBCASE("invalid inputs") {
        CHECK_THROWS_AS(heatmap_sweep(base, {}, {10}, 1000, VarCovRule{0.3}), SpecError);
        CHECK_THROWS_AS(heatmap_sweep(base, {-0.1}, {10}, 1000, VarCovRule{0.3}), SpecError);
        DistributionStats no_var_h = base;
        no_var_h.var_h = 0.0;
        CHECK_THROWS_AS(heatmap_sweep(no_var_h, {0.1}, {10}, 1000, VarCovRule{0.3}),
                        DegenerateVarianceError);
    }
}

TEST_CASE("stochastic formula matches a monte carlo with injected lambda") {
    // Joint Bernoulli with E[f]=0.5, Var[f]=0.25, Cov=0.2; lambda drawn
    // independently as Normal(0.5, var 0.1). The formula is exact under
    // independence, so 5e4 trials at 5% tolerance is comfortable.
    const double e_lambda = 0.5;
    const double var_lambda = 0.1;
    const std::size_t n = 10;
    const std::size_t big_n = 1000;
    const int trials = 50000;

    Philox data_rng(507);
    double sum = 0.0;
    double sum_sq = 0.0;
    double classical_sum = 0.0;
    double classical_sum_sq = 0.0;
    for (int t = 0; t < trials; ++t) {
        Philox rng(derive_stream(507, {(std::uint64_t)t}));
        double fl_sum = 0.0;
        double h_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = rng.uniform();
            const double f = (u < 0.45 || (u >= 0.5 && u < 0.55)) ? 1.0 : 0.0;
            const double h = u < 0.5 ? 1.0 : 0.0;
            fl_sum += f;
            h_sum += h;
        }
        double fu_sum = 0.0;
        for (std::size_t i = 0; i < big_n; ++i) {
            const double u = rng.uniform();
            fu_sum += (u < 0.45 || (u >= 0.5 && u < 0.55)) ? 1.0 : 0.0;
        }
        const double lambda = rng.normal(e_lambda, std::sqrt(var_lambda));
        const double estimate =
            h_sum / n + lambda * (fu_sum / big_n - fl_sum / n);
        sum += estimate;
        sum_sq += estimate * estimate;
        classical_sum += h_sum / n;
        classical_sum_sq += (h_sum / n) * (h_sum / n);
    }
    const double est_mean = sum / trials;
    const double est_var = sum_sq / trials - est_mean * est_mean;
    const double cls_mean = classical_sum / trials;
    const double cls_var = classical_sum_sq / trials - cls_mean * cls_mean;

    RegimePoint point;
    point.n = n;
    point.big_n = big_n;
    point.stats.mean_f = 0.5;
    point.stats.var_f = 0.25;
    point.stats.cov_fh = 0.2;
    point.e_lambda = e_lambda;
    point.var_lambda = var_lambda;
    const double predicted = excess_var_stochastic_lambda(point);
    CHECK(est_var - cls_var == Approx(predicted).epsilon(0.05));
}
