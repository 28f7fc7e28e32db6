#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "fewlabel/errors.hpp"
#include "fewlabel/regression.hpp"
#include "fewlabel/rng.hpp"
#include "fewlabel/sample_stats.hpp"
#include "test_support.hpp"

using namespace fewlabel;
using doctest::Approx;

namespace {
// Large enough that 1 + n/N rounds to exactly 1.0 for small n.
constexpr std::size_t kHugeN = std::numeric_limits<std::size_t>::max();
} // namespace

TEST_CASE("ols lambda on pinned examples") {
    const LabelledSample s{{0.0, 0.0, 1.0, 1.0}, {0.0, 1.0, 1.0, 1.0}};
    SUBCASE("hand computation, no scaling") {
        const PostHocFit fit = fit_lambda_ols(s, s.size(), kHugeN);
        CHECK(fit.lambda == Approx(0.5).epsilon(1e-15));
        CHECK(fit.kind == FitKind::linear);
        CHECK_FALSE(fit.degenerate_variance);
        // Grid-search oracle over the intercept-corrected MSE.
        CHECK(std::abs(testsupport::oracle_lambda_grid(s) - fit.lambda) <= 2e-4);
    }
    SUBCASE("scaling by (1 + n/N)^-1") {
        const PostHocFit fit = fit_lambda_ols(s, 4, 4);
        CHECK(fit.lambda == Approx(0.25).epsilon(1e-15));
    }
    SUBCASE("perfect predictor gives lambda 1") {
        const LabelledSample same{{0.0, 1.0, 1.0, 0.0}, {0.0, 1.0, 1.0, 0.0}};
        CHECK(fit_lambda_ols(same, same.size(), kHugeN).lambda == 1.0);
    }
    SUBCASE("constant pseudolabel falls back to zero") {
        const LabelledSample flat{{0.5, 0.5, 0.5}, {0.0, 1.0, 0.0}};
        const PostHocFit fit = fit_lambda_ols(flat, flat.size(), kHugeN);
        CHECK(fit.lambda == 0.0);
        CHECK(fit.degenerate_variance);
    }
    SUBCASE("needs two points") {
        CHECK_THROWS_AS(fit_lambda_ols(LabelledSample{{1.0}, {1.0}}, 1, 10),
                        InsufficientDataError);
    }
}

TEST_CASE("ridge lambda on pinned examples") {
    const LabelledSample s{{0.0, 0.0, 1.0, 1.0}, {0.0, 1.0, 1.0, 1.0}};
    SUBCASE("alpha 0 reduces to ols bit for bit") {
        CHECK(fit_lambda_ridge(s, 0.0, s.size(), 1000).lambda ==
              fit_lambda_ols(s, s.size(), 1000).lambda);
    }
    SUBCASE("hand computation") {
        CHECK(fit_lambda_ridge(s, 1.0 / 3.0, s.size(), kHugeN).lambda ==
              Approx(0.25).epsilon(1e-15));
    }
    SUBCASE("huge alpha shrinks to zero") {
        CHECK(std::abs(fit_lambda_ridge(s, 1e9, s.size(), kHugeN).lambda) < 1e-6);
    }
    SUBCASE("negative alpha is rejected") {
        CHECK_THROWS_AS(fit_lambda_ridge(s, -1.0, s.size(), 10), SpecError);
    }
}

TEST_CASE("unscaled ols matches the grid-search minimizer") {
    Philox rng(301);
    int accepted = 0;
    while (accepted < 10) {
        const std::size_t n = 4 + rng.uniform_below(97);
        const LabelledSample sample = testsupport::random_labelled(rng, n);
        if (unbiased_variance(sample.f) < 0.02) {
            continue;
        }
        const double coefficient = regression_coefficient(sample);
        if (std::abs(coefficient) > 2.5) {
            continue;
        }
        ++accepted;
        CHECK(std::abs(testsupport::oracle_lambda_grid(sample) - coefficient) <= 2e-4);
    }
}

TEST_CASE("ridge shrinkage is monotone in alpha") {
    Philox rng(302);
    for (int rep = 0; rep < 25; ++rep) {
        const LabelledSample sample = testsupport::random_labelled(rng, 5 + rng.uniform_below(40));
        double previous = std::abs(fit_lambda_ridge(sample, 0.0, sample.size(), 1000).lambda);
        for (double alpha : {1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
            const double current =
                std::abs(fit_lambda_ridge(sample, alpha, sample.size(), 1000).lambda);
            CHECK(current <= previous + 1e-15);
            previous = current;
        }
    }
}

TEST_CASE("ridge alpha selection") {
    SUBCASE("perfect linear fit wants no shrinkage") {
        LabelledSample s;
        Philox rng(303);
        for (int i = 0; i < 12; ++i) {
            const double v = rng.uniform() < 0.5 ? 0.0 : 1.0;
            s.f.push_back(v);
            s.h.push_back(v);
        }
        CvPolicy policy = CvPolicy::ridge_default();
        policy.grid = {0.0, 1.0, 100.0};
        CHECK(select_ridge_alpha(s, policy, 1) == 0.0);
    }
    SUBCASE("pure noise wants maximal shrinkage") {
        Philox rng(304);
        LabelledSample s;
        for (int i = 0; i < 40; ++i) {
            s.f.push_back(rng.uniform() < 0.5 ? 0.0 : 1.0);
            s.h.push_back(rng.uniform() < 0.5 ? 0.0 : 1.0);
        }
        CvPolicy policy = CvPolicy::ridge_default();
        policy.grid = {0.0, 1e6};
        CHECK(select_ridge_alpha(s, policy, 2) == 1e6);
    }
    SUBCASE("single candidate grid") {
        const LabelledSample s{{0.0, 1.0, 0.0, 1.0}, {0.0, 1.0, 1.0, 0.0}};
        CvPolicy policy = CvPolicy::ridge_default();
        policy.grid = {0.37};
        CHECK(select_ridge_alpha(s, policy, 3) == 0.37);
    }
    SUBCASE("preconditions") {
        const LabelledSample s{{0.0, 1.0, 1.0}, {0.0, 1.0, 1.0}};
        CvPolicy policy = CvPolicy::ridge_default();
        policy.fold_count = 5;
        CHECK_THROWS_AS(select_ridge_alpha(s, policy, 0), InsufficientDataError);
    }
    SUBCASE("deterministic given the seed") {
        Philox rng(305);
        const LabelledSample s = testsupport::random_labelled(rng, 23);
        const CvPolicy policy = CvPolicy::ridge_default();
        CHECK(select_ridge_alpha(s, policy, 77) == select_ridge_alpha(s, policy, 77));
    }
}

TEST_CASE("sigmoid function is clamped into (0, 1)") {
    for (double z : {-1e308, -745.0, -40.0, -1.0, 0.0, 1.0, 37.0, 745.0, 1e308}) {
        const double g = sigmoid(z);
        CHECK(g > 0.0);
        CHECK(g < 1.0);
    }
    CHECK(sigmoid(0.0) == 0.5);
}

TEST_CASE("sigmoid fit on pinned cases") {
    SUBCASE("constant target is absorbed by the intercept") {
        const LabelledSample s{{0.1, 0.7, 0.3}, {1.0, 1.0, 1.0}};
        const PostHocFit fit = fit_sigmoid(s, 1e-3);
        CHECK(fit.slope == 0.0);
        CHECK(fit.offset == 0.0);
        // mean(h - g(f)) - b = 0 and residual MSE = 0, exactly.
        double g_sum = 0.0;
        for (double f : s.f) {
            g_sum += sigmoid(fit.slope * f - fit.offset);
        }
        const double b = 1.0 - g_sum / 3.0;
        double mse = 0.0;
        double residual_mean = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double r = s.h[i] - sigmoid(fit.slope * s.f[i] - fit.offset) - b;
            mse += r * r;
            residual_mean += s.h[i] - sigmoid(fit.slope * s.f[i] - fit.offset);
        }
        CHECK(residual_mean / 3.0 - b == 0.0);
        CHECK(mse == 0.0);
    }
    SUBCASE("descent never increases the objective") {
        LabelledSample s;
        for (int i = 0; i < 10; ++i) {
            const double v = i % 2 == 0 ? 0.0 : 1.0;
            s.f.push_back(v);
            s.h.push_back(v);
        }
        const PostHocFit fit = fit_sigmoid(s, 1e-4);
        CHECK(sigmoid_objective(s, fit.slope, fit.offset, 1e-4) <=
              sigmoid_objective(s, 1.0, 0.0, 1e-4));
    }
    SUBCASE("separable data reaches a low-MSE region") {
        LabelledSample s;
        for (int i = 0; i < 40; ++i) {
            const double f = i % 2 == 0 ? 0.1 : 0.9;
            s.f.push_back(f);
            s.h.push_back(f > 0.5 ? 1.0 : 0.0);
        }
        const PostHocFit fit = fit_sigmoid(s, 1e-3);
        const double fitted_mse = sigmoid_objective(s, fit.slope, fit.offset, 0.0);
        CHECK(fitted_mse < 0.05);

        // 2-D grid oracle confirming such a region exists at all.
        double oracle_best = std::numeric_limits<double>::infinity();
        for (double slope = -20.0; slope <= 20.0; slope += 0.05) {
            for (double offset = -20.0; offset <= 20.0; offset += 0.05) {
                oracle_best = std::min(oracle_best, sigmoid_objective(s, slope, offset, 0.0));
            }
        }
        CHECK(oracle_best < 0.05);
        CHECK(fitted_mse <= oracle_best + 0.05);
    }
    SUBCASE("bit-identical across repeated fits") {
        Philox rng(306);
        const LabelledSample s = testsupport::random_labelled(rng, 17);
        const PostHocFit a = fit_sigmoid(s, 1e-2);
        const PostHocFit b = fit_sigmoid(s, 1e-2);
        CHECK(a == b);
    }
}

TEST_CASE("analytic sigmoid gradient matches finite differences") {
    Philox rng(307);
    for (int point = 0; point < 100; ++point) {
        const LabelledSample s = testsupport::random_labelled(rng, 3 + rng.uniform_below(48));
        const double slope = rng.uniform_range(-3.0, 3.0);
        const double offset = rng.uniform_range(-3.0, 3.0);
        const double reg = rng.uniform_range(1e-3, 0.1);
        const auto grad = sigmoid_gradient(s, slope, offset, reg);
        const double step = 1e-6;
        const double fd_slope = (sigmoid_objective(s, slope + step, offset, reg) -
                                 sigmoid_objective(s, slope - step, offset, reg)) /
                                (2.0 * step);
        const double fd_offset = (sigmoid_objective(s, slope, offset + step, reg) -
                                  sigmoid_objective(s, slope, offset - step, reg)) /
                                 (2.0 * step);
        const double err = std::hypot(grad[0] - fd_slope, grad[1] - fd_offset);
        const double scale = std::hypot(fd_slope, fd_offset);
        CHECK(err < 1e-5 * std::max(scale, 1e-10));
    }
}

TEST_CASE("sigmoid regularizer selection") {
    SUBCASE("single candidate grid") {
        const LabelledSample s{{0.0, 1.0, 0.0, 1.0}, {0.0, 1.0, 1.0, 0.0}};
        CvPolicy policy = CvPolicy::sigmoid_default();
        policy.grid = {0.25};
        CHECK(cv_select_sigmoid_reg(s, policy, 1) == 0.25);
    }
    SUBCASE("separable data wants light regularization") {
        LabelledSample s;
        for (int i = 0; i < 20; ++i) {
            const double v = i % 2 == 0 ? 0.0 : 1.0;
            s.f.push_back(v);
            s.h.push_back(v);
        }
        CvPolicy policy = CvPolicy::sigmoid_default();
        policy.grid = {1e-4, 1e3};
        CHECK(cv_select_sigmoid_reg(s, policy, 5) == 1e-4);
    }
    SUBCASE("independent noise wants heavy regularization") {
        Philox rng(308);
        LabelledSample s;
        for (int i = 0; i < 40; ++i) {
            s.f.push_back(rng.uniform() < 0.5 ? 0.0 : 1.0);
            s.h.push_back(rng.uniform() < 0.5 ? 0.0 : 1.0);
        }
        CvPolicy policy = CvPolicy::sigmoid_default();
        policy.grid = {1e-4, 1e3};
        CHECK(cv_select_sigmoid_reg(s, policy, 6) == 1e3);
    }
}
