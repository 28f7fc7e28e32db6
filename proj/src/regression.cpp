#include "fewlabel/regression.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "fewlabel/errors.hpp"
#include "fewlabel/rng.hpp"
#include "fewlabel/sample_stats.hpp"

namespace fewlabel {
namespace {

constexpr std::uint64_t kFoldShuffleTag = 0x666f6c6473ull; // "folds"

double scale_factor(std::size_t n, std::size_t big_n) {
    return 1.0 / (1.0 + static_cast<double>(n) / static_cast<double>(big_n));
}

PostHocFit make_linear_fit(double cov, double var_f, double denominator, double ridge_alpha,
                           std::size_t n, std::size_t big_n) {
    PostHocFit fit;
    fit.kind = FitKind::linear;
    fit.ridge_alpha = ridge_alpha;
    fit.n = n;
    fit.big_n = big_n;
    fit.var_f = var_f;
    fit.cov_fh = cov;
    if (denominator > 0.0) {
        fit.lambda = (cov / denominator) * scale_factor(n, big_n);
    } else {
        fit.lambda = 0.0;
        fit.degenerate_variance = true;
    }
    fit.lambda_outside_unit = std::abs(fit.lambda) > 1.0;
    return fit;
}

/// Held-out index blocks from a seeded shuffle. With n < 2 * fold_count the
/// partition degrades to leave-one-out.
std::vector<std::vector<std::uint32_t>> make_folds(std::size_t n, int fold_count,
                                                   std::uint64_t rng_seed) {
    std::size_t folds = static_cast<std::size_t>(fold_count);
    if (n < 2 * folds) {
        folds = n;
    }
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = static_cast<std::uint32_t>(i);
    }
    Philox rng(derive_stream(rng_seed, {kFoldShuffleTag}));
    rng.shuffle(order);

    std::vector<std::vector<std::uint32_t>> result(folds);
    const std::size_t base = n / folds;
    const std::size_t extra = n % folds;
    std::size_t at = 0;
    for (std::size_t k = 0; k < folds; ++k) {
        const std::size_t len = base + (k < extra ? 1 : 0);
        result[k].assign(order.begin() + at, order.begin() + at + len);
        at += len;
    }
    return result;
}

LabelledSample gather_complement(const LabelledSample& sample,
                                 const std::vector<std::uint32_t>& held_out) {
    std::vector<bool> excluded(sample.size(), false);
    for (std::uint32_t i : held_out) {
        excluded[i] = true;
    }
    LabelledSample train;
    train.f.reserve(sample.size() - held_out.size());
    train.h.reserve(sample.size() - held_out.size());
    for (std::size_t i = 0; i < sample.size(); ++i) {
        if (!excluded[i]) {
            train.f.push_back(sample.f[i]);
            train.h.push_back(sample.h[i]);
        }
    }
    return train;
}

void check_cv_preconditions(const LabelledSample& labelled, const CvPolicy& policy) {
    if (policy.grid.empty()) {
        throw InsufficientDataError("cross-validation grid is empty");
    }
    if (policy.fold_count < 2) {
        throw InsufficientDataError("cross-validation needs at least 2 folds");
    }
    if (labelled.size() < static_cast<std::size_t>(policy.fold_count)) {
        throw InsufficientDataError("cross-validation needs n >= fold_count, got n = " +
                                    std::to_string(labelled.size()));
    }
}

/// Shared CV skeleton: pooled held-out squared error per grid value, ties
/// broken toward the larger regularizer (scanning the grid in ascending
/// order and keeping later candidates on equal score).
template <class FoldScore>
double select_by_cv(const LabelledSample& labelled, const CvPolicy& policy,
                    std::uint64_t rng_seed, FoldScore&& fold_score) {
    check_cv_preconditions(labelled, policy);
    const auto folds = make_folds(labelled.size(), policy.fold_count, rng_seed);

    std::vector<LabelledSample> train_sets;
    train_sets.reserve(folds.size());
    for (const auto& held_out : folds) {
        train_sets.push_back(gather_complement(labelled, held_out));
    }

    std::vector<double> grid = policy.grid;
    std::sort(grid.begin(), grid.end());
    double best_value = grid.front();
    double best_score = std::numeric_limits<double>::infinity();
    for (double candidate : grid) {
        double sse = 0.0;
        for (std::size_t k = 0; k < folds.size(); ++k) {
            sse += fold_score(train_sets[k], folds[k], candidate);
        }
        const double score = sse / static_cast<double>(labelled.size());
        if (score <= best_score) {
            best_score = score;
            best_value = candidate;
        }
    }
    return best_value;
}

struct SigmoidEval {
    double objective = 0.0;
    double d_slope = 0.0;
    double d_offset = 0.0;
};

/// Objective and gradient in one pass. The intercept b = mean(h) - mean(g)
/// makes the residuals sum to zero, which cancels the d(mean g) terms from
/// the gradient.
SigmoidEval eval_sigmoid(const LabelledSample& s, double slope, double offset, double l2_reg,
                         bool with_gradient) {
    const std::size_t n = s.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    double g_sum = 0.0;
    double h_sum = 0.0;
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = sigmoid(slope * s.f[i] - offset);
        g_sum += g[i];
        h_sum += s.h[i];
    }
    const double g_bar = g_sum * inv_n;
    const double h_bar = h_sum * inv_n;

    SigmoidEval out;
    double sse = 0.0;
    double grad_s = 0.0;
    double grad_o = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = (s.h[i] - h_bar) - (g[i] - g_bar);
        sse += r * r;
        if (with_gradient) {
            const double dg = g[i] * (1.0 - g[i]);
            grad_s -= r * dg * s.f[i];
            grad_o += r * dg;
        }
    }
    out.objective = sse * inv_n + l2_reg * (slope * slope + offset * offset);
    if (with_gradient) {
        out.d_slope = 2.0 * inv_n * grad_s + 2.0 * l2_reg * slope;
        out.d_offset = 2.0 * inv_n * grad_o + 2.0 * l2_reg * offset;
    }
    return out;
}

} // namespace

CvPolicy CvPolicy::ridge_default() {
    CvPolicy policy;
    policy.grid = {0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0};
    return policy;
}

CvPolicy CvPolicy::sigmoid_default() {
    CvPolicy policy;
    policy.grid = {1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
    return policy;
}

double sigmoid(double z) {
    double value;
    if (z >= 0.0) {
        value = 1.0 / (1.0 + std::exp(-z));
    } else {
        const double e = std::exp(z);
        value = e / (1.0 + e);
    }
    // Clamp into the open interval so extreme arguments cannot yield an
    // exact 0 or 1.
    constexpr double lo = std::numeric_limits<double>::min();
    const double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
    return std::min(hi, std::max(lo, value));
}

double regression_coefficient(const LabelledSample& labelled) {
    if (labelled.size() < 2) {
        throw InsufficientDataError("regression coefficient needs n >= 2");
    }
    const double var_f = unbiased_variance(labelled.f);
    if (var_f <= 0.0) {
        return 0.0;
    }
    return unbiased_covariance(labelled.f, labelled.h) / var_f;
}

PostHocFit fit_lambda_ols(const LabelledSample& labelled, std::size_t n, std::size_t big_n) {
    return fit_lambda_ridge(labelled, 0.0, n, big_n);
}

PostHocFit fit_lambda_ridge(const LabelledSample& labelled, double ridge_alpha, std::size_t n,
                            std::size_t big_n) {
    if (labelled.size() < 2) {
        throw InsufficientDataError("lambda fit needs n >= 2, got " +
                                    std::to_string(labelled.size()));
    }
    if (big_n < 1) {
        throw InsufficientDataError("lambda fit needs N >= 1");
    }
    if (ridge_alpha < 0.0) {
        throw SpecError("ridge_alpha must be >= 0");
    }
    const double var_f = unbiased_variance(labelled.f);
    const double cov = unbiased_covariance(labelled.f, labelled.h);
    return make_linear_fit(cov, var_f, var_f + ridge_alpha, ridge_alpha, n, big_n);
}

double select_ridge_alpha(const LabelledSample& labelled, const CvPolicy& policy,
                          std::uint64_t rng_seed) {
    return select_by_cv(
        labelled, policy, rng_seed,
        [&](const LabelledSample& train, const std::vector<std::uint32_t>& held_out,
            double alpha) {
            double lambda = 0.0;
            double intercept;
            if (train.size() < 2) {
                intercept = mean(train.h);
            } else {
                const double var_f = unbiased_variance(train.f);
                const double cov = unbiased_covariance(train.f, train.h);
                lambda = (var_f + alpha) > 0.0 ? cov / (var_f + alpha) : 0.0;
                intercept = mean(train.h) - lambda * mean(train.f);
            }
            double sse = 0.0;
            for (std::uint32_t i : held_out) {
                const double r = labelled.h[i] - lambda * labelled.f[i] - intercept;
                sse += r * r;
            }
            return sse;
        });
}

double sigmoid_objective(const LabelledSample& labelled, double slope, double offset,
                         double l2_reg) {
    return eval_sigmoid(labelled, slope, offset, l2_reg, false).objective;
}

std::array<double, 2> sigmoid_gradient(const LabelledSample& labelled, double slope,
                                       double offset, double l2_reg) {
    const SigmoidEval eval = eval_sigmoid(labelled, slope, offset, l2_reg, true);
    return {eval.d_slope, eval.d_offset};
}

PostHocFit fit_sigmoid(const LabelledSample& labelled, double l2_reg) {
    if (labelled.size() < 2) {
        throw InsufficientDataError("sigmoid fit needs n >= 2, got " +
                                    std::to_string(labelled.size()));
    }
    if (l2_reg < 0.0) {
        throw SpecError("l2_reg must be >= 0");
    }

    PostHocFit fit;
    fit.kind = FitKind::sigmoid;
    fit.ridge_alpha = l2_reg;
    fit.n = labelled.size();
    fit.var_f = unbiased_variance(labelled.f);
    fit.cov_fh = unbiased_covariance(labelled.f, labelled.h);

    // Constant target: the intercept absorbs it, any constant transform has
    // zero residual, and the penalty selects the origin exactly.
    const bool constant_h =
        std::all_of(labelled.h.begin(), labelled.h.end(),
                    [&](double v) { return v == labelled.h.front(); });
    if (constant_h) {
        fit.slope = 0.0;
        fit.offset = 0.0;
        return fit;
    }

    constexpr int kMaxIterations = 10000;
    constexpr double kGradTolerance = 1e-8;
    constexpr double kArmijo = 1e-4;
    constexpr double kMinStep = 1e-20;

    double slope = 1.0;
    double offset = 0.0;
    SigmoidEval cur = eval_sigmoid(labelled, slope, offset, l2_reg, true);
    if (!std::isfinite(cur.objective)) {
        throw OptimizationDivergedError("sigmoid objective non-finite at initialization");
    }

    // Steepest descent with a Barzilai-Borwein initial step and Armijo
    // backtracking. BB steps make the flat directions of this 2-D objective
    // tractable within the iteration cap.
    double prev_slope = slope;
    double prev_offset = offset;
    double prev_g0 = cur.d_slope;
    double prev_g1 = cur.d_offset;
    bool have_previous = false;

    for (int iter = 0; iter < kMaxIterations; ++iter) {
        if (!std::isfinite(cur.d_slope) || !std::isfinite(cur.d_offset)) {
            throw OptimizationDivergedError("sigmoid gradient non-finite during optimization");
        }
        const double grad_norm_sq = cur.d_slope * cur.d_slope + cur.d_offset * cur.d_offset;
        if (std::sqrt(grad_norm_sq) <= kGradTolerance) {
            break;
        }

        double step = 1.0;
        if (have_previous) {
            const double ds0 = slope - prev_slope;
            const double ds1 = offset - prev_offset;
            const double dg0 = cur.d_slope - prev_g0;
            const double dg1 = cur.d_offset - prev_g1;
            const double sg = ds0 * dg0 + ds1 * dg1;
            const double ss = ds0 * ds0 + ds1 * ds1;
            if (std::isfinite(sg) && sg > 0.0 && ss > 0.0) {
                step = ss / sg;
                step = std::min(step, 1e12);
            }
        }

        prev_slope = slope;
        prev_offset = offset;
        prev_g0 = cur.d_slope;
        prev_g1 = cur.d_offset;

        bool accepted = false;
        while (step >= kMinStep) {
            const double trial_slope = slope - step * cur.d_slope;
            const double trial_offset = offset - step * cur.d_offset;
            const double trial =
                eval_sigmoid(labelled, trial_slope, trial_offset, l2_reg, false).objective;
            // A non-finite trial objective fails this test and shrinks the
            // step, the same as any other overshoot.
            if (trial <= cur.objective - kArmijo * step * grad_norm_sq) {
                slope = trial_slope;
                offset = trial_offset;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            break; // step underflow: no further descent possible
        }
        have_previous = true;
        cur = eval_sigmoid(labelled, slope, offset, l2_reg, true);
        if (!std::isfinite(cur.objective)) {
            throw OptimizationDivergedError("sigmoid objective non-finite during optimization");
        }
    }

    fit.slope = slope;
    fit.offset = offset;
    return fit;
}

double cv_select_sigmoid_reg(const LabelledSample& labelled, const CvPolicy& policy,
                             std::uint64_t rng_seed) {
    return select_by_cv(
        labelled, policy, rng_seed,
        [&](const LabelledSample& train, const std::vector<std::uint32_t>& held_out,
            double reg) {
            double slope = 0.0;
            double offset = 0.0;
            if (train.size() >= 2) {
                const PostHocFit fit = fit_sigmoid(train, reg);
                slope = fit.slope;
                offset = fit.offset;
            }
            double g_sum = 0.0;
            double h_sum = 0.0;
            for (std::size_t i = 0; i < train.size(); ++i) {
                g_sum += sigmoid(slope * train.f[i] - offset);
                h_sum += train.h[i];
            }
            const double intercept = (h_sum - g_sum) / static_cast<double>(train.size());
            double sse = 0.0;
            for (std::uint32_t i : held_out) {
                const double r =
                    labelled.h[i] - sigmoid(slope * labelled.f[i] - offset) - intercept;
                sse += r * r;
            }
            return sse;
        });
}

} // namespace fewlabel
