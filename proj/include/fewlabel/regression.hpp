#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fewlabel/samples.hpp"

namespace fewlabel {

enum class FitKind { linear, sigmoid };

enum class TieBreak { prefer_larger_regularizer };

/// Cross-validation policy for regularizer selection. Folds are contiguous
/// blocks of a seeded shuffle; when n < 2 * fold_count the selection falls
/// back to leave-one-out for stability at tiny n.
struct CvPolicy {
    int fold_count = 5;
    std::vector<double> grid;
    TieBreak tie_break = TieBreak::prefer_larger_regularizer;

    /// {0} plus a log grid 1e-4 .. 1e3.
    static CvPolicy ridge_default();
    /// Log grid 1e-5 .. 10.
    static CvPolicy sigmoid_default();
};

/// A fitted post-hoc regressor taking pseudolabels closer to gold labels.
/// Linear kind: h ~ lambda * f, with lambda already scaled by (1 + n/N)^-1.
/// Sigmoid kind: h ~ 1 / (1 + exp(-slope * f + offset)).
/// ridge_alpha is the selected regularizer for either kind (0 for plain OLS).
struct PostHocFit {
    FitKind kind = FitKind::linear;
    double lambda = 0.0;
    double slope = 0.0;
    double offset = 0.0;
    bool adjusted = false;
    double ridge_alpha = 0.0;
    // Diagnostics: the sizes and moments the fit was computed from.
    std::size_t n = 0;
    std::size_t big_n = 0;
    double var_f = 0.0;
    double cov_fh = 0.0;
    bool degenerate_variance = false;
    bool lambda_outside_unit = false;

    bool operator==(const PostHocFit&) const = default;
};

/// Numerically stable logistic function, clamped into the open interval
/// (0, 1) so downstream code never sees an exact 0 or 1.
double sigmoid(double z);

/// Unscaled regression coefficient cov(h, f) / var(f); 0 when var(f) = 0.
double regression_coefficient(const LabelledSample& labelled);

/// OLS lambda = [cov(h,f) / var(f)] / (1 + n/N), unbiased moments, unclipped.
/// Zero f-variance yields lambda = 0 with the degenerate_variance flag set
/// rather than an error. n is the labelled size the scaling applies to (it
/// may differ from labelled.size() under cross-fitting); big_n >= 1.
PostHocFit fit_lambda_ols(const LabelledSample& labelled, std::size_t n, std::size_t big_n);

/// Ridge lambda = [cov(h,f) / (var(f) + ridge_alpha)] / (1 + n/N), unclipped.
PostHocFit fit_lambda_ridge(const LabelledSample& labelled, double ridge_alpha,
                            std::size_t n, std::size_t big_n);

/// Picks the grid value minimizing pooled held-out squared error of
/// h ~ lambda_alpha * f + b, with b the training-fold intercept
/// mean(h) - lambda * mean(f). Ties go to the larger regularizer.
double select_ridge_alpha(const LabelledSample& labelled, const CvPolicy& policy,
                          std::uint64_t rng_seed);

/// Regularized sigmoid objective at (slope, offset):
///   (1/n) sum (h_i - g(f_i) - b)^2 + l2_reg * (slope^2 + offset^2)
/// where g(f) = sigmoid(slope * f - offset) and b = mean(h) - mean(g(f)) is
/// re-derived at every evaluation (the closed-form optimal intercept).
double sigmoid_objective(const LabelledSample& labelled, double slope, double offset,
                         double l2_reg);

/// Analytic gradient of sigmoid_objective; {d/d slope, d/d offset}.
std::array<double, 2> sigmoid_gradient(const LabelledSample& labelled, double slope,
                                       double offset, double l2_reg);

/// Deterministic first-order descent with Armijo backtracking from the fixed
/// start (slope, offset) = (1, 0); gradient-norm tolerance 1e-8, at most 1e4
/// iterations. Identical inputs give bit-identical fits. Throws
/// OptimizationDivergedError if the objective turns non-finite.
PostHocFit fit_sigmoid(const LabelledSample& labelled, double l2_reg);

/// Cross-validated L2 regularizer for the sigmoid fit; same fold mechanics
/// and tie-breaking as select_ridge_alpha, scoring intercept-corrected
/// held-out MSE.
double cv_select_sigmoid_reg(const LabelledSample& labelled, const CvPolicy& policy,
                             std::uint64_t rng_seed);

} // namespace fewlabel
