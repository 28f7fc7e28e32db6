#pragma once

#include <optional>
#include <span>

#include "fewlabel/samples.hpp"

namespace fewlabel {

/// Arithmetic mean; plain left-to-right accumulation (two-pass moments below
/// rely on the same deterministic summation order).
double mean(std::span<const double> xs);

/// Unbiased sample variance, divisor n-1, two-pass.
/// Throws InsufficientDataError for fewer than two values.
double unbiased_variance(std::span<const double> xs);

/// Unbiased sample covariance, divisor n-1, two-pass.
/// Throws ShapeError on length mismatch, InsufficientDataError for n < 2.
double unbiased_covariance(std::span<const double> xs, std::span<const double> ys);

/// Moments of the joint (f, h) distribution that the variance formulas
/// consume. corr_fh is 0 whenever either variance vanishes. var_cov_hat is
/// the variance of the sample-covariance estimator itself.
struct DistributionStats {
    double mean_f = 0.0;
    double var_f = 0.0;
    double var_h = 0.0;
    double cov_fh = 0.0;
    double corr_fh = 0.0;
    double var_cov_hat = 0.0;

    bool operator==(const DistributionStats&) const = default;
};

/// Fills DistributionStats from a labelled sample (n >= 2). When var_cov_hat
/// is not supplied it is estimated with the plug-in
///   (1/n) * mean(((f_i - mean f)(h_i - mean h) - cov)^2),
/// i.e. the delta-method variance of the sample covariance. This is an
/// approximation; callers with an exogenous value should pass it in.
DistributionStats compute_stats(const LabelledSample& labelled,
                                std::optional<double> var_cov_hat = std::nullopt);

} // namespace fewlabel
