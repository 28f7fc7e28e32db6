#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "fewlabel/regression.hpp"
#include "fewlabel/samples.hpp"

namespace fewlabel {

enum class Method {
    classical,
    ppi_fixed,
    ppi_plus_plus,
    ridge_ppi,
    sigmoid_ppi,
    sigmoid_ppi_adjusted,
};

std::string_view method_name(Method method);
std::optional<Method> method_from_name(std::string_view name);

/// Whether Sigmoid-PPI scales the fitted transform by (1 + n/N)^-1.
/// automatic applies the scaling only when n/N > 0.05, where the unadjusted
/// estimator starts to degrade.
enum class AdjustMode { automatic, on, off };

/// A point estimate of the feature generation rate E[h(X)].
struct Estimate {
    double value = 0.0;
    Method method = Method::classical;
    std::optional<PostHocFit> fit;
    std::size_t n = 0;
    std::size_t big_n = 0;
    /// Set when the requested method degraded to the plain labelled mean
    /// (too few labels for a fit). A warning, never an error.
    bool fallback_classical = false;

    bool operator==(const Estimate&) const = default;
};

/// Labelled sample mean. Throws InsufficientDataError on an empty sample.
Estimate classical_mean(const LabelledSample& labelled);

/// PPI with a caller-supplied lambda:
///   lambda * mean(f over D_N) + mean(h - lambda * f over D_n),
/// evaluated in the algebraically equal rectifier form
///   mean(h) + lambda * (mean(f over D_N) - mean(f over D_n))
/// so that lambda = 0 reproduces the classical mean bit-for-bit and identical
/// f pools cancel exactly.
Estimate ppi_fixed(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                   double lambda);

/// PPI++: lambda from fit_lambda_ols. With cross_fit the labelled sample is
/// split once (seeded, 50/50) into a lambda-fitting half and an estimation
/// half, making lambda independent of the data it corrects. n < 2 (or < 4
/// with cross_fit) falls back to the classical mean with a diagnostic.
Estimate ppi_plus_plus(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                       bool cross_fit, std::uint64_t rng_seed);

/// Ridge-PPI: cross-validated ridge_alpha, then fit_lambda_ridge.
Estimate ridge_ppi(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                   const CvPolicy& policy, std::uint64_t rng_seed);

/// Sigmoid-PPI: cross-validated L2 strength, fitted sigmoid transform g, then
///   mean(h) + s * (mean(g(f) over D_N) - mean(g(f) over D_n))
/// with s = (1 + n/N)^-1 when adjusted, else 1.
Estimate sigmoid_ppi(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                     const CvPolicy& policy, AdjustMode adjust, std::uint64_t rng_seed);

} // namespace fewlabel
