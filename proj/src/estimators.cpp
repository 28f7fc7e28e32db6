#include "fewlabel/estimators.hpp"

#include <cstddef>
#include <string>

#include "fewlabel/errors.hpp"
#include "fewlabel/rng.hpp"
#include "fewlabel/sample_stats.hpp"

namespace fewlabel {
namespace {

constexpr std::uint64_t kCrossFitSplitTag = 0x73706c6974ull; // "split"

void require_labelled(const LabelledSample& labelled, std::size_t minimum) {
    if (labelled.f.size() != labelled.h.size()) {
        throw ShapeError("labelled sample: mismatched f/h lengths");
    }
    if (labelled.size() < minimum) {
        throw InsufficientDataError("estimator needs at least " + std::to_string(minimum) +
                                    " labelled rows, got " + std::to_string(labelled.size()));
    }
}

void require_unlabelled(const UnlabelledSample& unlabelled) {
    if (unlabelled.size() < 1) {
        throw InsufficientDataError("estimator needs at least 1 unlabelled row");
    }
}

Estimate classical_fallback(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                            Method method) {
    Estimate estimate = classical_mean(labelled);
    estimate.method = method;
    estimate.n = labelled.size();
    estimate.big_n = unlabelled.size();
    estimate.fallback_classical = true;
    return estimate;
}

/// The rectifier form of the PPI estimate,
///   mean(h) + lambda * (mean(f over D_N) - mean(f over D_n)),
/// algebraically equal to Eq.-style term-by-term evaluation but exact under
/// the collapse cases: lambda = 0 reproduces mean(h) bit-for-bit, and
/// identical f pools cancel to exactly zero correction.
double rectifier_value(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                       double lambda) {
    const double mean_h = mean(labelled.h);
    const double mean_f_labelled = mean(labelled.f);
    const double mean_f_unlabelled = mean(unlabelled.f);
    return mean_h + lambda * (mean_f_unlabelled - mean_f_labelled);
}

} // namespace

std::string_view method_name(Method method) {
    switch (method) {
    case Method::classical: return "classical";
    case Method::ppi_fixed: return "ppi-fixed";
    case Method::ppi_plus_plus: return "ppi++";
    case Method::ridge_ppi: return "ridge-ppi";
    case Method::sigmoid_ppi: return "sigmoid-ppi";
    case Method::sigmoid_ppi_adjusted: return "sigmoid-ppi-adjusted";
    }
    return "unknown";
}

std::optional<Method> method_from_name(std::string_view name) {
    for (Method m : {Method::classical, Method::ppi_fixed, Method::ppi_plus_plus,
                     Method::ridge_ppi, Method::sigmoid_ppi, Method::sigmoid_ppi_adjusted}) {
        if (method_name(m) == name) {
            return m;
        }
    }
    return std::nullopt;
}

Estimate classical_mean(const LabelledSample& labelled) {
    require_labelled(labelled, 1);
    Estimate estimate;
    estimate.value = mean(labelled.h);
    estimate.method = Method::classical;
    estimate.n = labelled.size();
    estimate.big_n = 0;
    return estimate;
}

Estimate ppi_fixed(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                   double lambda) {
    require_labelled(labelled, 1);
    require_unlabelled(unlabelled);
    Estimate estimate;
    estimate.value = rectifier_value(labelled, unlabelled, lambda);
    estimate.method = Method::ppi_fixed;
    estimate.n = labelled.size();
    estimate.big_n = unlabelled.size();
    return estimate;
}

Estimate ppi_plus_plus(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                       bool cross_fit, std::uint64_t rng_seed) {
    require_labelled(labelled, 1);
    require_unlabelled(unlabelled);
    const std::size_t n = labelled.size();
    if (n < 2 || (cross_fit && n < 4)) {
        return classical_fallback(labelled, unlabelled, Method::ppi_plus_plus);
    }

    Estimate estimate;
    estimate.method = Method::ppi_plus_plus;
    estimate.n = n;
    estimate.big_n = unlabelled.size();

    if (!cross_fit) {
        const PostHocFit fit = fit_lambda_ols(labelled, n, unlabelled.size());
        estimate.fit = fit;
        estimate.value = rectifier_value(labelled, unlabelled, fit.lambda);
        return estimate;
    }

    // Seeded 50/50 split: lambda comes from one half, the estimate from the
    // other, so lambda is independent of the data it corrects.
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = static_cast<std::uint32_t>(i);
    }
    Philox rng(derive_stream(rng_seed, {kCrossFitSplitTag}));
    rng.shuffle(order);

    const std::size_t fit_size = n / 2;
    LabelledSample fit_half;
    LabelledSample estimation_half;
    for (std::size_t i = 0; i < n; ++i) {
        LabelledSample& target = (i < fit_size) ? fit_half : estimation_half;
        target.f.push_back(labelled.f[order[i]]);
        target.h.push_back(labelled.h[order[i]]);
    }

    // The scale factor uses the estimation half's size: that is the labelled
    // sample whose variance the (1 + n/N)^-1 correction optimizes.
    const PostHocFit fit =
        fit_lambda_ols(fit_half, estimation_half.size(), unlabelled.size());
    estimate.fit = fit;
    estimate.value = rectifier_value(estimation_half, unlabelled, fit.lambda);
    return estimate;
}

Estimate ridge_ppi(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                   const CvPolicy& policy, std::uint64_t rng_seed) {
    require_labelled(labelled, 1);
    require_unlabelled(unlabelled);
    const std::size_t n = labelled.size();
    if (n < 2) {
        return classical_fallback(labelled, unlabelled, Method::ridge_ppi);
    }
    const double alpha = select_ridge_alpha(labelled, policy, rng_seed);
    const PostHocFit fit = fit_lambda_ridge(labelled, alpha, n, unlabelled.size());
    Estimate estimate;
    estimate.method = Method::ridge_ppi;
    estimate.n = n;
    estimate.big_n = unlabelled.size();
    estimate.fit = fit;
    estimate.value = rectifier_value(labelled, unlabelled, fit.lambda);
    return estimate;
}

Estimate sigmoid_ppi(const LabelledSample& labelled, const UnlabelledSample& unlabelled,
                     const CvPolicy& policy, AdjustMode adjust, std::uint64_t rng_seed) {
    require_labelled(labelled, 1);
    require_unlabelled(unlabelled);
    const std::size_t n = labelled.size();
    const std::size_t big_n = unlabelled.size();
    const double size_ratio = static_cast<double>(n) / static_cast<double>(big_n);
    const bool adjusted =
        adjust == AdjustMode::on || (adjust == AdjustMode::automatic && size_ratio > 0.05);
    const Method method = adjusted ? Method::sigmoid_ppi_adjusted : Method::sigmoid_ppi;
    if (n < 2) {
        return classical_fallback(labelled, unlabelled, method);
    }

    const double reg = cv_select_sigmoid_reg(labelled, policy, rng_seed);
    PostHocFit fit = fit_sigmoid(labelled, reg);
    fit.big_n = big_n;
    fit.adjusted = adjusted;

    double g_sum_labelled = 0.0;
    for (double f : labelled.f) {
        g_sum_labelled += sigmoid(fit.slope * f - fit.offset);
    }
    double g_sum_unlabelled = 0.0;
    for (double f : unlabelled.f) {
        g_sum_unlabelled += sigmoid(fit.slope * f - fit.offset);
    }
    const double g_mean_labelled = g_sum_labelled / static_cast<double>(n);
    const double g_mean_unlabelled = g_sum_unlabelled / static_cast<double>(big_n);
    const double scale = adjusted ? 1.0 / (1.0 + size_ratio) : 1.0;

    Estimate estimate;
    estimate.method = method;
    estimate.n = n;
    estimate.big_n = big_n;
    estimate.fit = fit;
    estimate.value = mean(labelled.h) + scale * (g_mean_unlabelled - g_mean_labelled);
    return estimate;
}

} // namespace fewlabel
