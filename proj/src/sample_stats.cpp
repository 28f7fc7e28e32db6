#include "fewlabel/sample_stats.hpp"

#include <cmath>
#include <string>

#include "fewlabel/errors.hpp"

namespace fewlabel {

void validate(const LabelledSample& sample) {
    if (sample.f.size() != sample.h.size()) {
        throw ShapeError("labelled sample: f has " + std::to_string(sample.f.size()) +
                         " values but h has " + std::to_string(sample.h.size()));
    }
    for (std::size_t i = 0; i < sample.size(); ++i) {
        if (!std::isfinite(sample.f[i]) || !std::isfinite(sample.h[i])) {
            throw FormatError("labelled sample: non-finite value at index " + std::to_string(i));
        }
    }
}

void validate(const UnlabelledSample& sample) {
    for (std::size_t i = 0; i < sample.size(); ++i) {
        if (!std::isfinite(sample.f[i])) {
            throw FormatError("unlabelled sample: non-finite value at index " +
                              std::to_string(i));
        }
    }
}

double mean(std::span<const double> xs) {
    if (xs.empty()) {
        throw InsufficientDataError("mean of an empty vector");
    }
    double sum = 0.0;
    for (double x : xs) {
        sum += x;
    }
    return sum / static_cast<double>(xs.size());
}

namespace {

bool all_equal(std::span<const double> xs) {
    for (double x : xs) {
        if (x != xs.front()) {
            return false;
        }
    }
    return true;
}

} // namespace

double unbiased_variance(std::span<const double> xs) {
    if (xs.size() < 2) {
        throw InsufficientDataError("variance needs at least 2 values, got " +
                                    std::to_string(xs.size()));
    }
    // A constant vector has exactly zero variance; without this guard the
    // rounded mean of a non-representable constant leaves ~1e-31 residue,
    // which would defeat the var == 0 degeneracy checks downstream.
    if (all_equal(xs)) {
        return 0.0;
    }
    const double center = mean(xs);
    double sum = 0.0;
    for (double x : xs) {
        const double d = x - center;
        sum += d * d;
    }
    return sum / static_cast<double>(xs.size() - 1);
}

double unbiased_covariance(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) {
        throw ShapeError("covariance of vectors with lengths " + std::to_string(xs.size()) +
                         " and " + std::to_string(ys.size()));
    }
    if (xs.size() < 2) {
        throw InsufficientDataError("covariance needs at least 2 pairs, got " +
                                    std::to_string(xs.size()));
    }
    const double x_center = mean(xs);
    const double y_center = mean(ys);
    double sum = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sum += (xs[i] - x_center) * (ys[i] - y_center);
    }
    return sum / static_cast<double>(xs.size() - 1);
}

DistributionStats compute_stats(const LabelledSample& labelled,
                                std::optional<double> var_cov_hat) {
    const std::size_t n = labelled.size();
    if (n < 2) {
        throw InsufficientDataError("compute_stats needs at least 2 pairs, got " +
                                    std::to_string(n));
    }
    DistributionStats stats;
    stats.mean_f = mean(labelled.f);
    stats.var_f = unbiased_variance(labelled.f);
    stats.var_h = unbiased_variance(labelled.h);
    stats.cov_fh = unbiased_covariance(labelled.f, labelled.h);
    stats.corr_fh = (stats.var_f > 0.0 && stats.var_h > 0.0)
                        ? stats.cov_fh / std::sqrt(stats.var_f * stats.var_h)
                        : 0.0;
    if (var_cov_hat) {
        stats.var_cov_hat = *var_cov_hat;
    } else {
        // Plug-in variance of the sample covariance: the per-pair deviation
        // products scatter around the covariance; their spread over n is the
        // delta-method estimate.
        const double mean_h = mean(labelled.h);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d =
                (labelled.f[i] - stats.mean_f) * (labelled.h[i] - mean_h) - stats.cov_fh;
            sum += d * d;
        }
        stats.var_cov_hat = sum / static_cast<double>(n) / static_cast<double>(n);
    }
    return stats;
}

} // namespace fewlabel
