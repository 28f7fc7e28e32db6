#include "fewlabel/analytics.hpp"

#include <cmath>

#include "fewlabel/errors.hpp"

namespace fewlabel {
namespace {

double inverse_size_sum(std::size_t n, std::size_t big_n) {
    return 1.0 / static_cast<double>(big_n) + 1.0 / static_cast<double>(n);
}

double one_plus_ratio(std::size_t n, std::size_t big_n) {
    return 1.0 + static_cast<double>(n) / static_cast<double>(big_n);
}

} // namespace

double excess_var_stochastic_lambda(const RegimePoint& point) {
    const double inv = inverse_size_sum(point.n, point.big_n);
    const DistributionStats& s = point.stats;
    const double mean_term = point.e_lambda * point.e_lambda * inv * s.var_f;
    const double noise_term =
        point.var_lambda * (2.0 * s.mean_f * s.mean_f + inv * s.var_f);
    const double gain_term =
        2.0 * point.e_lambda / static_cast<double>(point.n) * s.cov_fh;
    return mean_term + noise_term - gain_term;
}

double lambda_noise_amplification(const DistributionStats& stats, std::size_t n,
                                  std::size_t big_n) {
    return stats.var_cov_hat *
           (2.0 * stats.mean_f * stats.mean_f + inverse_size_sum(n, big_n) * stats.var_f);
}

double ppi_excess_variance(const DistributionStats& stats, std::size_t n, std::size_t big_n) {
    if (stats.var_f <= 0.0) {
        throw DegenerateVarianceError("ppi_excess_variance requires var_f > 0");
    }
    const double lambda_noise =
        stats.var_cov_hat / stats.var_f *
        (2.0 * stats.mean_f * stats.mean_f / stats.var_f + inverse_size_sum(n, big_n));
    const double gain = stats.var_h * stats.corr_fh * stats.corr_fh /
                        (one_plus_ratio(n, big_n) * static_cast<double>(n));
    return lambda_noise - gain;
}

double ridge_excess_variance(const DistributionStats& stats, double ridge_alpha, std::size_t n,
                             std::size_t big_n) {
    const double shifted = stats.var_f + ridge_alpha;
    if (shifted <= 0.0) {
        throw DegenerateVarianceError("ridge_excess_variance requires var_f + alpha > 0");
    }
    const double v = lambda_noise_amplification(stats, n, big_n);
    const double denom = one_plus_ratio(n, big_n) * static_cast<double>(n);
    const double corr_var_h = stats.corr_fh * stats.corr_fh * stats.var_h;
    return v / (shifted * shifted) +
           corr_var_h * ridge_alpha * ridge_alpha / (denom * shifted * shifted) -
           corr_var_h / denom;
}

double ridge_minus_ppi(const DistributionStats& stats, double ridge_alpha, std::size_t n,
                       std::size_t big_n) {
    if (stats.var_f <= 0.0) {
        throw DegenerateVarianceError("ridge_minus_ppi requires var_f > 0");
    }
    const double shifted = stats.var_f + ridge_alpha;
    const double v = lambda_noise_amplification(stats, n, big_n);
    const double variance_reduction =
        v * (1.0 / (shifted * shifted) - 1.0 / (stats.var_f * stats.var_f));
    const double bias_cost = stats.corr_fh * stats.corr_fh * stats.var_h * ridge_alpha *
                             ridge_alpha /
                             (static_cast<double>(n) * one_plus_ratio(n, big_n) * shifted *
                              shifted);
    return variance_reduction + bias_cost;
}

std::optional<double> optimal_ridge_alpha(const DistributionStats& stats, std::size_t n,
                                          std::size_t big_n) {
    if (stats.cov_fh == 0.0) {
        return std::nullopt;
    }
    const double v = lambda_noise_amplification(stats, n, big_n);
    return static_cast<double>(n) * one_plus_ratio(n, big_n) * v /
           (stats.cov_fh * stats.cov_fh);
}

SweepGrid heatmap_sweep(const DistributionStats& base, const std::vector<double>& var_f_grid,
                        const std::vector<std::size_t>& n_grid, std::size_t big_n,
                        VarCovRule rule) {
    if (var_f_grid.empty() || n_grid.empty()) {
        throw SpecError("sweep grids must be nonempty");
    }
    if (base.var_h <= 0.0) {
        throw DegenerateVarianceError("sweep normalization requires var_h > 0");
    }
    for (double v : var_f_grid) {
        if (v < 0.0 || !std::isfinite(v)) {
            throw SpecError("var_f grid values must be finite and >= 0");
        }
    }

    SweepGrid grid;
    grid.var_f_values = var_f_grid;
    grid.n_values = n_grid;
    grid.cells.assign(var_f_grid.size(),
                      std::vector<std::optional<double>>(n_grid.size(), std::nullopt));

    for (std::size_t i = 0; i < var_f_grid.size(); ++i) {
        for (std::size_t j = 0; j < n_grid.size(); ++j) {
            const double var_f = var_f_grid[i];
            if (var_f == 0.0) {
                continue; // singular point, cell stays absent
            }
            const std::size_t n = n_grid[j];
            DistributionStats cell = base;
            cell.var_f = var_f;
            cell.cov_fh = base.corr_fh * std::sqrt(var_f * base.var_h);
            cell.var_cov_hat = rule.c / (static_cast<double>(n) * static_cast<double>(n));
            const double excess = ppi_excess_variance(cell, n, big_n);
            // Var[classical] = var_h / n, so the normalized variance is
            // 1 + excess * n / var_h.
            grid.cells[i][j] = 1.0 + excess * static_cast<double>(n) / base.var_h;
        }
    }
    return grid;
}

} // namespace fewlabel
