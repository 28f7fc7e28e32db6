#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "fewlabel/sample_stats.hpp"

namespace fewlabel {

/// One operating point of the stochastic-lambda variance theory: sample
/// sizes, population moments, and the first two moments of the (random)
/// lambda estimator.
struct RegimePoint {
    std::size_t n = 1;
    std::size_t big_n = 1;
    DistributionStats stats;
    double e_lambda = 0.0;
    double var_lambda = 0.0;
};

/// Excess variance of PPI over the classical mean when lambda is a random
/// variable independent of the estimation data:
///   E[l]^2 (1/N + 1/n) Var[f]
///   + Var[l] (2 E[f]^2 + (1/N + 1/n) Var[f])
///   - (2 E[l] / n) Cov(h, f).
/// Total over all valid inputs.
double excess_var_stochastic_lambda(const RegimePoint& point);

/// The lambda-noise amplification factor
///   V = Var[cov-hat] * (2 E[f]^2 + (1/N + 1/n) Var[f]).
double lambda_noise_amplification(const DistributionStats& stats, std::size_t n,
                                  std::size_t big_n);

/// Excess variance of PPI++ (OLS lambda, asymptotic lambda moments):
///   (Var[cov-hat]/Var[f]) (2 E[f]^2 / Var[f] + (1/N + 1/n))
///   - Var[h] Corr^2 / ((1 + n/N) n).
/// Throws DegenerateVarianceError when var_f = 0.
double ppi_excess_variance(const DistributionStats& stats, std::size_t n, std::size_t big_n);

/// Excess variance of Ridge-PPI over the classical mean:
///   V / (Var[f] + a)^2
///   + Corr^2 Var[h] a^2 / (n (1 + n/N) (Var[f] + a)^2)
///   - Corr^2 Var[h] / (n (1 + n/N)).
/// Throws DegenerateVarianceError when var_f + ridge_alpha = 0.
double ridge_excess_variance(const DistributionStats& stats, double ridge_alpha,
                             std::size_t n, std::size_t big_n);

/// Risk difference Var[ridge-PPI] - Var[PPI++]:
///   V (1/(Var[f] + a)^2 - 1/Var[f]^2)
///   + Corr^2 Var[h] a^2 / (n (1 + n/N) (Var[f] + a)^2).
/// The first term is <= 0 (variance reduction), the second >= 0 (bias).
/// Throws DegenerateVarianceError when var_f = 0.
double ridge_minus_ppi(const DistributionStats& stats, double ridge_alpha,
                       std::size_t n, std::size_t big_n);

/// Stationary ridge coefficient a* = n (1 + n/N) V / Cov^2, or nullopt when
/// Cov = 0. The objective is not convex in alpha, so the returned point
/// should be validated numerically by the caller.
std::optional<double> optimal_ridge_alpha(const DistributionStats& stats, std::size_t n,
                                          std::size_t big_n);

/// var_cov_hat as a function of n for the sweep: fixed c with 1/n^2 decay.
struct VarCovRule {
    double c = 0.3;
};

/// Normalized-variance surface Var[PPI++] / Var[classical] over a
/// (Var[f], n) grid. Rows follow var_f_values, columns n_values; a cell is
/// absent where the formula is singular (var_f = 0).
struct SweepGrid {
    std::vector<double> var_f_values;
    std::vector<std::size_t> n_values;
    std::vector<std::vector<std::optional<double>>> cells;

    bool operator==(const SweepGrid&) const = default;
};

/// cell(i, j) = 1 + ppi_excess_variance(stats_i_j, n_j, N) * n_j / Var[h],
/// where stats_i_j holds Corr, Var[h], E[f] from base, var_f from the grid,
/// cov re-derived to keep Corr fixed, and var_cov_hat = c / n_j^2.
SweepGrid heatmap_sweep(const DistributionStats& base, const std::vector<double>& var_f_grid,
                        const std::vector<std::size_t>& n_grid, std::size_t big_n,
                        VarCovRule rule);

} // namespace fewlabel
