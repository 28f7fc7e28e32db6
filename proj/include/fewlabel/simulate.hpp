#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fewlabel/estimators.hpp"
#include "fewlabel/sample_stats.hpp"
#include "fewlabel/samples.hpp"

namespace fewlabel {

/// Joint distribution of a (h, f) pair of Bernoulli variables, given by the
/// four cell probabilities. The synthetic world for benchmark runs and the
/// Monte Carlo oracles.
struct JointBernoulliSpec {
    double p11 = 0.0; // P(h=1, f=1)
    double p10 = 0.0; // P(h=1, f=0)
    double p01 = 0.0; // P(h=0, f=1)
    double p00 = 0.0; // P(h=0, f=0)

    /// Throws SpecError unless all cells are >= 0 and sum to 1 within 1e-12.
    void validate() const;

    double mu_h() const { return p11 + p10; }
    double mu_f() const { return p11 + p01; }
    double var_h() const { return mu_h() * (1.0 - mu_h()); }
    double var_f() const { return mu_f() * (1.0 - mu_f()); }
    double cov_fh() const { return p11 - mu_h() * mu_f(); }
    double corr_fh() const;

    /// E[(f - mu_f)^2 (h - mu_h)^2], the mixed central moment behind the
    /// exact variance of the sample covariance.
    double central_moment_ffhh() const;

    /// Exact Var of the unbiased sample covariance at sample size n:
    ///   (m22 - cov^2)/n + (cov^2 + var_f var_h)/(n (n-1)).
    double var_sample_cov(std::size_t n) const;

    /// Population DistributionStats with var_cov_hat = var_sample_cov(n).
    DistributionStats stats(std::size_t n) const;
};

/// n i.i.d. (f, h) pairs; a pure function of (spec, count, rng_seed).
LabelledSample sample_joint(const JointBernoulliSpec& spec, std::size_t count,
                            std::uint64_t rng_seed);

/// N i.i.d. pseudolabel draws (fresh pairs with the gold label discarded).
UnlabelledSample sample_joint_unlabelled(const JointBernoulliSpec& spec, std::size_t count,
                                         std::uint64_t rng_seed);

/// A fully specified estimator for harness runs. The sigmoid methods are
/// named explicitly: Method::sigmoid_ppi runs unadjusted and
/// Method::sigmoid_ppi_adjusted forces the (1 + n/N)^-1 scaling, so reports
/// compare the two variants directly.
struct EstimatorConfig {
    Method method = Method::classical;
    double fixed_lambda = 0.0; // ppi_fixed only
    bool cross_fit = false;    // ppi_plus_plus only
    CvPolicy ridge_policy = CvPolicy::ridge_default();
    CvPolicy sigmoid_policy = CvPolicy::sigmoid_default();
};

struct BenchmarkRow {
    std::string method;
    std::size_t n = 0;
    std::size_t trials = 0;
    double mae = 0.0;
    double std_dev = 0.0;
    double normalized_mae = 0.0;
    std::uint64_t seed = 0;

    bool operator==(const BenchmarkRow&) const = default;
};

struct BenchmarkReport {
    std::vector<BenchmarkRow> rows;

    bool operator==(const BenchmarkReport&) const = default;
};

/// Either a generative spec or a finite pool of labelled rows to resample.
using BenchmarkSource = std::variant<JointBernoulliSpec, LabelledSample>;

/// The target value |estimate - truth| is scored against: the exact mu_h in
/// spec mode, the full-pool mean in pool mode. Never depends on any seed.
double benchmark_truth(const BenchmarkSource& source);

struct BenchmarkOptions {
    std::vector<EstimatorConfig> methods;
    std::vector<std::size_t> n_grid;
    std::size_t big_n = 1000;
    std::size_t trials = 350;
    std::uint64_t seed = 0;
    unsigned threads = 0; // 0 = all hardware threads
};

/// The resampling benchmark: for every (method, n) draw D_n and D_N per
/// trial (pool mode: uniform without replacement, disjoint; spec mode: fresh
/// i.i.d.), run the estimator, and aggregate MAE, the standard deviation of
/// the estimates, and MAE normalized by the classical MAE at the same n.
/// All methods score the same draws within a trial. Reports are bit-identical
/// for a fixed (source, options, seed) regardless of thread count.
BenchmarkReport run_benchmark(const BenchmarkSource& source, const BenchmarkOptions& options);

/// Empirical moments of one estimator under a known spec, with the fitted
/// lambda moments recorded when the method produces a linear fit.
struct MonteCarloMoments {
    double mean_estimate = 0.0;
    double bias = 0.0;     // mean_estimate - exact mu_h
    double variance = 0.0; // unbiased variance of the estimates
    std::optional<double> mean_lambda;
    std::optional<double> var_lambda;
};

/// Requires trials >= 1000.
MonteCarloMoments monte_carlo_moments(const EstimatorConfig& config,
                                      const JointBernoulliSpec& spec, std::size_t n,
                                      std::size_t big_n, std::size_t trials,
                                      std::uint64_t rng_seed);

namespace detail {

/// Pool-mode draw: n + N distinct indices of [0, pool_size), the first n for
/// D_n and the next N for D_N. Exposed for the disjointness tests.
std::vector<std::uint32_t> draw_pool_indices(std::size_t pool_size, std::size_t n,
                                             std::size_t big_n, std::uint64_t stream_key);

} // namespace detail

} // namespace fewlabel
