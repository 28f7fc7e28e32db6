#include "fewlabel/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

#include "fewlabel/errors.hpp"
#include "fewlabel/rng.hpp"

namespace fewlabel {
namespace {

constexpr std::uint64_t kDataTag = 0x64617461ull;     // "data"
constexpr std::uint64_t kMethodTag = 0x6d657468ull;   // "meth"
constexpr std::uint64_t kPoolTag = 0x706f6f6cull;     // "pool"

struct PairDraw {
    double f;
    double h;
};

PairDraw draw_pair(const JointBernoulliSpec& spec, Philox& rng) {
    const double u = rng.uniform();
    if (u < spec.p11) {
        return {1.0, 1.0};
    }
    if (u < spec.p11 + spec.p10) {
        return {0.0, 1.0};
    }
    if (u < spec.p11 + spec.p10 + spec.p01) {
        return {1.0, 0.0};
    }
    return {0.0, 0.0};
}

/// One trial's datasets, drawn from the stream owned by (seed, n-index,
/// trial): spec mode draws fresh i.i.d. pairs, pool mode samples disjoint
/// index sets without replacement.
struct TrialData {
    LabelledSample labelled;
    UnlabelledSample unlabelled;
};

TrialData draw_trial(const BenchmarkSource& source, std::size_t n, std::size_t big_n,
                     std::uint64_t stream_key) {
    TrialData data;
    data.labelled.f.reserve(n);
    data.labelled.h.reserve(n);
    data.unlabelled.f.reserve(big_n);
    if (const auto* spec = std::get_if<JointBernoulliSpec>(&source)) {
        Philox rng(stream_key);
        for (std::size_t i = 0; i < n; ++i) {
            const PairDraw p = draw_pair(*spec, rng);
            data.labelled.f.push_back(p.f);
            data.labelled.h.push_back(p.h);
        }
        for (std::size_t i = 0; i < big_n; ++i) {
            data.unlabelled.f.push_back(draw_pair(*spec, rng).f);
        }
    } else {
        const auto& pool = std::get<LabelledSample>(source);
        const auto indices = detail::draw_pool_indices(pool.size(), n, big_n, stream_key);
        for (std::size_t i = 0; i < n; ++i) {
            data.labelled.f.push_back(pool.f[indices[i]]);
            data.labelled.h.push_back(pool.h[indices[i]]);
        }
        for (std::size_t i = 0; i < big_n; ++i) {
            data.unlabelled.f.push_back(pool.f[indices[n + i]]);
        }
    }
    return data;
}

Estimate run_estimator(const EstimatorConfig& config, const LabelledSample& labelled,
                       const UnlabelledSample& unlabelled, std::uint64_t rng_seed) {
    switch (config.method) {
    case Method::classical:
        return classical_mean(labelled);
    case Method::ppi_fixed:
        return ppi_fixed(labelled, unlabelled, config.fixed_lambda);
    case Method::ppi_plus_plus:
        return ppi_plus_plus(labelled, unlabelled, config.cross_fit, rng_seed);
    case Method::ridge_ppi:
        return ridge_ppi(labelled, unlabelled, config.ridge_policy, rng_seed);
    case Method::sigmoid_ppi:
        return sigmoid_ppi(labelled, unlabelled, config.sigmoid_policy, AdjustMode::off,
                           rng_seed);
    case Method::sigmoid_ppi_adjusted:
        return sigmoid_ppi(labelled, unlabelled, config.sigmoid_policy, AdjustMode::on,
                           rng_seed);
    }
    throw Error("unknown estimator method");
}

/// Runs fn(trial) for every trial index, chunked over the requested number
/// of threads. Output slots are preallocated by the caller, so the result is
/// identical for any thread count.
template <class Fn>
void for_each_trial(std::size_t trials, unsigned threads, Fn&& fn) {
    unsigned worker_count = threads == 0 ? std::thread::hardware_concurrency() : threads;
    if (worker_count == 0) {
        worker_count = 1;
    }
    worker_count = static_cast<unsigned>(
        std::min<std::size_t>(worker_count, std::max<std::size_t>(trials, 1)));
    if (worker_count <= 1) {
        for (std::size_t t = 0; t < trials; ++t) {
            fn(t);
        }
        return;
    }
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> failures(worker_count);
    const std::size_t chunk = (trials + worker_count - 1) / worker_count;
    for (unsigned w = 0; w < worker_count; ++w) {
        const std::size_t begin = static_cast<std::size_t>(w) * chunk;
        const std::size_t end = std::min(trials, begin + chunk);
        workers.emplace_back([&, w, begin, end] {
            try {
                for (std::size_t t = begin; t < end; ++t) {
                    fn(t);
                }
            } catch (...) {
                failures[w] = std::current_exception();
            }
        });
    }
    for (auto& worker : workers) {
        worker.join();
    }
    for (const auto& failure : failures) {
        if (failure) {
            std::rethrow_exception(failure);
        }
    }
}

double mean_abs_error(const std::vector<double>& estimates, double truth) {
    double sum = 0.0;
    for (double e : estimates) {
        sum += std::abs(e - truth);
    }
    return sum / static_cast<double>(estimates.size());
}

double std_dev(const std::vector<double>& estimates) {
    if (estimates.size() < 2) {
        return 0.0;
    }
    double sum = 0.0;
    for (double e : estimates) {
        sum += e;
    }
    const double center = sum / static_cast<double>(estimates.size());
    double ss = 0.0;
    for (double e : estimates) {
        const double d = e - center;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(estimates.size() - 1));
}

} // namespace

void JointBernoulliSpec::validate() const {
    const double cells[] = {p11, p10, p01, p00};
    double sum = 0.0;
    for (double c : cells) {
        if (!std::isfinite(c) || c < 0.0) {
            throw SpecError("joint Bernoulli cells must be finite and >= 0");
        }
        sum += c;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw SpecError("joint Bernoulli cells must sum to 1, got " + std::to_string(sum));
    }
}

double JointBernoulliSpec::corr_fh() const {
    const double vf = var_f();
    const double vh = var_h();
    if (vf <= 0.0 || vh <= 0.0) {
        return 0.0;
    }
    return cov_fh() / std::sqrt(vf * vh);
}

double JointBernoulliSpec::central_moment_ffhh() const {
    const double mf = mu_f();
    const double mh = mu_h();
    double m22 = 0.0;
    m22 += p11 * (1.0 - mf) * (1.0 - mf) * (1.0 - mh) * (1.0 - mh);
    m22 += p10 * mf * mf * (1.0 - mh) * (1.0 - mh);
    m22 += p01 * (1.0 - mf) * (1.0 - mf) * mh * mh;
    m22 += p00 * mf * mf * mh * mh;
    return m22;
}

double JointBernoulliSpec::var_sample_cov(std::size_t n) const {
    if (n < 2) {
        throw InsufficientDataError("var_sample_cov needs n >= 2");
    }
    const double nd = static_cast<double>(n);
    const double cov = cov_fh();
    return (central_moment_ffhh() - cov * cov) / nd +
           (cov * cov + var_f() * var_h()) / (nd * (nd - 1.0));
}

DistributionStats JointBernoulliSpec::stats(std::size_t n) const {
    DistributionStats out;
    out.mean_f = mu_f();
    out.var_f = var_f();
    out.var_h = var_h();
    out.cov_fh = cov_fh();
    out.corr_fh = corr_fh();
    out.var_cov_hat = var_sample_cov(n);
    return out;
}

LabelledSample sample_joint(const JointBernoulliSpec& spec, std::size_t count,
                            std::uint64_t rng_seed) {
    spec.validate();
    if (count < 1) {
        throw InsufficientDataError("sample_joint needs count >= 1");
    }
    Philox rng(derive_stream(rng_seed, {kDataTag}));
    LabelledSample sample;
    sample.f.reserve(count);
    sample.h.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const PairDraw p = draw_pair(spec, rng);
        sample.f.push_back(p.f);
        sample.h.push_back(p.h);
    }
    return sample;
}

UnlabelledSample sample_joint_unlabelled(const JointBernoulliSpec& spec, std::size_t count,
                                         std::uint64_t rng_seed) {
    const LabelledSample pairs = sample_joint(spec, count, rng_seed);
    return UnlabelledSample{pairs.f};
}

double benchmark_truth(const BenchmarkSource& source) {
    if (const auto* spec = std::get_if<JointBernoulliSpec>(&source)) {
        spec->validate();
        return spec->mu_h();
    }
    const auto& pool = std::get<LabelledSample>(source);
    if (pool.size() < 1) {
        throw InsufficientDataError("pool mode needs a nonempty labelled pool");
    }
    return mean(pool.h);
}

namespace detail {

std::vector<std::uint32_t> draw_pool_indices(std::size_t pool_size, std::size_t n,
                                             std::size_t big_n, std::uint64_t stream_key) {
    std::vector<std::uint32_t> indices(pool_size);
    std::iota(indices.begin(), indices.end(), 0u);
    Philox rng(derive_stream(stream_key, {kPoolTag}));
    rng.partial_shuffle(indices, n + big_n);
    indices.resize(n + big_n);
    return indices;
}

} // namespace detail

BenchmarkReport run_benchmark(const BenchmarkSource& source, const BenchmarkOptions& options) {
    if (options.methods.empty()) {
        throw SpecError("benchmark needs at least one method");
    }
    if (options.n_grid.empty()) {
        throw SpecError("benchmark needs a nonempty n grid");
    }
    if (options.trials < 1) {
        throw SpecError("benchmark needs trials >= 1");
    }
    if (options.big_n < 1) {
        throw SpecError("benchmark needs N >= 1");
    }
    const double truth = benchmark_truth(source);
    if (const auto* pool = std::get_if<LabelledSample>(&source)) {
        validate(*pool);
        const std::size_t max_n =
            *std::max_element(options.n_grid.begin(), options.n_grid.end());
        if (pool->size() < max_n + options.big_n) {
            throw InsufficientDataError(
                "pool of " + std::to_string(pool->size()) + " rows cannot supply disjoint " +
                std::to_string(max_n) + " + " + std::to_string(options.big_n) + " draws");
        }
    }

    // The classical mean anchors the normalization; run it even if the
    // caller did not ask for it.
    std::vector<EstimatorConfig> configs = options.methods;
    std::size_t classical_index = configs.size();
    for (std::size_t j = 0; j < configs.size(); ++j) {
        if (configs[j].method == Method::classical) {
            classical_index = j;
            break;
        }
    }
    if (classical_index == configs.size()) {
        configs.push_back(EstimatorConfig{});
    }

    BenchmarkReport report;
    for (std::size_t ni = 0; ni < options.n_grid.size(); ++ni) {
        const std::size_t n = options.n_grid[ni];
        if (n < 1) {
            throw SpecError("benchmark n values must be >= 1");
        }
        // estimates[j][t]: preallocated slots keep aggregation independent of
        // execution order.
        std::vector<std::vector<double>> estimates(
            configs.size(), std::vector<double>(options.trials, 0.0));
        for_each_trial(options.trials, options.threads, [&](std::size_t t) {
            const TrialData data = draw_trial(
                source, n, options.big_n, derive_stream(options.seed, {kDataTag, ni, t}));
            for (std::size_t j = 0; j < configs.size(); ++j) {
                const std::uint64_t method_seed =
                    derive_stream(options.seed, {kMethodTag, ni, t, j});
                estimates[j][t] =
                    run_estimator(configs[j], data.labelled, data.unlabelled, method_seed)
                        .value;
            }
        });

        const double classical_mae = mean_abs_error(estimates[classical_index], truth);
        for (std::size_t j = 0; j < options.methods.size(); ++j) {
            BenchmarkRow row;
            row.method = std::string(method_name(options.methods[j].method));
            row.n = n;
            row.trials = options.trials;
            row.mae = mean_abs_error(estimates[j], truth);
            row.std_dev = std_dev(estimates[j]);
            if (classical_mae > 0.0) {
                row.normalized_mae = row.mae / classical_mae;
            } else {
                row.normalized_mae =
                    row.mae == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
            }
            row.seed = options.seed;
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

MonteCarloMoments monte_carlo_moments(const EstimatorConfig& config,
                                      const JointBernoulliSpec& spec, std::size_t n,
                                      std::size_t big_n, std::size_t trials,
                                      std::uint64_t rng_seed) {
    spec.validate();
    if (trials < 1000) {
        throw InsufficientDataError("monte_carlo_moments needs trials >= 1000");
    }
    const BenchmarkSource source = spec;
    std::vector<double> estimates(trials, 0.0);
    std::vector<double> lambdas(trials, 0.0);
    std::vector<char> has_lambda(trials, 0);
    for_each_trial(trials, 0, [&](std::size_t t) {
        const TrialData data =
            draw_trial(source, n, big_n, derive_stream(rng_seed, {kDataTag, 0, t}));
        const Estimate estimate =
            run_estimator(config, data.labelled, data.unlabelled,
                          derive_stream(rng_seed, {kMethodTag, 0, t, 0}));
        estimates[t] = estimate.value;
        if (estimate.fit && estimate.fit->kind == FitKind::linear) {
            lambdas[t] = estimate.fit->lambda;
            has_lambda[t] = 1;
        }
    });

    MonteCarloMoments out;
    double sum = 0.0;
    for (double e : estimates) {
        sum += e;
    }
    out.mean_estimate = sum / static_cast<double>(trials);
    out.bias = out.mean_estimate - spec.mu_h();
    out.variance = std_dev(estimates);
    out.variance *= out.variance;

    std::vector<double> recorded;
    recorded.reserve(trials);
    for (std::size_t t = 0; t < trials; ++t) {
        if (has_lambda[t]) {
            recorded.push_back(lambdas[t]);
        }
    }
    if (recorded.size() == trials) {
        out.mean_lambda = mean(recorded);
        const double sd = std_dev(recorded);
        out.var_lambda = sd * sd;
    }
    return out;
}

} // namespace fewlabel
