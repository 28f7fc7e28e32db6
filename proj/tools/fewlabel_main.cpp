// fewlabel: prediction-powered mean estimation for the few-label regime.
//
// Subcommands: estimate, benchmark, predict-variance, sweep. Every stochastic
// subcommand requires an explicit --seed; outputs are byte-identical for a
// fixed configuration and seed, independent of --threads.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fewlabel/analytics.hpp"
#include "fewlabel/dataset_io.hpp"
#include "fewlabel/errors.hpp"
#include "fewlabel/estimators.hpp"
#include "fewlabel/sample_stats.hpp"
#include "fewlabel/simulate.hpp"

namespace {

using namespace fewlabel;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUserError = 2;

struct CommonOutput {
    std::string output_path;
    std::string format_name = "csv";

    ReportFormat format() const { return report_format_from_name(format_name); }

    void emit(const std::string& rendered, const std::filesystem::path& path_hint) const {
        if (output_path.empty()) {
            std::cout << rendered;
        } else {
            std::ofstream out(output_path, std::ios::binary);
            if (!out) {
                throw IoError("cannot open '" + output_path + "' for writing");
            }
            out << rendered;
            if (!out) {
                throw IoError("failed writing '" + output_path + "'");
            }
            std::cerr << "wrote " << path_hint.string() << "\n";
        }
    }
};

std::vector<double> parse_double_list(const std::vector<std::string>& raw,
                                      const std::string& flag) {
    std::vector<double> values;
    for (const auto& item : raw) {
        std::size_t start = 0;
        while (start <= item.size()) {
            const std::size_t comma = item.find(',', start);
            const std::string cell =
                item.substr(start, comma == std::string::npos ? std::string::npos
                                                              : comma - start);
            if (!cell.empty()) {
                try {
                    values.push_back(std::stod(cell));
                } catch (const std::exception&) {
                    throw FormatError(flag + ": cannot parse '" + cell + "'");
                }
            }
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
    }
    return values;
}

std::vector<std::size_t> parse_count_list(const std::vector<std::string>& raw,
                                          const std::string& flag) {
    std::vector<std::size_t> counts;
    for (double v : parse_double_list(raw, flag)) {
        if (v < 1.0 || v != std::floor(v)) {
            throw FormatError(flag + ": values must be positive integers");
        }
        counts.push_back(static_cast<std::size_t>(v));
    }
    return counts;
}

CvPolicy policy_from_grid(const std::vector<double>& grid, CvPolicy fallback) {
    if (grid.empty()) {
        return fallback;
    }
    CvPolicy policy = fallback;
    policy.grid = grid;
    return policy;
}

struct EstimateArgs {
    std::string input;
    std::vector<std::string> methods{"classical", "ppi++", "ridge-ppi", "sigmoid-ppi"};
    std::optional<std::uint64_t> seed;
    bool cross_fit = false;
    bool adjusted = false;
    std::vector<std::string> ridge_grid;
    std::vector<std::string> sigmoid_grid;
    CommonOutput out;
};

int run_estimate(const EstimateArgs& args) {
    const DatasetPools pools = load_dataset(args.input);
    std::cerr << "loaded " << pools.total_rows << " rows: " << pools.labelled.size()
              << " labelled, " << pools.unlabelled.size() << " unlabelled\n";
    if (pools.labelled.size() < 1) {
        throw InsufficientDataError("dataset has no labelled rows");
    }

    const CvPolicy ridge_policy = policy_from_grid(
        parse_double_list(args.ridge_grid, "--ridge-grid"), CvPolicy::ridge_default());
    const CvPolicy sigmoid_policy = policy_from_grid(
        parse_double_list(args.sigmoid_grid, "--sigmoid-reg-grid"),
        CvPolicy::sigmoid_default());

    std::vector<Estimate> estimates;
    for (const auto& name : args.methods) {
        const auto method = method_from_name(name);
        if (!method || *method == Method::ppi_fixed) {
            throw FormatError("--method: unknown or unsupported method '" + name + "'");
        }
        if (*method != Method::classical && pools.unlabelled.size() < 1) {
            throw InsufficientDataError("method '" + name + "' needs unlabelled rows");
        }
        const bool stochastic = *method == Method::ridge_ppi ||
                                *method == Method::sigmoid_ppi ||
                                *method == Method::sigmoid_ppi_adjusted ||
                                (*method == Method::ppi_plus_plus && args.cross_fit);
        if (stochastic && !args.seed) {
            throw FormatError("--seed is required for method '" + name + "'");
        }
        const std::uint64_t seed = args.seed.value_or(0);
        Estimate estimate;
        switch (*method) {
        case Method::classical:
            estimate = classical_mean(pools.labelled);
            break;
        case Method::ppi_plus_plus:
            estimate = ppi_plus_plus(pools.labelled, pools.unlabelled, args.cross_fit, seed);
            break;
        case Method::ridge_ppi:
            estimate = ridge_ppi(pools.labelled, pools.unlabelled, ridge_policy, seed);
            break;
        case Method::sigmoid_ppi:
            estimate = sigmoid_ppi(pools.labelled, pools.unlabelled, sigmoid_policy,
                                   args.adjusted ? AdjustMode::on : AdjustMode::automatic,
                                   seed);
            break;
        case Method::sigmoid_ppi_adjusted:
            estimate =
                sigmoid_ppi(pools.labelled, pools.unlabelled, sigmoid_policy, AdjustMode::on,
                            seed);
            break;
        default:
            break;
        }
        if (estimate.fallback_classical) {
            std::cerr << "warning: " << name << " fell back to the classical mean\n";
        }
        if (estimate.fit && estimate.fit->degenerate_variance) {
            std::cerr << "warning: " << name << " saw zero pseudolabel variance (lambda = 0)\n";
        }
        estimates.push_back(std::move(estimate));
    }

    args.out.emit(render_estimates(estimates, args.out.format()), args.out.output_path);
    return kExitOk;
}

struct BenchmarkArgs {
    std::string input;
    std::vector<double> spec_cells;
    std::vector<std::string> methods{"classical", "ppi++", "ridge-ppi", "sigmoid-ppi"};
    std::vector<std::string> n_grid;
    std::size_t big_n = 1000;
    std::size_t trials = 350;
    std::uint64_t seed = 0;
    bool cross_fit = false;
    std::vector<std::string> ridge_grid;
    std::vector<std::string> sigmoid_grid;
    unsigned threads = 0;
    CommonOutput out;
};

int run_benchmark_cmd(const BenchmarkArgs& args) {
    BenchmarkSource source;
    if (!args.spec_cells.empty()) {
        if (args.spec_cells.size() != 4) {
            throw FormatError("--spec needs exactly 4 probabilities p11,p10,p01,p00");
        }
        JointBernoulliSpec spec{args.spec_cells[0], args.spec_cells[1], args.spec_cells[2],
                                args.spec_cells[3]};
        spec.validate();
        source = spec;
    } else if (!args.input.empty()) {
        const DatasetPools pools = load_dataset(args.input);
        std::cerr << "loaded " << pools.total_rows << " rows, pool = "
                  << pools.labelled.size() << " labelled\n";
        source = pools.labelled;
    } else {
        throw FormatError("benchmark needs --input or --spec");
    }

    const CvPolicy ridge_policy = policy_from_grid(
        parse_double_list(args.ridge_grid, "--ridge-grid"), CvPolicy::ridge_default());
    const CvPolicy sigmoid_policy = policy_from_grid(
        parse_double_list(args.sigmoid_grid, "--sigmoid-reg-grid"),
        CvPolicy::sigmoid_default());

    BenchmarkOptions options;
    options.n_grid = parse_count_list(args.n_grid, "--n-grid");
    options.big_n = args.big_n;
    options.trials = args.trials;
    options.seed = args.seed;
    options.threads = args.threads;
    for (const auto& name : args.methods) {
        const auto method = method_from_name(name);
        if (!method || *method == Method::ppi_fixed) {
            throw FormatError("--method: unknown or unsupported method '" + name + "'");
        }
        EstimatorConfig config;
        config.method = *method;
        config.cross_fit = args.cross_fit;
        config.ridge_policy = ridge_policy;
        config.sigmoid_policy = sigmoid_policy;
        options.methods.push_back(std::move(config));
    }

    const BenchmarkReport report = run_benchmark(source, options);
    args.out.emit(render_benchmark_report(report, args.out.format()), args.out.output_path);
    return kExitOk;
}

struct PredictVarianceArgs {
    std::string input;
    std::optional<double> mean_f, var_f, var_h, cov_fh, var_cov_hat;
    std::optional<std::size_t> n;
    std::size_t big_n = 1000;
    std::vector<std::string> ridge_grid;
    CommonOutput out;
};

int run_predict_variance(const PredictVarianceArgs& args) {
    DistributionStats stats;
    std::size_t n = 0;
    if (!args.input.empty()) {
        const DatasetPools pools = load_dataset(args.input);
        if (pools.labelled.size() < 2) {
            throw InsufficientDataError("predict-variance needs >= 2 labelled rows");
        }
        stats = compute_stats(pools.labelled, args.var_cov_hat);
        n = args.n.value_or(pools.labelled.size());
    } else {
        if (!args.mean_f || !args.var_f || !args.var_h || !args.cov_fh || !args.n) {
            throw FormatError(
                "predict-variance needs --input or all of --mean-f --var-f --var-h "
                "--cov-fh --n");
        }
        stats.mean_f = *args.mean_f;
        stats.var_f = *args.var_f;
        stats.var_h = *args.var_h;
        stats.cov_fh = *args.cov_fh;
        stats.corr_fh = (stats.var_f > 0.0 && stats.var_h > 0.0)
                            ? stats.cov_fh / std::sqrt(stats.var_f * stats.var_h)
                            : 0.0;
        stats.var_cov_hat = args.var_cov_hat.value_or(0.0);
        n = *args.n;
    }
    if (n < 1) {
        throw FormatError("--n must be >= 1");
    }

    std::vector<double> alphas = parse_double_list(args.ridge_grid, "--ridge-grid");
    if (alphas.empty()) {
        alphas = CvPolicy::ridge_default().grid;
    }

    const double ppi_excess = ppi_excess_variance(stats, n, args.big_n);
    const auto alpha_star = optimal_ridge_alpha(stats, n, args.big_n);

    if (args.out.format() == ReportFormat::delimited) {
        std::string text = "quantity,ridge_alpha,value\n";
        text += "ppi_excess_variance,," + format_double(ppi_excess) + "\n";
        text += "optimal_ridge_alpha,,";
        if (alpha_star) {
            text += format_double(*alpha_star);
        }
        text += "\n";
        for (double alpha : alphas) {
            text += "ridge_excess_variance," + format_double(alpha) + "," +
                    format_double(ridge_excess_variance(stats, alpha, n, args.big_n)) + "\n";
            text += "ridge_minus_ppi," + format_double(alpha) + "," +
                    format_double(ridge_minus_ppi(stats, alpha, n, args.big_n)) + "\n";
        }
        args.out.emit(text, args.out.output_path);
    } else {
        nlohmann::json doc;
        doc["n"] = n;
        doc["big_n"] = args.big_n;
        doc["stats"] = {{"mean_f", stats.mean_f},         {"var_f", stats.var_f},
                        {"var_h", stats.var_h},           {"cov_fh", stats.cov_fh},
                        {"corr_fh", stats.corr_fh},       {"var_cov_hat", stats.var_cov_hat}};
        doc["ppi_excess_variance"] = ppi_excess;
        if (alpha_star) {
            doc["optimal_ridge_alpha"] = *alpha_star;
        } else {
            doc["optimal_ridge_alpha"] = nullptr;
        }
        nlohmann::json per_alpha = nlohmann::json::array();
        for (double alpha : alphas) {
            per_alpha.push_back(
                {{"ridge_alpha", alpha},
                 {"ridge_excess_variance", ridge_excess_variance(stats, alpha, n, args.big_n)},
                 {"ridge_minus_ppi", ridge_minus_ppi(stats, alpha, n, args.big_n)}});
        }
        doc["ridge"] = per_alpha;
        args.out.emit(doc.dump(2) + "\n", args.out.output_path);
    }
    return kExitOk;
}

struct SweepArgs {
    std::string input;
    std::optional<double> corr, var_h, mean_f;
    std::vector<std::string> var_f_grid;
    std::vector<std::string> n_grid;
    std::size_t big_n = 1000;
    double cov_noise_c = 0.3;
    CommonOutput out;
};

int run_sweep(const SweepArgs& args) {
    DistributionStats base;
    if (!args.input.empty()) {
        const DatasetPools pools = load_dataset(args.input);
        if (pools.labelled.size() < 2) {
            throw InsufficientDataError("sweep needs >= 2 labelled rows");
        }
        base = compute_stats(pools.labelled);
    } else {
        if (!args.corr || !args.var_h || !args.mean_f) {
            throw FormatError("sweep needs --input or all of --corr --var-h --mean-f");
        }
        base.corr_fh = *args.corr;
        base.var_h = *args.var_h;
        base.mean_f = *args.mean_f;
    }

    const auto var_f_grid = parse_double_list(args.var_f_grid, "--var-f-grid");
    const auto n_grid = parse_count_list(args.n_grid, "--n-grid");
    const SweepGrid grid =
        heatmap_sweep(base, var_f_grid, n_grid, args.big_n, VarCovRule{args.cov_noise_c});
    args.out.emit(render_sweep(grid, args.out.format()), args.out.output_path);
    return kExitOk;
}

void add_output_flags(CLI::App* cmd, CommonOutput& out) {
    cmd->add_option("--output", out.output_path, "Write the report here instead of stdout");
    cmd->add_option("--format", out.format_name, "Output format: csv (default) or json");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prediction-powered mean estimation in the few-label regime"};
    app.require_subcommand(1);

    EstimateArgs estimate_args;
    auto* estimate_cmd =
        app.add_subcommand("estimate", "Point estimates for a dataset file");
    estimate_cmd->add_option("--input", estimate_args.input, "Dataset file (csv)")
        ->required();
    estimate_cmd->add_option("--method", estimate_args.methods,
                             "Methods to run (repeatable): classical, ppi++, ridge-ppi, "
                             "sigmoid-ppi, sigmoid-ppi-adjusted");
    estimate_cmd->add_option("--seed", estimate_args.seed,
                             "RNG seed (required for CV-based methods)");
    estimate_cmd->add_flag("--cross-fit", estimate_args.cross_fit,
                           "Fit lambda on an independent half of the labelled data");
    estimate_cmd->add_flag("--adjusted", estimate_args.adjusted,
                           "Force the (1 + n/N)^-1 scaling of the sigmoid transform");
    estimate_cmd->add_option("--ridge-grid", estimate_args.ridge_grid,
                             "Ridge CV grid (comma separated)");
    estimate_cmd->add_option("--sigmoid-reg-grid", estimate_args.sigmoid_grid,
                             "Sigmoid L2 CV grid (comma separated)");
    add_output_flags(estimate_cmd, estimate_args.out);

    BenchmarkArgs benchmark_args;
    auto* benchmark_cmd =
        app.add_subcommand("benchmark", "Resampling benchmark over a pool or a spec");
    benchmark_cmd->add_option("--input", benchmark_args.input, "Pool dataset file (csv)");
    benchmark_cmd->add_option("--spec", benchmark_args.spec_cells,
                              "Joint Bernoulli cells p11,p10,p01,p00")
        ->delimiter(',');
    benchmark_cmd->add_option("--method", benchmark_args.methods, "Methods to benchmark");
    benchmark_cmd->add_option("--n-grid", benchmark_args.n_grid, "Labelled sizes to sweep")
        ->required();
    benchmark_cmd->add_option("--big-n", benchmark_args.big_n, "Unlabelled size N");
    benchmark_cmd->add_option("--trials", benchmark_args.trials, "Trials per (method, n)");
    benchmark_cmd->add_option("--seed", benchmark_args.seed, "Master RNG seed")->required();
    benchmark_cmd->add_flag("--cross-fit", benchmark_args.cross_fit,
                            "Cross-fit lambda inside ppi++");
    benchmark_cmd->add_option("--ridge-grid", benchmark_args.ridge_grid, "Ridge CV grid");
    benchmark_cmd->add_option("--sigmoid-reg-grid", benchmark_args.sigmoid_grid,
                              "Sigmoid L2 CV grid");
    benchmark_cmd->add_option("--threads", benchmark_args.threads,
                              "Worker threads (default: all cores; results identical)");
    add_output_flags(benchmark_cmd, benchmark_args.out);

    PredictVarianceArgs pv_args;
    auto* pv_cmd = app.add_subcommand(
        "predict-variance", "Analytic excess-variance predictions for given moments");
    pv_cmd->add_option("--input", pv_args.input, "Labelled dataset file (csv)");
    pv_cmd->add_option("--mean-f", pv_args.mean_f, "E[f]");
    pv_cmd->add_option("--var-f", pv_args.var_f, "Var[f]");
    pv_cmd->add_option("--var-h", pv_args.var_h, "Var[h]");
    pv_cmd->add_option("--cov-fh", pv_args.cov_fh, "Cov[f, h]");
    pv_cmd->add_option("--var-cov-hat", pv_args.var_cov_hat,
                       "Var of the sample covariance (default: plug-in / 0)");
    pv_cmd->add_option("--n", pv_args.n, "Labelled size n");
    pv_cmd->add_option("--big-n", pv_args.big_n, "Unlabelled size N");
    pv_cmd->add_option("--ridge-grid", pv_args.ridge_grid, "Alphas to tabulate");
    add_output_flags(pv_cmd, pv_args.out);

    SweepArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand(
        "sweep", "Normalized PPI++ variance over a (Var[f], n) grid");
    sweep_cmd->add_option("--input", sweep_args.input, "Labelled dataset file (csv)");
    sweep_cmd->add_option("--corr", sweep_args.corr, "Corr(h, f) held fixed");
    sweep_cmd->add_option("--var-h", sweep_args.var_h, "Var[h] held fixed");
    sweep_cmd->add_option("--mean-f", sweep_args.mean_f, "E[f] held fixed");
    sweep_cmd->add_option("--var-f-grid", sweep_args.var_f_grid, "Var[f] grid values")
        ->required();
    sweep_cmd->add_option("--n-grid", sweep_args.n_grid, "n grid values")->required();
    sweep_cmd->add_option("--big-n", sweep_args.big_n, "Unlabelled size N");
    sweep_cmd->add_option("--var-cov-c", sweep_args.cov_noise_c,
                          "Constant c in var_cov_hat = c / n^2");
    add_output_flags(sweep_cmd, sweep_args.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUserError;
    }

    try {
        if (estimate_cmd->parsed()) {
            return run_estimate(estimate_args);
        }
        if (benchmark_cmd->parsed()) {
            return run_benchmark_cmd(benchmark_args);
        }
        if (pv_cmd->parsed()) {
            return run_predict_variance(pv_args);
        }
        if (sweep_cmd->parsed()) {
            return run_sweep(sweep_args);
        }
        return kExitInternal;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUserError;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
