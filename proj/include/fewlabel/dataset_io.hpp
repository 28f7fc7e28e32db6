#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fewlabel/analytics.hpp"
#include "fewlabel/estimators.hpp"
#include "fewlabel/samples.hpp"
#include "fewlabel/simulate.hpp"

namespace fewlabel {

/// Output encodings: comma-delimited text with a header row, or JSON.
enum class ReportFormat { delimited, structured };

ReportFormat report_format_from_name(const std::string& name);

/// A dataset file split into its labelled and unlabelled pools.
///
/// The accepted format is comma-separated text with a header naming an `f`
/// column (required, finite reals), an optional `h` column (finite reals,
/// empty cell = unlabelled row) and an optional `id` column. Unknown columns
/// are ignored. No quoting, no locale handling, `.` decimal point.
struct DatasetPools {
    LabelledSample labelled;
    UnlabelledSample unlabelled;
    std::size_t total_rows = 0;
};

/// Throws FormatError (with row/column context) on malformed input, IoError
/// if the file cannot be read. Never silently drops a row.
DatasetPools load_dataset(const std::filesystem::path& path);

/// Doubles rendered with 17 significant digits, enough to round-trip exactly.
std::string format_double(double value);

// Reports round-trip exactly: write followed by read yields an equal value.
// Delimited benchmark reports use the fixed column order
//   method,n,trials,mae,std_dev,normalized_mae,seed.

void write_benchmark_report(const BenchmarkReport& report, const std::filesystem::path& path,
                            ReportFormat format);
BenchmarkReport read_benchmark_report(const std::filesystem::path& path, ReportFormat format);

void write_estimates(const std::vector<Estimate>& estimates, const std::filesystem::path& path,
                     ReportFormat format);
std::vector<Estimate> read_estimates(const std::filesystem::path& path, ReportFormat format);

/// Sweep grids serialize row-major with var_f values as row labels and the
/// n values as column headers; absent cells are empty (delimited) or null
/// (structured).
void write_sweep(const SweepGrid& grid, const std::filesystem::path& path, ReportFormat format);
SweepGrid read_sweep(const std::filesystem::path& path, ReportFormat format);

// String variants used by the CLI to stream to stdout.
std::string render_benchmark_report(const BenchmarkReport& report, ReportFormat format);
std::string render_estimates(const std::vector<Estimate>& estimates, ReportFormat format);
std::string render_sweep(const SweepGrid& grid, ReportFormat format);

} // namespace fewlabel
