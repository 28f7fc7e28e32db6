#include "fewlabel/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "fewlabel/errors.hpp"

namespace fewlabel {
namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(trim(line.substr(start)));
            break;
        }
        cells.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return cells;
}

double parse_double(const std::string& cell, const std::string& context) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || cell.empty()) {
        throw FormatError(context + ": cannot parse '" + cell + "' as a number");
    }
    if (!std::isfinite(value)) {
        throw FormatError(context + ": non-finite value '" + cell + "'");
    }
    return value;
}

std::uint64_t parse_u64(const std::string& cell, const std::string& context) {
    std::uint64_t value = 0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || cell.empty()) {
        throw FormatError(context + ": cannot parse '" + cell + "' as an integer");
    }
    return value;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(line);
    }
    return lines;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << text;
    if (!out) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    json value;
    try {
        in >> value;
    } catch (const json::parse_error& e) {
        throw FormatError("'" + path.string() + "': " + e.what());
    }
    return value;
}

// Doubles that may legitimately be infinite (normalized MAE against a
// zero-error baseline) are rendered as inf/-inf; from_chars reads them back.
std::string csv_cell(double value) { return format_double(value); }

// --- benchmark report ------------------------------------------------------

constexpr const char* kBenchmarkHeader = "method,n,trials,mae,std_dev,normalized_mae,seed";

std::string benchmark_csv(const BenchmarkReport& report) {
    std::string out = kBenchmarkHeader;
    out += '\n';
    for (const auto& row : report.rows) {
        out += row.method;
        out += ',' + std::to_string(row.n);
        out += ',' + std::to_string(row.trials);
        out += ',' + csv_cell(row.mae);
        out += ',' + csv_cell(row.std_dev);
        out += ',' + csv_cell(row.normalized_mae);
        out += ',' + std::to_string(row.seed);
        out += '\n';
    }
    return out;
}

BenchmarkReport benchmark_from_csv(const std::vector<std::string>& lines,
                                   const std::string& origin) {
    if (lines.empty() || lines[0] != kBenchmarkHeader) {
        throw FormatError(origin + ": expected header '" + kBenchmarkHeader + "'");
    }
    BenchmarkReport report;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const auto cells = split_line(lines[i]);
        const std::string context = origin + " row " + std::to_string(i);
        if (cells.size() != 7) {
            throw FormatError(context + ": expected 7 columns, got " +
                              std::to_string(cells.size()));
        }
        BenchmarkRow row;
        row.method = cells[0];
        row.n = parse_u64(cells[1], context);
        row.trials = parse_u64(cells[2], context);
        row.mae = parse_double(cells[3], context);
        row.std_dev = parse_double(cells[4], context);
        row.normalized_mae = parse_double(cells[5], context);
        row.seed = parse_u64(cells[6], context);
        report.rows.push_back(std::move(row));
    }
    return report;
}

json benchmark_json(const BenchmarkReport& report) {
    json rows = json::array();
    for (const auto& row : report.rows) {
        rows.push_back({{"method", row.method},
                        {"n", row.n},
                        {"trials", row.trials},
                        {"mae", row.mae},
                        {"std_dev", row.std_dev},
                        {"normalized_mae", row.normalized_mae},
                        {"seed", row.seed}});
    }
    return json{{"rows", rows}};
}

BenchmarkReport benchmark_from_json(const json& value) {
    BenchmarkReport report;
    for (const auto& item : value.at("rows")) {
        BenchmarkRow row;
        row.method = item.at("method").get<std::string>();
        row.n = item.at("n").get<std::size_t>();
        row.trials = item.at("trials").get<std::size_t>();
        row.mae = item.at("mae").get<double>();
        row.std_dev = item.at("std_dev").get<double>();
        row.normalized_mae = item.at("normalized_mae").get<double>();
        row.seed = item.at("seed").get<std::uint64_t>();
        report.rows.push_back(std::move(row));
    }
    return report;
}

// --- estimates --------------------------------------------------------------

constexpr const char* kEstimateHeader =
    "method,value,n,big_n,fallback,fit_kind,lambda,slope,offset,ridge_alpha,adjusted,"
    "fit_n,fit_big_n,fit_var_f,fit_cov_fh,degenerate_variance,lambda_outside_unit";

std::string estimates_csv(const std::vector<Estimate>& estimates) {
    std::string out = kEstimateHeader;
    out += '\n';
    for (const auto& e : estimates) {
        out += std::string(method_name(e.method));
        out += ',' + csv_cell(e.value);
        out += ',' + std::to_string(e.n);
        out += ',' + std::to_string(e.big_n);
        out += ',' + std::to_string(e.fallback_classical ? 1 : 0);
        if (e.fit) {
            const PostHocFit& fit = *e.fit;
            out += fit.kind == FitKind::linear ? ",linear" : ",sigmoid";
            out += ',' + csv_cell(fit.lambda);
            out += ',' + csv_cell(fit.slope);
            out += ',' + csv_cell(fit.offset);
            out += ',' + csv_cell(fit.ridge_alpha);
            out += ',' + std::to_string(fit.adjusted ? 1 : 0);
            out += ',' + std::to_string(fit.n);
            out += ',' + std::to_string(fit.big_n);
            out += ',' + csv_cell(fit.var_f);
            out += ',' + csv_cell(fit.cov_fh);
            out += ',' + std::to_string(fit.degenerate_variance ? 1 : 0);
            out += ',' + std::to_string(fit.lambda_outside_unit ? 1 : 0);
        } else {
            out += ",none";
            for (int blank = 0; blank < 11; ++blank) {
                out += ',';
            }
        }
        out += '\n';
    }
    return out;
}

std::vector<Estimate> estimates_from_csv(const std::vector<std::string>& lines,
                                         const std::string& origin) {
    if (lines.empty() || lines[0] != kEstimateHeader) {
        throw FormatError(origin + ": unexpected estimates header");
    }
    std::vector<Estimate> estimates;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const auto cells = split_line(lines[i]);
        const std::string context = origin + " row " + std::to_string(i);
        if (cells.size() != 17) {
            throw FormatError(context + ": expected 17 columns, got " +
                              std::to_string(cells.size()));
        }
        Estimate e;
        const auto method = method_from_name(cells[0]);
        if (!method) {
            throw FormatError(context + ": unknown method '" + cells[0] + "'");
        }
        e.method = *method;
        e.value = parse_double(cells[1], context);
        e.n = parse_u64(cells[2], context);
        e.big_n = parse_u64(cells[3], context);
        e.fallback_classical = parse_u64(cells[4], context) != 0;
        if (cells[5] != "none") {
            PostHocFit fit;
            if (cells[5] == "linear") {
                fit.kind = FitKind::linear;
            } else if (cells[5] == "sigmoid") {
                fit.kind = FitKind::sigmoid;
            } else {
                throw FormatError(context + ": unknown fit kind '" + cells[5] + "'");
            }
            fit.lambda = parse_double(cells[6], context);
            fit.slope = parse_double(cells[7], context);
            fit.offset = parse_double(cells[8], context);
            fit.ridge_alpha = parse_double(cells[9], context);
            fit.adjusted = parse_u64(cells[10], context) != 0;
            fit.n = parse_u64(cells[11], context);
            fit.big_n = parse_u64(cells[12], context);
            fit.var_f = parse_double(cells[13], context);
            fit.cov_fh = parse_double(cells[14], context);
            fit.degenerate_variance = parse_u64(cells[15], context) != 0;
            fit.lambda_outside_unit = parse_u64(cells[16], context) != 0;
            e.fit = fit;
        }
        estimates.push_back(std::move(e));
    }
    return estimates;
}

json estimates_json(const std::vector<Estimate>& estimates) {
    json rows = json::array();
    for (const auto& e : estimates) {
        json row{{"method", std::string(method_name(e.method))},
                 {"value", e.value},
                 {"n", e.n},
                 {"big_n", e.big_n},
                 {"fallback", e.fallback_classical}};
        if (e.fit) {
            const PostHocFit& fit = *e.fit;
            row["fit"] = {{"kind", fit.kind == FitKind::linear ? "linear" : "sigmoid"},
                          {"lambda", fit.lambda},
                          {"slope", fit.slope},
                          {"offset", fit.offset},
                          {"ridge_alpha", fit.ridge_alpha},
                          {"adjusted", fit.adjusted},
                          {"n", fit.n},
                          {"big_n", fit.big_n},
                          {"var_f", fit.var_f},
                          {"cov_fh", fit.cov_fh},
                          {"degenerate_variance", fit.degenerate_variance},
                          {"lambda_outside_unit", fit.lambda_outside_unit}};
        } else {
            row["fit"] = nullptr;
        }
        rows.push_back(std::move(row));
    }
    return json{{"estimates", rows}};
}

std::vector<Estimate> estimates_from_json(const json& value) {
    std::vector<Estimate> estimates;
    for (const auto& item : value.at("estimates")) {
        Estimate e;
        const auto method = method_from_name(item.at("method").get<std::string>());
        if (!method) {
            throw FormatError("unknown method in estimates file");
        }
        e.method = *method;
        e.value = item.at("value").get<double>();
        e.n = item.at("n").get<std::size_t>();
        e.big_n = item.at("big_n").get<std::size_t>();
        e.fallback_classical = item.at("fallback").get<bool>();
        if (!item.at("fit").is_null()) {
            const json& f = item.at("fit");
            PostHocFit fit;
            fit.kind = f.at("kind").get<std::string>() == "linear" ? FitKind::linear
                                                                   : FitKind::sigmoid;
            fit.lambda = f.at("lambda").get<double>();
            fit.slope = f.at("slope").get<double>();
            fit.offset = f.at("offset").get<double>();
            fit.ridge_alpha = f.at("ridge_alpha").get<double>();
            fit.adjusted = f.at("adjusted").get<bool>();
            fit.n = f.at("n").get<std::size_t>();
            fit.big_n = f.at("big_n").get<std::size_t>();
            fit.var_f = f.at("var_f").get<double>();
            fit.cov_fh = f.at("cov_fh").get<double>();
            fit.degenerate_variance = f.at("degenerate_variance").get<bool>();
            fit.lambda_outside_unit = f.at("lambda_outside_unit").get<bool>();
            e.fit = fit;
        }
        estimates.push_back(std::move(e));
    }
    return estimates;
}

// --- sweep grid --------------------------------------------------------------

std::string sweep_csv(const SweepGrid& grid) {
    std::string out = "var_f";
    for (std::size_t n : grid.n_values) {
        out += ',' + std::to_string(n);
    }
    out += '\n';
    for (std::size_t i = 0; i < grid.var_f_values.size(); ++i) {
        out += csv_cell(grid.var_f_values[i]);
        for (std::size_t j = 0; j < grid.n_values.size(); ++j) {
            out += ',';
            if (grid.cells[i][j]) {
                out += csv_cell(*grid.cells[i][j]);
            }
        }
        out += '\n';
    }
    return out;
}

SweepGrid sweep_from_csv(const std::vector<std::string>& lines, const std::string& origin) {
    if (lines.empty()) {
        throw FormatError(origin + ": empty sweep file");
    }
    const auto header = split_line(lines[0]);
    if (header.empty() || header[0] != "var_f") {
        throw FormatError(origin + ": expected 'var_f' as the first header cell");
    }
    SweepGrid grid;
    for (std::size_t j = 1; j < header.size(); ++j) {
        grid.n_values.push_back(parse_u64(header[j], origin + " header"));
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const auto cells = split_line(lines[i]);
        const std::string context = origin + " row " + std::to_string(i);
        if (cells.size() != header.size()) {
            throw FormatError(context + ": expected " + std::to_string(header.size()) +
                              " columns, got " + std::to_string(cells.size()));
        }
        grid.var_f_values.push_back(parse_double(cells[0], context));
        std::vector<std::optional<double>> row;
        for (std::size_t j = 1; j < cells.size(); ++j) {
            if (cells[j].empty()) {
                row.push_back(std::nullopt);
            } else {
                row.push_back(parse_double(cells[j], context));
            }
        }
        grid.cells.push_back(std::move(row));
    }
    return grid;
}

json sweep_json(const SweepGrid& grid) {
    json cells = json::array();
    for (const auto& row : grid.cells) {
        json out_row = json::array();
        for (const auto& cell : row) {
            if (cell) {
                out_row.push_back(*cell);
            } else {
                out_row.push_back(nullptr);
            }
        }
        cells.push_back(std::move(out_row));
    }
    return json{{"var_f", grid.var_f_values}, {"n", grid.n_values}, {"cells", cells}};
}

SweepGrid sweep_from_json(const json& value) {
    SweepGrid grid;
    grid.var_f_values = value.at("var_f").get<std::vector<double>>();
    grid.n_values = value.at("n").get<std::vector<std::size_t>>();
    for (const auto& row : value.at("cells")) {
        std::vector<std::optional<double>> out_row;
        for (const auto& cell : row) {
            if (cell.is_null()) {
                out_row.push_back(std::nullopt);
            } else {
                out_row.push_back(cell.get<double>());
            }
        }
        grid.cells.push_back(std::move(out_row));
    }
    return grid;
}

} // namespace

ReportFormat report_format_from_name(const std::string& name) {
    if (name == "csv" || name == "delimited") {
        return ReportFormat::delimited;
    }
    if (name == "json" || name == "structured") {
        return ReportFormat::structured;
    }
    throw FormatError("unknown format '" + name + "' (expected csv or json)");
}

std::string format_double(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

DatasetPools load_dataset(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) {
        throw FormatError("'" + path.string() + "': missing header row");
    }
    const auto header = split_line(lines[0]);
    std::size_t f_col = header.size();
    std::size_t h_col = header.size();
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == "f") {
            f_col = j;
        } else if (header[j] == "h") {
            h_col = j;
        }
    }
    if (f_col == header.size()) {
        throw FormatError("'" + path.string() + "': required column 'f' not found in header");
    }

    DatasetPools pools;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const auto cells = split_line(lines[i]);
        const std::string context = path.string() + " row " + std::to_string(i + 1);
        if (cells.size() != header.size()) {
            throw FormatError(context + ": expected " + std::to_string(header.size()) +
                              " cells, got " + std::to_string(cells.size()));
        }
        ++pools.total_rows;
        const double f = parse_double(cells[f_col], context + ", column 'f'");
        const bool has_h = h_col < header.size() && !cells[h_col].empty();
        if (has_h) {
            pools.labelled.f.push_back(f);
            pools.labelled.h.push_back(parse_double(cells[h_col], context + ", column 'h'"));
        } else {
            pools.unlabelled.f.push_back(f);
        }
    }
    return pools;
}

std::string render_benchmark_report(const BenchmarkReport& report, ReportFormat format) {
    if (format == ReportFormat::delimited) {
        return benchmark_csv(report);
    }
    return benchmark_json(report).dump(2) + "\n";
}

void write_benchmark_report(const BenchmarkReport& report, const std::filesystem::path& path,
                            ReportFormat format) {
    write_text(path, render_benchmark_report(report, format));
}

BenchmarkReport read_benchmark_report(const std::filesystem::path& path, ReportFormat format) {
    if (format == ReportFormat::delimited) {
        return benchmark_from_csv(read_lines(path), path.string());
    }
    return benchmark_from_json(read_json(path));
}

std::string render_estimates(const std::vector<Estimate>& estimates, ReportFormat format) {
    if (format == ReportFormat::delimited) {
        return estimates_csv(estimates);
    }
    return estimates_json(estimates).dump(2) + "\n";
}

void write_estimates(const std::vector<Estimate>& estimates, const std::filesystem::path& path,
                     ReportFormat format) {
    write_text(path, render_estimates(estimates, format));
}

std::vector<Estimate> read_estimates(const std::filesystem::path& path, ReportFormat format) {
    if (format == ReportFormat::delimited) {
        return estimates_from_csv(read_lines(path), path.string());
    }
    return estimates_from_json(read_json(path));
}

std::string render_sweep(const SweepGrid& grid, ReportFormat format) {
    if (format == ReportFormat::delimited) {
        return sweep_csv(grid);
    }
    return sweep_json(grid).dump(2) + "\n";
}

void write_sweep(const SweepGrid& grid, const std::filesystem::path& path,
                 ReportFormat format) {
    write_text(path, render_sweep(grid, format));
}

SweepGrid read_sweep(const std::filesystem::path& path, ReportFormat format) {
    if (format == ReportFormat::delimited) {
        return sweep_from_csv(read_lines(path), path.string());
    }
    return sweep_from_json(read_json(path));
}

} // namespace fewlabel
