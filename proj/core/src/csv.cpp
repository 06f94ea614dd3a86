#include "vrftlab/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vrftlab/error.hpp"

namespace vrftlab {

namespace {

std::vector<std::string> split_row(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string join_row(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) out += ',';
        out += cells[i];
    }
    return out;
}

std::vector<double> column_values(const CsvTable& table, std::size_t column, const std::filesystem::path& path) {
    std::vector<double> values;
    values.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != table.header.size()) {
            throw Error(ErrorKind::ParseError, path.string() + ": line " + std::to_string(table.lines[r]) +
                                                   ": expected " + std::to_string(table.header.size()) + " fields");
        }
        try {
            values.push_back(parse_double(row[column]));
        } catch (const Error&) {
            throw Error(ErrorKind::ParseError, path.string() + ": line " + std::to_string(table.lines[r]) +
                                                   ": bad number '" + row[column] + "'");
        }
    }
    return values;
}

void expect_header(const CsvTable& table, const std::vector<std::string>& expected, const std::filesystem::path& path) {
    if (table.header != expected) {
        throw Error(ErrorKind::ParseError, path.string() + ": line 1: expected header '" + join_row(expected) + "'");
    }
}

double sample_period_from(const std::vector<double>& t, const std::filesystem::path& path) {
    if (t.size() < 2) {
        throw Error(ErrorKind::ParseError, path.string() + ": need at least two rows to infer the sample period");
    }
    return t[1] - t[0];
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return {buf, res.ptr};
}

double parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
        throw Error(ErrorKind::ParseError, "not a number: '" + std::string(text) + "'");
    }
    return value;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) {
            throw Error(ErrorKind::IoError, "cannot create directory " + path.parent_path().string());
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot write " + path.string());
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw Error(ErrorKind::IoError, "write failed for " + path.string());
    }
}

CsvTable read_csv(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    CsvTable table;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        start = end + 1;
        if (line.empty()) continue;
        if (table.header.empty()) {
            table.header = split_row(line);
        } else {
            table.rows.push_back(split_row(line));
            table.lines.push_back(line_no);
        }
    }
    if (table.header.empty()) {
        throw Error(ErrorKind::ParseError, path.string() + ": empty file");
    }
    return table;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::string text = join_row(table.header) + '\n';
    for (const auto& row : table.rows) {
        text += join_row(row);
        text += '\n';
    }
    write_text_file(path, text);
}

void write_series_csv(std::ostream& os, const SignalSeries& series) {
    os << "t_seconds,value\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        os << format_double(static_cast<double>(i) * series.ts()) << ',' << format_double(series[i]) << '\n';
    }
}

void write_series_csv(const std::filesystem::path& path, const SignalSeries& series) {
    std::ostringstream ss;
    write_series_csv(ss, series);
    write_text_file(path, ss.str());
}

SignalSeries read_series_csv(const std::filesystem::path& path) {
    const CsvTable table = read_csv(path);
    expect_header(table, {"t_seconds", "value"}, path);
    const auto t = column_values(table, 0, path);
    return {column_values(table, 1, path), sample_period_from(t, path)};
}

void write_dataset_csv(const std::filesystem::path& path, const IoDataset& dataset) {
    std::string text = "t_seconds,u,y\n";
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        text += format_double(static_cast<double>(i) * dataset.ts());
        text += ',';
        text += format_double(dataset.u()[i]);
        text += ',';
        text += format_double(dataset.y()[i]);
        text += '\n';
    }
    write_text_file(path, text);
}

IoDataset read_dataset_csv(const std::filesystem::path& path, DatasetMeta meta) {
    const CsvTable table = read_csv(path);
    expect_header(table, {"t_seconds", "u", "y"}, path);
    const auto t = column_values(table, 0, path);
    const double ts = sample_period_from(t, path);
    return {SignalSeries(column_values(table, 1, path), ts), SignalSeries(column_values(table, 2, path), ts),
            std::move(meta)};
}

}  // namespace vrftlab
