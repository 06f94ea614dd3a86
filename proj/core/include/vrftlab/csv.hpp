#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "vrftlab/dataset.hpp"
#include "vrftlab/lti.hpp"

namespace vrftlab {

// Shortest representation that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    // 1-based line number of each row in the source file.
    std::vector<std::size_t> lines;
};

// LF line endings, comma separator, no quoting.
CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

void write_series_csv(std::ostream& os, const SignalSeries& series);
void write_series_csv(const std::filesystem::path& path, const SignalSeries& series);
SignalSeries read_series_csv(const std::filesystem::path& path);

void write_dataset_csv(const std::filesystem::path& path, const IoDataset& dataset);
IoDataset read_dataset_csv(const std::filesystem::path& path, DatasetMeta meta = {});

// Writes `text` to `path`, creating parent directories; IoError on failure.
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace vrftlab
