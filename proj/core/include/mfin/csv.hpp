#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mfin {

// Minimal CSV support: comma separated, no quoting (numeric research data).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

std::vector<std::string> split_csv_line(const std::string& line);

// Strict double parse; returns false for junk. Empty string means "missing"
// and also returns false.
bool parse_double(const std::string& text, double& out);

// Deterministic shortest-ish formatting used by every report writer, so a
// rerun with the same manifest is byte-identical.
std::string format_double(double v, int precision = 12);

}  // namespace mfin
