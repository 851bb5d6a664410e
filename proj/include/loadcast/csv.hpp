#pragma once

#include <string>
#include <vector>

namespace loadcast::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// Reads a comma-separated file with a mandatory header row. Cells are kept
// as raw strings; no quoting dialect beyond plain splitting is supported.
Table read_file(const std::string& path);

// Locale-independent float formatting (shortest round-trip form), so emitted
// artifacts are byte-stable across runs and machines.
std::string format_double(double v);

// Strict double parse of a whole cell; returns false on any trailing junk.
bool parse_double(const std::string& cell, double& out);

void write_file(const std::string& path, const Table& table);

}  // namespace loadcast::csv
