#pragma once

#include <string>
#include <vector>

namespace oculolipid {

// Minimal CSV table: comma separated, UTF-8, double quotes for embedded
// commas/quotes/newlines, header row required. "NA" or an empty cell is a
// missing value.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Case-insensitive lookup; -1 when absent.
    int column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);
std::string emit_csv(const CsvTable& table);
void write_csv(const std::string& path, const CsvTable& table);

enum class CellKind { Missing, Number, Invalid };

struct CellValue {
    CellKind kind;
    double value; // meaningful only when kind == Number
};

CellValue parse_cell(const std::string& cell);

// Shortest round-trip decimal representation (locale independent). NaN -> "NA".
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace oculolipid
