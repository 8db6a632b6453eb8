#include "oculolipid/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "oculolipid/config.hpp"
#include "oculolipid/errors.hpp"

namespace oculolipid {

int CsvTable::column(const std::string& name) const {
    std::string want = lower(name);
    for (size_t i = 0; i < header.size(); ++i)
        if (lower(header[i]) == want) return static_cast<int>(i);
    return -1;
}

namespace {

bool needs_quoting(const std::string& field) {
    return field.find_first_of(",\"\n\r") != std::string::npos;
}

void append_field(std::string& out, const std::string& field) {
    if (!needs_quoting(field)) {
        out += field;
        return;
    }
    out += '"';
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
}

} // namespace

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool any_field = false;

    auto end_field = [&] {
        row.push_back(field);
        field.clear();
        any_field = true;
    };
    auto end_row = [&] {
        if (!any_field && row.empty()) return; // skip blank line
        end_field();
        if (table.header.empty())
            table.header = row;
        else
            table.rows.push_back(row);
        row.clear();
        any_field = false;
        field.clear();
    };

    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"': in_quotes = true; any_field = true; break;
            case ',': end_field(); break;
            case '\r': break;
            case '\n': end_row(); break;
            default: field += c; any_field = true; break;
        }
    }
    if (any_field || !field.empty() || !row.empty()) end_row();
    return table;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Data, "cannot open CSV file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str());
}

std::string emit_csv(const CsvTable& table) {
    std::string out;
    for (size_t i = 0; i < table.header.size(); ++i) {
        if (i) out += ',';
        append_field(out, table.header[i]);
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            append_field(out, row[i]);
        }
        out += '\n';
    }
    return out;
}

void write_csv(const std::string& path, const CsvTable& table) {
    write_text_file(path, emit_csv(table));
}

CellValue parse_cell(const std::string& cell) {
    std::string t = trim(cell);
    if (t.empty() || t == "NA" || t == "na" || t == "NaN" || t == "nan")
        return {CellKind::Missing, 0.0};
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) return {CellKind::Invalid, 0.0};
    return {CellKind::Number, v};
}

std::string format_double(double v) {
    if (std::isnan(v)) return "NA";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) return "NA";
    return std::string(buf, ptr);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Data, "cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorKind::Internal, "write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Data, "cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace oculolipid
