#include "pipefail/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "pipefail/errors.hpp"

namespace pipefail {

namespace {

// Splits one logical CSV record. `line` must already contain balanced quotes.
std::vector<std::string> split_record(const std::string& line, const std::string& path,
                                      std::size_t line_no) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell.push_back(ch);
            }
        } else if (ch == '"') {
            if (!cell.empty()) {
                throw DataError(path + ":" + std::to_string(line_no) +
                                ": quote inside unquoted cell");
            }
            quoted = true;
        } else if (ch == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else {
            cell.push_back(ch);
        }
    }
    if (quoted) {
        throw DataError(path + ":" + std::to_string(line_no) + ": unterminated quote");
    }
    cells.push_back(std::move(cell));
    return cells;
}

bool needs_quoting(const std::string& cell) {
    return cell.find_first_of(",\"\n\r") != std::string::npos;
}

}  // namespace

int RawTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
}

RawTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    RawTable table;
    table.source_path = path.string();

    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        // Re-join lines while a quoted cell spans a newline.
        while (std::count(line.begin(), line.end(), '"') % 2 != 0) {
            std::string more;
            if (!std::getline(in, more)) {
                throw DataError(table.source_path + ":" + std::to_string(line_no) +
                                ": unterminated quote");
            }
            ++line_no;
            if (!more.empty() && more.back() == '\r') more.pop_back();
            line += "\n" + more;
        }
        auto cells = split_record(line, table.source_path, line_no);
        if (!have_header) {
            table.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw DataError(table.source_path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(table.header.size()) + " cells, found " +
                            std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    if (!have_header) throw DataError(table.source_path + ": missing header row");
    return table;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    auto emit_row = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            if (needs_quoting(cells[i])) {
                out << '"';
                for (char ch : cells[i]) {
                    if (ch == '"') out << "\"\"";
                    else out << ch;
                }
                out << '"';
            } else {
                out << cells[i];
            }
        }
        out << '\n';
    };
    emit_row(header);
    for (const auto& row : rows) {
        if (row.size() != header.size()) {
            throw InvalidArgument("csv row width " + std::to_string(row.size()) +
                                  " does not match header width " + std::to_string(header.size()));
        }
        emit_row(row);
    }
    if (!out) throw DataError("write failed for " + path.string());
}

std::string format_double(double value) {
    char buffer[64];
    auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, result.ptr);
}

bool parse_double(const std::string& text, double& out) {
    if (text.empty()) return false;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto result = std::from_chars(begin, end, out);
    return result.ec == std::errc() && result.ptr == end;
}

bool parse_int(const std::string& text, long long& out) {
    if (text.empty()) return false;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto result = std::from_chars(begin, end, out);
    return result.ec == std::errc() && result.ptr == end;
}

}  // namespace pipefail
