#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pipefail {

// A parsed CSV file: header row plus string cells. Every row has exactly
// header.size() cells; the reader rejects ragged files.
struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::string source_path;

    // Column index by name, -1 when absent.
    int column(const std::string& name) const;
};

// Strict reader: comma delimiter, '.' decimals are the caller's concern,
// RFC-style double-quote escaping supported, UTF-8 passed through.
RawTable read_csv(const std::filesystem::path& path);

// Writes rows with '\n' line endings, quoting cells only when they contain a
// comma, quote, or newline. Output is byte-deterministic for identical input.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Shortest round-trip decimal formatting ("1.5", "0.1", "3"); used everywhere
// a double is emitted so that rerun outputs are byte-identical.
std::string format_double(double value);

// Strict full-string numeric parses; return false on any trailing garbage.
bool parse_double(const std::string& text, double& out);
bool parse_int(const std::string& text, long long& out);

}  // namespace pipefail
