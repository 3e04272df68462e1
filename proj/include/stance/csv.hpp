#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stance::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Index of a header column, if present.
    std::optional<std::size_t> column(std::string_view name) const;
};

// RFC 4180 style reader: comma-delimited, quoted fields may contain commas,
// doubled quotes, and newlines. Accepts \n and \r\n. The first record is the
// header; every data row must have the same field count. Data rows are
// numbered from 1 in error messages. Throws DataError.
Table read_file(const std::filesystem::path& path);
Table read_stream(std::istream& in, const std::string& origin);

// Quotes a field only when it contains a comma, quote, or line break.
std::string escape_field(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace stance::csv
