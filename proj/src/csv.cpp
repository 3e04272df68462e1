#include "stance/csv.hpp"

#include <fstream>
#include <sstream>

#include "stance/error.hpp"

namespace stance::csv {

std::optional<std::size_t> Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    return std::nullopt;
}

namespace {

// Parses one record starting at `pos`. Returns false at end of input.
bool parse_record(const std::string& text, std::size_t& pos, std::vector<std::string>& fields,
                  const std::string& origin, std::size_t record_no) {
    fields.clear();
    const std::size_t n = text.size();
    if (pos >= n) return false;

    std::string field;
    bool in_quotes = false;
    bool saw_any = false;
    while (pos < n) {
        char c = text[pos];
        if (in_quotes) {
            if (c == '"') {
                if (pos + 1 < n && text[pos + 1] == '"') {
                    field += '"';
                    pos += 2;
                } else {
                    in_quotes = false;
                    ++pos;
                }
            } else {
                field += c;
                ++pos;
            }
            continue;
        }
        if (c == '"' && field.empty() && !saw_any) {
            in_quotes = true;
            saw_any = true;
            ++pos;
            continue;
        }
        if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            saw_any = false;
            ++pos;
            continue;
        }
        if (c == '\n' || c == '\r') {
            if (c == '\r' && pos + 1 < n && text[pos + 1] == '\n') ++pos;
            ++pos;
            fields.push_back(std::move(field));
            return true;
        }
        field += c;
        saw_any = true;
        ++pos;
    }
    if (in_quotes)
        throw DataError(origin + ": unterminated quoted field in record " +
                        std::to_string(record_no));
    fields.push_back(std::move(field));
    return true;
}

}  // namespace

Table read_stream(std::istream& in, const std::string& origin) {
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    Table table;
    std::size_t pos = 0;
    if (!parse_record(text, pos, table.header, origin, 0))
        throw DataError(origin + ": empty file, header row required");

    std::vector<std::string> fields;
    std::size_t row_no = 1;
    while (parse_record(text, pos, fields, origin, row_no)) {
        if (fields.size() == 1 && fields[0].empty() && pos >= text.size()) break;  // trailing newline
        if (fields.size() != table.header.size())
            throw DataError(origin + ": row " + std::to_string(row_no) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(table.header.size()));
        table.rows.push_back(fields);
        ++row_no;
    }
    return table;
}

Table read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    return read_stream(in, path.string());
}

std::string escape_field(std::string_view field) {
    bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs_quotes) return std::string(field);
    std::string out;
    out.reserve(field.size() + 2);
    out += '"';
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << escape_field(fields[i]);
    }
    out << '\n';
}

}  // namespace stance::csv
