#pragma once

// Small string helpers shared by the loaders and the service layer.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ade::text {

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);

// Lowercases, trims, and collapses internal whitespace runs to one space.
std::string normalize_label(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool iequals(std::string_view a, std::string_view b);

// Shortest representation that parses back to the same double.
std::string format_double(double v);
// Fixed-point with `decimals` digits; negative zero prints as zero.
std::string format_fixed(double v, int decimals);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

// Iterates the lines of `doc`, stripping '\r'. Line numbers are 1-based.
template <typename Fn>
void for_each_line(std::string_view doc, Fn&& fn) {
    std::size_t line_no = 0;
    while (!doc.empty()) {
        auto nl = doc.find('\n');
        std::string_view line = doc.substr(0, nl);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        fn(++line_no, line);
        if (nl == std::string_view::npos)
            break;
        doc.remove_prefix(nl + 1);
    }
}

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

} // namespace ade::text

namespace ade::csv {

using Row = std::vector<std::string>;

// RFC 4180: quoted fields may contain separators, quotes ("") and newlines.
// Returns rows paired with the 1-based line on which each row starts.
struct Record {
    std::size_t line;
    Row fields;
};
std::vector<Record> parse(std::string_view doc);

std::string write_row(const Row& row);

// A parsed CSV document whose first row is a header. Every column listed in
// `required` must be present (any order); ParseError otherwise.
class Table {
public:
    Table(std::string_view doc, const std::vector<std::string>& required);

    const std::vector<Record>& rows() const noexcept { return rows_; }
    bool has_column(std::string_view name) const;
    // Field by column name; empty when the row is short.
    std::string_view get(const Record& r, std::string_view column) const;

private:
    std::vector<std::string> header_;
    std::vector<Record> rows_;
};

} // namespace ade::csv
