#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace ppkit::csv {

/// Comma-delimited reader with RFC-4180 quoting. Record numbers are 1-based
/// and count the header as record 1.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    /// Reads the next record into `fields`; returns false at end of input.
    bool next(std::vector<std::string>& fields);
    std::size_t record_number() const { return record_; }

private:
    std::istream& in_;
    std::size_t record_{0};
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    /// Source record number of each data row (header is record 1).
    std::vector<std::size_t> row_records;

    /// Index of the named column; throws naming the column if it is absent.
    std::size_t column(std::string_view name) const;
    std::optional<std::size_t> find_column(std::string_view name) const;
};

/// Loads a whole file. Throws if the file cannot be opened or has no header.
Table read_file(const std::string& path);

void write_field(std::ostream& out, std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest round-trippable decimal text for a double.
std::string format_double(double v);
/// Strict float parse of a whole cell (surrounding blanks allowed).
std::optional<double> parse_double(std::string_view cell);

}  // namespace ppkit::csv
