#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace itseval::csv {

/// A parsed CSV file: header row plus data rows. Fields are kept as raw
/// strings; typed access is by column name with the 1-based file row
/// number available for error messages.
class Table {
public:
    static Table read_file(const std::string& path);
    static Table read_string(const std::string& text, const std::string& origin = "<string>");

    [[nodiscard]] const std::vector<std::string>& header() const { return header_; }
    [[nodiscard]] std::size_t rows() const { return rows_.size(); }

    [[nodiscard]] bool has_column(const std::string& name) const;

    /// Column index by name; throws InputError naming the column if absent.
    [[nodiscard]] std::size_t column(const std::string& name) const;

    [[nodiscard]] const std::string& cell(std::size_t row, std::size_t col) const {
        return rows_[row][col];
    }
    [[nodiscard]] const std::string& cell(std::size_t row, const std::string& name) const {
        return rows_[row][column(name)];
    }

    /// 1-based line number in the source file for a data row.
    [[nodiscard]] std::size_t file_line(std::size_t row) const { return row + 2; }

    [[nodiscard]] double number(std::size_t row, const std::string& name) const;
    [[nodiscard]] long integer(std::size_t row, const std::string& name) const;

    [[nodiscard]] const std::string& origin() const { return origin_; }

private:
    std::string origin_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Streaming CSV writer with deterministic number formatting.
class Writer {
public:
    explicit Writer(std::vector<std::string> header);

    void row(const std::vector<std::string>& fields);
    [[nodiscard]] const std::string& text() const { return out_; }

    void write_file(const std::string& path) const;

    /// Shortest round-trip decimal representation of a double.
    static std::string format(double v);

private:
    std::size_t width_;
    std::string out_;
};

}  // namespace itseval::csv
