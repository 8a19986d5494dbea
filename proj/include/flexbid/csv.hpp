#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace flexbid {

// Raised on any malformed input file; carries file/row/column context so the
// CLI can print a usable diagnostic (exit code 2).
class CsvError : public std::runtime_error {
  public:
    CsvError(std::string file, int row, const std::string& message)
        : std::runtime_error(file + ":" + std::to_string(row) + ": " + message),
          file_(std::move(file)),
          row_(row) {}

    const std::string& file() const { return file_; }
    int row() const { return row_; }

  private:
    std::string file_;
    int row_;
};

struct CsvTable {
    std::string path;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;  // cell strings, trimmed

    // Column index for an exact header name; throws CsvError if absent.
    int column(const std::string& name) const;
};

// Reads a comma-separated file with a header row. Cells are trimmed of
// surrounding whitespace and trailing CR. Quoting is not supported; the
// documented schemas never need it.
CsvTable read_csv(const std::string& path);

// Requires the header to equal `expected` exactly (order included).
void require_columns(const CsvTable& table, const std::vector<std::string>& expected);

double parse_double_cell(const CsvTable& table, size_t row, int col);

}  // namespace flexbid
