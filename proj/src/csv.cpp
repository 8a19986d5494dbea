#include "flexbid/csv.hpp"

#include <cstdlib>
#include <fstream>

namespace flexbid {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    size_t start = 0;
    while (true) {
        size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(trim(line.substr(start)));
            break;
        }
        cells.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return cells;
}

}  // namespace

int CsvTable::column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    throw CsvError(path, 1, "missing column '" + name + "'");
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError(path, 0, "cannot open file");
    CsvTable table;
    table.path = path;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (row == 1) {
            table.header = split_line(line);
            continue;
        }
        if (trim(line).empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != table.header.size())
            throw CsvError(path, row,
                           "expected " + std::to_string(table.header.size()) +
                               " columns, got " + std::to_string(cells.size()));
        table.rows.push_back(std::move(cells));
    }
    if (table.header.empty()) throw CsvError(path, 1, "empty file");
    return table;
}

void require_columns(const CsvTable& table, const std::vector<std::string>& expected) {
    if (table.header != expected) {
        std::string want;
        for (const auto& c : expected) {
            if (!want.empty()) want += ",";
            want += c;
        }
        throw CsvError(table.path, 1, "header must be exactly '" + want + "'");
    }
}

double parse_double_cell(const CsvTable& table, size_t row, int col) {
    const std::string& cell = table.rows[row][col];
    char* end = nullptr;
    double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size())
        throw CsvError(table.path, static_cast<int>(row) + 2,
                       "column " + std::to_string(col + 1) + ": not a number: '" +
                           cell + "'");
    return v;
}

}  // namespace flexbid
