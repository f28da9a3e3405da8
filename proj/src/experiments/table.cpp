#include "experiments/table.hpp"

#include <cstdio>
#include <stdexcept>

namespace polaron {

void Table::add_row(std::vector<double> row) {
    if (row.size() != columns.size()) throw std::invalid_argument("Table: row width mismatch");
    rows.push_back(std::move(row));
}

int Table::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    return -1;
}

std::vector<double> Table::column(const std::string& name) const {
    const int j = column_index(name);
    if (j < 0) throw std::out_of_range("Table: no column " + name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[static_cast<std::size_t>(j)]);
    return out;
}

std::string Table::to_csv(const std::string& schema_note) const {
    std::string s = "# polaronlab csv v1";
    if (!schema_note.empty()) s += " | " + schema_note;
    s += "\n";
    for (std::size_t i = 0; i < columns.size(); ++i)
        s += columns[i] + (i + 1 < columns.size() ? "," : "\n");
    char buf[64];
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", r[i]);
            s += buf;
            s += (i + 1 < r.size() ? "," : "\n");
        }
    }
    return s;
}

}  // namespace polaron
