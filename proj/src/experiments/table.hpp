// table.hpp — labeled numeric tables shared by diagnostics and sweeps.

#pragma once

#include <string>
#include <vector>

namespace polaron {

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_row(std::vector<double> row);
    int column_index(const std::string& name) const;  // -1 if absent
    std::vector<double> column(const std::string& name) const;

    // CSV with a schema comment line; deterministic formatting.
    std::string to_csv(const std::string& schema_note = "") const;
};

}  // namespace polaron
