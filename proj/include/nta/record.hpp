#pragma once

#include <map>
#include <string>
#include <vector>

namespace nta {

struct BlockInfo {
    int index = 0;
    int phase = 0;
    double start = 0.0;
    double length = 0.0;
    std::string task;
};

/// Time-indexed log of one simulation, stored row by row with named columns.
class RunRecord {
public:
    RunRecord() = default;
    explicit RunRecord(std::vector<std::string> columns);

    const std::vector<std::string>& columns() const { return columns_; }
    const std::vector<std::vector<double>>& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }
    bool empty() const { return rows_.empty(); }

    bool has(const std::string& name) const;
    std::size_t index(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;
    double at(std::size_t row, const std::string& name) const { return rows_.at(row).at(index(name)); }

    /// Row length must equal the column count; time must not decrease.
    void append(std::vector<double> row);

    std::vector<BlockInfo> blocks;
    std::map<std::string, std::string> meta;
    bool aborted = false;
    std::string abort_message;

private:
    std::vector<std::string> columns_;
    std::map<std::string, std::size_t> lookup_;
    std::vector<std::vector<double>> rows_;
};

} // namespace nta
