#include "nta/record.hpp"

#include "nta/types.hpp"

namespace nta {

RunRecord::RunRecord(std::vector<std::string> columns) : columns_(std::move(columns)) {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (!lookup_.emplace(columns_[i], i).second) throw ConfigError("duplicate column " + columns_[i]);
    }
}

bool RunRecord::has(const std::string& name) const { return lookup_.count(name) != 0; }

std::size_t RunRecord::index(const std::string& name) const {
    const auto it = lookup_.find(name);
    if (it == lookup_.end()) throw ConfigError("record has no column '" + name + "'");
    return it->second;
}

std::vector<double> RunRecord::column(const std::string& name) const {
    const std::size_t k = index(name);
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) out.push_back(r[k]);
    return out;
}

void RunRecord::append(std::vector<double> row) {
    if (row.size() != columns_.size()) throw ConfigError("row width does not match record columns");
    if (!rows_.empty() && !columns_.empty() && columns_.front() == "t" && row.front() < rows_.back().front()) {
        throw ConfigError("record time must be monotone");
    }
    rows_.push_back(std::move(row));
}

} // namespace nta
