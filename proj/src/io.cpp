#include "nta/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace nta {

namespace fs = std::filesystem;
using nlohmann::json;

const char* const kVersion = "0.1.0";

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

void close_out(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const fs::path& path) {
    if (s == "nan" || s == "-nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw IoError("malformed number '" + s + "' in " + path.string());
    }
    return v;
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

} // namespace

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

void write_record_csv(const RunRecord& record, const fs::path& path) {
    std::ofstream out = open_out(path);
    const auto& cols = record.columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << "\n";
    for (const auto& row : record.rows()) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
        out << "\n";
    }
    close_out(out, path);
}

RunRecord read_record_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty CSV " + path.string());
    RunRecord rec(split(line, ','));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        for (const auto& cell : split(line, ',')) row.push_back(parse_double(cell, path));
        if (row.size() != rec.columns().size()) throw IoError("ragged row in " + path.string());
        rec.append(std::move(row));
    }
    return rec;
}

void write_matrix_csv(const Matrix& m, const fs::path& path) {
    std::ofstream out = open_out(path);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
        out << "\n";
    }
    close_out(out, path);
}

Matrix read_matrix_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        for (const auto& cell : split(line, ',')) row.push_back(parse_double(cell, path));
        if (!rows.empty() && row.size() != rows.front().size()) throw IoError("ragged matrix in " + path.string());
        rows.push_back(std::move(row));
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

void write_grid_csv(const SweepResult& sweep, const fs::path& path) {
    std::ofstream out = open_out(path);
    out << "axis1,axis2,seed,total_alignment,failed,dt,n_blocks\n";
    for (const auto& c : sweep.cells) {
        out << format_double(c.x) << "," << format_double(c.y) << "," << c.seed << ","
            << format_double(c.failed ? std::nan("") : c.total_alignment) << "," << (c.failed ? 1 : 0) << ","
            << format_double(c.dt) << "," << c.n_blocks << "\n";
    }
    close_out(out, path);
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
    close_out(out, path);
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

json run_summary(const RunResult& run) {
    json j;
    j["preset"] = run.config.preset;
    j["seed"] = run.config.seed;
    const double a = final_alignment(run);
    j["final_total_alignment"] = number(a);
    j["regime_label"] = regime_label(a, run.config.regime_cut);
    j["threshold"] = run.config.threshold;
    json ttt = json::array();
    json reached = json::array();
    for (const auto& c : run.time_to_threshold) {
        ttt.push_back(number(c.time));
        reached.push_back(c.reached);
    }
    j["per_block_time_to_threshold"] = ttt;
    j["per_block_reached"] = reached;
    j["aborted"] = run.record.aborted;
    if (run.record.aborted) j["abort_message"] = run.record.abort_message;
    if (!run.record.empty()) j["final_loss_task"] = number(run.record.rows().back()[run.record.index("loss_task")]);
    return j;
}

json make_manifest(const std::string& command, const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                   double wall_seconds) {
    json j;
    j["command"] = command;
    j["preset"] = cfg.preset;
    j["seeds"] = seeds;
    j["code_version"] = kVersion;
    j["wall_time_seconds"] = wall_seconds;
    json c = json::object();
    for (const auto& [k, v] : config_items(cfg)) c[k] = v;
    j["config"] = c;
    return j;
}

void write_run(const RunResult& run, const fs::path& dir) {
    const std::string seed = std::to_string(run.config.seed);
    write_record_csv(run.record, dir / ("run_" + seed + ".csv"));
    write_json(run_summary(run), dir / ("summary_" + seed + ".json"));
    if (!run.w2_snapshots.empty()) {
        const fs::path snap = dir / ("w2_" + seed);
        ensure_directory(snap);
        for (std::size_t b = 0; b < run.w2_snapshots.size(); ++b) {
            write_matrix_csv(run.w2_snapshots[b], snap / ("block_" + std::to_string(b) + ".csv"));
            write_matrix_csv(run.w2_sorted_snapshots[b], snap / ("block_" + std::to_string(b) + "_sorted.csv"));
        }
    }
}

json report_directory(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("no such results directory " + dir.string());
    json out;
    if (fs::exists(dir / "manifest.json")) out["manifest"] = read_json(dir / "manifest.json");

    std::vector<fs::path> summaries;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (name.rfind("summary_", 0) == 0 && e.path().extension() == ".json") summaries.push_back(e.path());
    }
    std::sort(summaries.begin(), summaries.end());
    if (!summaries.empty()) {
        std::vector<double> vals;
        json runs = json::array();
        for (const auto& p : summaries) {
            json s = read_json(p);
            runs.push_back(s);
            if (s.contains("final_total_alignment") && s["final_total_alignment"].is_number()) {
                vals.push_back(s["final_total_alignment"].get<double>());
            }
        }
        out["runs"] = runs;
        if (!vals.empty()) {
            double m = 0.0, sq = 0.0;
            for (double v : vals) m += v;
            m /= static_cast<double>(vals.size());
            for (double v : vals) sq += (v - m) * (v - m);
            const double se = vals.size() > 1 ? std::sqrt(sq / (vals.size() - 1.0) / vals.size()) : 0.0;
            out["final_total_alignment"] = {{"mean", m}, {"stderr", se}, {"n", vals.size()}};
        }
    }

    if (fs::exists(dir / "grid.csv")) {
        const RunRecord g = read_record_csv(dir / "grid.csv");
        std::map<std::pair<double, double>, std::vector<double>> cells;
        std::vector<std::pair<double, double>> order;
        for (const auto& row : g.rows()) {
            const auto key = std::make_pair(row[g.index("axis1")], row[g.index("axis2")]);
            if (!cells.count(key)) order.push_back(key);
            const double v = row[g.index("total_alignment")];
            auto& vec = cells[key];
            if (std::isfinite(v)) vec.push_back(v);
        }
        json grid = json::array();
        for (const auto& key : order) {
            const auto& v = cells[key];
            double m = 0.0, sq = 0.0;
            for (double x : v) m += x;
            if (!v.empty()) m /= static_cast<double>(v.size());
            for (double x : v) sq += (x - m) * (x - m);
            const double se = v.size() > 1 ? std::sqrt(sq / (v.size() - 1.0) / v.size()) : 0.0;
            grid.push_back({{"axis1", key.first},
                            {"axis2", key.second},
                            {"mean", v.empty() ? json(nullptr) : json(m)},
                            {"stderr", se},
                            {"n", v.size()}});
        }
        out["grid"] = grid;
    }
    if (!out.contains("runs") && !out.contains("grid") && !out.contains("manifest")) {
        throw IoError("no results found in " + dir.string());
    }
    return out;
}

} // namespace nta
