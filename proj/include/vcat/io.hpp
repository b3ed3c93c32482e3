#pragma once

// CSV and JSON-sidecar plumbing shared by the trainer, the evaluation
// harness, and the CLI. All floating-point output uses %.17g so a written
// file reloads to bit-identical doubles.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vcat/errors.hpp"
#include "vcat/trainer.hpp"

namespace vcat {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

inline void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create directory " + dir.string() + ": " + ec.message());
}

// Append-only CSV writer. The header is written once at construction; a cell
// containing a comma, quote, or newline is quoted.
class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path), columns_(header.size()) {
        if (!out_) throw ConfigError("cannot open " + path.string() + " for writing");
        write_row(header);
    }

    void write_row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_)
            throw UsageError("csv row has " + std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(columns_));
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << escape(cells[i]);
        }
        out_ << '\n';
    }

    void flush() { out_.flush(); }

  private:
    static std::string escape(const std::string& cell) {
        if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
        std::string quoted = "\"";
        for (char c : cell) {
            if (c == '"') quoted += '"';
            quoted += c;
        }
        quoted += '"';
        return quoted;
    }

    std::ofstream out_;
    std::size_t columns_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else {
            cell += c;
        }
    }
    if (quoted) throw FormatError("csv: unterminated quote");
    cells.push_back(cell);
    return cells;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
        std::vector<std::string> cells = split_csv_line(line);
        if (first) {
            table.header = cells;
            first = false;
        } else {
            if (cells.size() != table.header.size())
                throw FormatError("csv: row width " + std::to_string(cells.size()) +
                                  " does not match header width " +
                                  std::to_string(table.header.size()));
            table.rows.push_back(std::move(cells));
        }
    }
    if (first) throw FormatError("csv: missing header in " + path.string());
    return table;
}

inline const std::vector<std::string>& metrics_csv_header() {
    static const std::vector<std::string> h = {"iteration",       "episodes",   "crash_rate",
                                              "mean_r_ins_raw",  "policy_loss", "van_loss",
                                              "rnd_loss",        "wall_time_ms"};
    return h;
}

inline void write_metrics_csv(const std::filesystem::path& path,
                              const std::vector<MetricsRow>& rows) {
    CsvWriter csv(path, metrics_csv_header());
    for (const MetricsRow& r : rows)
        csv.write_row({std::to_string(r.iteration), std::to_string(r.episodes),
                       format_double(r.crash_rate), format_double(r.mean_r_ins_raw),
                       format_double(r.policy_loss), format_double(r.van_loss),
                       format_double(r.rnd_loss), std::to_string(r.wall_time_ms)});
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("bad json in " + path.string() + ": " + e.what());
    }
    return j;
}

}  // namespace vcat
