#pragma once

// Two-arm trial data from CSV with header columns time, status, group.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "survq/error.hpp"
#include "survq/scenario.hpp"
#include "survq/survival.hpp"

namespace survq {

struct Dataset {
    TwoArmData data;
    std::vector<std::string> warnings;
    std::size_t rows = 0;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace detail

/// Status is 1 (event) or 0 (censored); group is 1 or 2. Columns are found
/// by header name; other columns are ignored with a warning.
inline Dataset parse_dataset(std::istream& in, const std::string& source = "data") {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!detail::trim(line).empty()) {
            header = detail::split_csv_line(line);
            break;
        }
    }
    if (header.empty()) throw InvalidInput(source + ": empty file, expected header time,status,group");
    if (!header.front().empty() && header.front().rfind("\xEF\xBB\xBF", 0) == 0) header.front().erase(0, 3);

    Dataset ds{{SurvivalSample({0.0}, {false}), SurvivalSample({0.0}, {false})}, {}, 0};
    long col_time = -1, col_status = -1, col_group = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& h = header[c];
        long* slot = h == "time" ? &col_time : h == "status" ? &col_status : h == "group" ? &col_group : nullptr;
        if (!slot) {
            ds.warnings.push_back("ignoring extra column '" + h + "'");
            continue;
        }
        if (*slot >= 0) throw InvalidInput(source + ":" + std::to_string(line_no) + ": duplicate column '" + h + "'");
        *slot = static_cast<long>(c);
    }
    if (col_time < 0 || col_status < 0 || col_group < 0) {
        throw InvalidInput(source + ":" + std::to_string(line_no) + ": header must contain time, status and group");
    }

    std::vector<double> t1, t2;
    std::vector<bool> e1, e2;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        const std::vector<std::string> cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) {
            throw InvalidInput(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                               std::to_string(cells.size()));
        }
        const double time = detail::parse_double(cells[static_cast<std::size_t>(col_time)], where + " (time)");
        if (time < 0.0) throw InvalidInput(where + ": time must be non-negative");
        const std::string& st = cells[static_cast<std::size_t>(col_status)];
        const std::string& gr = cells[static_cast<std::size_t>(col_group)];
        if (st != "0" && st != "1") throw InvalidInput(where + ": status must be 0 or 1, got '" + st + "'");
        if (gr != "1" && gr != "2") throw InvalidInput(where + ": group must be 1 or 2, got '" + gr + "'");
        (gr == "1" ? t1 : t2).push_back(time);
        (gr == "1" ? e1 : e2).push_back(st == "1");
        ++ds.rows;
    }
    if (t1.empty() || t2.empty()) {
        throw InvalidInput(source + ": two groups required (found " + std::to_string(t1.size()) + " rows in group 1, " +
                           std::to_string(t2.size()) + " in group 2)");
    }
    ds.data = TwoArmData{SurvivalSample(std::move(t1), std::move(e1)), SurvivalSample(std::move(t2), std::move(e2))};
    return ds;
}

inline Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open data file '" + path + "'");
    return parse_dataset(in, path);
}

inline void write_dataset(std::ostream& out, const TwoArmData& data) {
    out << "time,status,group\n";
    out << std::setprecision(17);
    const std::array<const SurvivalSample*, 2> arms{&data.arm1, &data.arm2};
    for (int k = 0; k < 2; ++k) {
        for (std::size_t i = 0; i < arms[k]->size(); ++i) {
            out << arms[k]->times()[i] << ',' << (arms[k]->events()[i] ? 1 : 0) << ',' << (k + 1) << '\n';
        }
    }
}

/// 64-bit FNV-1a of a byte string, used to fingerprint input files.
inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace survq
