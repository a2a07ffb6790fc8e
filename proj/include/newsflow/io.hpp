#pragma once
// Small JSONL/CSV helpers shared by the pipeline stages. Every file
// format here is line-oriented so errors can name the offending line.

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "newsflow/numerics.hpp"

namespace newsflow {

using json = nlohmann::json;

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path);
    return in;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    return out;
}

// Calls fn(line_number, parsed_json) for every non-empty line.
inline void read_jsonl(const std::string& path,
                       const std::function<void(int, const json&)>& fn) {
    auto in = open_input(path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded())
            throw data_error(path + ":" + std::to_string(line_no) + ": malformed JSON record");
        fn(line_no, rec);
    }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

// Round-trip double formatting; identical doubles print identically,
// which the byte-identical-output contract relies on.
inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s, const std::string& where) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw data_error(where + ": bad number '" + s + "'");
    }
}

inline json vec_to_json(const Vec& v) { return json(v); }

inline Vec vec_from_json(const json& j, const std::string& where) {
    if (!j.is_array()) throw data_error(where + ": expected array");
    Vec v;
    v.reserve(j.size());
    for (const auto& x : j) {
        if (!x.is_number()) throw data_error(where + ": expected numeric array");
        v.push_back(x.get<double>());
    }
    return v;
}

}  // namespace newsflow
