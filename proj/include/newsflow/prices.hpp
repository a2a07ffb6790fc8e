#pragma once
// Close-price ingestion, the up/down labeling rule, and the
// log-return ambiguity filter.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "newsflow/io.hpp"
#include "newsflow/numerics.hpp"

namespace newsflow {

// Per-ticker close prices over its trading calendar.
// Dates are ISO "YYYY-MM-DD" strings, strictly increasing; closes > 0.
struct PriceSeries {
    std::string ticker;
    std::vector<std::string> dates;
    Vec close;

    size_t size() const { return dates.size(); }
};

// y = 1 if p_t >= p_prev else 0. Ties count as "up".
inline int label(double p_t, double p_prev) {
    if (!(p_t > 0.0) || !(p_prev > 0.0))
        throw data_error("label: prices must be positive");
    return p_t >= p_prev ? 1 : 0;
}

// Retains day t iff it has a prior trading day and
// |ln(p_t / p_{t-1})| >= threshold. Threshold 0 keeps every eligible day.
inline std::vector<std::string> ambiguity_filter(const PriceSeries& series,
                                                 double threshold) {
    if (threshold < 0.0) throw data_error("ambiguity_filter: negative threshold");
    std::vector<std::string> retained;
    for (size_t t = 1; t < series.size(); ++t) {
        double r = std::log(series.close[t] / series.close[t - 1]);
        if (std::abs(r) >= threshold) retained.push_back(series.dates[t]);
    }
    return retained;
}

// CSV with header "ticker,date,close". Rows may arrive in any order;
// each series is sorted by date and validated.
inline std::map<std::string, PriceSeries> load_prices_csv(const std::string& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"ticker", "date", "close"})
        throw data_error(path + ": expected header 'ticker,date,close'");

    std::map<std::string, std::vector<std::pair<std::string, double>>> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 3)
            throw data_error(path + ":" + std::to_string(line_no) + ": expected 3 fields");
        double close = parse_double(f[2], path + ":" + std::to_string(line_no));
        rows[f[0]].emplace_back(f[1], close);
    }

    std::map<std::string, PriceSeries> out;
    for (auto& [ticker, pairs] : rows) {
        std::sort(pairs.begin(), pairs.end());
        PriceSeries s;
        s.ticker = ticker;
        for (auto& [date, close] : pairs) {
            if (!s.dates.empty() && s.dates.back() == date)
                throw data_error(path + ": duplicate date " + date + " for " + ticker);
            if (!(close > 0.0))
                throw data_error(path + ": non-positive close for " + ticker + " " + date);
            s.dates.push_back(date);
            s.close.push_back(close);
        }
        out.emplace(ticker, std::move(s));
    }
    return out;
}

inline void save_prices_csv(const std::string& path,
                            const std::map<std::string, PriceSeries>& prices) {
    auto out = open_output(path);
    out << "ticker,date,close\n";
    for (const auto& [ticker, s] : prices)
        for (size_t t = 0; t < s.size(); ++t)
            out << ticker << ',' << s.dates[t] << ',' << fmt_double(s.close[t]) << '\n';
}

}  // namespace newsflow
