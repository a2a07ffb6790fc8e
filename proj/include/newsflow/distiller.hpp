#pragma once
// The text feature distiller: dot-product attention of a day's article
// key vectors against one stock embedding, softmax weighting, and the
// weighted sum of value vectors that yields the day's market vector.
// Windows of consecutive market vectors become classifier samples.

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "newsflow/embeddings.hpp"
#include "newsflow/numerics.hpp"
#include "newsflow/prices.hpp"

namespace newsflow {

struct StockEmbedding {
    std::string ticker;
    Vec s;  // same dimension as the key vectors
};

// All articles of one calendar day, as (key, value) pairs.
struct DayArticles {
    std::string date;
    std::vector<KeyValuePair> pairs;  // may be empty
};

struct MarketVector {
    std::string date;
    std::string ticker;
    Vec m;
};

enum class Mode { classification, prediction };

inline std::string to_string(Mode m) {
    return m == Mode::classification ? "classification" : "prediction";
}

inline Mode mode_from_string(const std::string& s) {
    if (s == "classification") return Mode::classification;
    if (s == "prediction") return Mode::prediction;
    throw data_error("unknown mode '" + s + "'");
}

// One classifier sample. In classification mode the input covers
// trading days [t-s+1, t] (s vectors); in prediction mode it covers
// [t-s+1, t-1] (s-1 vectors). The label is always day t's movement.
struct MarketWindow {
    std::string ticker;
    std::string end_date;       // day t
    std::vector<Vec> sequence;  // chronological market vectors
    int label = 0;              // y_t
    Mode mode = Mode::classification;
    bool zero_filled = false;   // an input day had no articles and no prior vector
};

// Number of input vectors a window carries for window size s.
inline int window_input_len(int s, Mode mode) {
    return mode == Mode::classification ? s : s - 1;
}

// ---------------------------------------------------------------------
//  Attention
// ---------------------------------------------------------------------
inline double attention_score(const Vec& key, const StockEmbedding& stock) {
    if (key.size() != stock.s.size())
        throw data_error("attention_score: dimension mismatch");
    return dot(key, stock.s);
}

inline Vec article_weights(const Vec& scores) {
    if (scores.empty()) throw data_error("article_weights: no scores");
    return softmax(scores);
}

inline Vec market_vector(const Vec& weights, const std::vector<Vec>& values) {
    if (weights.size() != values.size())
        throw data_error("market_vector: weight/value count mismatch");
    if (values.empty()) throw data_error("market_vector: no values");
    Vec m(values[0].size(), 0.0);
    for (size_t i = 0; i < values.size(); ++i) {
        if (values[i].size() != m.size())
            throw data_error("market_vector: inconsistent value dimensions");
        const double w = weights[i];
        for (size_t d = 0; d < m.size(); ++d) m[d] += w * values[i][d];
    }
    require_finite(m, "market vector");
    return m;
}

// ---------------------------------------------------------------------
//  Per-day market vectors over one stock's trading calendar.
//  Articles on non-trading days roll forward to the next trading day;
//  a trading day without articles carries the previous day's vector,
//  or a flagged zero vector when there is none.
// ---------------------------------------------------------------------
struct DailyMarketVectors {
    std::vector<Vec> m;                // one per trading day, aligned with prices
    std::vector<uint8_t> zero_filled;  // 1 where the zero-vector fallback was used
    int value_dim = 0;
};

inline DailyMarketVectors daily_market_vectors(const std::vector<DayArticles>& days,
                                               const PriceSeries& prices,
                                               const StockEmbedding& stock) {
    int value_dim = 0;
    for (const auto& day : days)
        if (!day.pairs.empty()) {
            value_dim = static_cast<int>(day.pairs[0].value.size());
            break;
        }
    if (value_dim == 0) throw data_error("daily_market_vectors: no articles at all");

    // pool article pairs onto the next trading day
    std::vector<std::vector<const KeyValuePair*>> pooled(prices.size());
    for (const auto& day : days) {
        auto it = std::lower_bound(prices.dates.begin(), prices.dates.end(), day.date);
        if (it == prices.dates.end()) continue;  // after the last trading day
        const size_t idx = static_cast<size_t>(it - prices.dates.begin());
        for (const auto& p : day.pairs) pooled[idx].push_back(&p);
    }

    DailyMarketVectors out;
    out.value_dim = value_dim;
    out.m.resize(prices.size());
    out.zero_filled.assign(prices.size(), 0);
    // have_real flips once a day with articles has produced a market
    // vector; until then empty days get the flagged zero fallback.
    bool have_real = false;
    Vec prev;
    for (size_t t = 0; t < prices.size(); ++t) {
        if (!pooled[t].empty()) {
            Vec scores;
            scores.reserve(pooled[t].size());
            std::vector<Vec> values;
            values.reserve(pooled[t].size());
            for (const KeyValuePair* p : pooled[t]) {
                scores.push_back(attention_score(p->key, stock));
                values.push_back(p->value);
            }
            out.m[t] = market_vector(article_weights(scores), values);
            prev = out.m[t];
            have_real = true;
        } else if (have_real) {
            out.m[t] = prev;
        } else {
            out.m[t] = Vec(value_dim, 0.0);
            out.zero_filled[t] = 1;
        }
    }
    return out;
}

// Windows over precomputed per-day market vectors (used both directly
// and when rebuilding from the market-vector cache with a new s/mode).
inline std::vector<MarketWindow> assemble_windows(const DailyMarketVectors& daily,
                                                  const PriceSeries& prices,
                                                  int s, Mode mode) {
    if (s < 1) throw data_error("assemble_windows: window size must be >= 1");
    if (mode == Mode::prediction && s < 2)
        throw data_error("assemble_windows: prediction mode needs window >= 2");
    std::vector<MarketWindow> out;
    const size_t n = prices.size();
    if (n < static_cast<size_t>(s)) return out;  // not an error: no full window fits

    const int in_len = window_input_len(s, mode);
    for (size_t t = std::max<size_t>(s - 1, 1); t < n; ++t) {
        const size_t first = t - s + 1;
        MarketWindow w;
        w.ticker = prices.ticker;
        w.end_date = prices.dates[t];
        w.mode = mode;
        w.label = label(prices.close[t], prices.close[t - 1]);
        w.sequence.reserve(in_len);
        for (int k = 0; k < in_len; ++k) {
            w.sequence.push_back(daily.m[first + k]);
            if (daily.zero_filled[first + k]) w.zero_filled = true;
        }
        out.push_back(std::move(w));
    }
    return out;
}

inline std::vector<MarketWindow> build_windows(const std::vector<DayArticles>& days,
                                               const PriceSeries& prices,
                                               const StockEmbedding& stock,
                                               int s, Mode mode) {
    return assemble_windows(daily_market_vectors(days, prices, stock), prices, s, mode);
}

// ---------------------------------------------------------------------
//  Stock-embedding file: CSV with header "ticker,e0,...,e59"
// ---------------------------------------------------------------------
inline std::map<std::string, StockEmbedding> load_stock_embeddings(const std::string& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw data_error(path + ": empty file");
    auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "ticker" || header[1] != "e0")
        throw data_error(path + ": expected header 'ticker,e0,...'");
    const size_t dim = header.size() - 1;

    std::map<std::string, StockEmbedding> out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != dim + 1)
            throw data_error(path + ":" + std::to_string(line_no) + ": field count mismatch");
        StockEmbedding e;
        e.ticker = f[0];
        e.s.reserve(dim);
        for (size_t i = 1; i < f.size(); ++i)
            e.s.push_back(parse_double(f[i], path + ":" + std::to_string(line_no)));
        require_finite(e.s, "stock embedding " + e.ticker);
        out.emplace(e.ticker, std::move(e));
    }
    return out;
}

inline void save_stock_embeddings(const std::string& path,
                                  const std::map<std::string, StockEmbedding>& embs) {
    auto out = open_output(path);
    out << "ticker";
    size_t dim = embs.empty() ? 0 : embs.begin()->second.s.size();
    for (size_t i = 0; i < dim; ++i) out << ",e" << i;
    out << '\n';
    for (const auto& [ticker, e] : embs) {
        out << ticker;
        for (double v : e.s) out << ',' << fmt_double(v);
        out << '\n';
    }
}

// Seeded random unit-vector fallback for when no trained embeddings
// are available.
inline std::map<std::string, StockEmbedding> random_stock_embeddings(
    const std::vector<std::string>& tickers, int dim, uint64_t seed) {
    std::map<std::string, StockEmbedding> out;
    Rng rng(seed);
    for (const auto& ticker : tickers) {
        StockEmbedding e;
        e.ticker = ticker;
        e.s.resize(dim);
        double norm2 = 0.0;
        for (double& x : e.s) {
            x = rng.gaussian();
            norm2 += x * x;
        }
        const double inv = 1.0 / std::sqrt(norm2);
        for (double& x : e.s) x *= inv;
        out.emplace(ticker, std::move(e));
    }
    return out;
}

// ---------------------------------------------------------------------
//  Market-vector cache: JSONL {"ticker","date","vec"}
// ---------------------------------------------------------------------
inline void save_market_vectors(const std::string& path,
                                const std::map<std::string, DailyMarketVectors>& daily,
                                const std::map<std::string, PriceSeries>& prices) {
    auto out = open_output(path);
    for (const auto& [ticker, d] : daily) {
        const auto& series = prices.at(ticker);
        for (size_t t = 0; t < series.size(); ++t) {
            json rec{{"ticker", ticker}, {"date", series.dates[t]}, {"vec", vec_to_json(d.m[t])}};
            out << rec.dump() << '\n';
        }
    }
}

// Returns ticker -> date -> vector.
inline std::map<std::string, std::map<std::string, Vec>> load_market_vectors(
    const std::string& path) {
    std::map<std::string, std::map<std::string, Vec>> out;
    read_jsonl(path, [&](int line_no, const json& rec) {
        const std::string where = path + ":" + std::to_string(line_no);
        if (!rec.contains("ticker") || !rec.contains("date") || !rec.contains("vec"))
            throw data_error(where + ": record needs ticker/date/vec");
        out[rec["ticker"].get<std::string>()][rec["date"].get<std::string>()] =
            vec_from_json(rec["vec"], where);
    });
    return out;
}

}  // namespace newsflow
