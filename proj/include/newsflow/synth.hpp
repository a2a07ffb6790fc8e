#pragma once
// Desk-scale synthetic dataset generator. Every trading day each
// pseudo-stock gets one article whose value vector carries a linear
// signal aligned with that (day, stock) label, and whose single token
// ties the article to the stock. Stock embeddings are derived from the
// same CBOW vectors the preparation stage will train, so attention
// routes each stock to its own article and the day-t market vector
// provably controls the label in classification mode. Prediction-mode
// windows exclude day t and carry no usable signal.

#include <filesystem>
#include <string>
#include <vector>

#include "newsflow/distiller.hpp"
#include "newsflow/embeddings.hpp"
#include "newsflow/prices.hpp"

namespace newsflow {

namespace detail {

// civil-date <-> day-serial conversion (days since 1970-01-01)
inline long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

inline void civil_from_days(long z, int& y, int& m, int& d) {
    z += 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long yy = static_cast<long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

inline std::string iso_date(long serial) {
    int y, m, d;
    civil_from_days(serial, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

// next n weekdays starting at 2018-01-02
inline std::vector<std::string> trading_calendar(int n) {
    std::vector<std::string> dates;
    long serial = days_from_civil(2018, 1, 2);
    while (static_cast<int>(dates.size()) < n) {
        const int weekday = static_cast<int>(((serial % 7) + 7 + 4) % 7);  // 0 = Sunday
        if (weekday != 0 && weekday != 6) dates.push_back(iso_date(serial));
        ++serial;
    }
    return dates;
}

}  // namespace detail

struct SynthConfig {
    int n_stocks = 50;
    int n_days = 65;          // trading days; windows/stock = n_days - max(s-1, 1)
    int value_dim = 1024;     // raw encoder dimension
    double signal = 6.0;      // magnitude of the label-aligned component
    double up_prob = 0.55;    // class prior, echoing the 55/45 balance
    double attention_sharpness = 25.0;
    double covariate_spread = 0.0;  // log10 half-range of per-feature scales
    double daily_return = 0.01;
    uint64_t seed = 1;
};

struct SynthDataset {
    std::vector<std::pair<std::string, std::pair<std::string, std::string>>> headlines;
    std::map<std::string, Vec> values;
    std::map<std::string, PriceSeries> prices;
    std::map<std::string, StockEmbedding> stocks;
    std::vector<std::string> dates;
};

// cbow must match the configuration the preparation stage will train
// with, since the stock embeddings are derived from those vectors.
inline SynthDataset synth_dataset(const SynthConfig& cfg, const CbowConfig& cbow) {
    if (cfg.n_stocks < 1 || cfg.n_days < 3) throw data_error("synth: need stocks and days");
    if (!(cfg.up_prob > 0.0 && cfg.up_prob < 1.0)) throw data_error("synth: up_prob in (0,1)");

    SynthDataset out;
    out.dates = detail::trading_calendar(cfg.n_days);
    Rng rng(cfg.seed);

    // label coins, one per (day, stock)
    std::vector<std::vector<int>> coin(cfg.n_days, std::vector<int>(cfg.n_stocks));
    for (int t = 0; t < cfg.n_days; ++t)
        for (int j = 0; j < cfg.n_stocks; ++j)
            coin[t][j] = rng.uniform() < cfg.up_prob ? 1 : 0;

    // shared signal direction and per-feature scales
    Vec u(cfg.value_dim);
    double norm2 = 0.0;
    for (double& x : u) {
        x = rng.gaussian();
        norm2 += x * x;
    }
    for (double& x : u) x /= std::sqrt(norm2);
    Vec feature_scale(cfg.value_dim, 1.0);
    if (cfg.covariate_spread > 0.0)
        for (double& s : feature_scale)
            s = std::pow(10.0, cfg.covariate_spread * rng.uniform(-1.0, 1.0));

    // headlines and value vectors: article (t, j) carries the day-t coin
    for (int t = 0; t < cfg.n_days; ++t) {
        for (int j = 0; j < cfg.n_stocks; ++j) {
            const std::string id = "d" + std::to_string(t) + "_s" + std::to_string(j);
            const std::string token = "stk" + std::to_string(j);
            out.headlines.push_back({id, {out.dates[t], token + " " + token + " " + token}});
            Vec v(cfg.value_dim);
            const double sgn = coin[t][j] ? 1.0 : -1.0;
            for (int d = 0; d < cfg.value_dim; ++d)
                v[d] = feature_scale[d] * (rng.gaussian() + cfg.signal * sgn * u[d]);
            out.values.emplace(id, std::move(v));
        }
    }

    // prices: the return into day t realizes the day-t coin
    for (int j = 0; j < cfg.n_stocks; ++j) {
        PriceSeries s;
        s.ticker = "S" + std::to_string(j);
        double p = 100.0;
        for (int t = 0; t < cfg.n_days; ++t) {
            if (t > 0) p *= std::exp(coin[t][j] ? cfg.daily_return : -cfg.daily_return);
            s.dates.push_back(out.dates[t]);
            s.close.push_back(p);
        }
        out.prices.emplace(s.ticker, std::move(s));
    }

    // stock embeddings from the same CBOW run prepare will reproduce:
    // s_j = sharpness * (w_j - mean) / (w_j . (w_j - mean)), so the
    // self-attention score is exactly `sharpness` while cross scores
    // stay far below it. Centering removes the component the negative
    // sampling updates share across all token vectors.
    Corpus corpus = corpus_from_records(out.headlines);
    WordEmbeddings emb = train_cbow(corpus, cbow);
    Vec mean(emb.dim(), 0.0);
    if (cfg.n_stocks >= 3) {
        for (int j = 0; j < cfg.n_stocks; ++j) {
            const double* w = emb.vector_of("stk" + std::to_string(j));
            if (!w) throw data_error("synth: token missing from cbow vocabulary");
            for (int d = 0; d < emb.dim(); ++d) mean[d] += w[d] / cfg.n_stocks;
        }
    }
    for (int j = 0; j < cfg.n_stocks; ++j) {
        const std::string ticker = "S" + std::to_string(j);
        const double* w = emb.vector_of("stk" + std::to_string(j));
        if (!w) throw data_error("synth: token missing from cbow vocabulary");
        StockEmbedding e;
        e.ticker = ticker;
        e.s.resize(emb.dim());
        for (int d = 0; d < emb.dim(); ++d) e.s[d] = w[d] - mean[d];
        const double denom = dot(w, e.s.data(), emb.dim());
        if (std::abs(denom) < 1e-12) throw data_error("synth: degenerate stock token vector");
        const double scale = cfg.attention_sharpness / denom;
        for (double& x : e.s) x *= scale;
        out.stocks.emplace(ticker, std::move(e));
    }
    return out;
}

inline void write_synth_dataset(const SynthDataset& data, const std::string& dir) {
    std::filesystem::create_directories(dir);
    save_headlines_jsonl(dir + "/headlines.jsonl", data.headlines);
    save_value_vectors(dir + "/values.jsonl", data.values);
    save_prices_csv(dir + "/prices.csv", data.prices);
    save_stock_embeddings(dir + "/stock_embeddings.csv", data.stocks);
}

}  // namespace newsflow
