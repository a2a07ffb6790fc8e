#pragma once
// Preparation pipeline: corpus -> CBOW + TFIDF key vectors, encoder
// outputs -> PCA value vectors, then per-stock market vectors and
// window samples. (key, value) pairs and market vectors are computed
// once and cached.

#include <map>
#include <string>
#include <vector>

#include "newsflow/dataset.hpp"
#include "newsflow/distiller.hpp"
#include "newsflow/embeddings.hpp"

namespace newsflow {

struct PipelineConfig {
    int key_dim = 60;
    int value_dim = 1024;  // raw encoder dimension
    int pca_dim = 256;
    int cbow_window = 5;
    int cbow_epochs = 5;
    int cbow_negatives = 5;
    double cbow_lr = 0.025;
    int cbow_min_count = 1;
    // fixed by default so cached artifacts align between separately
    // invoked commands; the run seed steers splits and training instead
    uint64_t cbow_seed = 0x6e657773;

    CbowConfig cbow() const {
        CbowConfig c;
        c.dim = key_dim;
        c.context_window = cbow_window;
        c.epochs = cbow_epochs;
        c.negatives = cbow_negatives;
        c.lr = cbow_lr;
        c.min_count = cbow_min_count;
        c.seed = cbow_seed;
        return c;
    }
};

struct DistillResult {
    WordEmbeddings embeddings;
    PcaModel pca;
    std::vector<KeyValuePair> pairs;            // sorted by (date, id)
    std::vector<std::string> missing_values;    // articles without encoder output
    std::vector<std::string> skipped_articles;  // no in-vocab tokens
};

// Corpus + encoder outputs -> per-article (key, value) pairs.
inline DistillResult distill_corpus(const Corpus& corpus,
                                    const std::map<std::string, Vec>& values,
                                    const PipelineConfig& cfg) {
    DistillResult out;
    out.embeddings = train_cbow(corpus, cfg.cbow());
    TfidfWeights tfidf = compute_tfidf(corpus);

    std::vector<Vec> fit_set;
    for (const auto& h : corpus.headlines) {
        auto it = values.find(h.id);
        if (it != values.end()) fit_set.push_back(it->second);
    }
    out.pca = pca_fit(fit_set, cfg.pca_dim);

    for (const auto& h : corpus.headlines) {
        auto it = values.find(h.id);
        if (it == values.end()) {
            out.missing_values.push_back(h.id);
            continue;
        }
        KeyValuePair p;
        p.article_id = h.id;
        p.date = h.date;
        try {
            p.key = key_vector(h.tokens, out.embeddings, tfidf);
        } catch (const data_error&) {
            out.skipped_articles.push_back(h.id);
            continue;
        }
        p.value = pca_transform(out.pca, it->second);
        out.pairs.push_back(std::move(p));
    }
    std::sort(out.pairs.begin(), out.pairs.end(), [](const auto& a, const auto& b) {
        return a.date != b.date ? a.date < b.date : a.article_id < b.article_id;
    });
    return out;
}

inline std::vector<DayArticles> group_by_date(const std::vector<KeyValuePair>& pairs) {
    std::vector<DayArticles> days;
    for (const auto& p : pairs) {
        if (days.empty() || days.back().date != p.date) days.push_back({p.date, {}});
        days.back().pairs.push_back(p);
    }
    return days;
}

// Per-ticker daily market vectors over each price calendar.
inline std::map<std::string, DailyMarketVectors> distill_markets(
    const std::vector<DayArticles>& days,
    const std::map<std::string, PriceSeries>& prices,
    const std::map<std::string, StockEmbedding>& stocks) {
    std::map<std::string, DailyMarketVectors> out;
    for (const auto& [ticker, series] : prices) {
        auto it = stocks.find(ticker);
        if (it == stocks.end()) throw data_error("no stock embedding for ticker " + ticker);
        out.emplace(ticker, daily_market_vectors(days, series, it->second));
    }
    return out;
}

// Windows for every ticker, ambiguity-filtered, in ticker order.
inline std::vector<MarketWindow> build_sample_set(
    const std::map<std::string, DailyMarketVectors>& daily,
    const std::map<std::string, PriceSeries>& prices, int s, Mode mode,
    double ambiguity_threshold) {
    std::vector<MarketWindow> all;
    for (const auto& [ticker, d] : daily) {
        auto windows = assemble_windows(d, prices.at(ticker), s, mode);
        for (auto& w : windows) all.push_back(std::move(w));
    }
    return apply_ambiguity_filter(std::move(all), prices, ambiguity_threshold);
}

// The full distillation from inputs to samples, used by the fused
// train path and by experiments that rebuild from raw stages.
struct PreparedData {
    DistillResult distilled;
    std::vector<DayArticles> days;
    std::map<std::string, PriceSeries> prices;
    std::map<std::string, StockEmbedding> stocks;
    std::map<std::string, DailyMarketVectors> daily;
};

inline PreparedData prepare_data(const Corpus& corpus,
                                 const std::map<std::string, Vec>& values,
                                 std::map<std::string, PriceSeries> prices,
                                 std::map<std::string, StockEmbedding> stocks,
                                 const PipelineConfig& cfg) {
    PreparedData out;
    out.distilled = distill_corpus(corpus, values, cfg);
    out.days = group_by_date(out.distilled.pairs);
    out.prices = std::move(prices);
    out.stocks = std::move(stocks);
    out.daily = distill_markets(out.days, out.prices, out.stocks);
    return out;
}

// Per-ticker ambiguity calibration: sample counts per threshold, so a
// user holding the real dataset can match a published total.
inline std::vector<std::pair<double, long long>> calibrate_threshold(
    const std::map<std::string, PriceSeries>& prices, int s, Mode mode,
    const std::vector<double>& thresholds) {
    if (mode == Mode::prediction && s < 2)
        throw data_error("calibrate_threshold: prediction mode needs window >= 2");
    std::vector<std::pair<double, long long>> out;
    for (double threshold : thresholds) {
        long long count = 0;
        for (const auto& [ticker, series] : prices) {
            if (series.size() < static_cast<size_t>(s)) continue;
            for (size_t t = std::max<size_t>(s - 1, 1); t < series.size(); ++t) {
                const double r = std::log(series.close[t] / series.close[t - 1]);
                if (threshold <= 0.0 || std::abs(r) >= threshold) ++count;
            }
        }
        out.emplace_back(threshold, count);
    }
    return out;
}

}  // namespace newsflow
