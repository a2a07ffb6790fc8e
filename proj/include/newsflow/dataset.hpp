#pragma once
// Sample management: ambiguity filtering of windows, the shuffled
// 60/20/20 split, and mini-batch iteration.
//
// Splitting is by window, exactly as the source shuffles samples, so
// overlapping windows may straddle splits. That replicates the
// upstream protocol; treat cross-split leakage accordingly.

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "newsflow/distiller.hpp"
#include "newsflow/prices.hpp"

namespace newsflow {

struct SampleSet {
    std::shared_ptr<const std::vector<MarketWindow>> base;
    std::vector<int> idx;
    std::string tag;  // train | val | test

    size_t size() const { return idx.size(); }
    const MarketWindow& operator[](size_t i) const { return (*base)[idx[i]]; }
};

struct SplitSets {
    SampleSet train, val, test;
};

// Shuffled 60/20/20 split, reproducible per seed.
inline SplitSets split(std::shared_ptr<const std::vector<MarketWindow>> samples,
                       uint64_t seed) {
    const size_t n = samples->size();
    if (n < 5) throw data_error("split: need at least 5 samples");

    std::vector<int> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
    Rng rng(seed);
    rng.shuffle(order);

    const size_t n_train = static_cast<size_t>(std::llround(0.6 * double(n)));
    const size_t n_val = static_cast<size_t>(std::llround(0.2 * double(n)));

    SplitSets out;
    out.train = {samples, {order.begin(), order.begin() + n_train}, "train"};
    out.val = {samples, {order.begin() + n_train, order.begin() + n_train + n_val}, "val"};
    out.test = {samples, {order.begin() + n_train + n_val, order.end()}, "test"};
    return out;
}

inline SplitSets split(std::vector<MarketWindow> samples, uint64_t seed) {
    return split(std::make_shared<const std::vector<MarketWindow>>(std::move(samples)), seed);
}

// Drops windows whose end-day |log-return| falls below the threshold.
inline std::vector<MarketWindow> apply_ambiguity_filter(
    std::vector<MarketWindow> windows,
    const std::map<std::string, PriceSeries>& prices, double threshold) {
    if (threshold <= 0.0) return windows;
    std::map<std::string, std::set<std::string>> retained;
    for (const auto& [ticker, series] : prices) {
        auto dates = ambiguity_filter(series, threshold);
        retained[ticker] = {dates.begin(), dates.end()};
    }
    std::vector<MarketWindow> out;
    out.reserve(windows.size());
    for (auto& w : windows) {
        auto it = retained.find(w.ticker);
        if (it != retained.end() && it->second.count(w.end_date))
            out.push_back(std::move(w));
    }
    return out;
}

// ---------------------------------------------------------------------
//  Mini-batches. Training iteration reshuffles with the caller's RNG;
//  evaluation iteration is order-stable. A trailing batch of one is
//  dropped only when shuffling, because train-mode batch norm cannot
//  normalize a single sample.
// ---------------------------------------------------------------------
struct Batch {
    std::vector<const MarketWindow*> items;

    size_t size() const { return items.size(); }
};

inline std::vector<Batch> batches(const SampleSet& set, size_t batch_size,
                                  Rng* rng, bool shuffle) {
    if (batch_size == 0) throw data_error("batches: batch size must be positive");
    std::vector<int> order(set.idx);
    if (shuffle) {
        if (!rng) throw data_error("batches: shuffling needs an RNG");
        rng->shuffle(order);
    }
    std::vector<Batch> out;
    for (size_t i = 0; i < order.size(); i += batch_size) {
        Batch b;
        const size_t end = std::min(order.size(), i + batch_size);
        for (size_t k = i; k < end; ++k) b.items.push_back(&(*set.base)[order[k]]);
        if (shuffle && b.size() == 1 && !out.empty()) continue;
        out.push_back(std::move(b));
    }
    return out;
}

// ---------------------------------------------------------------------
//  Sample cache: JSONL, one window per line
//  {"ticker","end_date","mode","label","vecs":[[..],..]}
// ---------------------------------------------------------------------
inline void save_samples(const std::string& path, const std::vector<MarketWindow>& windows) {
    auto out = open_output(path);
    for (const auto& w : windows) {
        json vecs = json::array();
        for (const auto& v : w.sequence) vecs.push_back(vec_to_json(v));
        json rec{{"ticker", w.ticker},
                 {"end_date", w.end_date},
                 {"mode", to_string(w.mode)},
                 {"label", w.label},
                 {"vecs", vecs}};
        if (w.zero_filled) rec["zero_filled"] = true;
        out << rec.dump() << '\n';
    }
}

inline std::vector<MarketWindow> load_samples(const std::string& path) {
    std::vector<MarketWindow> out;
    read_jsonl(path, [&](int line_no, const json& rec) {
        const std::string where = path + ":" + std::to_string(line_no);
        if (!rec.contains("ticker") || !rec.contains("end_date") || !rec.contains("mode") ||
            !rec.contains("label") || !rec.contains("vecs"))
            throw data_error(where + ": record needs ticker/end_date/mode/label/vecs");
        MarketWindow w;
        w.ticker = rec["ticker"].get<std::string>();
        w.end_date = rec["end_date"].get<std::string>();
        w.mode = mode_from_string(rec["mode"].get<std::string>());
        w.label = rec["label"].get<int>();
        if (w.label != 0 && w.label != 1) throw data_error(where + ": label must be 0 or 1");
        w.zero_filled = rec.value("zero_filled", false);
        for (const auto& v : rec["vecs"]) w.sequence.push_back(vec_from_json(v, where));
        if (w.sequence.empty()) throw data_error(where + ": empty window");
        out.push_back(std::move(w));
    });
    return out;
}

}  // namespace newsflow
