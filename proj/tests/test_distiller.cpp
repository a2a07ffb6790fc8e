#include <catch_amalgamated.hpp>

#include <cmath>

#include "newsflow/distiller.hpp"

using namespace newsflow;

namespace {

KeyValuePair kv(const std::string& id, const std::string& date, Vec key, Vec value) {
    return KeyValuePair{id, date, std::move(key), std::move(value)};
}

PriceSeries toy_prices() {
    PriceSeries p;
    p.ticker = "T";
    p.dates = {"2020-01-02", "2020-01-03", "2020-01-06", "2020-01-07", "2020-01-08", "2020-01-09"};
    p.close = {100.0, 101.0, 99.0, 99.0, 102.0, 100.0};
    return p;
}

double norm(const Vec& v) { return std::sqrt(dot(v, v)); }

}  // namespace

TEST_CASE("attention score is the plain dot product") {
    StockEmbedding stock{"T", {1.0, 0.0, 0.0}};
    CHECK(attention_score({0.0, 2.0, -3.0}, stock) == 0.0);  // orthogonal
    CHECK(attention_score({1.0, 0.0, 0.0}, stock) == 1.0);   // equal unit vectors

    Rng rng(8);
    for (int it = 0; it < 100; ++it) {
        Vec key(6), s(6);
        for (double& x : key) x = rng.uniform(-2.0, 2.0);
        for (double& x : s) x = rng.uniform(-2.0, 2.0);
        double direct = 0.0;
        for (int d = 0; d < 6; ++d) direct += key[d] * s[d];
        CHECK(attention_score(key, {"T", s}) == Catch::Approx(direct).margin(1e-12));
    }

    CHECK_THROWS_AS(attention_score({1.0}, stock), data_error);
}

TEST_CASE("article weights") {
    CHECK(article_weights({3.7}) == Vec{1.0});

    Vec eq = article_weights({2.0, 2.0, 2.0, 2.0});
    for (double w : eq) CHECK(w == Catch::Approx(0.25).margin(1e-15));

    // softmax(0, ln 3) = (1, 3) / 4
    Vec w = article_weights({0.0, std::log(3.0)});
    CHECK(w[0] == Catch::Approx(0.25).margin(1e-12));
    CHECK(w[1] == Catch::Approx(0.75).margin(1e-12));

    CHECK_THROWS_AS(article_weights({}), data_error);
}

TEST_CASE("market vector is the weighted sum of values") {
    SECTION("identical values are a fixed point for any weights") {
        Vec v{1.0, -2.0, 0.5};
        Vec m = market_vector({0.3, 0.7}, {v, v});
        for (size_t d = 0; d < v.size(); ++d) CHECK(m[d] == Catch::Approx(v[d]).margin(1e-15));
    }
    SECTION("degenerate weight picks one value exactly") {
        Vec m = market_vector({1.0, 0.0}, {{5.0, 6.0}, {7.0, 8.0}});
        CHECK(m == Vec{5.0, 6.0});
    }
    SECTION("matches the direct weighted sum") {
        Rng rng(12);
        Vec a(5), b(5);
        for (double& x : a) x = rng.uniform(-1.0, 1.0);
        for (double& x : b) x = rng.uniform(-1.0, 1.0);
        Vec m = market_vector({0.25, 0.75}, {a, b});
        for (int d = 0; d < 5; ++d)
            CHECK(m[d] == Catch::Approx(0.25 * a[d] + 0.75 * b[d]).margin(1e-12));
    }
    SECTION("count mismatch rejected") {
        CHECK_THROWS_AS(market_vector({1.0}, {{1.0}, {2.0}}), data_error);
    }
}

TEST_CASE("distiller invariants on random days") {
    Rng rng(77);
    for (int it = 0; it < 1000; ++it) {
        const int n_articles = 1 + static_cast<int>(rng.below(6));
        const int key_dim = 4, value_dim = 5;
        Vec scores(n_articles);
        std::vector<Vec> values(n_articles, Vec(value_dim));
        StockEmbedding stock{"T", Vec(key_dim)};
        for (double& x : stock.s) x = rng.uniform(-1.0, 1.0);
        std::vector<Vec> keys(n_articles, Vec(key_dim));
        for (int i = 0; i < n_articles; ++i) {
            for (double& x : keys[i]) x = rng.uniform(-2.0, 2.0);
            for (double& x : values[i]) x = rng.uniform(-3.0, 3.0);
            scores[i] = attention_score(keys[i], stock);
        }
        Vec weights = article_weights(scores);
        Vec m = market_vector(weights, values);

        // constant shift of every score leaves the market vector unchanged
        Vec shifted(scores);
        const double c = rng.uniform(-10.0, 10.0);
        for (double& x : shifted) x += c;
        Vec m2 = market_vector(article_weights(shifted), values);
        for (int d = 0; d < value_dim; ++d)
            CHECK(m2[d] == Catch::Approx(m[d]).margin(1e-12));

        // positive scaling of the stock embedding preserves the weight ranking
        StockEmbedding scaled{"T", stock.s};
        const double k = rng.uniform(0.1, 5.0);
        for (double& x : scaled.s) x *= k;
        Vec scaled_scores(n_articles);
        for (int i = 0; i < n_articles; ++i)
            scaled_scores[i] = attention_score(keys[i], scaled);
        Vec w1 = article_weights(scores), w2 = article_weights(scaled_scores);
        const auto argmax = [](const Vec& v) {
            return std::max_element(v.begin(), v.end()) - v.begin();
        };
        CHECK(argmax(w1) == argmax(w2));

        // convex-combination bound
        double max_norm = 0.0;
        for (const auto& v : values) max_norm = std::max(max_norm, norm(v));
        CHECK(norm(m) <= max_norm + 1e-12);
    }
}

TEST_CASE("daily market vectors pool, carry forward, and zero-fill") {
    PriceSeries prices = toy_prices();
    StockEmbedding stock{"T", {1.0, 0.0}};

    // two articles on the first trading day with known attention
    std::vector<DayArticles> days;
    days.push_back({"2020-01-02",
                    {kv("a", "2020-01-02", {0.0, 1.0}, {1.0, 0.0}),
                     kv("b", "2020-01-02", {std::log(3.0), 0.0}, {0.0, 1.0})}});
    // Saturday article pools onto the next trading day (01-06)
    days.push_back({"2020-01-04", {kv("c", "2020-01-04", {1.0, 0.0}, {5.0, 5.0})}});
    // article after the last trading day is dropped
    days.push_back({"2020-01-10", {kv("d", "2020-01-10", {1.0, 0.0}, {9.0, 9.0})}});

    DailyMarketVectors daily = daily_market_vectors(days, prices, stock);
    REQUIRE(daily.m.size() == prices.size());

    // day 0: scores are (0, ln 3) -> weights (0.25, 0.75)
    CHECK(daily.m[0][0] == Catch::Approx(0.25).margin(1e-12));
    CHECK(daily.m[0][1] == Catch::Approx(0.75).margin(1e-12));
    CHECK(daily.zero_filled[0] == 0);

    // day 1 has no articles: carries day 0
    CHECK(daily.m[1] == daily.m[0]);
    CHECK(daily.zero_filled[1] == 0);

    // day 2 got the pooled Saturday article
    CHECK(daily.m[2][0] == Catch::Approx(5.0).margin(1e-12));
    CHECK(daily.m[2][1] == Catch::Approx(5.0).margin(1e-12));

    // days 3..5 carry day 2
    CHECK(daily.m[5] == daily.m[2]);

    SECTION("leading empty days use the flagged zero vector") {
        std::vector<DayArticles> late;
        late.push_back({"2020-01-06", {kv("c", "2020-01-06", {1.0, 0.0}, {5.0, 5.0})}});
        DailyMarketVectors d2 = daily_market_vectors(late, prices, stock);
        CHECK(d2.m[0] == Vec{0.0, 0.0});
        CHECK(d2.m[1] == Vec{0.0, 0.0});
        CHECK(d2.zero_filled[0] == 1);
        CHECK(d2.zero_filled[1] == 1);
        CHECK(d2.zero_filled[2] == 0);
    }
}

TEST_CASE("window assembly") {
    PriceSeries prices = toy_prices();
    StockEmbedding stock{"T", {1.0, 0.0}};
    std::vector<DayArticles> days;
    for (size_t t = 0; t < prices.size(); ++t) {
        Vec value{double(t), double(t) * 2.0};
        days.push_back({prices.dates[t], {kv("a" + std::to_string(t), prices.dates[t], {1.0, 0.0}, value)}});
    }

    SECTION("classification windows cover [t-s+1, t] with Eq-1 labels") {
        auto windows = build_windows(days, prices, stock, 3, Mode::classification);
        REQUIRE(windows.size() == 4);  // t = 2..5
        // labels: 99<101 -> 0, 99>=99 -> 1, 102>=99 -> 1, 100<102 -> 0
        std::vector<int> labels;
        for (const auto& w : windows) {
            CHECK(w.sequence.size() == 3);
            labels.push_back(w.label);
        }
        CHECK(labels == std::vector<int>{0, 1, 1, 0});
        CHECK(windows[0].end_date == "2020-01-06");
        CHECK(windows[0].sequence[2] == Vec{2.0, 4.0});  // includes day t
        CHECK(windows[0].mode == Mode::classification);
    }

    SECTION("prediction windows stop at t-1 and keep the day-t label") {
        auto windows = build_windows(days, prices, stock, 3, Mode::prediction);
        REQUIRE(windows.size() == 4);
        for (const auto& w : windows) {
            CHECK(w.sequence.size() == 2);
            CHECK(w.mode == Mode::prediction);
        }
        // first window: t=2 (01-06), inputs days 0,1
        CHECK(windows[0].end_date == "2020-01-06");
        CHECK(windows[0].sequence[1] == Vec{1.0, 2.0});  // day t-1, not day t
        CHECK(windows[0].label == 0);
    }

    SECTION("window of size 1 in classification mode") {
        auto windows = build_windows(days, prices, stock, 1, Mode::classification);
        REQUIRE(windows.size() == 5);  // t = 1..5
        CHECK(windows[0].sequence.size() == 1);
    }

    SECTION("prediction mode requires window >= 2") {
        CHECK_THROWS_AS(build_windows(days, prices, stock, 1, Mode::prediction), data_error);
    }

    SECTION("fewer trading days than the window yields no samples") {
        PriceSeries shorty;
        shorty.ticker = "T";
        shorty.dates = {"2020-01-02", "2020-01-03"};
        shorty.close = {1.0, 2.0};
        auto windows = build_windows(days, shorty, stock, 3, Mode::classification);
        CHECK(windows.empty());
    }

    SECTION("zero-filled days flag their windows") {
        std::vector<DayArticles> late{
            {"2020-01-07", {kv("x", "2020-01-07", {1.0, 0.0}, {1.0, 1.0})}}};
        auto windows = build_windows(late, prices, stock, 3, Mode::classification);
        REQUIRE(windows.size() == 4);
        CHECK(windows[0].zero_filled);        // covers days 0..2, all zero-filled
        CHECK(windows[1].zero_filled);        // covers days 1..3
        CHECK_FALSE(windows[3].zero_filled);  // days 3..5 have real or carried vectors
    }
}

TEST_CASE("stock embedding csv round trip and fallback") {
    std::map<std::string, StockEmbedding> embs;
    embs.emplace("AAA", StockEmbedding{"AAA", {0.1, -0.2, 0.3}});
    embs.emplace("BBB", StockEmbedding{"BBB", {1.0, 2.0, -3.0}});

    const std::string path = "/tmp/nf_stockemb_test.csv";
    save_stock_embeddings(path, embs);
    auto loaded = load_stock_embeddings(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded.at("AAA").s == embs.at("AAA").s);
    CHECK(loaded.at("BBB").s == embs.at("BBB").s);
    std::remove(path.c_str());

    auto fallback = random_stock_embeddings({"X", "Y"}, 60, 5);
    CHECK(fallback.size() == 2);
    CHECK(norm(fallback.at("X").s) == Catch::Approx(1.0).margin(1e-12));
    auto again = random_stock_embeddings({"X", "Y"}, 60, 5);
    CHECK(fallback.at("X").s == again.at("X").s);
    CHECK(fallback.at("X").s != fallback.at("Y").s);
}

TEST_CASE("market vector cache round trip") {
    PriceSeries prices = toy_prices();
    std::map<std::string, PriceSeries> pm{{"T", prices}};
    DailyMarketVectors d;
    d.value_dim = 2;
    for (size_t t = 0; t < prices.size(); ++t) d.m.push_back({double(t), 1.0});
    d.zero_filled.assign(prices.size(), 0);

    const std::string path = "/tmp/nf_mvcache_test.jsonl";
    save_market_vectors(path, {{"T", d}}, pm);
    auto loaded = load_market_vectors(path);
    REQUIRE(loaded.count("T") == 1);
    REQUIRE(loaded["T"].size() == prices.size());
    CHECK(loaded["T"]["2020-01-06"] == Vec{2.0, 1.0});
    std::remove(path.c_str());
}
