#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "newsflow/evaluation.hpp"
#include "newsflow/pipeline.hpp"
#include "newsflow/synth.hpp"

using namespace newsflow;

namespace {

std::vector<MarketWindow> signal_windows(int n, int len, int dim, uint64_t seed) {
    Rng rng(seed);
    std::vector<MarketWindow> out(n);
    for (int i = 0; i < n; ++i) {
        out[i].ticker = "T" + std::to_string(i % 5);
        out[i].end_date = "2021-02-01";
        out[i].label = static_cast<int>(rng.below(2));
        out[i].sequence.assign(len, Vec(dim));
        for (auto& v : out[i].sequence)
            for (double& x : v) x = 0.4 * rng.gaussian();
        out[i].sequence.back()[0] += 2.0 * (out[i].label ? 1.0 : -1.0);
    }
    return out;
}

TrainConfig tiny_config(uint64_t seed) {
    TrainConfig cfg;
    cfg.lr_explore = 3e-3;
    cfg.lr_exploit = 3e-5;
    cfg.epochs_per_phase = 6;
    cfg.batch = 32;
    cfg.hidden = 8;
    cfg.alpha = 0.1;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("accuracy from the confusion matrix") {
    CHECK(accuracy({50, 0, 50, 0}) == 1.0);
    CHECK(accuracy({25, 25, 25, 25}) == 0.5);
    CHECK_THROWS_AS(accuracy({0, 0, 0, 0}), data_error);
}

TEST_CASE("matthews correlation coefficient") {
    SECTION("perfect classifier scores 1") {
        CHECK(mcc({40, 0, 60, 0}) == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("uniform coin on balanced labels scores 0") {
        CHECK(mcc({25, 25, 25, 25}) == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("matches the direct formula") {
        ConfusionMatrix cm{40, 10, 35, 15};
        const double num = 40.0 * 35.0 - 10.0 * 15.0;
        const double den = std::sqrt((40.0 + 10.0) * (40.0 + 15.0) * (35.0 + 10.0) * (35.0 + 15.0));
        CHECK(mcc(cm) == Catch::Approx(num / den).margin(1e-12));
    }
    SECTION("zero denominator factor returns 0 by convention") {
        CHECK(mcc({0, 0, 50, 50}) == 0.0);   // tp+fp == 0
        CHECK(mcc({50, 50, 0, 0}) == 0.0);   // tn+fn == 0
    }
    SECTION("invariant under simultaneous class swap, range bounded") {
        Rng rng(4);
        for (int it = 0; it < 500; ++it) {
            ConfusionMatrix cm{static_cast<long long>(rng.below(50)),
                               static_cast<long long>(rng.below(50)),
                               static_cast<long long>(rng.below(50)),
                               static_cast<long long>(rng.below(50))};
            ConfusionMatrix swapped{cm.tn, cm.fn, cm.tp, cm.fp};
            CHECK(mcc(cm) == Catch::Approx(mcc(swapped)).margin(1e-12));
            CHECK(mcc(cm) >= -1.0 - 1e-12);
            CHECK(mcc(cm) <= 1.0 + 1e-12);
            if (cm.total() > 0) {
                CHECK(accuracy(cm) >= 0.0);
                CHECK(accuracy(cm) <= 1.0);
            }
        }
    }
}

TEST_CASE("confusion counts agree with a direct pass") {
    auto windows = signal_windows(60, 2, 4, 8);
    SampleSet all{std::make_shared<const std::vector<MarketWindow>>(windows), {}, "test"};
    for (int i = 0; i < 60; ++i) all.idx.push_back(i);

    ModelConfig mc;
    mc.input_dim = 4;
    mc.hidden = 4;
    Rng rng(9);
    Model model(mc, rng);
    ConfusionMatrix cm = confusion(model, all);
    CHECK(cm.total() == 60);

    model.set_train(false);
    long long correct = 0;
    for (const auto& w : windows) {
        Mat h(1, 2 * mc.hidden);
        Vec hv = model.bigru_forward(w.sequence);
        std::copy(hv.begin(), hv.end(), h.row(0));
        Mat hb = model.batchnorm_forward(h, nullptr);
        Vec p = model.mlp_softmax_forward(Vec(hb.row(0), hb.row(0) + hb.cols));
        const int pred = p[0] >= p[1] ? 0 : 1;
        if (pred == w.label) ++correct;
    }
    CHECK(cm.tp + cm.tn == correct);
}

TEST_CASE("multi-run averages are exactly the mean of rows") {
    auto windows = std::make_shared<const std::vector<MarketWindow>>(signal_windows(120, 2, 5, 10));
    ExperimentReport report = multi_run(windows, tiny_config(1), 4, 100);

    REQUIRE(report.cells.size() == 1);
    const auto& cell = report.cells[0];
    REQUIRE(cell.runs.size() == 4);
    double acc_sum = 0.0, mcc_sum = 0.0;
    for (const auto& r : cell.runs) {
        acc_sum += r.test_acc;
        mcc_sum += r.test_mcc;
        CHECK(r.seed == 100 + uint64_t(r.run - 1));  // audit trail
    }
    CHECK(cell.avg_acc() == acc_sum / 4.0);
    CHECK(cell.avg_mcc() == mcc_sum / 4.0);
}

TEST_CASE("experiment results are independent of the thread count") {
    auto windows = std::make_shared<const std::vector<MarketWindow>>(signal_windows(100, 2, 4, 11));
    setenv("NEWSFLOW_THREADS", "1", 1);
    ExperimentReport serial = multi_run(windows, tiny_config(2), 3, 7);
    setenv("NEWSFLOW_THREADS", "2", 1);
    ExperimentReport parallel = multi_run(windows, tiny_config(2), 3, 7);
    unsetenv("NEWSFLOW_THREADS");

    for (size_t i = 0; i < 3; ++i) {
        CHECK(serial.cells[0].runs[i].test_acc == parallel.cells[0].runs[i].test_acc);
        CHECK(serial.cells[0].runs[i].test_mcc == parallel.cells[0].runs[i].test_mcc);
    }
}

TEST_CASE("report csv layout") {
    auto windows = std::make_shared<const std::vector<MarketWindow>>(signal_windows(100, 2, 4, 12));
    TrainConfig cfg = tiny_config(3);
    cfg.epochs_per_phase = 2;
    ExperimentReport report = alpha_sweep(windows, cfg, {0.0, 0.2}, 2, 50);

    const std::string dir = "/tmp/nf_report_test";
    write_report_csv(dir, report);

    auto in = open_input(dir + "/alpha_sweep_acc.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "run,alpha=0,alpha=0.20000000000000001");
    std::string row1, row2, avg;
    std::getline(in, row1);
    std::getline(in, row2);
    std::getline(in, avg);
    CHECK(row1.substr(0, 2) == "1,");
    CHECK(avg.substr(0, 4) == "avg,");
    CHECK(std::filesystem::exists(dir + "/alpha_sweep_mcc.csv"));
    CHECK(std::filesystem::exists(dir + "/curves/alpha_sweep_alpha=0_run1_val_acc.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("noised stock embeddings perturb at one fifth of the std") {
    std::map<std::string, StockEmbedding> stocks;
    Rng rng(5);
    for (int j = 0; j < 20; ++j) {
        StockEmbedding e;
        e.ticker = "S" + std::to_string(j);
        e.s.resize(30);
        for (double& v : e.s) v = rng.gaussian() * 2.0;
        stocks.emplace(e.ticker, std::move(e));
    }
    auto noised = noised_stock_embeddings(stocks, 5.0, 99);

    // pooled std of the originals
    double mean = 0.0, n = 0.0;
    for (const auto& [t, e] : stocks)
        for (double v : e.s) {
            mean += v;
            n += 1.0;
        }
    mean /= n;
    double var = 0.0;
    for (const auto& [t, e] : stocks)
        for (double v : e.s) var += (v - mean) * (v - mean);
    const double stddev = std::sqrt(var / n);

    double dsum = 0.0, dsq = 0.0;
    for (const auto& [t, e] : stocks) {
        const auto& ne = noised.at(t).s;
        for (size_t i = 0; i < e.s.size(); ++i) {
            const double d = ne[i] - e.s[i];
            dsum += d;
            dsq += d * d;
        }
    }
    const double noise_std = std::sqrt(dsq / n - (dsum / n) * (dsum / n));
    CHECK(noise_std == Catch::Approx(stddev / 5.0).epsilon(0.1));

    auto again = noised_stock_embeddings(stocks, 5.0, 99);
    CHECK(again.at("S0").s == noised.at("S0").s);  // seeded
}

TEST_CASE("matched modes beat mismatched modes on a planted day-t signal") {
    // full pipeline on a small synthetic dataset
    SynthConfig sc;
    sc.n_stocks = 6;
    sc.n_days = 40;
    sc.value_dim = 48;
    sc.signal = 6.0;
    sc.seed = 3;

    PipelineConfig pc;
    pc.key_dim = 16;
    pc.value_dim = 48;
    pc.pca_dim = 24;
    pc.cbow_epochs = 3;

    SynthDataset data = synth_dataset(sc, pc.cbow());
    Corpus corpus = corpus_from_records(data.headlines);
    PreparedData prepared = prepare_data(corpus, data.values, data.prices, data.stocks, pc);

    const int s = 5;
    auto class_windows = build_sample_set(prepared.daily, prepared.prices, s,
                                          Mode::classification, 0.0);
    auto pred_windows = build_sample_set(prepared.daily, prepared.prices, s,
                                         Mode::prediction, 0.0);
    REQUIRE(class_windows.size() == pred_windows.size());
    REQUIRE(class_windows.size() == 6u * (40 - 4));

    TrainConfig cfg = tiny_config(5);
    cfg.lr_explore = 4e-3;
    cfg.epochs_per_phase = 20;
    cfg.batch = 16;
    cfg.hidden = 12;
    ExperimentReport report = pred_vs_class_matrix(class_windows, pred_windows, cfg, 21);

    REQUIRE(report.cells.size() == 4);
    const double pred_on_pred = report.cells[0].runs[0].test_acc;
    const double class_on_class = report.cells[1].runs[0].test_acc;
    const double pred_on_class = report.cells[2].runs[0].test_acc;
    const double class_on_pred = report.cells[3].runs[0].test_acc;

    INFO("p/p=" << pred_on_pred << " c/c=" << class_on_class << " p/c=" << pred_on_class
                << " c/p=" << class_on_pred);
    CHECK(class_on_class > 0.9);                 // the signal is in day t
    CHECK(class_on_class > class_on_pred + 0.2); // and absent from prediction windows
}
