// newsflow CLI: synth | prepare | train | evaluate | experiment |
// calibrate-threshold. One command per process; every command echoes
// its resolved configuration into the output directory.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
// failure (NaN detected anywhere aborts the run).

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "newsflow/newsflow.hpp"

namespace fs = std::filesystem;
using namespace newsflow;

namespace {

struct LoadedInputs {
    Corpus corpus;
    std::map<std::string, Vec> values;
    std::map<std::string, PriceSeries> prices;
    std::map<std::string, StockEmbedding> stocks;
};

LoadedInputs load_inputs(const RunConfig& cfg) {
    if (cfg.headlines.empty() || cfg.prices.empty())
        throw data_error("prepare needs --headlines and --prices");
    LoadedInputs in;
    in.corpus = load_headlines_jsonl(cfg.headlines);
    std::cout << "headlines: " << in.corpus.headlines.size() << " articles";
    if (!in.corpus.dropped.empty())
        std::cout << " (" << in.corpus.dropped.size() << " empty after tokenization)";
    std::cout << '\n';

    if (!cfg.values.empty()) {
        in.values = ingest_value_vectors(cfg.values, cfg.pipe.value_dim);
    } else {
        std::cout << "no value-vector file given; using the deterministic stand-in generator\n";
        in.values = synth_value_vectors(in.corpus, cfg.train.seed, cfg.pipe.value_dim);
    }

    in.prices = load_prices_csv(cfg.prices);
    std::cout << "prices: " << in.prices.size() << " tickers\n";

    if (!cfg.stock_embeddings.empty()) {
        in.stocks = load_stock_embeddings(cfg.stock_embeddings);
        for (const auto& [ticker, e] : in.stocks)
            if (static_cast<int>(e.s.size()) != cfg.pipe.key_dim)
                throw data_error("stock embedding dimension mismatch for " + ticker);
    } else {
        std::cout << "no stock-embedding file given; generating seeded random unit vectors\n";
        std::vector<std::string> tickers;
        for (const auto& [ticker, series] : in.prices) tickers.push_back(ticker);
        in.stocks = random_stock_embeddings(tickers, cfg.pipe.key_dim, cfg.train.seed);
    }
    return in;
}

void write_prepared(const RunConfig& cfg, const PreparedData& prepared,
                    const std::vector<MarketWindow>& samples) {
    fs::create_directories(cfg.out);
    save_word_embeddings(cfg.out + "/word_embeddings.json", prepared.distilled.embeddings);
    save_pca(cfg.out + "/pca.json", prepared.distilled.pca);
    save_kv_pairs(cfg.out + "/kv_pairs.jsonl", prepared.distilled.pairs);
    save_market_vectors(cfg.out + "/market_vectors.jsonl", prepared.daily, prepared.prices);
    save_samples(cfg.out + "/samples.jsonl", samples);

    long long up = 0;
    for (const auto& w : samples) up += w.label;
    std::cout << "kv pairs: " << prepared.distilled.pairs.size();
    if (!prepared.distilled.missing_values.empty())
        std::cout << " (" << prepared.distilled.missing_values.size() << " articles missing value vectors)";
    if (!prepared.distilled.skipped_articles.empty())
        std::cout << " (" << prepared.distilled.skipped_articles.size() << " without in-vocab tokens)";
    std::cout << '\n';
    std::cout << "samples: " << samples.size() << " windows (mode " << to_string(cfg.mode)
              << ", s=" << cfg.window << ", ambiguity_threshold=" << cfg.ambiguity_threshold;
    if (!samples.empty())
        std::cout << ", up fraction " << double(up) / double(samples.size());
    std::cout << ")\n";
}

PreparedData prepare_pipeline(const RunConfig& cfg) {
    LoadedInputs in = load_inputs(cfg);
    return prepare_data(in.corpus, in.values, std::move(in.prices), std::move(in.stocks),
                        cfg.pipe);
}

// Samples from the cache when present, else the full fused pipeline
// (which also writes the caches, so both paths leave the same files).
std::vector<MarketWindow> ensure_samples(const RunConfig& cfg) {
    const std::string cache = cfg.out + "/samples.jsonl";
    if (fs::exists(cache)) {
        std::cout << "loading cached samples from " << cache << '\n';
        return load_samples(cache);
    }
    PreparedData prepared = prepare_pipeline(cfg);
    auto samples = build_sample_set(prepared.daily, prepared.prices, cfg.window, cfg.mode,
                                    cfg.ambiguity_threshold);
    write_prepared(cfg, prepared, samples);
    return samples;
}

int cmd_synth(const RunConfig& cfg) {
    SynthDataset data = synth_dataset(cfg.synth_config(), cfg.pipe.cbow());
    write_synth_dataset(data, cfg.out);
    write_resolved_config(cfg, cfg.out + "/config.resolved");
    std::cout << "wrote " << data.headlines.size() << " headlines, "
              << data.prices.size() << " price series, "
              << data.stocks.size() << " stock embeddings under " << cfg.out << '\n';
    return 0;
}

int cmd_prepare(const RunConfig& cfg) {
    PreparedData prepared = prepare_pipeline(cfg);
    auto samples = build_sample_set(prepared.daily, prepared.prices, cfg.window, cfg.mode,
                                    cfg.ambiguity_threshold);
    write_prepared(cfg, prepared, samples);
    write_resolved_config(cfg, cfg.out + "/config.resolved");
    return 0;
}

int cmd_train(RunConfig cfg) {
    cfg.train.apply(parse_ablation(cfg.remove));
    auto samples = ensure_samples(cfg);
    auto shared = std::make_shared<const std::vector<MarketWindow>>(std::move(samples));
    SplitSets sets = split(shared, cfg.train.seed);
    std::cout << "split: " << sets.train.size() << " train / " << sets.val.size()
              << " val / " << sets.test.size() << " test\n";

    TrainOutcome out = dual_phase_train(cfg.train, sets.train, sets.val);
    fs::create_directories(cfg.out);
    save_model(cfg.out + "/checkpoint.json", out.model, out.rng_at_best);
    save_history_csv(cfg.out + "/history.csv", out.history);
    write_resolved_config(cfg, cfg.out + "/config.resolved");

    ConfusionMatrix cm = confusion(out.model, sets.test, cfg.train.batch);
    const auto& best = out.history.epochs[out.history.best_epoch - 1];
    std::cout << "best epoch " << best.epoch << " (" << best.phase << "), val acc "
              << best.val_acc << '\n';
    std::cout << "test acc " << accuracy(cm) << ", test mcc " << mcc(cm) << '\n';
    return 0;
}

int cmd_evaluate(RunConfig cfg) {
    const std::string ckpt =
        cfg.checkpoint.empty() ? cfg.out + "/checkpoint.json" : cfg.checkpoint;
    Model model = load_model(ckpt);
    auto samples = ensure_samples(cfg);
    auto shared = std::make_shared<const std::vector<MarketWindow>>(std::move(samples));
    SplitSets sets = split(shared, cfg.train.seed);

    ConfusionMatrix cm = confusion(model, sets.test, cfg.train.batch);
    auto [per_stock, pooled] = per_stock_loss(model, sets.test, cfg.train.batch);

    fs::create_directories(cfg.out);
    {
        auto out = open_output(cfg.out + "/evaluation.csv");
        out << "metric,value\n";
        out << "test_acc," << fmt_double(accuracy(cm)) << '\n';
        out << "test_mcc," << fmt_double(mcc(cm)) << '\n';
        out << "per_stock_loss," << fmt_double(pooled) << '\n';
        out << "samples," << cm.total() << '\n';
        out << "tp," << cm.tp << '\n';
        out << "fp," << cm.fp << '\n';
        out << "tn," << cm.tn << '\n';
        out << "fn," << cm.fn << '\n';
    }
    write_resolved_config(cfg, cfg.out + "/config.resolved");
    std::cout << "test acc " << accuracy(cm) << ", test mcc " << mcc(cm)
              << ", per-stock loss " << pooled << " over " << cm.total() << " samples\n";
    return 0;
}

int cmd_experiment(RunConfig cfg, const std::string& kind) {
    cfg.train.apply(parse_ablation(cfg.remove));
    const uint64_t base_seed = cfg.train.seed;
    ExperimentReport report;

    if (kind == "multi_run" || kind == "alpha_sweep" || kind == "ablation") {
        auto samples = ensure_samples(cfg);
        auto shared = std::make_shared<const std::vector<MarketWindow>>(std::move(samples));
        if (kind == "multi_run") {
            report = multi_run(shared, cfg.train, cfg.runs > 0 ? cfg.runs : 10, base_seed);
        } else if (kind == "alpha_sweep") {
            report = alpha_sweep(shared, cfg.train, {0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5},
                                 cfg.runs > 0 ? cfg.runs : 5, base_seed);
        } else {
            report = ablation_grid(shared, cfg.train, cfg.runs > 0 ? cfg.runs : 5, base_seed);
        }
    } else if (kind == "noise" || kind == "window_sweep" || kind == "pred_vs_class") {
        // these rebuild from the distillation stages
        PreparedData prepared = prepare_pipeline(cfg);
        if (kind == "noise") {
            auto windows_for = [&](const std::map<std::string, StockEmbedding>& stocks) {
                auto daily = distill_markets(prepared.days, prepared.prices, stocks);
                return build_sample_set(daily, prepared.prices, cfg.window, cfg.mode,
                                        cfg.ambiguity_threshold);
            };
            report = noise_experiment(prepared.stocks, windows_for, cfg.train,
                                      cfg.runs > 0 ? cfg.runs : 1, base_seed);
        } else if (kind == "window_sweep") {
            auto windows_for = [&](int s) {
                return build_sample_set(prepared.daily, prepared.prices, s, cfg.mode,
                                        cfg.ambiguity_threshold);
            };
            report = window_sweep(windows_for, {1, 2, 3, 4, 5, 6, 7}, cfg.train,
                                  cfg.runs > 0 ? cfg.runs : 1, base_seed);
        } else {
            auto cls = build_sample_set(prepared.daily, prepared.prices, cfg.window,
                                        Mode::classification, cfg.ambiguity_threshold);
            auto prd = build_sample_set(prepared.daily, prepared.prices, cfg.window,
                                        Mode::prediction, cfg.ambiguity_threshold);
            report = pred_vs_class_matrix(cls, prd, cfg.train, base_seed);
        }
    } else {
        throw data_error("unknown experiment kind '" + kind + "'");
    }

    const std::string dir = cfg.out + "/experiments/" + kind;
    write_report_csv(dir, report);
    write_resolved_config(cfg, dir + "/config.resolved");

    std::cout << "experiment " << kind << '\n';
    for (const auto& cell : report.cells)
        std::cout << "  " << cell.label << ": acc " << cell.avg_acc() << " (sigma "
                  << cell.sigma_acc() << "), mcc " << cell.avg_mcc() << " over "
                  << cell.runs.size() << " run(s)\n";
    std::cout << "reports under " << dir << '\n';
    return 0;
}

int cmd_calibrate(const RunConfig& cfg, std::vector<double> thresholds) {
    if (cfg.prices.empty()) throw data_error("calibrate-threshold needs --prices");
    auto prices = load_prices_csv(cfg.prices);
    if (thresholds.empty())
        thresholds = {0.0, 0.0005, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05};
    auto table = calibrate_threshold(prices, cfg.window, cfg.mode, thresholds);

    fs::create_directories(cfg.out);
    auto out = open_output(cfg.out + "/calibration.csv");
    out << "threshold,samples\n";
    std::cout << "threshold,samples\n";
    for (const auto& [threshold, count] : table) {
        out << fmt_double(threshold) << ',' << count << '\n';
        std::cout << fmt_double(threshold) << ',' << count << '\n';
    }
    write_resolved_config(cfg, cfg.out + "/config.resolved");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;

    // the config file loads first so flags can override it
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") {
            try {
                load_config_file(cfg, argv[i + 1]);
            } catch (const data_error& e) {
                std::cerr << "error: " << e.what() << '\n';
                return 2;
            }
        }

    CLI::App app{"news-driven stock movement classification pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "flat key=value configuration file");
    app.add_option("--headlines", cfg.headlines, "headlines JSONL ({id,date,text})");
    app.add_option("--prices", cfg.prices, "price CSV (ticker,date,close)");
    app.add_option("--values", cfg.values, "encoder output JSONL ({id,vec})");
    app.add_option("--stock-embeddings", cfg.stock_embeddings, "stock embedding CSV");
    app.add_option("--checkpoint", cfg.checkpoint, "model checkpoint to evaluate");
    app.add_option("--out", cfg.out, "output directory");
    app.add_option("--seed", cfg.train.seed, "run seed");
    app.add_option("--alpha", cfg.train.alpha, "label smoothing parameter");
    app.add_option("--window", cfg.window, "window size s");
    app.add_option("--mode", cfg.mode, "classification | prediction")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, Mode>{{"classification", Mode::classification},
                                        {"prediction", Mode::prediction}}));
    app.add_option("--remove", cfg.remove, "ablation: batchnorm,dropout,weight_decay");
    app.add_option("--ambiguity-threshold", cfg.ambiguity_threshold,
                   "drop windows with |log return| below this");
    app.add_option("--epochs", cfg.train.epochs_per_phase, "epochs per phase");
    app.add_option("--batch", cfg.train.batch, "mini-batch size");
    app.add_option("--hidden", cfg.train.hidden, "GRU hidden size per direction");
    app.add_option("--lr-explore", cfg.train.lr_explore, "exploration learning rate");
    app.add_option("--lr-exploit", cfg.train.lr_exploit, "exploitation learning rate");
    app.add_option("--dropout", cfg.train.dropout, "dropout rate");
    app.add_option("--weight-decay", cfg.train.weight_decay, "L2 weight decay");
    app.add_option("--runs", cfg.runs, "runs per experiment configuration");
    app.add_option("--synth-stocks", cfg.synth_stocks, "synthetic stocks");
    app.add_option("--synth-days", cfg.synth_days, "synthetic trading days");
    app.add_option("--synth-signal", cfg.synth_signal, "planted signal magnitude");
    app.add_option("--synth-covariate-spread", cfg.synth_covariate_spread,
                   "log10 half-range of synthetic feature scales");
    app.add_option("--value-dim", cfg.pipe.value_dim, "raw encoder dimension");
    app.add_option("--pca-dim", cfg.pipe.pca_dim, "reduced value dimension");
    app.add_option("--key-dim", cfg.pipe.key_dim, "word/key vector dimension");

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    auto* prepare_cmd = app.add_subcommand("prepare", "distill articles into cached samples");
    auto* train_cmd = app.add_subcommand("train", "dual-phase training run");
    auto* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint on the test split");
    auto* exp_cmd = app.add_subcommand("experiment", "run an experiment suite");
    std::string kind;
    exp_cmd->add_option("--kind", kind,
                        "multi_run | alpha_sweep | ablation | noise | window_sweep | pred_vs_class")
        ->required();
    auto* cal_cmd = app.add_subcommand("calibrate-threshold",
                                       "sample counts per ambiguity threshold");
    std::vector<double> thresholds;
    cal_cmd->add_option("--thresholds", thresholds, "thresholds to sweep");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth_cmd) return cmd_synth(cfg);
        if (*prepare_cmd) return cmd_prepare(cfg);
        if (*train_cmd) return cmd_train(cfg);
        if (*eval_cmd) return cmd_evaluate(cfg);
        if (*exp_cmd) return cmd_experiment(cfg, kind);
        if (*cal_cmd) return cmd_calibrate(cfg, thresholds);
    } catch (const numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const data_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
