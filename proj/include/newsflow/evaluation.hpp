#pragma once
// Metrics (accuracy, Matthews correlation) and the experiment harness:
// multi-run averaging, label-smoothing sweep, ablation grid, noise
// robustness, window-size sweep, and the prediction-vs-classification
// cross matrix. Independent runs may execute in parallel; results are
// merged in run order so thread count never changes the output.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "newsflow/training.hpp"

namespace newsflow {

// ---------------------------------------------------------------------
//  Confusion matrix and metrics (class 1 = "up" = positive)
// ---------------------------------------------------------------------
struct ConfusionMatrix {
    long long tp = 0, fp = 0, tn = 0, fn = 0;

    long long total() const { return tp + fp + tn + fn; }
};

inline double accuracy(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw data_error("accuracy: empty confusion matrix");
    return double(cm.tp + cm.tn) / double(cm.total());
}

// ((tp*tn) - (fp*fn)) / sqrt((tp+fp)(tp+fn)(tn+fp)(tn+fn));
// a zero factor in the denominator yields 0 by convention.
inline double mcc(const ConfusionMatrix& cm) {
    const double num = double(cm.tp) * double(cm.tn) - double(cm.fp) * double(cm.fn);
    const double f1 = double(cm.tp + cm.fp), f2 = double(cm.tp + cm.fn);
    const double f3 = double(cm.tn + cm.fp), f4 = double(cm.tn + cm.fn);
    if (f1 == 0.0 || f2 == 0.0 || f3 == 0.0 || f4 == 0.0) return 0.0;
    return num / std::sqrt(f1 * f2 * f3 * f4);
}

inline ConfusionMatrix confusion(Model& model, const SampleSet& set,
                                 size_t batch_size = 64) {
    model.set_train(false);
    ConfusionMatrix cm;
    for (const auto& b : batches(set, batch_size, nullptr, false)) {
        Mat probs = model.forward(b.items);
        for (size_t i = 0; i < b.items.size(); ++i) {
            const int pred = probs(int(i), 0) >= probs(int(i), 1) ? 0 : 1;
            const int truth = b.items[i]->label;
            if (pred == 1 && truth == 1) ++cm.tp;
            else if (pred == 1 && truth == 0) ++cm.fp;
            else if (pred == 0 && truth == 0) ++cm.tn;
            else ++cm.fn;
        }
    }
    return cm;
}

// ---------------------------------------------------------------------
//  Experiment plumbing
// ---------------------------------------------------------------------
inline int eval_threads() {
    if (const char* env = std::getenv("NEWSFLOW_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::max(1u, std::min(hw, 8u)));
}

// Static index partition over a fixed job count; output slots are
// per-index so scheduling cannot affect results.
inline void parallel_for(int jobs, const std::function<void(int)>& fn) {
    const int threads = std::min(jobs, eval_threads());
    if (threads <= 1) {
        for (int i = 0; i < jobs; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            try {
                for (int i = next.fetch_add(1); i < jobs; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct RunResult {
    int run = 0;
    uint64_t seed = 0;
    double test_acc = 0.0;
    double test_mcc = 0.0;
    double test_loss = 0.0;  // Eq-8 pooled per-stock loss
    ConfusionMatrix cm;
    TrainHistory history;
};

struct ExperimentCell {
    std::string label;
    std::vector<RunResult> runs;

    double avg_acc() const {
        double s = 0.0;
        for (const auto& r : runs) s += r.test_acc;
        return s / double(runs.size());
    }
    double avg_mcc() const {
        double s = 0.0;
        for (const auto& r : runs) s += r.test_mcc;
        return s / double(runs.size());
    }
    // standard deviation in accuracy units (population form)
    double sigma_acc() const {
        const double m = avg_acc();
        double s = 0.0;
        for (const auto& r : runs) s += (r.test_acc - m) * (r.test_acc - m);
        return std::sqrt(s / double(runs.size()));
    }
};

struct ExperimentReport {
    std::string kind;
    std::vector<ExperimentCell> cells;
};

// Train once on a fresh split and score the test set.
inline RunResult run_once(std::shared_ptr<const std::vector<MarketWindow>> windows,
                          TrainConfig cfg, uint64_t split_seed, int run_index) {
    SplitSets sets = split(windows, split_seed);
    cfg.seed = split_seed;
    TrainOutcome out = dual_phase_train(cfg, sets.train, sets.val);

    RunResult r;
    r.run = run_index;
    r.seed = split_seed;
    r.cm = confusion(out.model, sets.test, cfg.batch);
    r.test_acc = accuracy(r.cm);
    r.test_mcc = mcc(r.cm);
    r.test_loss = per_stock_loss(out.model, sets.test, cfg.batch).second;
    r.history = std::move(out.history);
    return r;
}

// n runs of the same configuration, a fresh shuffled split per run
// (seed = base_seed + run for auditability).
inline ExperimentReport multi_run(std::shared_ptr<const std::vector<MarketWindow>> windows,
                                  const TrainConfig& cfg, int n_runs, uint64_t base_seed) {
    ExperimentReport report;
    report.kind = "multi_run";
    ExperimentCell cell;
    cell.label = "model";
    cell.runs.resize(n_runs);
    parallel_for(n_runs, [&](int i) {
        cell.runs[i] = run_once(windows, cfg, base_seed + uint64_t(i), i + 1);
    });
    report.cells.push_back(std::move(cell));
    return report;
}

inline ExperimentReport alpha_sweep(std::shared_ptr<const std::vector<MarketWindow>> windows,
                                    const TrainConfig& cfg, const Vec& alphas,
                                    int runs, uint64_t base_seed) {
    ExperimentReport report;
    report.kind = "alpha_sweep";
    for (double a : alphas) {
        ExperimentCell cell;
        cell.label = "alpha=" + fmt_double(a);
        cell.runs.resize(runs);
        report.cells.push_back(std::move(cell));
    }
    const int total = static_cast<int>(alphas.size()) * runs;
    parallel_for(total, [&](int j) {
        const int c = j / runs, i = j % runs;
        TrainConfig cc = cfg;
        cc.alpha = alphas[c];
        report.cells[c].runs[i] = run_once(windows, cc, base_seed + uint64_t(i), i + 1);
    });
    return report;
}

// The ablation grid of the component study: nothing removed, weight
// decay, dropout, batch norm, batch norm + dropout.
inline ExperimentReport ablation_grid(std::shared_ptr<const std::vector<MarketWindow>> windows,
                                      const TrainConfig& cfg, int runs, uint64_t base_seed) {
    const std::vector<std::pair<std::string, std::string>> configs = {
        {"none", ""},
        {"weight_decay", "weight_decay"},
        {"dropout", "dropout"},
        {"batchnorm", "batchnorm"},
        {"batchnorm_dropout", "batchnorm,dropout"},
    };
    ExperimentReport report;
    report.kind = "ablation";
    for (const auto& [label, removed] : configs) {
        ExperimentCell cell;
        cell.label = label;
        cell.runs.resize(runs);
        report.cells.push_back(std::move(cell));
    }
    const int total = static_cast<int>(configs.size()) * runs;
    parallel_for(total, [&](int j) {
        const int c = j / runs, i = j % runs;
        TrainConfig cc = cfg;
        cc.apply(parse_ablation(configs[c].second));
        report.cells[c].runs[i] = run_once(windows, cc, base_seed + uint64_t(i), i + 1);
    });
    return report;
}

// Gaussian noise at scale std/5 added to every stock-embedding
// component; market vectors and windows are rebuilt downstream by the
// caller-provided closure.
inline std::map<std::string, StockEmbedding> noised_stock_embeddings(
    const std::map<std::string, StockEmbedding>& stocks, double scale_divisor,
    uint64_t seed) {
    double mean = 0.0, count = 0.0;
    for (const auto& [ticker, e] : stocks)
        for (double v : e.s) {
            mean += v;
            count += 1.0;
        }
    mean /= count;
    double var = 0.0;
    for (const auto& [ticker, e] : stocks)
        for (double v : e.s) var += (v - mean) * (v - mean);
    const double stddev = std::sqrt(var / count);

    Rng rng(seed);
    std::map<std::string, StockEmbedding> out;
    for (const auto& [ticker, e] : stocks) {
        StockEmbedding n = e;
        for (double& v : n.s) v += rng.gaussian() * (stddev / scale_divisor);
        out.emplace(ticker, std::move(n));
    }
    return out;
}

// windows_for_embeddings rebuilds the sample list from a given set of
// stock embeddings (distillation onward). Trains the baseline and the
// noise model and reports both.
inline ExperimentReport noise_experiment(
    const std::map<std::string, StockEmbedding>& stocks,
    const std::function<std::vector<MarketWindow>(const std::map<std::string, StockEmbedding>&)>&
        windows_for_embeddings,
    const TrainConfig& cfg, int runs, uint64_t base_seed, double scale_divisor = 5.0) {
    auto noised = noised_stock_embeddings(stocks, scale_divisor, base_seed ^ 0x9e3779b97f4a7c15ULL);

    auto base_windows = std::make_shared<const std::vector<MarketWindow>>(windows_for_embeddings(stocks));
    auto noise_windows = std::make_shared<const std::vector<MarketWindow>>(windows_for_embeddings(noised));

    ExperimentReport report;
    report.kind = "noise";
    ExperimentCell proposed, noise;
    proposed.label = "proposed";
    noise.label = "noise";
    proposed.runs.resize(runs);
    noise.runs.resize(runs);
    parallel_for(2 * runs, [&](int j) {
        const int i = j % runs;
        if (j < runs)
            proposed.runs[i] = run_once(base_windows, cfg, base_seed + uint64_t(i), i + 1);
        else
            noise.runs[i] = run_once(noise_windows, cfg, base_seed + uint64_t(i), i + 1);
    });
    report.cells.push_back(std::move(proposed));
    report.cells.push_back(std::move(noise));
    return report;
}

// windows_for(s) rebuilds samples for a given window size from the
// per-day market vectors.
inline ExperimentReport window_sweep(
    const std::function<std::vector<MarketWindow>(int)>& windows_for,
    const std::vector<int>& sizes, const TrainConfig& cfg, int runs,
    uint64_t base_seed) {
    ExperimentReport report;
    report.kind = "window_sweep";
    std::vector<std::shared_ptr<const std::vector<MarketWindow>>> per_size;
    for (int s : sizes) {
        per_size.push_back(std::make_shared<const std::vector<MarketWindow>>(windows_for(s)));
        ExperimentCell cell;
        cell.label = "s=" + std::to_string(s);
        cell.runs.resize(runs);
        report.cells.push_back(std::move(cell));
    }
    const int total = static_cast<int>(sizes.size()) * runs;
    parallel_for(total, [&](int j) {
        const int c = j / runs, i = j % runs;
        report.cells[c].runs[i] =
            run_once(per_size[c], cfg, base_seed + uint64_t(i), i + 1);
    });
    return report;
}

// Cross matrix of Table-V shape: train one model per dataset mode, then
// evaluate each model on both test sets. The two window lists must be
// built from the same underlying days so that index i refers to the
// same (ticker, end date) sample in both.
inline ExperimentReport pred_vs_class_matrix(
    const std::vector<MarketWindow>& class_windows,
    const std::vector<MarketWindow>& pred_windows, const TrainConfig& cfg,
    uint64_t seed) {
    if (class_windows.size() != pred_windows.size())
        throw data_error("pred_vs_class: window lists must align");
    for (size_t i = 0; i < class_windows.size(); ++i)
        if (class_windows[i].ticker != pred_windows[i].ticker ||
            class_windows[i].end_date != pred_windows[i].end_date)
            throw data_error("pred_vs_class: window lists must align sample by sample");

    auto cls = std::make_shared<const std::vector<MarketWindow>>(class_windows);
    auto prd = std::make_shared<const std::vector<MarketWindow>>(pred_windows);
    SplitSets cls_sets = split(cls, seed);
    SplitSets prd_sets = split(prd, seed);  // same permutation, matching membership

    TrainConfig cc = cfg;
    cc.seed = seed;
    Model cls_model, prd_model;
    parallel_for(2, [&](int j) {
        if (j == 0) cls_model = dual_phase_train(cc, cls_sets.train, cls_sets.val).model;
        else prd_model = dual_phase_train(cc, prd_sets.train, prd_sets.val).model;
    });

    ExperimentReport report;
    report.kind = "pred_vs_class";
    auto add = [&](const std::string& label, Model& m, const SampleSet& test) {
        ExperimentCell cell;
        cell.label = label;
        RunResult r;
        r.run = 1;
        r.seed = seed;
        r.cm = confusion(m, test, cc.batch);
        r.test_acc = accuracy(r.cm);
        r.test_mcc = mcc(r.cm);
        cell.runs.push_back(std::move(r));
        report.cells.push_back(std::move(cell));
    };
    add("prediction_model_on_prediction_set", prd_model, prd_sets.test);
    add("classification_model_on_classification_set", cls_model, cls_sets.test);
    add("prediction_model_on_classification_set", prd_model, cls_sets.test);
    add("classification_model_on_prediction_set", cls_model, prd_sets.test);
    return report;
}

// ---------------------------------------------------------------------
//  Report files: one CSV per metric in the source table layout
//  (rows = runs, columns = configurations, then summary rows), plus
//  two-column per-curve CSVs for plotting.
// ---------------------------------------------------------------------
inline void write_report_csv(const std::string& dir, const ExperimentReport& report) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    size_t max_runs = 0;
    for (const auto& c : report.cells) max_runs = std::max(max_runs, c.runs.size());

    for (const std::string metric : {"acc", "mcc"}) {
        auto out = open_output(dir + "/" + report.kind + "_" + metric + ".csv");
        out << "run";
        for (const auto& c : report.cells) out << ',' << c.label;
        out << '\n';
        for (size_t i = 0; i < max_runs; ++i) {
            out << (i + 1);
            for (const auto& c : report.cells) {
                out << ',';
                if (i < c.runs.size())
                    out << fmt_double(metric == "acc" ? c.runs[i].test_acc
                                                      : c.runs[i].test_mcc);
            }
            out << '\n';
        }
        out << "avg";
        for (const auto& c : report.cells)
            out << ',' << fmt_double(metric == "acc" ? c.avg_acc() : c.avg_mcc());
        out << '\n';
        if (metric == "acc") {
            out << "sigma";
            for (const auto& c : report.cells) out << ',' << fmt_double(c.sigma_acc());
            out << '\n';
        }
    }

    // per-run validation curves for figure-style plots
    const std::string curve_dir = dir + "/curves";
    fs::create_directories(curve_dir);
    for (const auto& c : report.cells) {
        for (const auto& r : c.runs) {
            if (r.history.epochs.empty()) continue;
            for (const std::string metric : {"val_acc", "val_loss", "train_loss", "train_acc"}) {
                auto out = open_output(curve_dir + "/" + report.kind + "_" + c.label +
                                       "_run" + std::to_string(r.run) + "_" + metric + ".csv");
                out << "epoch," << metric << '\n';
                for (const auto& e : r.history.epochs) {
                    double v = metric == "val_acc" ? e.val_acc
                               : metric == "val_loss" ? e.val_loss
                               : metric == "train_loss" ? e.train_loss
                                                        : e.train_acc;
                    out << e.epoch << ',' << fmt_double(v) << '\n';
                }
            }
        }
    }
}

}  // namespace newsflow
