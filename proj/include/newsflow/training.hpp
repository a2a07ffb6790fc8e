#pragma once
// Label smoothing, cross-entropy, Adam with coupled L2 weight decay,
// and the dual-phase schedule: 100 epochs of exploration at 1e-4, then
// the best-validation checkpoint trained 100 more epochs at 1e-6.

#include <map>
#include <string>
#include <vector>

#include "newsflow/dataset.hpp"
#include "newsflow/model.hpp"

namespace newsflow {

struct TrainConfig {
    double lr_explore = 1e-4;
    double lr_exploit = 1e-6;
    int epochs_per_phase = 100;
    int batch = 64;
    double dropout = 0.2;
    double weight_decay = 1e-6;
    double alpha = 0.0;  // label smoothing
    int hidden = 64;
    bool use_batchnorm = true;
    bool select_on_loss = false;  // checkpoint metric: val accuracy, or val loss
    uint64_t seed = 0;

    void validate() const {
        if (lr_explore <= 0.0 || lr_exploit <= 0.0) throw data_error("learning rates must be positive");
        if (!(alpha >= 0.0 && alpha < 1.0)) throw data_error("alpha must be in [0, 1)");
        if (batch < 1 || epochs_per_phase < 1 || hidden < 1) throw data_error("bad train config");
        if (dropout < 0.0 || dropout >= 1.0) throw data_error("dropout must be in [0, 1)");
        if (weight_decay < 0.0) throw data_error("weight decay must be >= 0");
    }

    void apply(const Ablation& a) {
        if (a.batchnorm) use_batchnorm = false;
        if (a.dropout) dropout = 0.0;
        if (a.weight_decay) weight_decay = 0.0;
    }
};

// y_k (1 - alpha) + alpha / K for a one-hot y.
inline Vec smooth_labels(const Vec& y, double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw data_error("smooth_labels: alpha must be in [0, 1)");
    int ones = 0;
    for (double v : y) {
        if (v != 0.0 && v != 1.0) throw data_error("smooth_labels: y must be one-hot");
        if (v == 1.0) ++ones;
    }
    if (ones != 1) throw data_error("smooth_labels: y must be one-hot");
    const double k = static_cast<double>(y.size());
    Vec out(y.size());
    for (size_t i = 0; i < y.size(); ++i) out[i] = y[i] * (1.0 - alpha) + alpha / k;
    return out;
}

inline Vec smooth_onehot(int label, int classes, double alpha) {
    Vec y(classes, 0.0);
    y[label] = 1.0;
    return smooth_labels(y, alpha);
}

// -sum_k target_k ln(probs_k), probabilities clamped to [1e-12, 1].
inline double cross_entropy(const Vec& probs, const Vec& target) {
    if (probs.size() != target.size()) throw data_error("cross_entropy: size mismatch");
    double loss = 0.0;
    for (size_t k = 0; k < probs.size(); ++k) {
        const double p = std::min(1.0, std::max(1e-12, probs[k]));
        loss -= target[k] * std::log(p);
    }
    return loss;
}

// ---------------------------------------------------------------------
//  Adam. Weight decay is coupled L2: added to the gradient before the
//  moment updates. Bias-corrected, beta1=0.9 beta2=0.999 eps=1e-8.
// ---------------------------------------------------------------------
struct AdamState {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long long step = 0;
    std::vector<Vec> m, v;

    void init(Model& model) {
        step = 0;
        m.clear();
        v.clear();
        for (auto& t : model.tensors()) {
            m.emplace_back(t.n, 0.0);
            v.emplace_back(t.n, 0.0);
        }
    }
};

inline void adam_update(double* p, const double* g, double* m, double* v, size_t n,
                        long long step, double lr, double weight_decay,
                        double beta1, double beta2, double eps) {
    const double bc1 = 1.0 - std::pow(beta1, double(step));
    const double bc2 = 1.0 - std::pow(beta2, double(step));
    for (size_t i = 0; i < n; ++i) {
        const double grad = g[i] + weight_decay * p[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad;
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad * grad;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

inline void adam_step(Model& model, AdamState& adam, double lr, double weight_decay) {
    auto tensors = model.tensors();
    if (adam.m.size() != tensors.size()) throw data_error("adam_step: state not initialized");
    ++adam.step;
    for (size_t i = 0; i < tensors.size(); ++i) {
        if (adam.m[i].size() != tensors[i].n) throw data_error("adam_step: shape mismatch");
        adam_update(tensors[i].v, tensors[i].g, adam.m[i].data(), adam.v[i].data(),
                    tensors[i].n, adam.step, lr, weight_decay, adam.beta1, adam.beta2,
                    adam.eps);
    }
}

// ---------------------------------------------------------------------
//  Evaluation helpers
// ---------------------------------------------------------------------
struct EvalResult {
    double loss = 0.0;  // mean smoothed cross-entropy
    double acc = 0.0;
    long long correct = 0, total = 0;
};

inline EvalResult evaluate(Model& model, const SampleSet& set, double alpha,
                           size_t batch_size = 64) {
    model.set_train(false);
    EvalResult r;
    double loss_sum = 0.0;
    for (const auto& b : batches(set, batch_size, nullptr, false)) {
        Mat probs = model.forward(b.items);
        for (size_t i = 0; i < b.items.size(); ++i) {
            const int label = b.items[i]->label;
            Vec p{probs(int(i), 0), probs(int(i), 1)};
            loss_sum += cross_entropy(p, smooth_onehot(label, 2, alpha));
            const int pred = probs(int(i), 0) >= probs(int(i), 1) ? 0 : 1;
            if (pred == label) ++r.correct;
            ++r.total;
        }
    }
    if (r.total == 0) throw data_error("evaluate: empty sample set");
    r.loss = loss_sum / double(r.total);
    r.acc = double(r.correct) / double(r.total);
    return r;
}

// Eq-8-style reporting: per-stock mean cross-entropy on the raw labels,
// then the plain mean across stocks.
inline std::pair<std::map<std::string, double>, double> per_stock_loss(
    Model& model, const SampleSet& set, size_t batch_size = 64) {
    model.set_train(false);
    std::map<std::string, std::pair<double, long long>> acc;
    for (const auto& b : batches(set, batch_size, nullptr, false)) {
        Mat probs = model.forward(b.items);
        for (size_t i = 0; i < b.items.size(); ++i) {
            Vec p{probs(int(i), 0), probs(int(i), 1)};
            const double l = cross_entropy(p, smooth_onehot(b.items[i]->label, 2, 0.0));
            auto& slot = acc[b.items[i]->ticker];
            slot.first += l;
            slot.second += 1;
        }
    }
    if (acc.empty()) throw data_error("per_stock_loss: empty sample set");
    std::map<std::string, double> per_stock;
    double pooled = 0.0;
    for (const auto& [ticker, sums] : acc) {
        per_stock[ticker] = sums.first / double(sums.second);
        pooled += per_stock[ticker];
    }
    pooled /= double(per_stock.size());
    return {per_stock, pooled};
}

// ---------------------------------------------------------------------
//  Training history
// ---------------------------------------------------------------------
struct EpochStats {
    int epoch = 0;  // 1-based, global across phases
    std::string phase;
    double train_loss = 0.0, train_acc = 0.0;
    double val_loss = 0.0, val_acc = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = 0;  // 1-based global index of the selected checkpoint
};

inline void save_history_csv(const std::string& path, const TrainHistory& h) {
    auto out = open_output(path);
    out << "epoch,phase,train_loss,train_acc,val_loss,val_acc\n";
    for (const auto& e : h.epochs)
        out << e.epoch << ',' << e.phase << ',' << fmt_double(e.train_loss) << ','
            << fmt_double(e.train_acc) << ',' << fmt_double(e.val_loss) << ','
            << fmt_double(e.val_acc) << '\n';
}

// In-memory model snapshot (parameters, batch-norm running statistics,
// and the training RNG position).
struct ModelSnapshot {
    Vec params;
    Vec running_mean, running_var;
    Rng rng{0};
    double val_acc = -1.0;
    double val_loss = 0.0;
    int epoch = 0;

    static ModelSnapshot take(Model& model, const Rng& rng, double val_acc,
                              double val_loss, int epoch) {
        ModelSnapshot s;
        for (auto& t : model.tensors()) s.params.insert(s.params.end(), t.v, t.v + t.n);
        s.running_mean = model.running_mean;
        s.running_var = model.running_var;
        s.rng = rng;
        s.val_acc = val_acc;
        s.val_loss = val_loss;
        s.epoch = epoch;
        return s;
    }

    void restore(Model& model, Rng& rng_out) const {
        size_t off = 0;
        for (auto& t : model.tensors()) {
            std::copy(params.begin() + off, params.begin() + off + t.n, t.v);
            off += t.n;
        }
        if (off != params.size()) throw data_error("snapshot/model shape mismatch");
        model.running_mean = running_mean;
        model.running_var = running_var;
        rng_out = rng;
    }

    // Selection metric: accuracy by default, loss optionally. Ties keep
    // the earlier snapshot.
    bool better_than(const ModelSnapshot& other, bool on_loss) const {
        if (other.epoch == 0) return true;  // nothing selected yet
        return on_loss ? val_loss < other.val_loss : val_acc > other.val_acc;
    }
};

// ---------------------------------------------------------------------
//  One training phase at a fixed learning rate. Appends per-epoch rows
//  to the history and keeps the best-validation snapshot up to date.
// ---------------------------------------------------------------------
inline void train_phase(Model& model, AdamState& adam, const SampleSet& train,
                        const SampleSet& val, double lr, int epochs,
                        const TrainConfig& cfg, Rng& rng, const std::string& phase_tag,
                        TrainHistory& history, ModelSnapshot& best) {
    if (train.size() == 0) throw data_error("train_phase: empty training set");
    for (int epoch = 0; epoch < epochs; ++epoch) {
        model.set_train(true);
        double loss_sum = 0.0;
        long long correct = 0, total = 0;
        for (const auto& b : batches(train, cfg.batch, &rng, true)) {
            Mat probs = model.forward(b.items, &rng);
            Mat targets(int(b.size()), 2);
            for (size_t i = 0; i < b.size(); ++i) {
                Vec t = smooth_onehot(b.items[i]->label, 2, cfg.alpha);
                targets(int(i), 0) = t[0];
                targets(int(i), 1) = t[1];
                Vec p{probs(int(i), 0), probs(int(i), 1)};
                loss_sum += cross_entropy(p, t);
                const int pred = probs(int(i), 0) >= probs(int(i), 1) ? 0 : 1;
                if (pred == b.items[i]->label) ++correct;
                ++total;
            }
            model.zero_grads();
            model.backward(targets);
            adam_step(model, adam, lr, cfg.weight_decay);
            if (!std::isfinite(loss_sum)) throw numeric_error("train_phase: non-finite loss");
        }
        for (auto& t : model.tensors())
            if (!all_finite(t.v, t.n)) throw numeric_error("train_phase: non-finite parameters");

        EvalResult v = evaluate(model, val, cfg.alpha, cfg.batch);
        EpochStats row;
        row.epoch = static_cast<int>(history.epochs.size()) + 1;
        row.phase = phase_tag;
        row.train_loss = loss_sum / double(total);
        row.train_acc = double(correct) / double(total);
        row.val_loss = v.loss;
        row.val_acc = v.acc;
        history.epochs.push_back(row);

        ModelSnapshot candidate = ModelSnapshot::take(model, rng, v.acc, v.loss, row.epoch);
        if (candidate.better_than(best, cfg.select_on_loss)) best = std::move(candidate);
    }
}

struct TrainOutcome {
    Model model;  // the best-validation model
    TrainHistory history;
    Rng rng_at_best{0};
};

// Exploration at lr_explore, reload the best checkpoint, exploitation
// at lr_exploit, return the overall best-validation model.
inline TrainOutcome dual_phase_train(const TrainConfig& cfg, const SampleSet& train,
                                     const SampleSet& val) {
    cfg.validate();
    if (train.size() == 0) throw data_error("dual_phase_train: empty training set");

    Rng rng(cfg.seed);
    ModelConfig mc;
    if (train.size() > 0 && (*train.base)[train.idx[0]].sequence.empty())
        throw data_error("dual_phase_train: empty input window");
    mc.input_dim = static_cast<int>((*train.base)[train.idx[0]].sequence[0].size());
    mc.hidden = cfg.hidden;
    mc.dropout = cfg.dropout;
    mc.use_batchnorm = cfg.use_batchnorm;

    TrainOutcome out;
    out.model.init(mc, rng);
    AdamState adam;
    adam.init(out.model);
    ModelSnapshot best;

    train_phase(out.model, adam, train, val, cfg.lr_explore, cfg.epochs_per_phase, cfg,
                rng, "explore", out.history, best);

    // resume the best exploration checkpoint, Adam state starts fresh
    best.restore(out.model, rng);
    adam.init(out.model);

    train_phase(out.model, adam, train, val, cfg.lr_exploit, cfg.epochs_per_phase, cfg,
                rng, "exploit", out.history, best);

    best.restore(out.model, out.rng_at_best);
    out.history.best_epoch = best.epoch;
    return out;
}

}  // namespace newsflow
