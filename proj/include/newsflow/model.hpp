#pragma once
// The price-movement classifier: bidirectional GRU over a window of
// market vectors, batch normalization on the concatenated final hidden
// states, inverted dropout, and a single fully connected layer with
// softmax. Forward and analytic backward, including backpropagation
// through the batch statistics and through both GRU directions in time.
//
// GRU formulation (reset gate applied before the candidate's recurrent
// matmul, update gate gating the previous state):
//   z_t = sigmoid(Wz x_t + Uz h_{t-1} + bz)
//   r_t = sigmoid(Wr x_t + Ur h_{t-1} + br)
//   c_t = tanh(Wc x_t + Uc (r_t . h_{t-1}) + bc)
//   h_t = z_t . h_{t-1} + (1 - z_t) . c_t

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "newsflow/distiller.hpp"
#include "newsflow/io.hpp"
#include "newsflow/numerics.hpp"

namespace newsflow {

struct ModelConfig {
    int input_dim = 256;
    int hidden = 64;          // H per direction
    double dropout = 0.2;
    bool use_batchnorm = true;
    double bn_momentum = 0.1;
    double bn_epsilon = 1e-5;
};

// Ablation switches (removed batch norm means an identity layer,
// removed dropout means rate 0, removed weight decay means decay 0).
struct Ablation {
    bool batchnorm = false;
    bool dropout = false;
    bool weight_decay = false;
};

inline Ablation parse_ablation(const std::string& csv) {
    Ablation a;
    std::string item;
    std::stringstream ss(csv);
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        if (item == "batchnorm") a.batchnorm = true;
        else if (item == "dropout") a.dropout = true;
        else if (item == "weight_decay") a.weight_decay = true;
        else throw data_error("unknown ablation component '" + item + "'");
    }
    return a;
}

// Named tensor with a matching gradient buffer.
struct TensorView {
    std::string name;
    double* v;
    double* g;
    size_t n;
};

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct GruStepCache {
    Vec h_prev, z, r, hr, c;
};

}  // namespace detail

// One GRU direction.
struct GruDirection {
    Mat wz, wr, wc;  // H x input
    Mat uz, ur, uc;  // H x H
    Vec bz, br, bc;  // H
    Mat gwz, gwr, gwc, guz, gur, guc;
    Vec gbz, gbr, gbc;

    int hidden() const { return wz.rows; }

    void init(int input_dim, int h, Rng& rng) {
        auto init_mat = [&](Mat& m, Mat& g, int rows, int cols) {
            m = Mat(rows, cols);
            g = Mat(rows, cols);
            const double bound = 1.0 / std::sqrt(double(cols));
            for (double& x : m.a) x = rng.uniform(-bound, bound);
        };
        init_mat(wz, gwz, h, input_dim);
        init_mat(wr, gwr, h, input_dim);
        init_mat(wc, gwc, h, input_dim);
        init_mat(uz, guz, h, h);
        init_mat(ur, gur, h, h);
        init_mat(uc, guc, h, h);
        bz.assign(h, 0.0); br.assign(h, 0.0); bc.assign(h, 0.0);
        gbz.assign(h, 0.0); gbr.assign(h, 0.0); gbc.assign(h, 0.0);
    }

    // h_prev is read, h is written; cache captures what backward needs.
    void step(const double* x, const Vec& h_prev, Vec& h, detail::GruStepCache& cache) const {
        const int H = hidden();
        cache.h_prev = h_prev;
        cache.z.resize(H); cache.r.resize(H); cache.hr.resize(H); cache.c.resize(H);

        Vec az(bz), ar(br);
        matvec_add(wz, x, az.data());
        matvec_add(uz, h_prev.data(), az.data());
        matvec_add(wr, x, ar.data());
        matvec_add(ur, h_prev.data(), ar.data());
        for (int i = 0; i < H; ++i) {
            cache.z[i] = detail::sigmoid(az[i]);
            cache.r[i] = detail::sigmoid(ar[i]);
            cache.hr[i] = cache.r[i] * h_prev[i];
        }
        Vec ac(bc);
        matvec_add(wc, x, ac.data());
        matvec_add(uc, cache.hr.data(), ac.data());
        h.resize(H);
        for (int i = 0; i < H; ++i) {
            cache.c[i] = std::tanh(ac[i]);
            h[i] = cache.z[i] * h_prev[i] + (1.0 - cache.z[i]) * cache.c[i];
        }
    }

    // dh is the incoming gradient for h_t; dh_prev receives the gradient
    // for h_{t-1}. Parameter gradients accumulate.
    void step_backward(const double* x, const detail::GruStepCache& cache,
                       const Vec& dh, Vec& dh_prev) {
        const int H = hidden();
        Vec daz(H), dar(H), dac(H);
        dh_prev.assign(H, 0.0);
        for (int i = 0; i < H; ++i) {
            const double z = cache.z[i], c = cache.c[i];
            const double dz = dh[i] * (cache.h_prev[i] - c);
            daz[i] = dz * z * (1.0 - z);
            const double dc = dh[i] * (1.0 - z);
            dac[i] = dc * (1.0 - c * c);
            dh_prev[i] = dh[i] * z;
        }
        outer_add(gwc, dac.data(), x);
        outer_add(guc, dac.data(), cache.hr.data());
        for (int i = 0; i < H; ++i) gbc[i] += dac[i];

        Vec dhr(H, 0.0);
        matvec_t_add(uc, dac.data(), dhr.data());
        for (int i = 0; i < H; ++i) {
            const double r = cache.r[i];
            dar[i] = dhr[i] * cache.h_prev[i] * r * (1.0 - r);
            dh_prev[i] += dhr[i] * r;
        }
        outer_add(gwr, dar.data(), x);
        outer_add(gur, dar.data(), cache.h_prev.data());
        for (int i = 0; i < H; ++i) gbr[i] += dar[i];
        matvec_t_add(ur, dar.data(), dh_prev.data());

        outer_add(gwz, daz.data(), x);
        outer_add(guz, daz.data(), cache.h_prev.data());
        for (int i = 0; i < H; ++i) gbz[i] += daz[i];
        matvec_t_add(uz, daz.data(), dh_prev.data());
    }
};

struct BnCache {
    Vec mean, var, invstd;
    Mat xhat;  // B x 2H
};

struct SampleCache {
    std::vector<detail::GruStepCache> fwd, bwd;
    Vec h_fwd, h_bwd;
};

struct ForwardCache {
    std::vector<SampleCache> samples;
    std::vector<const MarketWindow*> windows;
    Mat h_cat;                       // B x 2H, GRU output
    BnCache bn;
    Mat h_bn;                        // post batch norm
    std::vector<uint8_t> drop_mask;  // B * 2H, 1 = kept
    double drop_scale = 1.0;
    bool drop_active = false;
    Mat h_drop;                      // MLP input
    Mat logits, probs;               // B x 2
    int seq_len = 0;
    bool valid = false;
};

class Model {
public:
    ModelConfig cfg;
    GruDirection fwd_dir, bwd_dir;
    Vec gamma, beta, g_gamma, g_beta;   // 2H
    Vec running_mean, running_var;      // 2H, updated in train mode
    Mat mlp_w, g_mlp_w;                 // 2 x 2H
    Vec mlp_b, g_mlp_b;                 // 2

    bool train_mode = false;

    Model() = default;

    explicit Model(const ModelConfig& config, Rng& rng) { init(config, rng); }

    void init(const ModelConfig& config, Rng& rng) {
        cfg = config;
        fwd_dir.init(cfg.input_dim, cfg.hidden, rng);
        bwd_dir.init(cfg.input_dim, cfg.hidden, rng);
        const int d2 = 2 * cfg.hidden;
        gamma.assign(d2, 1.0);
        beta.assign(d2, 0.0);
        g_gamma.assign(d2, 0.0);
        g_beta.assign(d2, 0.0);
        running_mean.assign(d2, 0.0);
        running_var.assign(d2, 1.0);
        mlp_w = Mat(2, d2);
        g_mlp_w = Mat(2, d2);
        const double bound = 1.0 / std::sqrt(double(d2));
        for (double& x : mlp_w.a) x = rng.uniform(-bound, bound);
        mlp_b.assign(2, 0.0);
        g_mlp_b.assign(2, 0.0);
    }

    void set_train(bool t) { train_mode = t; }

    std::vector<TensorView> tensors() {
        std::vector<TensorView> out;
        auto add_mat = [&](const std::string& name, Mat& v, Mat& g) {
            out.push_back({name, v.a.data(), g.a.data(), v.a.size()});
        };
        auto add_vec = [&](const std::string& name, Vec& v, Vec& g) {
            out.push_back({name, v.data(), g.data(), v.size()});
        };
        auto add_dir = [&](const std::string& p, GruDirection& d) {
            add_mat(p + ".wz", d.wz, d.gwz); add_mat(p + ".wr", d.wr, d.gwr);
            add_mat(p + ".wc", d.wc, d.gwc); add_mat(p + ".uz", d.uz, d.guz);
            add_mat(p + ".ur", d.ur, d.gur); add_mat(p + ".uc", d.uc, d.guc);
            add_vec(p + ".bz", d.bz, d.gbz); add_vec(p + ".br", d.br, d.gbr);
            add_vec(p + ".bc", d.bc, d.gbc);
        };
        add_dir("fwd", fwd_dir);
        add_dir("bwd", bwd_dir);
        add_vec("bn.gamma", gamma, g_gamma);
        add_vec("bn.beta", beta, g_beta);
        add_mat("mlp.w", mlp_w, g_mlp_w);
        add_vec("mlp.b", mlp_b, g_mlp_b);
        return out;
    }

    void zero_grads() {
        for (auto& t : tensors())
            std::fill(t.g, t.g + t.n, 0.0);
    }

    size_t param_count() {
        size_t n = 0;
        for (auto& t : tensors()) n += t.n;
        return n;
    }

    // -----------------------------------------------------------------
    //  Pieces
    // -----------------------------------------------------------------

    // Pure single-window Bi-GRU: forward reads the window left to
    // right, backward right to left, both from h0 = 0; the result is
    // the concatenation of the two final hidden states.
    Vec bigru_forward(const std::vector<Vec>& window, SampleCache* cache = nullptr) const {
        if (window.empty()) throw data_error("bigru_forward: empty window");
        for (const auto& x : window)
            if (static_cast<int>(x.size()) != cfg.input_dim)
                throw data_error("bigru_forward: input dimension mismatch");
        const int H = cfg.hidden;
        const int L = static_cast<int>(window.size());
        SampleCache local;
        SampleCache& sc = cache ? *cache : local;
        sc.fwd.resize(L);
        sc.bwd.resize(L);

        Vec h(H, 0.0);
        for (int t = 0; t < L; ++t) {
            Vec h_next;
            fwd_dir.step(window[t].data(), h, h_next, sc.fwd[t]);
            h = std::move(h_next);
        }
        sc.h_fwd = h;

        h.assign(H, 0.0);
        for (int t = L - 1; t >= 0; --t) {
            Vec h_next;
            bwd_dir.step(window[t].data(), h, h_next, sc.bwd[L - 1 - t]);
            h = std::move(h_next);
        }
        sc.h_bwd = h;

        Vec out(2 * H);
        std::copy(sc.h_fwd.begin(), sc.h_fwd.end(), out.begin());
        std::copy(sc.h_bwd.begin(), sc.h_bwd.end(), out.begin() + H);
        return out;
    }

    // Train mode normalizes by batch statistics and updates the running
    // ones; eval mode normalizes by the running statistics.
    Mat batchnorm_forward(const Mat& x, BnCache* cache) {
        const int B = x.rows, D = x.cols;
        Mat y(B, D);
        if (train_mode) {
            if (B < 2) throw data_error("batchnorm_forward: train mode needs batch >= 2");
            Vec mean(D, 0.0), var(D, 0.0), invstd(D, 0.0);
            for (int i = 0; i < B; ++i)
                for (int j = 0; j < D; ++j) mean[j] += x(i, j);
            for (double& m : mean) m /= B;
            for (int i = 0; i < B; ++i)
                for (int j = 0; j < D; ++j) {
                    const double d = x(i, j) - mean[j];
                    var[j] += d * d;
                }
            for (double& v : var) v /= B;  // biased
            for (int j = 0; j < D; ++j) invstd[j] = 1.0 / std::sqrt(var[j] + cfg.bn_epsilon);

            Mat xhat(B, D);
            for (int i = 0; i < B; ++i)
                for (int j = 0; j < D; ++j) {
                    xhat(i, j) = (x(i, j) - mean[j]) * invstd[j];
                    y(i, j) = gamma[j] * xhat(i, j) + beta[j];
                }
            for (int j = 0; j < D; ++j) {
                running_mean[j] = (1.0 - cfg.bn_momentum) * running_mean[j] + cfg.bn_momentum * mean[j];
                running_var[j] = (1.0 - cfg.bn_momentum) * running_var[j] + cfg.bn_momentum * var[j];
            }
            if (cache) {
                cache->mean = std::move(mean);
                cache->var = std::move(var);
                cache->invstd = std::move(invstd);
                cache->xhat = std::move(xhat);
            }
        } else {
            for (int j = 0; j < D; ++j) {
                const double invstd = 1.0 / std::sqrt(running_var[j] + cfg.bn_epsilon);
                for (int i = 0; i < B; ++i)
                    y(i, j) = gamma[j] * (x(i, j) - running_mean[j]) * invstd + beta[j];
            }
        }
        return y;
    }

    // Gradient through the batch statistics. The dmu term
    // sum(x - mu) is identically zero and is omitted.
    Mat batchnorm_backward(const Mat& dy, const BnCache& cache) {
        const int B = dy.rows, D = dy.cols;
        Mat dx(B, D);
        for (int j = 0; j < D; ++j) {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (int i = 0; i < B; ++i) {
                sum_dy += dy(i, j);
                sum_dy_xhat += dy(i, j) * cache.xhat(i, j);
            }
            g_gamma[j] += sum_dy_xhat;
            g_beta[j] += sum_dy;
            const double k = gamma[j] * cache.invstd[j] / B;
            for (int i = 0; i < B; ++i)
                dx(i, j) = k * (B * dy(i, j) - sum_dy - cache.xhat(i, j) * sum_dy_xhat);
        }
        return dx;
    }

    // Inverted dropout: zero with probability rate, scale survivors by
    // 1/(1-rate); identity outside training or at rate 0.
    Mat dropout_forward(const Mat& x, Rng* rng, std::vector<uint8_t>* mask_out,
                        double* scale_out, bool* active_out) {
        const double rate = cfg.dropout;
        if (!train_mode || rate <= 0.0) {
            if (active_out) *active_out = false;
            return x;
        }
        if (!rng) throw data_error("dropout_forward: train mode needs an RNG");
        const double scale = 1.0 / (1.0 - rate);
        Mat y(x.rows, x.cols);
        std::vector<uint8_t> mask(x.a.size());
        for (size_t i = 0; i < x.a.size(); ++i) {
            mask[i] = rng->uniform() >= rate ? 1 : 0;
            y.a[i] = mask[i] ? x.a[i] * scale : 0.0;
        }
        if (mask_out) *mask_out = std::move(mask);
        if (scale_out) *scale_out = scale;
        if (active_out) *active_out = true;
        return y;
    }

    // softmax(W h + b)
    Vec mlp_softmax_forward(const Vec& h) const {
        if (static_cast<int>(h.size()) != mlp_w.cols)
            throw data_error("mlp_softmax_forward: dimension mismatch");
        Vec logits(mlp_b);
        matvec_add(mlp_w, h.data(), logits.data());
        return softmax(logits);
    }

    // -----------------------------------------------------------------
    //  Batch forward / backward
    // -----------------------------------------------------------------
    Mat forward(const std::vector<const MarketWindow*>& batch, Rng* dropout_rng = nullptr) {
        if (batch.empty()) throw data_error("forward: empty batch");
        const int B = static_cast<int>(batch.size());
        const int L = static_cast<int>(batch[0]->sequence.size());
        for (const auto* w : batch)
            if (static_cast<int>(w->sequence.size()) != L)
                throw data_error("forward: mixed sequence lengths in one batch");

        cache_.samples.assign(B, {});
        cache_.windows = batch;
        cache_.seq_len = L;
        const int D = 2 * cfg.hidden;
        cache_.h_cat = Mat(B, D);
        for (int i = 0; i < B; ++i) {
            Vec h = bigru_forward(batch[i]->sequence, &cache_.samples[i]);
            std::copy(h.begin(), h.end(), cache_.h_cat.row(i));
        }

        cache_.h_bn = cfg.use_batchnorm
                          ? batchnorm_forward(cache_.h_cat, &cache_.bn)
                          : cache_.h_cat;

        Mat h_drop = dropout_forward(cache_.h_bn, dropout_rng, &cache_.drop_mask,
                                     &cache_.drop_scale, &cache_.drop_active);

        cache_.logits = Mat(B, 2);
        cache_.probs = Mat(B, 2);
        for (int i = 0; i < B; ++i) {
            Vec logits(mlp_b);
            matvec_add(mlp_w, h_drop.row(i), logits.data());
            Vec p = softmax(logits);
            cache_.logits(i, 0) = logits[0];
            cache_.logits(i, 1) = logits[1];
            cache_.probs(i, 0) = p[0];
            cache_.probs(i, 1) = p[1];
        }
        cache_.h_drop = std::move(h_drop);
        cache_.valid = true;
        return cache_.probs;
    }

    // Gradients of the mean batch cross-entropy w.r.t. every parameter.
    // targets is B x 2 and each row must sum to 1 (smoothed labels).
    void backward(const Mat& targets) {
        if (!cache_.valid) throw data_error("backward: no cached forward pass");
        if (!train_mode) throw data_error("backward: model not in train mode");
        const int B = cache_.probs.rows, D = 2 * cfg.hidden;
        if (targets.rows != B || targets.cols != 2)
            throw data_error("backward: target shape mismatch");

        // softmax + cross-entropy gradient, mean reduction
        Mat dlogits(B, 2);
        for (int i = 0; i < B; ++i)
            for (int k = 0; k < 2; ++k)
                dlogits(i, k) = (cache_.probs(i, k) - targets(i, k)) / B;

        Mat dh_drop(B, D);
        for (int i = 0; i < B; ++i) {
            for (int k = 0; k < 2; ++k) {
                g_mlp_b[k] += dlogits(i, k);
                const double dk = dlogits(i, k);
                const double* h = cache_.h_drop.row(i);
                double* gw = g_mlp_w.row(k);
                for (int j = 0; j < D; ++j) gw[j] += dk * h[j];
            }
            double* dh = dh_drop.row(i);
            for (int j = 0; j < D; ++j)
                dh[j] = mlp_w(0, j) * dlogits(i, 0) + mlp_w(1, j) * dlogits(i, 1);
        }

        if (cache_.drop_active) {
            for (int i = 0; i < B; ++i)
                for (int j = 0; j < D; ++j) {
                    const size_t idx = static_cast<size_t>(i) * D + j;
                    dh_drop(i, j) = cache_.drop_mask[idx]
                                        ? dh_drop(i, j) * cache_.drop_scale
                                        : 0.0;
                }
        }

        Mat dh_cat = cfg.use_batchnorm ? batchnorm_backward(dh_drop, cache_.bn)
                                       : std::move(dh_drop);

        const int H = cfg.hidden;
        const int L = cache_.seq_len;
        for (int i = 0; i < B; ++i) {
            const auto& window = cache_.windows[i]->sequence;
            SampleCache& sc = cache_.samples[i];

            Vec dh(H), dh_prev;
            for (int k = 0; k < H; ++k) dh[k] = dh_cat(i, k);
            for (int t = L - 1; t >= 0; --t) {
                fwd_dir.step_backward(window[t].data(), sc.fwd[t], dh, dh_prev);
                dh = std::move(dh_prev);
            }
            for (int k = 0; k < H; ++k) dh[k] = dh_cat(i, H + k);
            for (int t = L - 1; t >= 0; --t) {
                bwd_dir.step_backward(window[L - 1 - t].data(), sc.bwd[t], dh, dh_prev);
                dh = std::move(dh_prev);
            }
        }
        cache_.valid = false;
    }

    const Mat& last_probs() const { return cache_.probs; }

private:
    ForwardCache cache_;
};

// ---------------------------------------------------------------------
//  Checkpoints: schema version, config, every parameter tensor, batch
//  norm running statistics, and the RNG state. Round-trips bit-exactly.
// ---------------------------------------------------------------------
inline json model_to_json(Model& model, const Rng& rng) {
    json params;
    for (auto& t : model.tensors()) params[t.name] = Vec(t.v, t.v + t.n);
    return json{{"schema", 1},
                {"kind", "model"},
                {"config",
                 {{"input_dim", model.cfg.input_dim},
                  {"hidden", model.cfg.hidden},
                  {"dropout", model.cfg.dropout},
                  {"use_batchnorm", model.cfg.use_batchnorm},
                  {"bn_momentum", model.cfg.bn_momentum},
                  {"bn_epsilon", model.cfg.bn_epsilon}}},
                {"params", params},
                {"running_mean", model.running_mean},
                {"running_var", model.running_var},
                {"rng", {rng.s[0], rng.s[1], rng.s[2], rng.s[3]}}};
}

inline void save_model(const std::string& path, Model& model, const Rng& rng) {
    open_output(path) << model_to_json(model, rng).dump() << '\n';
}

inline Model model_from_json(const json& j, Rng* rng_out) {
    if (j.value("kind", "") != "model") throw data_error("not a model checkpoint");
    if (j.value("schema", 0) != 1) throw data_error("unsupported checkpoint schema");
    ModelConfig cfg;
    const auto& c = j.at("config");
    cfg.input_dim = c.at("input_dim").get<int>();
    cfg.hidden = c.at("hidden").get<int>();
    cfg.dropout = c.at("dropout").get<double>();
    cfg.use_batchnorm = c.at("use_batchnorm").get<bool>();
    cfg.bn_momentum = c.at("bn_momentum").get<double>();
    cfg.bn_epsilon = c.at("bn_epsilon").get<double>();

    Rng scratch(0);
    Model model(cfg, scratch);
    const auto& params = j.at("params");
    for (auto& t : model.tensors()) {
        if (!params.contains(t.name)) throw data_error("checkpoint missing tensor " + t.name);
        Vec v = params.at(t.name).get<Vec>();
        if (v.size() != t.n) throw data_error("checkpoint tensor " + t.name + " has wrong size");
        std::copy(v.begin(), v.end(), t.v);
    }
    model.running_mean = j.at("running_mean").get<Vec>();
    model.running_var = j.at("running_var").get<Vec>();
    if (model.running_mean.size() != static_cast<size_t>(2 * cfg.hidden) ||
        model.running_var.size() != static_cast<size_t>(2 * cfg.hidden))
        throw data_error("checkpoint running stats have wrong size");
    if (rng_out) {
        const auto& s = j.at("rng");
        for (int i = 0; i < 4; ++i) rng_out->s[i] = s.at(i).get<uint64_t>();
    }
    return model;
}

inline Model load_model(const std::string& path, Rng* rng_out = nullptr) {
    json j = json::parse(open_input(path), nullptr, false);
    if (j.is_discarded()) throw data_error(path + ": malformed checkpoint");
    return model_from_json(j, rng_out);
}

}  // namespace newsflow
