#pragma once
// Per-article key vectors (CBOW word vectors blended by TFIDF weight)
// and value vectors (precomputed 1024-dim encoder outputs reduced to
// 256 by PCA). The encoder itself is external; a deterministic
// hash-seeded stand-in generator exists for tests and dry runs.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "newsflow/io.hpp"
#include "newsflow/numerics.hpp"

namespace newsflow {

// ---------------------------------------------------------------------
//  Corpus
// ---------------------------------------------------------------------
struct Headline {
    std::string id;
    std::string date;  // ISO calendar date (not necessarily a trading day)
    std::vector<std::string> tokens;
};

struct Corpus {
    std::vector<Headline> headlines;    // every entry has >= 1 token
    std::vector<std::string> dropped;   // ids that tokenized to nothing
};

// Lowercase, split on non-alphanumerics, drop empty tokens.
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

inline Corpus corpus_from_records(
    const std::vector<std::pair<std::string, std::pair<std::string, std::string>>>& recs) {
    Corpus corpus;
    std::unordered_map<std::string, bool> seen;
    for (const auto& [id, rest] : recs) {
        if (seen.count(id)) throw data_error("duplicate article id " + id);
        seen[id] = true;
        Headline h{id, rest.first, tokenize(rest.second)};
        if (h.tokens.empty())
            corpus.dropped.push_back(id);
        else
            corpus.headlines.push_back(std::move(h));
    }
    return corpus;
}

// JSON Lines, one record per line: {"id", "date": "YYYY-MM-DD", "text"}
inline Corpus load_headlines_jsonl(const std::string& path) {
    std::vector<std::pair<std::string, std::pair<std::string, std::string>>> recs;
    read_jsonl(path, [&](int line_no, const json& rec) {
        if (!rec.contains("id") || !rec.contains("date") || !rec.contains("text"))
            throw data_error(path + ":" + std::to_string(line_no) +
                             ": record needs id/date/text");
        recs.push_back({rec["id"].get<std::string>(),
                        {rec["date"].get<std::string>(), rec["text"].get<std::string>()}});
    });
    return corpus_from_records(recs);
}

inline void save_headlines_jsonl(const std::string& path,
                                 const std::vector<std::pair<std::string, std::pair<std::string, std::string>>>& recs) {
    auto out = open_output(path);
    for (const auto& [id, rest] : recs) {
        json rec{{"id", id}, {"date", rest.first}, {"text", rest.second}};
        out << rec.dump() << '\n';
    }
}

// ---------------------------------------------------------------------
//  TFIDF
//  idf(k) = ln((1+N)/(1+df_k)) + 1, weight(k, article) = tf * idf.
// ---------------------------------------------------------------------
struct TfidfWeights {
    std::unordered_map<std::string, double> idf;

    double weight(const std::string& token, double tf) const {
        auto it = idf.find(token);
        return it == idf.end() ? 0.0 : tf * it->second;
    }
};

inline TfidfWeights compute_tfidf(const Corpus& corpus) {
    if (corpus.headlines.empty()) throw data_error("compute_tfidf: empty corpus");
    std::unordered_map<std::string, int> df;
    for (const auto& h : corpus.headlines) {
        std::unordered_map<std::string, bool> seen;
        for (const auto& t : h.tokens)
            if (!seen.count(t)) {
                seen[t] = true;
                ++df[t];
            }
    }
    TfidfWeights w;
    const double n = static_cast<double>(corpus.headlines.size());
    for (const auto& [token, d] : df)
        w.idf[token] = std::log((1.0 + n) / (1.0 + d)) + 1.0;
    return w;
}

// ---------------------------------------------------------------------
//  CBOW word2vec with negative sampling. Single-threaded on purpose:
//  the vector stream must be a pure function of (corpus order, seed).
// ---------------------------------------------------------------------
struct WordEmbeddings {
    std::unordered_map<std::string, int> vocab;  // token -> row
    std::vector<std::string> tokens;             // row -> token
    Mat vectors;                                 // V x dim

    int dim() const { return vectors.cols; }

    const double* vector_of(const std::string& token) const {
        auto it = vocab.find(token);
        return it == vocab.end() ? nullptr : vectors.row(it->second);
    }
};

struct CbowConfig {
    int dim = 60;
    int context_window = 5;
    int epochs = 5;
    int negatives = 5;
    double lr = 0.025;      // decays linearly over the run
    int min_count = 1;
    uint64_t seed = 0;
};

namespace detail {

inline double fast_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace detail

// Returns embeddings for every token with frequency >= min_count.
// epoch_loss, when given, receives the mean negative-sampling loss of
// each epoch.
inline WordEmbeddings train_cbow(const Corpus& corpus, const CbowConfig& cfg,
                                 Vec* epoch_loss = nullptr) {
    if (corpus.headlines.empty()) throw data_error("train_cbow: empty corpus");
    if (cfg.dim < 1) throw data_error("train_cbow: dim must be >= 1");

    // frequency-sorted vocabulary (count desc, token asc) for a
    // deterministic row order
    std::unordered_map<std::string, long long> counts;
    for (const auto& h : corpus.headlines)
        for (const auto& t : h.tokens) ++counts[t];
    std::vector<std::pair<std::string, long long>> by_freq(counts.begin(), counts.end());
    std::erase_if(by_freq, [&](const auto& p) { return p.second < cfg.min_count; });
    std::sort(by_freq.begin(), by_freq.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (by_freq.empty()) throw data_error("train_cbow: vocabulary empty after min_count");

    WordEmbeddings emb;
    emb.vectors = Mat(static_cast<int>(by_freq.size()), cfg.dim);
    for (const auto& [token, c] : by_freq) {
        emb.vocab[token] = static_cast<int>(emb.tokens.size());
        emb.tokens.push_back(token);
    }
    const int vocab_size = emb.vectors.rows;

    Rng rng(cfg.seed);
    for (double& x : emb.vectors.a) x = (rng.uniform() - 0.5) / cfg.dim;
    Mat ctx_out(vocab_size, cfg.dim);  // output-side vectors start at zero

    // unigram^0.75 negative-sampling table
    const int table_size = 1 << 20;
    std::vector<int> table(table_size);
    {
        double total = 0.0;
        for (const auto& [token, c] : by_freq) total += std::pow(double(c), 0.75);
        double cum = std::pow(double(by_freq[0].second), 0.75) / total;
        int w = 0;
        for (int i = 0; i < table_size; ++i) {
            table[i] = w;
            if (double(i + 1) / table_size > cum && w + 1 < vocab_size) {
                ++w;
                cum += std::pow(double(by_freq[w].second), 0.75) / total;
            }
        }
    }

    // sentences as vocab indices, OOV dropped
    std::vector<std::vector<int>> sentences;
    long long total_words = 0;
    for (const auto& h : corpus.headlines) {
        std::vector<int> s;
        for (const auto& t : h.tokens) {
            auto it = emb.vocab.find(t);
            if (it != emb.vocab.end()) s.push_back(it->second);
        }
        total_words += static_cast<long long>(s.size());
        if (!s.empty()) sentences.push_back(std::move(s));
    }

    const long long train_total = std::max(1LL, total_words * cfg.epochs);
    long long processed = 0;
    Vec h(cfg.dim), grad_h(cfg.dim);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double loss_sum = 0.0;
        long long loss_terms = 0;
        for (const auto& sent : sentences) {
            const int len = static_cast<int>(sent.size());
            for (int pos = 0; pos < len; ++pos) {
                const double lr = cfg.lr *
                    std::max(1e-4, 1.0 - double(processed) / double(train_total));
                ++processed;

                const int span = 1 + static_cast<int>(rng.below(cfg.context_window));
                int cw = 0;
                std::fill(h.begin(), h.end(), 0.0);
                for (int off = -span; off <= span; ++off) {
                    const int p = pos + off;
                    if (off == 0 || p < 0 || p >= len) continue;
                    const double* v = emb.vectors.row(sent[p]);
                    for (int d = 0; d < cfg.dim; ++d) h[d] += v[d];
                    ++cw;
                }
                if (cw == 0) continue;
                for (double& x : h) x /= cw;

                std::fill(grad_h.begin(), grad_h.end(), 0.0);
                const int center = sent[pos];
                for (int k = 0; k <= cfg.negatives; ++k) {
                    int target;
                    double y;
                    if (k == 0) {
                        target = center;
                        y = 1.0;
                    } else {
                        target = table[rng.below(table_size)];
                        if (target == center) continue;
                        y = 0.0;
                    }
                    double* out = ctx_out.row(target);
                    const double f = detail::fast_sigmoid(dot(h.data(), out, cfg.dim));
                    loss_sum += y > 0.5 ? -std::log(std::max(f, 1e-12))
                                        : -std::log(std::max(1.0 - f, 1e-12));
                    ++loss_terms;
                    const double g = (y - f) * lr;
                    for (int d = 0; d < cfg.dim; ++d) {
                        grad_h[d] += g * out[d];
                        out[d] += g * h[d];
                    }
                }
                for (int off = -span; off <= span; ++off) {
                    const int p = pos + off;
                    if (off == 0 || p < 0 || p >= len) continue;
                    double* v = emb.vectors.row(sent[p]);
                    for (int d = 0; d < cfg.dim; ++d) v[d] += grad_h[d];
                }
            }
        }
        if (epoch_loss) epoch_loss->push_back(loss_terms ? loss_sum / loss_terms : 0.0);
    }
    require_finite(emb.vectors.a, "cbow vectors");
    return emb;
}

// ---------------------------------------------------------------------
//  Key vector, Eq-style TFIDF-weighted mean of the article's word
//  vectors:  sum_k gamma_k w_k / sum_k gamma_k  over distinct tokens.
// ---------------------------------------------------------------------
inline Vec key_vector(const std::vector<std::string>& tokens,
                      const WordEmbeddings& emb, const TfidfWeights& tfidf) {
    std::map<std::string, int> tf;
    for (const auto& t : tokens) ++tf[t];

    Vec key(emb.dim(), 0.0);
    double gamma_sum = 0.0;
    for (const auto& [token, count] : tf) {
        const double* w = emb.vector_of(token);
        if (!w) continue;
        const double gamma = tfidf.weight(token, count);
        if (gamma <= 0.0) continue;
        for (int d = 0; d < emb.dim(); ++d) key[d] += gamma * w[d];
        gamma_sum += gamma;
    }
    if (gamma_sum <= 0.0) throw data_error("empty key vector");
    for (double& x : key) x /= gamma_sum;
    require_finite(key, "key vector");
    return key;
}

// ---------------------------------------------------------------------
//  PCA by Jacobi eigendecomposition of the sample covariance.
//  Component signs are normalized (largest-magnitude entry positive)
//  so refits are bit-reproducible.
// ---------------------------------------------------------------------
struct PcaModel {
    Vec mean;        // in_dim
    Mat components;  // in_dim x out_dim, orthonormal columns, eigenvalue desc
    Vec eigenvalues; // out_dim

    int in_dim() const { return components.rows; }
    int out_dim() const { return components.cols; }
};

namespace detail {

// Symmetric QR eigensolver: Householder reduction to tridiagonal form
// with transform accumulation, then implicit-shift QL. Eigenvalues land
// in d, eigenvectors become the columns of a.
inline void tred2(Mat& a, Vec& d, Vec& e) {
    const int n = a.rows;
    d.assign(n, 0.0);
    e.assign(n, 0.0);
    for (int i = n - 1; i >= 1; --i) {
        const int l = i - 1;
        double h = 0.0;
        if (l > 0) {
            double scale = 0.0;
            for (int k = 0; k <= l; ++k) scale += std::abs(a(i, k));
            if (scale == 0.0) {
                e[i] = a(i, l);
            } else {
                for (int k = 0; k <= l; ++k) {
                    a(i, k) /= scale;
                    h += a(i, k) * a(i, k);
                }
                double f = a(i, l);
                double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
                e[i] = scale * g;
                h -= f * g;
                a(i, l) = f - g;
                f = 0.0;
                for (int j = 0; j <= l; ++j) {
                    a(j, i) = a(i, j) / h;
                    g = 0.0;
                    for (int k = 0; k <= j; ++k) g += a(j, k) * a(i, k);
                    for (int k = j + 1; k <= l; ++k) g += a(k, j) * a(i, k);
                    e[j] = g / h;
                    f += e[j] * a(i, j);
                }
                const double hh = f / (h + h);
                for (int j = 0; j <= l; ++j) {
                    f = a(i, j);
                    e[j] = g = e[j] - hh * f;
                    for (int k = 0; k <= j; ++k) a(j, k) -= f * e[k] + g * a(i, k);
                }
            }
        } else {
            e[i] = a(i, l);
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for (int i = 0; i < n; ++i) {
        const int l = i - 1;
        if (d[i] != 0.0) {
            for (int j = 0; j <= l; ++j) {
                double g = 0.0;
                for (int k = 0; k <= l; ++k) g += a(i, k) * a(k, j);
                for (int k = 0; k <= l; ++k) a(k, j) -= g * a(k, i);
            }
        }
        d[i] = a(i, i);
        a(i, i) = 1.0;
        for (int j = 0; j <= l; ++j) a(j, i) = a(i, j) = 0.0;
    }
}

inline void tqli(Vec& d, Vec& e, Mat& z) {
    const int n = static_cast<int>(d.size());
    for (int i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
            }
            if (m != l) {
                if (iter++ == 50) throw numeric_error("tqli: too many iterations");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::abs(r) : -std::abs(r)));
                double s = 1.0, c = 1.0, p = 0.0;
                bool underflow = false;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    for (int k = 0; k < n; ++k) {
                        f = z(k, i + 1);
                        z(k, i + 1) = s * z(k, i) + c * f;
                        z(k, i) = c * z(k, i) - s * f;
                    }
                }
                if (underflow) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

}  // namespace detail

inline PcaModel pca_fit(const std::vector<Vec>& xs, int out_dim) {
    if (xs.empty()) throw data_error("pca_fit: no samples");
    const int in_dim = static_cast<int>(xs[0].size());
    if (out_dim < 1 || out_dim > in_dim) throw data_error("pca_fit: bad out_dim");
    if (static_cast<int>(xs.size()) <= out_dim)
        throw data_error("pca_fit: need more samples than out_dim");

    PcaModel model;
    model.mean.assign(in_dim, 0.0);
    for (const auto& x : xs) {
        if (static_cast<int>(x.size()) != in_dim)
            throw data_error("pca_fit: inconsistent input dimension");
        for (int d = 0; d < in_dim; ++d) model.mean[d] += x[d];
    }
    for (double& m : model.mean) m /= static_cast<double>(xs.size());

    Mat cov(in_dim, in_dim);
    Vec centered(in_dim);
    for (const auto& x : xs) {
        for (int d = 0; d < in_dim; ++d) centered[d] = x[d] - model.mean[d];
        for (int i = 0; i < in_dim; ++i) {
            const double ci = centered[i];
            double* row = cov.row(i);
            for (int j = i; j < in_dim; ++j) row[j] += ci * centered[j];
        }
    }
    for (int i = 0; i < in_dim; ++i)
        for (int j = i; j < in_dim; ++j) {
            cov(i, j) /= static_cast<double>(xs.size());
            cov(j, i) = cov(i, j);
        }

    Vec eigenvalues, offdiag;
    detail::tred2(cov, eigenvalues, offdiag);
    detail::tqli(eigenvalues, offdiag, cov);  // cov columns become eigenvectors

    std::vector<int> order(in_dim);
    for (int i = 0; i < in_dim; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return eigenvalues[a] > eigenvalues[b]; });

    model.components = Mat(in_dim, out_dim);
    model.eigenvalues.assign(out_dim, 0.0);
    for (int c = 0; c < out_dim; ++c) {
        const int src = order[c];
        model.eigenvalues[c] = eigenvalues[src];
        // sign convention: largest-magnitude entry positive
        int arg = 0;
        for (int r = 1; r < in_dim; ++r)
            if (std::abs(cov(r, src)) > std::abs(cov(arg, src))) arg = r;
        const double sign = cov(arg, src) < 0.0 ? -1.0 : 1.0;
        for (int r = 0; r < in_dim; ++r) model.components(r, c) = sign * cov(r, src);
    }
    return model;
}

inline Vec pca_transform(const PcaModel& model, const Vec& v) {
    if (static_cast<int>(v.size()) != model.in_dim())
        throw data_error("pca_transform: dimension mismatch");
    Vec out(model.out_dim(), 0.0);
    for (int r = 0; r < model.in_dim(); ++r) {
        const double x = v[r] - model.mean[r];
        if (x == 0.0) continue;
        const double* row = model.components.row(r);
        for (int c = 0; c < model.out_dim(); ++c) out[c] += x * row[c];
    }
    return out;
}

inline Vec pca_reconstruct(const PcaModel& model, const Vec& y) {
    if (static_cast<int>(y.size()) != model.out_dim())
        throw data_error("pca_reconstruct: dimension mismatch");
    Vec out(model.mean);
    for (int r = 0; r < model.in_dim(); ++r) {
        const double* row = model.components.row(r);
        out[r] += dot(row, y.data(), model.out_dim());
    }
    return out;
}

// ---------------------------------------------------------------------
//  Value vectors: encoder outputs ingested from file, or the
//  deterministic hash-seeded stand-in.
// ---------------------------------------------------------------------
inline std::map<std::string, Vec> ingest_value_vectors(const std::string& path,
                                                       int expected_dim = 1024) {
    std::map<std::string, Vec> out;
    read_jsonl(path, [&](int line_no, const json& rec) {
        const std::string where = path + ":" + std::to_string(line_no);
        if (!rec.contains("id") || !rec.contains("vec"))
            throw data_error(where + ": record needs id/vec");
        std::string id = rec["id"].get<std::string>();
        Vec v = vec_from_json(rec["vec"], where);
        if (static_cast<int>(v.size()) != expected_dim)
            throw data_error(where + ": expected " + std::to_string(expected_dim) +
                             " floats, got " + std::to_string(v.size()));
        if (!all_finite(v)) throw data_error(where + ": non-finite value vector");
        if (!out.emplace(std::move(id), std::move(v)).second)
            throw data_error(where + ": duplicate article id");
    });
    return out;
}

inline void save_value_vectors(const std::string& path,
                               const std::map<std::string, Vec>& values) {
    auto out = open_output(path);
    for (const auto& [id, vec] : values) {
        json rec{{"id", id}, {"vec", vec_to_json(vec)}};
        out << rec.dump() << '\n';
    }
}

inline uint64_t fnv1a64(const std::vector<std::string>& tokens) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& t : tokens) {
        for (unsigned char c : t) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        h ^= 0x1f;  // token separator
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Stand-in for encoder outputs: Gaussian vectors seeded from the token
// list, so identical token lists always map to identical vectors.
inline std::map<std::string, Vec> synth_value_vectors(const Corpus& corpus,
                                                      uint64_t seed, int dim = 1024) {
    std::map<std::string, Vec> out;
    for (const auto& h : corpus.headlines) {
        Rng rng(fnv1a64(h.tokens) ^ (seed * 0x9e3779b97f4a7c15ULL));
        Vec v(dim);
        for (double& x : v) x = rng.gaussian();
        out.emplace(h.id, std::move(v));
    }
    return out;
}

// ---------------------------------------------------------------------
//  Per-article (key, value) pair. Key dim 60 by default, value dim 256.
//  Pairs are computed once per corpus and cached to JSONL.
// ---------------------------------------------------------------------
struct KeyValuePair {
    std::string article_id;
    std::string date;
    Vec key;
    Vec value;
};

inline void save_kv_pairs(const std::string& path, const std::vector<KeyValuePair>& pairs) {
    auto out = open_output(path);
    for (const auto& p : pairs) {
        json rec{{"id", p.article_id}, {"date", p.date},
                 {"key", vec_to_json(p.key)}, {"value", vec_to_json(p.value)}};
        out << rec.dump() << '\n';
    }
}

inline std::vector<KeyValuePair> load_kv_pairs(const std::string& path) {
    std::vector<KeyValuePair> pairs;
    read_jsonl(path, [&](int line_no, const json& rec) {
        const std::string where = path + ":" + std::to_string(line_no);
        if (!rec.contains("id") || !rec.contains("date") || !rec.contains("key") ||
            !rec.contains("value"))
            throw data_error(where + ": record needs id/date/key/value");
        KeyValuePair p;
        p.article_id = rec["id"].get<std::string>();
        p.date = rec["date"].get<std::string>();
        p.key = vec_from_json(rec["key"], where);
        p.value = vec_from_json(rec["value"], where);
        pairs.push_back(std::move(p));
    });
    return pairs;
}

// ---------------------------------------------------------------------
//  Checkpoints (JSON with explicit dims and row-major float arrays)
// ---------------------------------------------------------------------
inline void save_word_embeddings(const std::string& path, const WordEmbeddings& emb) {
    json j{{"schema", 1},
           {"kind", "word_embeddings"},
           {"dim", emb.dim()},
           {"tokens", emb.tokens},
           {"vectors", emb.vectors.a}};
    open_output(path) << j.dump() << '\n';
}

inline WordEmbeddings load_word_embeddings(const std::string& path) {
    json j = json::parse(open_input(path), nullptr, false);
    if (j.is_discarded() || j.value("kind", "") != "word_embeddings")
        throw data_error(path + ": not a word-embeddings checkpoint");
    WordEmbeddings emb;
    emb.tokens = j["tokens"].get<std::vector<std::string>>();
    const int dim = j["dim"].get<int>();
    emb.vectors = Mat(static_cast<int>(emb.tokens.size()), dim);
    emb.vectors.a = vec_from_json(j["vectors"], path);
    if (emb.vectors.a.size() != static_cast<size_t>(emb.vectors.rows) * dim)
        throw data_error(path + ": vector payload has wrong size");
    for (size_t i = 0; i < emb.tokens.size(); ++i)
        emb.vocab[emb.tokens[i]] = static_cast<int>(i);
    return emb;
}

inline void save_pca(const std::string& path, const PcaModel& model) {
    json j{{"schema", 1},
           {"kind", "pca"},
           {"in_dim", model.in_dim()},
           {"out_dim", model.out_dim()},
           {"mean", model.mean},
           {"eigenvalues", model.eigenvalues},
           {"components", model.components.a}};
    open_output(path) << j.dump() << '\n';
}

inline PcaModel load_pca(const std::string& path) {
    json j = json::parse(open_input(path), nullptr, false);
    if (j.is_discarded() || j.value("kind", "") != "pca")
        throw data_error(path + ": not a PCA checkpoint");
    PcaModel model;
    const int in_dim = j["in_dim"].get<int>(), out_dim = j["out_dim"].get<int>();
    model.mean = vec_from_json(j["mean"], path);
    model.eigenvalues = vec_from_json(j["eigenvalues"], path);
    model.components = Mat(in_dim, out_dim);
    model.components.a = vec_from_json(j["components"], path);
    if (model.components.a.size() != static_cast<size_t>(in_dim) * out_dim ||
        model.mean.size() != static_cast<size_t>(in_dim))
        throw data_error(path + ": inconsistent PCA payload");
    return model;
}

}  // namespace newsflow
