#pragma once
// Flat key-value run configuration. Defaults mirror the published
// training setup; a config file may override them and CLI flags
// override the file. Every command echoes its resolved configuration
// next to its outputs so experiment rows stay auditable.

#include <functional>
#include <map>
#include <string>

#include "newsflow/pipeline.hpp"
#include "newsflow/synth.hpp"
#include "newsflow/training.hpp"

namespace newsflow {

struct RunConfig {
    // input files
    std::string headlines;
    std::string prices;
    std::string values;            // encoder outputs; stand-in generator if empty
    std::string stock_embeddings;  // random unit-vector fallback if empty
    std::string checkpoint;        // for evaluate
    std::string out = "out";

    // dataset
    int window = 5;
    Mode mode = Mode::classification;
    double ambiguity_threshold = 0.0;

    // training; label smoothing defaults to the best published alpha
    TrainConfig train = [] {
        TrainConfig t;
        t.alpha = 0.2;
        return t;
    }();
    std::string remove;  // ablation CSV: batchnorm,dropout,weight_decay

    // distillation dimensions
    PipelineConfig pipe;

    // experiments
    int runs = 0;  // 0 = per-experiment default

    // synthetic data generation
    int synth_stocks = 50;
    int synth_days = 65;
    double synth_signal = 6.0;
    double synth_up_prob = 0.55;
    double synth_sharpness = 25.0;
    double synth_covariate_spread = 0.0;
    double synth_daily_return = 0.01;

    SynthConfig synth_config() const {
        SynthConfig s;
        s.n_stocks = synth_stocks;
        s.n_days = synth_days;
        s.value_dim = pipe.value_dim;
        s.signal = synth_signal;
        s.up_prob = synth_up_prob;
        s.attention_sharpness = synth_sharpness;
        s.covariate_spread = synth_covariate_spread;
        s.daily_return = synth_daily_return;
        s.seed = train.seed;
        return s;
    }
};

namespace detail {

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw data_error("config key '" + key + "': expected true/false, got '" + v + "'");
}

}  // namespace detail

// Setter/getter table shared by the file parser and the echo writer.
struct ConfigBinding {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

inline const std::map<std::string, ConfigBinding>& config_bindings() {
    static const std::map<std::string, ConfigBinding> table = [] {
        std::map<std::string, ConfigBinding> t;
        auto str = [&](const std::string& key, std::string RunConfig::* f) {
            t[key] = {[f](RunConfig& c, const std::string& v) { c.*f = v; },
                      [f](const RunConfig& c) { return c.*f; }};
        };
        auto num = [&](const std::string& key, auto getter, auto setter) {
            t[key] = {setter, getter};
        };
        str("headlines", &RunConfig::headlines);
        str("prices", &RunConfig::prices);
        str("values", &RunConfig::values);
        str("stock_embeddings", &RunConfig::stock_embeddings);
        str("checkpoint", &RunConfig::checkpoint);
        str("out", &RunConfig::out);
        str("remove", &RunConfig::remove);

        num("window",
            [](const RunConfig& c) { return std::to_string(c.window); },
            [](RunConfig& c, const std::string& v) { c.window = std::stoi(v); });
        num("mode",
            [](const RunConfig& c) { return to_string(c.mode); },
            [](RunConfig& c, const std::string& v) { c.mode = mode_from_string(v); });
        num("ambiguity_threshold",
            [](const RunConfig& c) { return fmt_double(c.ambiguity_threshold); },
            [](RunConfig& c, const std::string& v) { c.ambiguity_threshold = parse_double(v, "ambiguity_threshold"); });

        num("seed",
            [](const RunConfig& c) { return std::to_string(c.train.seed); },
            [](RunConfig& c, const std::string& v) { c.train.seed = std::stoull(v); });
        num("alpha",
            [](const RunConfig& c) { return fmt_double(c.train.alpha); },
            [](RunConfig& c, const std::string& v) { c.train.alpha = parse_double(v, "alpha"); });
        num("lr_explore",
            [](const RunConfig& c) { return fmt_double(c.train.lr_explore); },
            [](RunConfig& c, const std::string& v) { c.train.lr_explore = parse_double(v, "lr_explore"); });
        num("lr_exploit",
            [](const RunConfig& c) { return fmt_double(c.train.lr_exploit); },
            [](RunConfig& c, const std::string& v) { c.train.lr_exploit = parse_double(v, "lr_exploit"); });
        num("epochs_per_phase",
            [](const RunConfig& c) { return std::to_string(c.train.epochs_per_phase); },
            [](RunConfig& c, const std::string& v) { c.train.epochs_per_phase = std::stoi(v); });
        num("batch",
            [](const RunConfig& c) { return std::to_string(c.train.batch); },
            [](RunConfig& c, const std::string& v) { c.train.batch = std::stoi(v); });
        num("dropout",
            [](const RunConfig& c) { return fmt_double(c.train.dropout); },
            [](RunConfig& c, const std::string& v) { c.train.dropout = parse_double(v, "dropout"); });
        num("weight_decay",
            [](const RunConfig& c) { return fmt_double(c.train.weight_decay); },
            [](RunConfig& c, const std::string& v) { c.train.weight_decay = parse_double(v, "weight_decay"); });
        num("hidden",
            [](const RunConfig& c) { return std::to_string(c.train.hidden); },
            [](RunConfig& c, const std::string& v) { c.train.hidden = std::stoi(v); });
        num("batchnorm",
            [](const RunConfig& c) { return std::string(c.train.use_batchnorm ? "true" : "false"); },
            [](RunConfig& c, const std::string& v) { c.train.use_batchnorm = detail::parse_bool(v, "batchnorm"); });
        num("select_on_loss",
            [](const RunConfig& c) { return std::string(c.train.select_on_loss ? "true" : "false"); },
            [](RunConfig& c, const std::string& v) { c.train.select_on_loss = detail::parse_bool(v, "select_on_loss"); });

        num("key_dim",
            [](const RunConfig& c) { return std::to_string(c.pipe.key_dim); },
            [](RunConfig& c, const std::string& v) { c.pipe.key_dim = std::stoi(v); });
        num("value_dim",
            [](const RunConfig& c) { return std::to_string(c.pipe.value_dim); },
            [](RunConfig& c, const std::string& v) { c.pipe.value_dim = std::stoi(v); });
        num("pca_dim",
            [](const RunConfig& c) { return std::to_string(c.pipe.pca_dim); },
            [](RunConfig& c, const std::string& v) { c.pipe.pca_dim = std::stoi(v); });
        num("cbow_window",
            [](const RunConfig& c) { return std::to_string(c.pipe.cbow_window); },
            [](RunConfig& c, const std::string& v) { c.pipe.cbow_window = std::stoi(v); });
        num("cbow_epochs",
            [](const RunConfig& c) { return std::to_string(c.pipe.cbow_epochs); },
            [](RunConfig& c, const std::string& v) { c.pipe.cbow_epochs = std::stoi(v); });
        num("cbow_negatives",
            [](const RunConfig& c) { return std::to_string(c.pipe.cbow_negatives); },
            [](RunConfig& c, const std::string& v) { c.pipe.cbow_negatives = std::stoi(v); });
        num("cbow_lr",
            [](const RunConfig& c) { return fmt_double(c.pipe.cbow_lr); },
            [](RunConfig& c, const std::string& v) { c.pipe.cbow_lr = parse_double(v, "cbow_lr"); });
        num("cbow_min_count",
            [](const RunConfig& c) { return std::to_string(c.pipe.cbow_min_count); },
            [](RunConfig& c, const std::string& v) { c.pipe.cbow_min_count = std::stoi(v); });
        num("cbow_seed",
            [](const RunConfig& c) { return std::to_string(c.pipe.cbow_seed); },
            [](RunConfig& c, const std::string& v) { c.pipe.cbow_seed = std::stoull(v); });

        num("runs",
            [](const RunConfig& c) { return std::to_string(c.runs); },
            [](RunConfig& c, const std::string& v) { c.runs = std::stoi(v); });

        num("synth_stocks",
            [](const RunConfig& c) { return std::to_string(c.synth_stocks); },
            [](RunConfig& c, const std::string& v) { c.synth_stocks = std::stoi(v); });
        num("synth_days",
            [](const RunConfig& c) { return std::to_string(c.synth_days); },
            [](RunConfig& c, const std::string& v) { c.synth_days = std::stoi(v); });
        num("synth_signal",
            [](const RunConfig& c) { return fmt_double(c.synth_signal); },
            [](RunConfig& c, const std::string& v) { c.synth_signal = parse_double(v, "synth_signal"); });
        num("synth_up_prob",
            [](const RunConfig& c) { return fmt_double(c.synth_up_prob); },
            [](RunConfig& c, const std::string& v) { c.synth_up_prob = parse_double(v, "synth_up_prob"); });
        num("synth_sharpness",
            [](const RunConfig& c) { return fmt_double(c.synth_sharpness); },
            [](RunConfig& c, const std::string& v) { c.synth_sharpness = parse_double(v, "synth_sharpness"); });
        num("synth_covariate_spread",
            [](const RunConfig& c) { return fmt_double(c.synth_covariate_spread); },
            [](RunConfig& c, const std::string& v) { c.synth_covariate_spread = parse_double(v, "synth_covariate_spread"); });
        num("synth_daily_return",
            [](const RunConfig& c) { return fmt_double(c.synth_daily_return); },
            [](RunConfig& c, const std::string& v) { c.synth_daily_return = parse_double(v, "synth_daily_return"); });
        return t;
    }();
    return table;
}

// key = value, one per line, '#' comments. Unknown keys are errors.
inline void load_config_file(RunConfig& cfg, const std::string& path) {
    auto in = open_input(path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
            if (blank) continue;
            throw data_error(path + ":" + std::to_string(line_no) + ": expected key = value");
        }
        auto trim = [](std::string s) {
            const size_t a = s.find_first_not_of(" \t\r");
            const size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = config_bindings().find(key);
        if (it == config_bindings().end())
            throw data_error(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
        try {
            it->second.set(cfg, value);
        } catch (const data_error&) {
            throw;
        } catch (const std::exception&) {
            throw data_error(path + ":" + std::to_string(line_no) + ": bad value for '" + key + "'");
        }
    }
}

inline void write_resolved_config(const RunConfig& cfg, const std::string& path) {
    auto out = open_output(path);
    for (const auto& [key, binding] : config_bindings())
        out << key << " = " << binding.get(cfg) << '\n';
}

}  // namespace newsflow
