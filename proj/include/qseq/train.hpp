// Copyright 2026 The qseq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file train.hpp
 * @brief Experiment configuration, optimiser, training loop, evaluation,
 *        checkpoints and the gradient check harness.
 */
#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qseq/classical.hpp"
#include "qseq/data.hpp"
#include "qseq/qrnn.hpp"
#include "qseq/qsann.hpp"

namespace qseq {

// ---------------------------------------------------------------------------
// Optimiser

struct AdamState {
    std::vector<double> m, v;
    std::uint64_t t = 0;
};

/// Adam with beta = (0.9, 0.999), eps = 1e-8 and bias correction.
inline void adam_step(std::span<double> theta, std::span<const double> grad, AdamState& st, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    if (grad.size() != theta.size()) throw DimensionError("gradient and parameter sizes differ");
    if (st.m.empty()) st.m.assign(theta.size(), 0.0), st.v.assign(theta.size(), 0.0);
    ++st.t;
    const double c1 = 1 - std::pow(b1, static_cast<double>(st.t));
    const double c2 = 1 - std::pow(b2, static_cast<double>(st.t));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        st.m[i] = b1 * st.m[i] + (1 - b1) * grad[i];
        st.v[i] = b2 * st.v[i] + (1 - b2) * grad[i] * grad[i];
        theta[i] -= lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + eps);
    }
}

inline void gd_step(std::span<double> theta, std::span<const double> grad, double lr) {
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * grad[i];
}

// ---------------------------------------------------------------------------
// Configuration

/// Flat key=value experiment description. Paths are stored resolved.
struct TrainConfig {
    std::string model = "qsann";  // qsann | qrnn | classical_transformer | classical_rnn
    std::string data = "text";    // text | digits | idx
    std::string train_file, test_file, csv_file, images_file, labels_file;
    std::string classes;           // comma list to keep (and relabel in order); empty = all
    std::size_t max_samples = 0;   // 0 = all, applied before splitting
    double train_fraction = 0.75;  // used when no separate test file is given
    std::uint64_t split_seed = 0;
    std::string text_features = "auto";  // auto | rank | embedding | tfidf

    int epochs = 10;
    double learning_rate = 0.005;
    std::string optimizer = "adam";  // adam | gd
    std::uint64_t seed = 0;
    std::size_t batch_size = 0;  // 0 = full batch
    bool positional_encoding = false;

    int n_qubits = 2, d_enc = 1, depth = 2, layers = 1;
    int n_data = 4, n_hidden = 2;
    std::string readout = "last";
    std::size_t embedding_dim = 2, pieces = 2, tfidf_dim = 16, hidden = 8;
    std::string patch = "row";
    std::size_t block_h = 2, block_w = 2;
    double rescale_lo = -1.0, rescale_hi = 1.0;

    unsigned threads = 0;  // 0 = hardware concurrency
    std::string metrics_file, checkpoint_file, timing_file;

    void validate() const {
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
        if (model != "qsann" && model != "qrnn" && model != "classical_transformer" && model != "classical_rnn")
            throw ConfigError("unknown model '" + model + "'");
        if (data != "text" && data != "digits" && data != "idx") throw ConfigError("unknown data kind '" + data + "'");
        if (optimizer != "adam" && optimizer != "gd") throw ConfigError("optimizer must be adam or gd");
        if (readout != "last" && readout != "mean") throw ConfigError("readout must be last or mean");
        if (patch != "row" && patch != "column" && patch != "block") throw ConfigError("patch must be row, column or block");
        if (text_features != "auto" && text_features != "rank" && text_features != "embedding" && text_features != "tfidf")
            throw ConfigError("text_features must be auto, rank, embedding or tfidf");
        if (!(rescale_hi > rescale_lo)) throw ConfigError("rescale_hi must exceed rescale_lo");
    }
};

namespace detail {

struct ConfigField {
    const char* key;
    bool is_path;
    std::function<std::string(const TrainConfig&)> get;
    std::function<void(TrainConfig&, const std::string&)> set;
};

template <class T>
T parse_number(const std::string& key, const std::string& v) {
    std::istringstream in(v);
    T out{};
    in >> out;
    if (in.fail() || !in.eof()) throw ConfigError("config key '" + key + "': cannot parse '" + v + "'");
    return out;
}

inline std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

#define QSEQ_STR_FIELD(name, path) \
    {#name, path, [](const TrainConfig& c) { return c.name; }, [](TrainConfig& c, const std::string& v) { c.name = v; }}
#define QSEQ_NUM_FIELD(name, T)                                                                    \
    {#name, false, [](const TrainConfig& c) { return std::to_string(c.name); },                    \
     [](TrainConfig& c, const std::string& v) { c.name = parse_number<T>(#name, v); }}
#define QSEQ_DBL_FIELD(name)                                                                       \
    {#name, false, [](const TrainConfig& c) { return fmt_double(c.name); },                        \
     [](TrainConfig& c, const std::string& v) { c.name = parse_number<double>(#name, v); }}

inline const std::vector<ConfigField>& config_fields() {
    static const std::vector<ConfigField> f{
        QSEQ_STR_FIELD(model, false),
        QSEQ_STR_FIELD(data, false),
        QSEQ_STR_FIELD(train_file, true),
        QSEQ_STR_FIELD(test_file, true),
        QSEQ_STR_FIELD(csv_file, true),
        QSEQ_STR_FIELD(images_file, true),
        QSEQ_STR_FIELD(labels_file, true),
        QSEQ_STR_FIELD(classes, false),
        QSEQ_NUM_FIELD(max_samples, std::size_t),
        QSEQ_DBL_FIELD(train_fraction),
        QSEQ_NUM_FIELD(split_seed, std::uint64_t),
        QSEQ_STR_FIELD(text_features, false),
        QSEQ_NUM_FIELD(epochs, int),
        QSEQ_DBL_FIELD(learning_rate),
        QSEQ_STR_FIELD(optimizer, false),
        QSEQ_NUM_FIELD(seed, std::uint64_t),
        QSEQ_NUM_FIELD(batch_size, std::size_t),
        {"positional_encoding", false, [](const TrainConfig& c) { return std::string(c.positional_encoding ? "true" : "false"); },
         [](TrainConfig& c, const std::string& v) {
             if (v == "true" || v == "1" || v == "yes") c.positional_encoding = true;
             else if (v == "false" || v == "0" || v == "no") c.positional_encoding = false;
             else throw ConfigError("config key 'positional_encoding': expected true or false, got '" + v + "'");
         }},
        QSEQ_NUM_FIELD(n_qubits, int),
        QSEQ_NUM_FIELD(d_enc, int),
        QSEQ_NUM_FIELD(depth, int),
        QSEQ_NUM_FIELD(layers, int),
        QSEQ_NUM_FIELD(n_data, int),
        QSEQ_NUM_FIELD(n_hidden, int),
        QSEQ_STR_FIELD(readout, false),
        QSEQ_NUM_FIELD(embedding_dim, std::size_t),
        QSEQ_NUM_FIELD(pieces, std::size_t),
        QSEQ_NUM_FIELD(tfidf_dim, std::size_t),
        QSEQ_NUM_FIELD(hidden, std::size_t),
        QSEQ_STR_FIELD(patch, false),
        QSEQ_NUM_FIELD(block_h, std::size_t),
        QSEQ_NUM_FIELD(block_w, std::size_t),
        QSEQ_DBL_FIELD(rescale_lo),
        QSEQ_DBL_FIELD(rescale_hi),
        QSEQ_NUM_FIELD(threads, unsigned),
        QSEQ_STR_FIELD(metrics_file, true),
        QSEQ_STR_FIELD(checkpoint_file, true),
        QSEQ_STR_FIELD(timing_file, true),
    };
    return f;
}

#undef QSEQ_STR_FIELD
#undef QSEQ_NUM_FIELD
#undef QSEQ_DBL_FIELD

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

/// Sets one key; relative paths are resolved against `base_dir`.
inline void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value,
                             const std::filesystem::path& base_dir = {}) {
    for (const auto& f : detail::config_fields()) {
        if (key != f.key) continue;
        std::string v = value;
        if (f.is_path && !v.empty() && !base_dir.empty() && std::filesystem::path(v).is_relative())
            v = (base_dir / v).lexically_normal().string();
        f.set(cfg, v);
        return;
    }
    throw ConfigError("unknown config key '" + key + "'");
}

/// `key = value` lines; '#' starts a comment. Unknown keys are errors.
inline TrainConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
    TrainConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        set_config_value(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)), base_dir);
    }
    cfg.validate();
    return cfg;
}

inline TrainConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    return parse_config(in, std::filesystem::path(path).parent_path());
}

/// Canonical echo: every key in a fixed order.
inline std::string config_to_text(const TrainConfig& cfg) {
    std::string out;
    for (const auto& f : detail::config_fields()) out += std::string(f.key) + "=" + f.get(cfg) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Experiment assembly

struct Experiment {
    TrainConfig cfg;
    std::optional<Vocabulary> vocab;
    Dataset train, test;
    std::shared_ptr<const Classifier> model;
};

inline std::string text_feature_mode(const TrainConfig& cfg) {
    if (cfg.text_features != "auto") return cfg.text_features;
    if (cfg.model == "qrnn" || cfg.model == "classical_rnn") return "tfidf";
    if (cfg.model == "classical_transformer") return "embedding";
    return cfg.positional_encoding ? "embedding" : "rank";
}

inline std::size_t qsann_token_dim(const TrainConfig& cfg) {
    return qsann_feature_count(cfg.n_qubits, cfg.d_enc);
}

inline SequenceSample featurize_text(const TextExample& ex, const Vocabulary& vocab, const TrainConfig& cfg) {
    const auto mode = text_feature_mode(cfg);
    SequenceSample s;
    s.label = ex.label;
    if (mode == "rank") {
        s.steps.push_back(rank_vectorize(ex.tokens, vocab, qsann_token_dim(cfg)));
    } else if (mode == "embedding") {
        // Cap words so every piece fits in one token, then pad with the unknown id.
        const std::size_t per = std::max<std::size_t>(1, qsann_token_dim(cfg) / cfg.embedding_dim);
        auto ids = token_ids(ex.tokens, vocab);
        if (ids.size() > per * cfg.pieces) ids.resize(per * cfg.pieces);
        while (ids.size() % cfg.pieces) ids.push_back(0);
        s.ids = std::move(ids);
    } else {
        const auto width = static_cast<std::size_t>(cfg.n_data);
        s.steps = chunk_features(tfidf_transform(ex.tokens, vocab, cfg.tfidf_dim), width);
    }
    return s;
}

inline Dataset featurize_corpus(const TextCorpus& corpus, const Vocabulary& vocab, const TrainConfig& cfg,
                                std::size_t classes) {
    Dataset ds{{}, classes};
    for (const auto& ex : corpus) ds.samples.push_back(featurize_text(ex, vocab, cfg));
    return ds;
}

inline ImagePatchSpec patch_spec(const TrainConfig& cfg) {
    if (cfg.patch == "column") return {PatchMode::Column, 1, 1};
    if (cfg.patch == "block") return {PatchMode::Block, cfg.block_h, cfg.block_w};
    return {PatchMode::Row, 1, 1};
}

/// Keeps the configured classes (relabelled 0..k-1 in list order) and the first max_samples images.
inline ImageSet select_images(const ImageSet& set, const TrainConfig& cfg) {
    std::vector<int> keep;
    if (!cfg.classes.empty()) {
        std::stringstream ss(cfg.classes);
        for (std::string c; std::getline(ss, c, ',');) keep.push_back(detail::parse_number<int>("classes", detail::trim(c)));
    }
    ImageSet out{set.rows, set.cols, {}, {}};
    for (std::size_t i = 0; i < set.images.size(); ++i) {
        int label = set.labels[i];
        if (!keep.empty()) {
            auto it = std::find(keep.begin(), keep.end(), label);
            if (it == keep.end()) continue;
            label = static_cast<int>(it - keep.begin());
        }
        out.images.push_back(set.images[i]);
        out.labels.push_back(label);
        if (cfg.max_samples && out.images.size() == cfg.max_samples) break;
    }
    if (out.images.empty()) throw DataError("no images left after class selection");
    return out;
}

inline ImageSet load_image_source(const TrainConfig& cfg, const std::string& override_path = {}) {
    if (cfg.data == "digits") return load_digits_csv(override_path.empty() ? cfg.csv_file : override_path);
    if (!override_path.empty()) {
        const auto comma = override_path.find(',');
        if (comma == std::string::npos) throw DataError("IDX data must be given as images,labels");
        return load_idx_images(override_path.substr(0, comma), override_path.substr(comma + 1));
    }
    return load_idx_images(cfg.images_file, cfg.labels_file);
}

inline std::size_t class_count_from_config(const TrainConfig& cfg, std::size_t observed) {
    if (cfg.classes.empty()) return observed;
    return static_cast<std::size_t>(std::count(cfg.classes.begin(), cfg.classes.end(), ',') + 1);
}

inline std::shared_ptr<const Classifier> build_model(const TrainConfig& cfg, const Experiment& ex,
                                                     std::size_t token_dim) {
    const std::size_t classes = ex.train.class_count;
    const bool text = cfg.data == "text";
    const bool embed = text && text_feature_mode(cfg) == "embedding";
    FrontendConfig fe;
    fe.token_dim = token_dim;
    fe.use_embedding = embed;
    fe.vocab_rows = embed ? ex.vocab->size() + 1 : 0;
    fe.embedding_dim = cfg.embedding_dim;
    fe.pieces = cfg.pieces;
    fe.use_positional = cfg.positional_encoding;
    fe.rescale_lo = cfg.rescale_lo;
    fe.rescale_hi = cfg.rescale_hi;
    if (cfg.model == "qsann") {
        QsannConfig q;
        q.shape = {cfg.n_qubits, cfg.d_enc, cfg.depth};
        q.n_layers = cfg.layers;
        q.n_classes = classes;
        q.frontend = fe;
        if (!embed && token_dim != q.shape.token_dim()) {
            throw ConfigError("inputs have dimension " + std::to_string(token_dim) + " but n(d_enc+2) = " +
                              std::to_string(q.shape.token_dim()));
        }
        return std::make_shared<QsannModel>(q);
    }
    if (cfg.model == "classical_transformer") return std::make_shared<ClassicalTransformer>(fe, classes);
    if (cfg.model == "classical_rnn") {
        return std::make_shared<ClassicalRnn>(RnnShape{token_dim, cfg.hidden, classes});
    }
    if (classes != 2) throw ConfigError("qrnn is a binary classifier");
    if (token_dim != static_cast<std::size_t>(cfg.n_data))
        throw ConfigError("qrnn steps have dimension " + std::to_string(token_dim) + " but n_data = " +
                          std::to_string(cfg.n_data));
    QrnnConfig q{cfg.n_data, cfg.n_hidden, cfg.depth, cfg.readout == "mean" ? QrnnReadout::Mean : QrnnReadout::Last};
    return std::make_shared<QrnnModel>(q);
}

inline std::size_t input_dim(const Dataset& ds, const TrainConfig& cfg) {
    const auto& s = ds.samples.front();
    if (cfg.data == "text" && text_feature_mode(cfg) == "embedding") return qsann_token_dim(cfg);
    return s.steps.front().size();
}

inline Experiment prepare_experiment(const TrainConfig& cfg) {
    cfg.validate();
    Experiment ex;
    ex.cfg = cfg;
    if (cfg.data == "text") {
        if (cfg.train_file.empty()) throw ConfigError("text data needs train_file");
        TextCorpus train = load_text_tsv(cfg.train_file), test;
        if (!cfg.test_file.empty()) {
            test = load_text_tsv(cfg.test_file);
        } else {
            std::vector<int> labels;
            for (const auto& e : train) labels.push_back(e.label);
            auto [a, b] = split_indices(labels, cfg.train_fraction, cfg.split_seed);
            TextCorpus ta, tb;
            for (auto i : a) ta.push_back(train[i]);
            for (auto i : b) tb.push_back(train[i]);
            train = std::move(ta);
            test = std::move(tb);
        }
        const std::size_t classes = std::max(class_count_of(train), class_count_of(test));
        ex.vocab = tfidf_fit(train);  // training split only
        ex.train = featurize_corpus(train, *ex.vocab, cfg, classes);
        ex.test = featurize_corpus(test, *ex.vocab, cfg, classes);
    } else {
        const auto set = select_images(load_image_source(cfg), cfg);
        Dataset all = image_dataset(set, patch_spec(cfg));
        all.class_count = class_count_from_config(cfg, all.class_count);
        auto [a, b] = split_dataset(all, cfg.train_fraction, cfg.split_seed);
        ex.train = std::move(a);
        ex.test = std::move(b);
    }
    ex.train.validate();
    ex.test.validate();
    ex.model = build_model(cfg, ex, input_dim(ex.train, cfg));
    return ex;
}

/// Featurises an evaluation file with the experiment's vocabulary and settings.
inline Dataset load_eval_dataset(const TrainConfig& cfg, const std::optional<Vocabulary>& vocab,
                                 const std::string& path, std::size_t classes) {
    Dataset ds;
    if (cfg.data == "text") {
        if (!vocab) throw DataError("checkpoint has no vocabulary for text data");
        ds = featurize_corpus(load_text_tsv(path), *vocab, cfg, classes);
    } else {
        ds = image_dataset(select_images(load_image_source(cfg, path), cfg), patch_spec(cfg));
        ds.class_count = classes;
    }
    ds.validate();
    return ds;
}

// ---------------------------------------------------------------------------
// Parallel helpers (results land in per-index slots so reductions keep a fixed order)

inline unsigned resolve_threads(unsigned requested) {
    if (requested) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < n;) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

// ---------------------------------------------------------------------------
// Evaluation

/// Argmax with ties resolved toward the lower class index.
inline std::size_t predicted_class(std::span<const double> probs) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.size(); ++c)
        if (probs[c] > probs[best]) best = c;
    return best;
}

struct EvalResult {
    double loss = 0;
    double accuracy = 0;
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

inline EvalResult evaluate(const Classifier& model, const Dataset& ds, std::span<const double> params,
                           unsigned threads = 1) {
    ds.validate();
    std::vector<std::vector<double>> probs(ds.samples.size());
    parallel_for(ds.samples.size(), threads, [&](std::size_t i) { probs[i] = model.predict(ds.samples[i], params); });
    EvalResult r;
    const std::size_t C = model.class_count();
    r.confusion.assign(std::max(C, ds.class_count), std::vector<std::size_t>(C, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const int y = ds.samples[i].label;
        r.loss += cross_entropy_loss(probs[i], y);
        const auto p = predicted_class(probs[i]);
        ++r.confusion[static_cast<std::size_t>(y)][p];
        correct += p == static_cast<std::size_t>(y);
    }
    r.loss /= static_cast<double>(probs.size());
    r.accuracy = static_cast<double>(correct) / static_cast<double>(probs.size());
    return r;
}

/// Mean loss and mean gradient over `idx`.
inline double batch_loss_and_grad(const Classifier& model, const Dataset& ds, std::span<const std::size_t> idx,
                                  std::span<const double> params, std::vector<double>& grad, unsigned threads) {
    std::vector<std::vector<double>> g(idx.size());
    std::vector<double> losses(idx.size());
    parallel_for(idx.size(), threads, [&](std::size_t k) {
        g[k].assign(params.size(), 0.0);
        losses[k] = model.loss_and_grad(ds.samples[idx[k]], params, g[k]);
    });
    grad.assign(params.size(), 0.0);
    double loss = 0;
    const double inv = 1.0 / static_cast<double>(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        loss += losses[k];
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[k][i];
    }
    for (auto& x : grad) x *= inv;
    return loss * inv;
}

// ---------------------------------------------------------------------------
// Metrics

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0, train_accuracy = 0, test_loss = 0, test_accuracy = 0;
    double wall_time = 0;  // seconds since training started
};

/// One `field=value` line without wall time, so files from identical runs compare equal.
inline std::string format_metrics(const EpochMetrics& m) {
    return "epoch=" + std::to_string(m.epoch) + " train_loss=" + detail::fmt_double(m.train_loss) +
           " train_accuracy=" + detail::fmt_double(m.train_accuracy) + " test_loss=" + detail::fmt_double(m.test_loss) +
           " test_accuracy=" + detail::fmt_double(m.test_accuracy);
}

inline EpochMetrics parse_metrics_line(const std::string& line) {
    EpochMetrics m;
    std::istringstream in(line);
    for (std::string kv; in >> kv;) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw DataError("bad metrics field '" + kv + "'");
        const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
        if (k == "epoch") m.epoch = std::stoi(v);
        else if (k == "train_loss") m.train_loss = std::stod(v);
        else if (k == "train_accuracy") m.train_accuracy = std::stod(v);
        else if (k == "test_loss") m.test_loss = std::stod(v);
        else if (k == "test_accuracy") m.test_accuracy = std::stod(v);
        else if (k == "wall_time") m.wall_time = std::stod(v);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Checkpoints
//
// Layout (little-endian):
//   "QSEQ1\n"            6 bytes magic
//   u32 header_len       byte length of the UTF-8 header
//   header               config echo (key=value lines), vocab_docs=N, then
//                        one "vocab=<token>\t<count>\t<df>" line per rank
//   u64 n_params
//   f64 params[n_params]

inline constexpr char kCheckpointMagic[] = "QSEQ1\n";

namespace detail {

template <class T>
void put_le(std::string& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <class T>
T get_le(const std::string& in, std::size_t off) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(in[off + i])) << (8 * i);
    return v;
}

}  // namespace detail

struct Checkpoint {
    TrainConfig cfg;
    std::optional<Vocabulary> vocab;
    ParameterVector params;
};

inline std::string checkpoint_header(const TrainConfig& cfg, const std::optional<Vocabulary>& vocab) {
    std::string h = config_to_text(cfg);
    if (vocab) {
        h += "vocab_docs=" + std::to_string(vocab->doc_count()) + "\n";
        for (std::size_t r = 1; r <= vocab->size(); ++r) {
            const auto& t = vocab->token_at_rank(r);
            const auto* e = vocab->find(t);
            h += "vocab=" + t + "\t" + std::to_string(e->count) + "\t" + std::to_string(e->df) + "\n";
        }
    }
    return h;
}

inline std::string encode_checkpoint(const TrainConfig& cfg, const std::optional<Vocabulary>& vocab,
                                     std::span<const double> params) {
    const std::string header = checkpoint_header(cfg, vocab);
    std::string out(kCheckpointMagic, 6);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
    out += header;
    detail::put_le<std::uint64_t>(out, params.size());
    for (double p : params) {
        std::uint64_t bits;
        std::memcpy(&bits, &p, sizeof bits);
        detail::put_le<std::uint64_t>(out, bits);
    }
    return out;
}

namespace detail {

/// Opens an output file, creating missing parent directories.
inline std::ofstream open_output(const std::string& path, std::ios::openmode mode = std::ios::out) {
    const auto parent = std::filesystem::path(path).parent_path();
    std::error_code ec;
    if (!parent.empty()) std::filesystem::create_directories(parent, ec);
    return std::ofstream(path, mode);
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const TrainConfig& cfg, const std::optional<Vocabulary>& vocab,
                            std::span<const double> params) {
    auto out = detail::open_output(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint " + path);
    const auto bytes = encode_checkpoint(cfg, vocab, params);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline Checkpoint decode_checkpoint(const std::string& b, const std::string& source = "checkpoint") {
    if (b.size() < 10 || b.compare(0, 6, kCheckpointMagic) != 0) throw DataError(source + ": not a QSEQ1 checkpoint");
    const auto hlen = detail::get_le<std::uint32_t>(b, 6);
    if (b.size() < 10 + std::size_t{hlen} + 8) throw DataError(source + ": truncated header");
    const std::string header = b.substr(10, hlen);
    const auto n = detail::get_le<std::uint64_t>(b, 10 + hlen);
    const std::size_t off = 18 + hlen;
    if (b.size() != off + 8 * n) throw DataError(source + ": parameter block size mismatch");
    Checkpoint ck;
    std::istringstream in(header);
    std::string line;
    std::size_t docs = 0;
    bool has_vocab = false;
    std::vector<std::tuple<std::string, std::size_t, std::size_t>> rows;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError(source + ": bad header line '" + line + "'");
        const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
        if (k == "vocab_docs") {
            docs = std::stoull(v);
            has_vocab = true;
        } else if (k == "vocab") {
            std::istringstream cells(v);
            std::string tok, count, df;
            std::getline(cells, tok, '\t');
            std::getline(cells, count, '\t');
            std::getline(cells, df, '\t');
            rows.emplace_back(tok, std::stoull(count), std::stoull(df));
        } else {
            set_config_value(ck.cfg, k, v);
        }
    }
    if (has_vocab) ck.vocab = Vocabulary::restore(docs, rows);
    ck.params.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto bits = detail::get_le<std::uint64_t>(b, off + 8 * i);
        std::memcpy(&ck.params[i], &bits, sizeof bits);
    }
    return ck;
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path);
    const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return decode_checkpoint(bytes, path);
}

// ---------------------------------------------------------------------------
// Training

struct TrainResult {
    std::vector<EpochMetrics> metrics;
    ParameterVector params;
};

inline void check_finite_values(std::span<const double> v, const std::string& what, int epoch) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i]))
            throw NumericError(what + " is not finite at epoch " + std::to_string(epoch) + " (index " +
                               std::to_string(i) + ")");
}

/// Seeded init, Adam (or plain GD) steps over full or mini batches, per-epoch
/// train/test metrics. Writes the metrics, timing and checkpoint files named
/// in the config when they are set.
inline TrainResult train(const Experiment& ex, const std::function<void(const EpochMetrics&)>& on_epoch = {}) {
    const auto& cfg = ex.cfg;
    const auto& model = *ex.model;
    const unsigned threads = resolve_threads(cfg.threads);
    TrainResult res;
    res.params = model.init_params(cfg.seed);
    AdamState adam;
    std::mt19937_64 order_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    const std::size_t n = ex.train.samples.size();
    const std::size_t bs = (cfg.batch_size == 0 || cfg.batch_size > n) ? n : cfg.batch_size;

    std::ofstream metrics_out, timing_out;
    if (!cfg.metrics_file.empty()) {
        metrics_out = detail::open_output(cfg.metrics_file);
        if (!metrics_out) throw DataError("cannot write metrics file " + cfg.metrics_file);
    }
    if (!cfg.timing_file.empty()) timing_out = detail::open_output(cfg.timing_file);

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(n);
    std::vector<double> grad;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        if (bs < n)
            for (std::size_t i = n; i-- > 1;) std::swap(order[i], order[order_rng() % (i + 1)]);
        for (std::size_t start = 0; start < n; start += bs) {
            const std::span<const std::size_t> idx(order.data() + start, std::min(bs, n - start));
            const double loss = batch_loss_and_grad(model, ex.train, idx, res.params, grad, threads);
            if (!std::isfinite(loss)) throw NumericError("loss is not finite at epoch " + std::to_string(epoch));
            check_finite_values(grad, "gradient", epoch);
            if (cfg.optimizer == "gd") {
                gd_step(res.params, grad, cfg.learning_rate);
            } else {
                adam_step(res.params, grad, adam, cfg.learning_rate);
            }
        }
        check_finite_values(res.params, "parameter vector", epoch);
        const auto tr = evaluate(model, ex.train, res.params, threads);
        const auto te = evaluate(model, ex.test, res.params, threads);
        if (!std::isfinite(tr.loss) || !std::isfinite(te.loss))
            throw NumericError("evaluation loss is not finite at epoch " + std::to_string(epoch));
        EpochMetrics m{epoch, tr.loss, tr.accuracy, te.loss, te.accuracy,
                       std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
        res.metrics.push_back(m);
        if (metrics_out.is_open()) metrics_out << format_metrics(m) << "\n" << std::flush;
        if (timing_out.is_open()) timing_out << "epoch=" << epoch << " wall_time=" << m.wall_time << "\n" << std::flush;
        if (on_epoch) on_epoch(m);
    }
    if (!cfg.checkpoint_file.empty()) save_checkpoint(cfg.checkpoint_file, cfg, ex.vocab, res.params);
    return res;
}

// ---------------------------------------------------------------------------
// Gradient check

struct GradcheckReport {
    std::size_t n_params = 0, n_samples = 0;
    double max_abs = 0, max_rel = 0;
    std::size_t failures = 0;
    std::size_t worst = 0;  // index with the largest tolerance ratio
    bool pass() const { return failures == 0; }
};

/// Analytic gradient of the mean loss over the first `n_samples` training
/// samples against central differences (h = 1e-4); an entry passes when
/// |a - f| <= max(1e-6, 1e-5 |f|). `corrupt` may perturb the analytic vector.
inline GradcheckReport gradcheck(const Experiment& ex, std::size_t n_samples = 4,
                                 const std::function<void(std::vector<double>&)>& corrupt = {}) {
    const auto& model = *ex.model;
    if (model.param_count() == 0) throw ConfigError("model has no trainable parameters");
    n_samples = std::min(n_samples, ex.train.samples.size());
    std::vector<std::size_t> idx(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) idx[i] = i;
    const auto params = model.init_params(ex.cfg.seed);
    std::vector<double> g;
    batch_loss_and_grad(model, ex.train, idx, params, g, resolve_threads(ex.cfg.threads));
    if (corrupt) corrupt(g);
    const auto fd = finite_difference_gradient(
        [&](std::span<const double> p) {
            double l = 0;
            for (auto i : idx) l += cross_entropy_loss(model.predict(ex.train.samples[i], p), ex.train.samples[i].label);
            return l / static_cast<double>(idx.size());
        },
        params);
    GradcheckReport r{params.size(), n_samples};
    double worst_ratio = -1;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double err = std::abs(g[i] - fd[i]);
        const double tol = std::max(1e-6, 1e-5 * std::abs(fd[i]));
        r.max_abs = std::max(r.max_abs, err);
        if (std::abs(fd[i]) > 1e-6) r.max_rel = std::max(r.max_rel, err / std::abs(fd[i]));
        if (err > tol) ++r.failures;
        if (err / tol > worst_ratio) worst_ratio = err / tol, r.worst = i;
    }
    return r;
}

}  // namespace qseq
