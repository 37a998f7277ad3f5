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

#include "qseq/train.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace qseq;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    auto d = fs::temp_directory_path() / "qseq_train_test";
    fs::create_directories(d);
    return d;
}

std::string write_text(const std::string& name, const std::string& body) {
    const auto p = (scratch_dir() / name).string();
    std::ofstream(p) << body;
    return p;
}

std::string read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const char* kTrainTsv =
    "1\tskillful man prepares sauce\n"
    "0\tskillful man prepares program\n"
    "1\twoman cooks tasty meal\n"
    "0\tperson runs useful application\n"
    "1\tman cooks delicious dinner\n"
    "0\twoman debugs useful software\n";
const char* kTestTsv =
    "1\tperson prepares tasty sauce\n"
    "0\tman runs useful program\n";

TrainConfig text_config(const std::string& model) {
    TrainConfig c;
    c.model = model;
    c.train_file = write_text("train.tsv", kTrainTsv);
    c.test_file = write_text("test.tsv", kTestTsv);
    c.epochs = 2;
    c.threads = 1;
    c.learning_rate = 0.01;
    c.depth = 1;
    c.n_hidden = 1;
    c.n_data = 2;
    c.tfidf_dim = 4;
    return c;
}

/// Fixed-output classifier for evaluation tests.
class TableModel : public Classifier {
public:
    explicit TableModel(std::vector<std::vector<double>> out, std::size_t params = 1)
        : out_(std::move(out)), params_(params) {}
    std::string name() const override { return "table"; }
    std::size_t class_count() const override { return out_.front().size(); }
    std::vector<ParamKind> param_kinds() const override {
        return std::vector<ParamKind>(params_, ParamKind::Classical);
    }
    std::vector<double> predict(const SequenceSample& s, std::span<const double>) const override {
        return out_[static_cast<std::size_t>(s.steps.front().front())];
    }
    double loss_and_grad(const SequenceSample& s, std::span<const double> p, std::span<double> g) const override {
        if (!g.empty()) g[0] += std::numeric_limits<double>::quiet_NaN();
        return cross_entropy_loss(predict(s, p), s.label);
    }

private:
    std::vector<std::vector<double>> out_;
    std::size_t params_;
};

}  // namespace

TEST(Train, cross_entropy_examples) {
    const std::vector<double> sure{0.0, 1.0};
    EXPECT_EQ(cross_entropy_loss(sure, 1), 0.0);
    const std::vector<double> half{0.5, 0.5};
    EXPECT_NEAR(cross_entropy_loss(half, 0), std::log(2.0), 1e-15);
    const double e = std::exp(-1.0);
    const std::vector<double> pe{1 - e, e};
    EXPECT_NEAR(cross_entropy_loss(pe, 1), 1.0, 1e-15);
    EXPECT_NEAR(cross_entropy_loss(sure, 0), -std::log(1e-12), 1e-9);
    EXPECT_THROW(cross_entropy_loss(sure, 2), ArgumentError);
}

TEST(Train, adam_examples) {
    std::vector<double> theta{0.3, -1.2};
    AdamState st;
    adam_step(theta, std::vector<double>{0.0, 0.0}, st, 0.1);
    EXPECT_EQ(theta, (std::vector<double>{0.3, -1.2}));

    st = AdamState{{0.5}, {0.2}, 1};
    std::vector<double> one{1.0};
    adam_step(one, std::vector<double>{0.0}, st, 0.1);
    EXPECT_NEAR(st.m[0], 0.45, 1e-15);
    EXPECT_NEAR(st.v[0], 0.1998, 1e-15);

    std::vector<double> x{2.0};
    AdamState fresh;
    adam_step(x, std::vector<double>{1.0}, fresh, 0.01);
    EXPECT_NEAR(x[0], 2.0 - 0.01 / (1 + 1e-8), 1e-15);

    // Three steps with gradients 0.5, -1, 2 against the recursion written out by hand.
    std::vector<double> y{0.0};
    AdamState s3;
    const double g[3] = {0.5, -1.0, 2.0};
    double m = 0, v = 0, want = 0;
    for (int t = 1; t <= 3; ++t) {
        adam_step(y, std::vector<double>{g[t - 1]}, s3, 0.05);
        m = 0.9 * m + 0.1 * g[t - 1];
        v = 0.999 * v + 0.001 * g[t - 1] * g[t - 1];
        const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
        want -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
        EXPECT_NEAR(y[0], want, 1e-15) << t;
    }
}

TEST(Train, config_parse_and_echo) {
    std::istringstream in(
        "# experiment\n"
        "model = qrnn\n"
        "epochs = 200   # paper setting\n"
        "learning_rate=0.08\n"
        "positional_encoding = yes\n"
        "train_file = data/mc_train.tsv\n");
    auto cfg = parse_config(in, "/base");
    EXPECT_EQ(cfg.model, "qrnn");
    EXPECT_EQ(cfg.epochs, 200);
    EXPECT_EQ(cfg.learning_rate, 0.08);
    EXPECT_TRUE(cfg.positional_encoding);
    EXPECT_EQ(cfg.train_file, "/base/data/mc_train.tsv");

    std::istringstream echo(config_to_text(cfg));
    auto again = parse_config(echo);
    EXPECT_EQ(config_to_text(again), config_to_text(cfg));

    std::istringstream unknown("modle = qsann\n");
    EXPECT_THROW(parse_config(unknown), ConfigError);
    std::istringstream bad_num("epochs = ten\n");
    EXPECT_THROW(parse_config(bad_num), ConfigError);
    std::istringstream zero_epochs("epochs = 0\n");
    EXPECT_THROW(parse_config(zero_epochs), ConfigError);
    std::istringstream no_eq("epochs 3\n");
    EXPECT_THROW(parse_config(no_eq), ConfigError);
}

TEST(Train, text_feature_modes) {
    auto cfg = text_config("qsann");
    auto ex = prepare_experiment(cfg);
    ASSERT_EQ(ex.train.samples[0].steps.size(), 1u);
    EXPECT_EQ(ex.train.samples[0].steps[0].size(), 6u);
    EXPECT_EQ(ex.train.samples[0].steps[0][4], 0.0);

    cfg.positional_encoding = true;
    ex = prepare_experiment(cfg);
    EXPECT_EQ(ex.train.samples[0].ids.size(), 4u);
    EXPECT_EQ(ex.model->param_count(), (ex.vocab->size() + 1) * 2 + 3 * param_count(AnsatzSpec{2, 1, 0}) + 2 * 6 + 2);

    auto q = prepare_experiment(text_config("qrnn"));
    EXPECT_EQ(q.train.samples[0].steps.size(), 2u);
    EXPECT_EQ(q.train.samples[0].steps[0].size(), 2u);
}

TEST(Train, evaluate_examples) {
    Dataset ds{{}, 2};
    for (int i = 0; i < 6; ++i) ds.samples.push_back({{{static_cast<double>(i % 2)}}, {}, i % 2});
    TableModel perfect({{0.9, 0.1}, {0.2, 0.8}});
    const std::vector<double> p{0.0};
    auto r = evaluate(perfect, ds, p);
    EXPECT_EQ(r.accuracy, 1.0);
    TableModel constant({{0.7, 0.3}, {0.7, 0.3}});
    r = evaluate(constant, ds, p);
    EXPECT_EQ(r.accuracy, 0.5);
    std::size_t total = 0;
    for (const auto& row : r.confusion)
        for (auto c : row) total += c;
    EXPECT_EQ(total, ds.samples.size());
    EXPECT_EQ(r.confusion[1][0], 3u);

    const std::vector<double> tie{0.5, 0.5};
    EXPECT_EQ(predicted_class(tie), 0u);
    const std::vector<double> tie3{0.2, 0.4, 0.4};
    EXPECT_EQ(predicted_class(tie3), 1u);
}

TEST(Train, one_epoch_emits_one_record) {
    auto cfg = text_config("qsann");
    cfg.epochs = 1;
    cfg.metrics_file = (scratch_dir() / "one.metrics").string();
    auto res = train(prepare_experiment(cfg));
    ASSERT_EQ(res.metrics.size(), 1u);
    EXPECT_EQ(res.metrics[0].epoch, 1);
    EXPECT_GE(res.metrics[0].train_accuracy, 0.0);
    EXPECT_LE(res.metrics[0].train_accuracy, 1.0);
    auto text = read_all(cfg.metrics_file);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
    auto back = parse_metrics_line(text.substr(0, text.find('\n')));
    EXPECT_EQ(back.train_loss, res.metrics[0].train_loss);
    EXPECT_EQ(back.test_accuracy, res.metrics[0].test_accuracy);
}

TEST(Train, same_seed_gives_identical_files) {
    for (const char* model : {"qsann", "qrnn", "classical_transformer", "classical_rnn"}) {
        auto cfg = text_config(model);
        cfg.threads = 2;
        std::string files[2], ckpts[2];
        for (int run = 0; run < 2; ++run) {
            cfg.metrics_file = (scratch_dir() / ("det" + std::to_string(run) + ".metrics")).string();
            cfg.checkpoint_file = (scratch_dir() / ("det" + std::to_string(run) + ".ckpt")).string();
            train(prepare_experiment(cfg));
            files[run] = read_all(cfg.metrics_file);
            ckpts[run] = read_all(cfg.checkpoint_file);
        }
        EXPECT_FALSE(files[0].empty());
        EXPECT_EQ(files[0], files[1]) << model;
        // Checkpoints echo their own file names, so compare the parameter block.
        EXPECT_EQ(decode_checkpoint(ckpts[0]).params, decode_checkpoint(ckpts[1]).params) << model;
    }
}

TEST(Train, minibatch_training_runs) {
    auto cfg = text_config("classical_rnn");
    cfg.batch_size = 4;
    cfg.epochs = 3;
    auto res = train(prepare_experiment(cfg));
    EXPECT_EQ(res.metrics.size(), 3u);
}

TEST(Train, nan_gradient_aborts) {
    Experiment ex;
    ex.cfg.epochs = 1;
    ex.cfg.threads = 1;
    ex.train = Dataset{{{{{0.0}}, {}, 0}}, 2};
    ex.test = ex.train;
    ex.model = std::make_shared<TableModel>(std::vector<std::vector<double>>{{0.6, 0.4}});
    EXPECT_THROW(train(ex), NumericError);
}

TEST(Train, checkpoint_round_trip) {
    auto cfg = text_config("qsann");
    cfg.positional_encoding = true;
    cfg.checkpoint_file = (scratch_dir() / "rt.ckpt").string();
    auto ex = prepare_experiment(cfg);
    auto res = train(ex);
    auto ck = load_checkpoint(cfg.checkpoint_file);
    EXPECT_EQ(ck.params, res.params);
    ASSERT_TRUE(ck.vocab);
    EXPECT_EQ(ck.vocab->size(), ex.vocab->size());
    for (std::size_t r = 1; r <= ck.vocab->size(); ++r) {
        EXPECT_EQ(ck.vocab->token_at_rank(r), ex.vocab->token_at_rank(r));
        EXPECT_EQ(ck.vocab->idf(ck.vocab->token_at_rank(r)), ex.vocab->idf(ex.vocab->token_at_rank(r)));
    }
    EXPECT_EQ(config_to_text(ck.cfg), config_to_text(cfg));

    const auto before = evaluate(*ex.model, ex.test, res.params);
    auto test = load_eval_dataset(ck.cfg, ck.vocab, cfg.test_file, ex.train.class_count);
    Experiment again = ex;
    again.model = build_model(ck.cfg, ex, qsann_token_dim(ck.cfg));
    const auto after = evaluate(*again.model, test, ck.params);
    EXPECT_EQ(before.accuracy, after.accuracy);
    EXPECT_EQ(before.loss, after.loss);

    auto bytes = read_all(cfg.checkpoint_file);
    EXPECT_EQ(bytes.substr(0, 6), "QSEQ1\n");
    EXPECT_THROW(decode_checkpoint("QSEQ2\n" + bytes.substr(6)), DataError);
    EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), DataError);
}

TEST(Train, gradcheck_all_models) {
    for (const char* model : {"qsann", "qrnn", "classical_transformer", "classical_rnn"}) {
        auto cfg = text_config(model);
        auto rep = gradcheck(prepare_experiment(cfg), 3);
        EXPECT_TRUE(rep.pass()) << model << " max_abs=" << rep.max_abs << " max_rel=" << rep.max_rel;
        EXPECT_GT(rep.n_params, 0u);
    }
    auto cfg = text_config("qsann");
    cfg.positional_encoding = true;
    EXPECT_TRUE(gradcheck(prepare_experiment(cfg), 3).pass());
}

TEST(Train, gradcheck_detects_corruption) {
    auto ex = prepare_experiment(text_config("qsann"));
    auto rep = gradcheck(ex, 3, [](std::vector<double>& g) { g[5] += 1e-3; });
    EXPECT_FALSE(rep.pass());
    EXPECT_EQ(rep.failures, 1u);
    EXPECT_EQ(rep.worst, 5u);

    Experiment empty;
    empty.train = Dataset{{{{{0.0}}, {}, 0}}, 2};
    empty.model = std::make_shared<TableModel>(std::vector<std::vector<double>>{{0.6, 0.4}}, 0);
    EXPECT_THROW(gradcheck(empty), ConfigError);
}
