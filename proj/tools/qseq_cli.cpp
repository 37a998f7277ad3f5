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

// qseq command-line driver.
//
//   qseq train --config FILE [--set key=value]...
//   qseq eval --checkpoint FILE --data PATH
//   qseq gradcheck --config FILE [--samples N]
//   qseq bench [--repeat N]
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "qseq/train.hpp"

namespace {

using namespace qseq;

TrainConfig config_with_overrides(const std::string& path, const std::vector<std::string>& sets) {
    TrainConfig cfg = load_config(path);
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1), std::filesystem::current_path());
    }
    cfg.validate();
    return cfg;
}

int run_train(const std::string& config, const std::vector<std::string>& sets, bool quiet) {
    const auto cfg = config_with_overrides(config, sets);
    const auto ex = prepare_experiment(cfg);
    if (!quiet) {
        std::cerr << "model=" << ex.model->name() << " params=" << ex.model->param_count()
                  << " train=" << ex.train.samples.size() << " test=" << ex.test.samples.size() << "\n";
    }
    train(ex, [&](const EpochMetrics& m) {
        if (!quiet) std::cout << format_metrics(m) << "\n" << std::flush;
    });
    if (!cfg.checkpoint_file.empty() && !quiet) std::cerr << "checkpoint written to " << cfg.checkpoint_file << "\n";
    return 0;
}

int run_eval(const std::string& checkpoint, const std::string& data) {
    const auto ck = load_checkpoint(checkpoint);
    // Rebuild the model shape from the training data described in the checkpoint.
    Experiment shape = prepare_experiment(ck.cfg);
    if (shape.model->param_count() != ck.params.size())
        throw DataError("checkpoint holds " + std::to_string(ck.params.size()) + " parameters, model expects " +
                        std::to_string(shape.model->param_count()));
    if (ck.vocab) shape.vocab = ck.vocab;
    const auto ds = load_eval_dataset(ck.cfg, shape.vocab, data, shape.train.class_count);
    const auto r = evaluate(*shape.model, ds, ck.params, resolve_threads(ck.cfg.threads));
    std::printf("samples=%zu accuracy=%.17g loss=%.17g\n", ds.samples.size(), r.accuracy, r.loss);
    for (std::size_t t = 0; t < r.confusion.size(); ++t) {
        std::printf("class=%zu predicted=", t);
        for (std::size_t p = 0; p < r.confusion[t].size(); ++p) std::printf(p ? ",%zu" : "%zu", r.confusion[t][p]);
        std::printf("\n");
    }
    return 0;
}

int run_gradcheck(const std::string& config, const std::vector<std::string>& sets, std::size_t samples) {
    const auto ex = prepare_experiment(config_with_overrides(config, sets));
    const auto rep = gradcheck(ex, samples);
    std::printf("model=%s params=%zu samples=%zu max_abs_err=%.3e max_rel_err=%.3e failures=%zu worst_index=%zu %s\n",
                ex.model->name().c_str(), rep.n_params, rep.n_samples, rep.max_abs, rep.max_rel, rep.failures,
                rep.worst, rep.pass() ? "PASS" : "FAIL");
    return rep.pass() ? 0 : 3;
}

template <class F>
double time_per_call(int repeat, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < repeat; ++i) f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / repeat;
}

int run_bench(int repeat) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto seq = [&](std::size_t len, std::size_t dim) {
        std::vector<FeatureVector> s(len, FeatureVector(dim));
        for (auto& v : s)
            for (auto& x : v) x = u(rng);
        return s;
    };
    struct Case {
        std::string label;
        std::shared_ptr<Classifier> model;
        SequenceSample sample;
    };
    std::vector<Case> cases;
    QsannConfig text;
    cases.push_back({"qsann n=2 d_enc=1 S=2", std::make_shared<QsannModel>(text), {seq(2, 6), {}, 1}});
    QsannConfig image;
    image.shape = {4, 0, 2};
    cases.push_back({"qsann n=4 d_enc=0 S=8", std::make_shared<QsannModel>(image), {seq(8, 8), {}, 1}});
    cases.push_back({"qrnn 4+2 T=4", std::make_shared<QrnnModel>(QrnnConfig{}), {seq(4, 4), {}, 1}});
    FrontendConfig fe;
    fe.token_dim = 6;
    fe.rescale_hi = 2.0;
    cases.push_back({"transformer d=6 S=2", std::make_shared<ClassicalTransformer>(fe, 2), {seq(2, 6), {}, 1}});
    cases.push_back({"rnn 4->8 T=4", std::make_shared<ClassicalRnn>(RnnShape{4, 8, 2}), {seq(4, 4), {}, 1}});
    for (const auto& c : cases) {
        const auto p = c.model->init_params(0);
        std::vector<double> g(p.size());
        const double fwd = time_per_call(repeat, [&] { c.model->predict(c.sample, p); });
        const double bwd = time_per_call(repeat, [&] { c.model->loss_and_grad(c.sample, p, g); });
        std::printf("%-24s params=%-4zu forward=%.3e s  loss+grad=%.3e s\n", c.label.c_str(), p.size(), fwd, bwd);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum sequence models: QSANN, QRNN and classical baselines"};
    app.require_subcommand(1);

    std::string config, checkpoint, data;
    std::vector<std::string> sets;
    bool quiet = false;
    std::size_t samples = 4;
    int repeat = 20;

    auto* train_cmd = app.add_subcommand("train", "train a model from a config file");
    train_cmd->add_option("--config", config, "experiment config (key = value lines)")->required();
    train_cmd->add_option("--set", sets, "override a config key, key=value");
    train_cmd->add_flag("--quiet", quiet, "no per-epoch output");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint written by train")->required();
    eval_cmd->add_option("--data", data, "TSV file, digits CSV, or images,labels for IDX")->required();

    auto* grad_cmd = app.add_subcommand("gradcheck", "compare analytic gradients with finite differences");
    grad_cmd->add_option("--config", config, "experiment config")->required();
    grad_cmd->add_option("--set", sets, "override a config key, key=value");
    grad_cmd->add_option("--samples", samples, "training samples in the check batch");

    auto* bench_cmd = app.add_subcommand("bench", "time forward and gradient passes");
    bench_cmd->add_option("--repeat", repeat, "calls per measurement")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*train_cmd) return run_train(config, sets, quiet);
        if (*eval_cmd) return run_eval(checkpoint, data);
        if (*grad_cmd) return run_gradcheck(config, sets, samples);
        if (*bench_cmd) return run_bench(repeat);
    } catch (const qseq::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const qseq::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const qseq::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
