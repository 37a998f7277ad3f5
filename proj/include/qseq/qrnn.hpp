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
 * @file qrnn.hpp
 * @brief Plain quantum recurrent network.
 *
 * Qubits 0..n_D-1 form the data register D and n_D..n_D+n_H-1 the history
 * register H. One recurrent block: angle-encode x_t on D, run the shared
 * ansatz over D and H, read y_t = P(|1>) on qubit 0, reset D to |0...0>.
 * H is never reset. Simulation is in density-matrix mode so the reset is an
 * exact channel.
 */
#pragma once

#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "qseq/ansatz.hpp"
#include "qseq/autodiff.hpp"
#include "qseq/encodings.hpp"
#include "qseq/sequence.hpp"

namespace qseq {

enum class QrnnReadout { Last, Mean };

struct QrnnConfig {
    int n_data = 4;     // n_D
    int n_hidden = 2;   // n_H
    int depth = 2;
    QrnnReadout readout = QrnnReadout::Last;

    int width() const { return n_data + n_hidden; }
    AnsatzSpec ansatz() const { return {width(), depth, 0}; }
    std::size_t param_count() const { return qseq::param_count(ansatz()); }
    std::vector<int> data_register() const {
        std::vector<int> r(static_cast<std::size_t>(n_data));
        std::iota(r.begin(), r.end(), 0);
        return r;
    }

    void validate() const {
        if (n_data < 1 || n_hidden < 1 || n_data + n_hidden > 10)
            throw ConfigError("QRNN needs n_D >= 1, n_H >= 1 and n_D + n_H <= 10");
        if (depth < 1) throw ConfigError("QRNN ansatz depth must be >= 1");
    }
};

struct QrnnTrace {
    std::vector<double> y;
    DensityMatrix final_state = DensityMatrix::zero(1);
};

namespace detail {

inline void append_block(ChannelProgram& prog, std::span<const double> x_t, const QrnnConfig& cfg,
                         const Circuit& ansatz) {
    if (x_t.size() != static_cast<std::size_t>(cfg.n_data)) {
        throw DimensionError("QRNN step has " + std::to_string(x_t.size()) + " features for a " +
                             std::to_string(cfg.n_data) + "-qubit data register");
    }
    const auto reg = cfg.data_register();
    const Circuit enc = qrnn_angle_encode(x_t, reg, cfg.width());
    for (const auto& g : enc.gates()) prog.ops.emplace_back(g);
    for (const auto& g : ansatz.gates()) prog.ops.emplace_back(g);
    prog.ops.emplace_back(ReadoutOp{0});
    prog.ops.emplace_back(ResetOp{reg});
}

}  // namespace detail

/// The unrolled recurrent network as a density-matrix program.
inline ChannelProgram qrnn_program(const std::vector<FeatureVector>& sequence, const QrnnConfig& cfg) {
    cfg.validate();
    if (sequence.empty()) throw DimensionError("QRNN needs a non-empty sequence");
    ChannelProgram prog;
    prog.n_qubits = cfg.width();
    const Circuit ansatz = build_ansatz(cfg.ansatz());
    for (const auto& x : sequence) detail::append_block(prog, x, cfg, ansatz);
    return prog;
}

/// One recurrent block applied to `dm`. Returns the new state and y_t.
inline std::pair<DensityMatrix, double> qrb_step(const DensityMatrix& dm, std::span<const double> x_t,
                                                 const QrnnConfig& cfg, std::span<const double> theta) {
    cfg.validate();
    if (dm.n_qubits() != cfg.width()) throw DimensionError("state width differs from n_D + n_H");
    if (theta.size() < cfg.param_count()) throw DimensionError("QRNN parameter vector too short");
    DensityMatrix rho = dm;
    const auto reg = cfg.data_register();
    const Circuit enc = qrnn_angle_encode(x_t, reg, cfg.width());
    for (const auto& g : enc.gates()) apply_gate_dm_inplace(rho, g, theta);
    rho = apply_circuit_dm(std::move(rho), build_ansatz(cfg.ansatz()), theta);
    const double y = prob_one(rho, 0);
    reset_qubits_inplace(rho, reg);
    return {std::move(rho), y};
}

inline QrnnTrace qrnn_forward(const std::vector<FeatureVector>& sequence, const QrnnConfig& cfg,
                              std::span<const double> theta) {
    if (theta.size() < cfg.param_count()) throw DimensionError("QRNN parameter vector too short");
    auto run = run_program(qrnn_program(sequence, cfg), theta);
    return {std::move(run.readouts), std::move(run.final_state)};
}

inline double readout_probability(std::span<const double> y, QrnnReadout mode) {
    if (mode == QrnnReadout::Last) return y.back();
    return std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
}

/// P(class 1) for the sequence.
inline double qrnn_classify(const std::vector<FeatureVector>& sequence, const QrnnConfig& cfg,
                            std::span<const double> theta) {
    return readout_probability(qrnn_forward(sequence, cfg, theta).y, cfg.readout);
}

/// Binary classifier around qrnn_classify; every parameter is an ansatz angle.
class QrnnModel : public Classifier {
public:
    explicit QrnnModel(QrnnConfig cfg) : cfg_(cfg) { cfg_.validate(); }

    std::string name() const override { return "qrnn"; }
    std::size_t class_count() const override { return 2; }
    const QrnnConfig& config() const { return cfg_; }

    std::vector<ParamKind> param_kinds() const override {
        return std::vector<ParamKind>(cfg_.param_count(), ParamKind::Angle);
    }

    std::vector<double> predict(const SequenceSample& s, std::span<const double> params) const override {
        const double p = qrnn_classify(s.steps, cfg_, params);
        return {1.0 - p, p};
    }

    double loss_and_grad(const SequenceSample& s, std::span<const double> params,
                         std::span<double> grad) const override {
        const auto prog = qrnn_program(s.steps, cfg_);
        const auto y = run_program(prog, params).readouts;
        const double p1 = readout_probability(y, cfg_.readout);
        const std::vector<double> probs{1.0 - p1, p1};
        const double loss = cross_entropy_loss(probs, s.label);
        // d(-ln p_label)/d p1, zero where the clamp is active.
        const double p_label = probs[static_cast<std::size_t>(s.label)];
        double d_p1 = 0;
        if (p_label > 1e-12) d_p1 = s.label == 1 ? -1.0 / p_label : 1.0 / p_label;
        std::vector<double> w(y.size(), 0.0);
        if (cfg_.readout == QrnnReadout::Last) {
            w.back() = d_p1;
        } else {
            for (auto& x : w) x = d_p1 / static_cast<double>(y.size());
        }
        const auto g = program_gradient(prog, params, w);
        for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
        return loss;
    }

private:
    QrnnConfig cfg_;
};

}  // namespace qseq
