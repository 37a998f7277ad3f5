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
 * @file qsann.hpp
 * @brief Quantum self-attention layer (QSAL) and the QSANN classifier.
 *
 * Per token s, the input y_s is loaded with qsann_encode and three ansatz
 * instances act on the encoded state:
 *   z_q(s) = <Z_0> after U_q,  z_k(s) = <Z_0> after U_k,
 *   v_s[j] = <P_j> after U_v   (P_j from pauli_basis_sequence).
 * Attention is Gaussian, alpha[s][j] = exp(-(z_q(s) - z_k(j))^2), rows are
 * normalised, and the layer output is the residual y_s + sum_j alpha~[s][j] v_j.
 *
 * Gradients: circuit partials come from parameter shifts (occurrence_jacobian),
 * including shifts of encoding rotations when a layer's inputs are themselves
 * trainable; the classical attention algebra is differentiated by hand.
 */
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qseq/ansatz.hpp"
#include "qseq/autodiff.hpp"
#include "qseq/encodings.hpp"
#include "qseq/sequence.hpp"

namespace qseq {

inline double gaussian_attention(double z_q, double z_k) {
    const double d = z_q - z_k;
    return std::exp(-d * d);
}

inline std::vector<double> normalize_attention(std::span<const double> row) {
    if (row.empty()) throw DimensionError("empty attention row");
    double total = 0;
    for (double a : row) total += a;
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) out[j] = row[j] / total;
    return out;
}

/// Z_0..Z_{n-1}, X_0.., Y_0.., then Z_q Z_{q+1}; the first d of them.
inline std::vector<PauliString> pauli_basis_sequence(int n, std::size_t d) {
    std::vector<PauliString> all;
    for (char letter : {'Z', 'X', 'Y'})
        for (int q = 0; q < n; ++q) all.push_back(PauliString::single(n, q, letter));
    for (int q = 0; q + 1 < n; ++q) {
        std::string w(static_cast<std::size_t>(n), 'I');
        w[static_cast<std::size_t>(q)] = w[static_cast<std::size_t>(q + 1)] = 'Z';
        all.push_back(PauliString::parse(w));
    }
    if (d > all.size()) {
        throw ConfigError("only " + std::to_string(all.size()) + " Pauli words available for " + std::to_string(n) +
                          " qubits, " + std::to_string(d) + " requested");
    }
    all.resize(d);
    return all;
}

/// Shape of one QSAL; value dimension equals token dimension n (d_enc + 2).
struct QsalShape {
    int n_qubits = 2;
    int d_enc = 1;
    int depth = 2;

    std::size_t token_dim() const { return qsann_feature_count(n_qubits, d_enc); }
    std::size_t ansatz_params() const { return param_count(AnsatzSpec{n_qubits, depth, 0}); }
    std::size_t layer_params() const { return 3 * ansatz_params(); }
};

/// Offsets of theta_q, theta_k, theta_v inside the global ParameterVector.
struct QsalParams {
    std::size_t q = 0, k = 0, v = 0;

    static QsalParams at(std::size_t offset, const QsalShape& shape) {
        const std::size_t a = shape.ansatz_params();
        return {offset, offset + a, offset + 2 * a};
    }
};

struct AttentionRecord {
    std::vector<double> z_q, z_k;
    std::vector<FeatureVector> values;
    std::vector<std::vector<double>> alpha, alpha_normalized;
};

/// <P_j> for every Pauli word after U_v(theta_v) acts on `state`.
inline FeatureVector value_vector(const StateVector& state, std::span<const double> theta_v, int depth,
                                  const std::vector<PauliString>& paulis) {
    auto s = apply_circuit(state, build_ansatz({state.n_qubits(), depth, 0}), theta_v);
    FeatureVector v;
    v.reserve(paulis.size());
    for (const auto& p : paulis) v.push_back(expectation_pauli(s, p));
    return v;
}

namespace detail {

/// Encoding followed by an ansatz whose refs start at 0 (local slice).
inline Circuit encoded_ansatz(std::span<const double> x, const QsalShape& shape) {
    Circuit c = qsann_encode(x, shape.n_qubits, shape.d_enc);
    c.append(build_ansatz({shape.n_qubits, shape.depth, 0}));
    return c;
}

/// Circuit partials for one token and one of the three branches.
struct BranchJacobian {
    std::vector<double> value;
    std::vector<std::vector<double>> d_theta;  // [param][readout]
    std::vector<std::vector<double>> d_input;  // [feature][readout], empty unless requested
};

inline BranchJacobian branch(std::span<const double> x, const QsalShape& shape, std::span<const double> theta,
                             const std::vector<PauliString>& obs, bool want_theta, bool want_input) {
    const Circuit c = encoded_ansatz(x, shape);
    Readout readout = [&obs](const StateVector& s) {
        std::vector<double> r;
        r.reserve(obs.size());
        for (const auto& p : obs) r.push_back(expectation_pauli(s, p));
        return r;
    };
    BranchJacobian out;
    if (!want_theta && !want_input) {
        out.value = readout(apply_circuit(StateVector::zero(shape.n_qubits), c, theta));
        return out;
    }
    const auto feature_gates = qsann_feature_gate_indices(shape.n_qubits, shape.d_enc);
    const std::size_t enc_size = c.size() - build_ansatz({shape.n_qubits, shape.depth, 0}).size();
    std::vector<std::size_t> occ;
    if (want_input) occ = feature_gates;
    if (want_theta)
        for (std::size_t g = enc_size; g < c.size(); ++g) occ.push_back(g);
    auto jac = pauli_occurrence_jacobian(c, theta, occ, obs);
    out.value = std::move(jac.value);
    std::size_t row = 0;
    if (want_input) {
        for (std::size_t i = 0; i < feature_gates.size(); ++i, ++row) {
            auto r = std::move(jac.rows[row]);
            for (auto& x_ : r) x_ *= std::numbers::pi;  // angle = pi * feature
            out.d_input.push_back(std::move(r));
        }
    }
    if (want_theta) {
        // Ansatz refs are dense and in gate order, so row order == param order.
        for (; row < jac.rows.size(); ++row) out.d_theta.push_back(std::move(jac.rows[row]));
    }
    return out;
}

}  // namespace detail

/// Everything qsal_backward needs from a forward pass.
struct QsalCache {
    std::vector<FeatureVector> inputs;
    AttentionRecord record;
    std::vector<detail::BranchJacobian> jq, jk, jv;
};

inline void check_tokens(const std::vector<FeatureVector>& inputs, const QsalShape& shape) {
    if (inputs.empty()) throw DimensionError("QSAL needs at least one token");
    for (const auto& x : inputs)
        if (x.size() != shape.token_dim())
            throw DimensionError("token dimension " + std::to_string(x.size()) + " does not match n(d_enc+2) = " +
                                 std::to_string(shape.token_dim()));
}

/// Forward pass of one QSAL. When `grad` is set the circuit partials are
/// computed as well (and input partials when `input_grad` is also set).
inline std::vector<FeatureVector> qsal_forward(const std::vector<FeatureVector>& inputs,
                                               std::span<const double> params, const QsalParams& at,
                                               const QsalShape& shape, const std::vector<PauliString>& paulis,
                                               AttentionRecord* record = nullptr, QsalCache* cache = nullptr,
                                               bool input_grad = false) {
    check_tokens(inputs, shape);
    if (paulis.size() != shape.token_dim()) throw DimensionError("value dimension must equal token dimension");
    const std::size_t a = shape.ansatz_params();
    if (at.v + a > params.size()) throw DimensionError("parameter vector too short for QSAL");
    const auto tq = params.subspan(at.q, a), tk = params.subspan(at.k, a), tv = params.subspan(at.v, a);
    const std::vector<PauliString> z0{PauliString::single(shape.n_qubits, 0, 'Z')};
    const std::size_t S = inputs.size();
    const bool want = cache != nullptr;

    AttentionRecord rec;
    std::vector<detail::BranchJacobian> jq, jk, jv;
    for (const auto& x : inputs) {
        jq.push_back(detail::branch(x, shape, tq, z0, want, want && input_grad));
        jk.push_back(detail::branch(x, shape, tk, z0, want, want && input_grad));
        jv.push_back(detail::branch(x, shape, tv, paulis, want, want && input_grad));
        rec.z_q.push_back(jq.back().value[0]);
        rec.z_k.push_back(jk.back().value[0]);
        rec.values.push_back(jv.back().value);
    }
    std::vector<FeatureVector> out(inputs);
    for (std::size_t s = 0; s < S; ++s) {
        std::vector<double> row(S);
        for (std::size_t j = 0; j < S; ++j) row[j] = gaussian_attention(rec.z_q[s], rec.z_k[j]);
        auto norm = normalize_attention(row);
        for (std::size_t j = 0; j < S; ++j)
            for (std::size_t m = 0; m < out[s].size(); ++m) out[s][m] += norm[j] * rec.values[j][m];
        rec.alpha.push_back(std::move(row));
        rec.alpha_normalized.push_back(std::move(norm));
    }
    if (cache) {
        cache->inputs = inputs;
        cache->record = rec;
        cache->jq = std::move(jq);
        cache->jk = std::move(jk);
        cache->jv = std::move(jv);
    }
    if (record) *record = std::move(rec);
    return out;
}

/// Backward pass: accumulates d loss / d theta_{q,k,v} into `grad` and returns
/// d loss / d inputs (zeros unless the cache holds input partials).
inline std::vector<std::vector<double>> qsal_backward(const QsalCache& cache, const QsalParams& at,
                                                      const QsalShape& shape,
                                                      const std::vector<std::vector<double>>& d_out,
                                                      std::span<double> grad) {
    const auto& r = cache.record;
    const std::size_t S = cache.inputs.size(), D = shape.token_dim();
    std::vector<std::vector<double>> d_in(d_out);  // residual path
    std::vector<std::vector<double>> d_v(S, std::vector<double>(D, 0.0));
    std::vector<double> d_zq(S, 0.0), d_zk(S, 0.0);

    for (std::size_t s = 0; s < S; ++s) {
        const auto& an = r.alpha_normalized[s];
        std::vector<double> d_an(S);
        double weighted = 0;
        for (std::size_t j = 0; j < S; ++j) {
            double dot = 0;
            for (std::size_t m = 0; m < D; ++m) {
                dot += d_out[s][m] * r.values[j][m];
                d_v[j][m] += an[j] * d_out[s][m];
            }
            d_an[j] = dot;
            weighted += an[j] * dot;
        }
        double total = 0;
        for (double x : r.alpha[s]) total += x;
        for (std::size_t j = 0; j < S; ++j) {
            const double d_alpha = (d_an[j] - weighted) / total;
            const double diff = r.z_q[s] - r.z_k[j];
            const double g = d_alpha * (-2.0 * diff) * r.alpha[s][j];
            d_zq[s] += g;
            d_zk[j] -= g;
        }
    }

    auto push = [&](const detail::BranchJacobian& jac, std::size_t offset, std::size_t s,
                    std::span<const double> d_read) {
        for (std::size_t p = 0; p < jac.d_theta.size(); ++p) {
            double acc = 0;
            for (std::size_t k = 0; k < d_read.size(); ++k) acc += jac.d_theta[p][k] * d_read[k];
            grad[offset + p] += acc;
        }
        for (std::size_t i = 0; i < jac.d_input.size(); ++i) {
            double acc = 0;
            for (std::size_t k = 0; k < d_read.size(); ++k) acc += jac.d_input[i][k] * d_read[k];
            d_in[s][i] += acc;
        }
    };
    for (std::size_t s = 0; s < S; ++s) {
        const double zq[1] = {d_zq[s]}, zk[1] = {d_zk[s]};
        push(cache.jq[s], at.q, s, zq);
        push(cache.jk[s], at.k, s, zk);
        push(cache.jv[s], at.v, s, d_v[s]);
    }
    return d_in;
}

// ---------------------------------------------------------------------------

struct QsannConfig {
    QsalShape shape;
    int n_layers = 1;
    std::size_t n_classes = 2;
    FrontendConfig frontend;  // token_dim is forced to shape.token_dim()
};

/// Parameter layout: [embedding table][layer 0: q, k, v]...[head W, b].
class QsannModel : public Classifier {
public:
    explicit QsannModel(QsannConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.n_layers < 1) throw ConfigError("QSANN needs at least one layer");
        if (cfg_.n_classes < 2) throw ConfigError("need at least two classes");
        cfg_.frontend.token_dim = cfg_.shape.token_dim();
        paulis_ = pauli_basis_sequence(cfg_.shape.n_qubits, cfg_.shape.token_dim());
        head_ = {cfg_.shape.token_dim(), cfg_.n_classes};
    }

    std::string name() const override { return "qsann"; }
    std::size_t class_count() const override { return cfg_.n_classes; }
    const QsannConfig& config() const { return cfg_; }
    const std::vector<PauliString>& paulis() const { return paulis_; }

    std::size_t embedding_offset() const { return 0; }
    QsalParams layer_params(int l) const {
        return QsalParams::at(cfg_.frontend.param_count() + static_cast<std::size_t>(l) * cfg_.shape.layer_params(),
                              cfg_.shape);
    }
    std::size_t head_offset() const {
        return cfg_.frontend.param_count() + static_cast<std::size_t>(cfg_.n_layers) * cfg_.shape.layer_params();
    }

    std::vector<ParamKind> param_kinds() const override {
        std::vector<ParamKind> k(cfg_.frontend.param_count(), ParamKind::Classical);
        k.resize(head_offset(), ParamKind::Angle);
        k.resize(head_offset() + head_.param_count(), ParamKind::Classical);
        return k;
    }

    /// Token vectors after front-end and all QSAL layers.
    std::vector<FeatureVector> encode(const SequenceSample& s, std::span<const double> params,
                                      std::vector<AttentionRecord>* records = nullptr) const {
        auto tokens = frontend_forward(s, cfg_.frontend, params.subspan(0, cfg_.frontend.param_count())).tokens;
        for (int l = 0; l < cfg_.n_layers; ++l) {
            AttentionRecord rec;
            tokens = qsal_forward(tokens, params, layer_params(l), cfg_.shape, paulis_, &rec);
            if (records) records->push_back(std::move(rec));
        }
        return tokens;
    }

    std::vector<double> logits(const SequenceSample& s, std::span<const double> params) const {
        check_size(params);
        const auto pooled = mean_pool(encode(s, params));
        return head_.logits(pooled, params.subspan(head_offset()));
    }

    std::vector<double> predict(const SequenceSample& s, std::span<const double> params) const override {
        return softmax(logits(s, params));
    }

    double loss_and_grad(const SequenceSample& s, std::span<const double> params,
                         std::span<double> grad) const override {
        check_size(params);
        const auto fe = frontend_forward(s, cfg_.frontend, params.subspan(0, cfg_.frontend.param_count()));
        std::vector<QsalCache> caches(static_cast<std::size_t>(cfg_.n_layers));
        auto tokens = fe.tokens;
        for (int l = 0; l < cfg_.n_layers; ++l) {
            const bool need_input = l > 0 || cfg_.frontend.use_embedding;
            tokens = qsal_forward(tokens, params, layer_params(l), cfg_.shape, paulis_, nullptr,
                                  &caches[static_cast<std::size_t>(l)], need_input);
        }
        const auto pooled = mean_pool(tokens);
        const auto w = params.subspan(head_offset());
        const auto probs = softmax(head_.logits(pooled, w));
        const double loss = cross_entropy_loss(probs, s.label);

        std::vector<double> d_logits(probs);
        d_logits[static_cast<std::size_t>(s.label)] -= 1.0;
        const auto d_pooled = head_.backward(pooled, w, d_logits, grad.subspan(head_offset()));
        const double inv = 1.0 / static_cast<double>(tokens.size());
        std::vector<std::vector<double>> d_tok(tokens.size(), d_pooled);
        for (auto& v : d_tok)
            for (auto& x : v) x *= inv;
        for (int l = cfg_.n_layers; l-- > 0;)
            d_tok = qsal_backward(caches[static_cast<std::size_t>(l)], layer_params(l), cfg_.shape, d_tok, grad);
        frontend_backward(s, cfg_.frontend, fe, d_tok, grad.subspan(0, cfg_.frontend.param_count()));
        return loss;
    }

private:
    void check_size(std::span<const double> params) const {
        if (params.size() != param_count())
            throw DimensionError("QSANN expects " + std::to_string(param_count()) + " parameters, got " +
                                 std::to_string(params.size()));
    }

    QsannConfig cfg_;
    std::vector<PauliString> paulis_;
    LinearHead head_;
};

/// Class probabilities for one sample.
inline std::vector<double> qsann_forward(const SequenceSample& s, const QsannModel& model,
                                         std::span<const double> params) {
    return model.predict(s, params);
}

}  // namespace qseq
