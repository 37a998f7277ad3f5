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

// Classical baselines: single-head scaled dot-product self-attention and a
// vanilla tanh RNN, both with hand-written backprop.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qseq/sequence.hpp"

namespace qseq {

/// Row-major d x d matrices U_q, U_k, U_v stored back to back.
struct AttentionWeights {
    std::size_t dim = 0;
    std::span<const double> uq, uk, uv;

    static AttentionWeights view(std::span<const double> p, std::size_t d) {
        if (p.size() < 3 * d * d) throw DimensionError("attention weights need 3 d^2 entries");
        return {d, p.subspan(0, d * d), p.subspan(d * d, d * d), p.subspan(2 * d * d, d * d)};
    }
};

namespace detail {

inline std::vector<double> matvec(std::span<const double> m, std::span<const double> x, std::size_t rows) {
    const std::size_t cols = x.size();
    std::vector<double> y(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) y[r] += m[r * cols + c] * x[c];
    return y;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace detail

struct DotAttentionResult {
    std::vector<FeatureVector> outputs;
    std::vector<std::vector<double>> weights;  // w[i][j]
    std::vector<FeatureVector> q, k, v;
};

/// x_i^new = sum_j softmax_j(q_i . k_j / sqrt(d)) v_j with q = U_q x, k = U_k x, v = U_v x. No residual.
inline DotAttentionResult scaled_dot_attention(const std::vector<FeatureVector>& inputs, const AttentionWeights& w) {
    if (inputs.empty()) throw DimensionError("attention needs at least one token");
    for (const auto& x : inputs)
        if (x.size() != w.dim) throw DimensionError("token dimension does not match attention weights");
    DotAttentionResult r;
    const double scale = 1.0 / std::sqrt(static_cast<double>(w.dim));
    for (const auto& x : inputs) {
        r.q.push_back(detail::matvec(w.uq, x, w.dim));
        r.k.push_back(detail::matvec(w.uk, x, w.dim));
        r.v.push_back(detail::matvec(w.uv, x, w.dim));
    }
    const std::size_t S = inputs.size();
    for (std::size_t i = 0; i < S; ++i) {
        std::vector<double> scores(S);
        for (std::size_t j = 0; j < S; ++j) scores[j] = detail::dot(r.q[i], r.k[j]) * scale;
        auto wi = softmax(scores);
        FeatureVector o(w.dim, 0.0);
        for (std::size_t j = 0; j < S; ++j)
            for (std::size_t m = 0; m < w.dim; ++m) o[m] += wi[j] * r.v[j][m];
        r.outputs.push_back(std::move(o));
        r.weights.push_back(std::move(wi));
    }
    return r;
}

/// Accumulates weight gradients (layout of AttentionWeights) and returns d loss / d inputs.
inline std::vector<std::vector<double>> scaled_dot_attention_backward(const std::vector<FeatureVector>& inputs,
                                                                      const AttentionWeights& w,
                                                                      const DotAttentionResult& r,
                                                                      const std::vector<std::vector<double>>& d_out,
                                                                      std::span<double> d_w) {
    const std::size_t S = inputs.size(), d = w.dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<std::vector<double>> dq(S, std::vector<double>(d, 0.0)), dk = dq, dv = dq, dx = dq;
    for (std::size_t i = 0; i < S; ++i) {
        std::vector<double> dwij(S);
        double mix = 0;
        for (std::size_t j = 0; j < S; ++j) {
            dwij[j] = detail::dot(d_out[i], r.v[j]);
            mix += r.weights[i][j] * dwij[j];
            for (std::size_t m = 0; m < d; ++m) dv[j][m] += r.weights[i][j] * d_out[i][m];
        }
        for (std::size_t j = 0; j < S; ++j) {
            const double ds = r.weights[i][j] * (dwij[j] - mix) * scale;
            for (std::size_t m = 0; m < d; ++m) {
                dq[i][m] += ds * r.k[j][m];
                dk[j][m] += ds * r.q[i][m];
            }
        }
    }
    const std::span<const double> mats[3] = {w.uq, w.uk, w.uv};
    const std::vector<std::vector<double>>* grads[3] = {&dq, &dk, &dv};
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < d; ++a) {
                const double g = (*grads[t])[s][a];
                for (std::size_t b = 0; b < d; ++b) {
                    d_w[t * d * d + a * d + b] += g * inputs[s][b];
                    dx[s][b] += mats[t][a * d + b] * g;
                }
            }
    return dx;
}

/// Attention classifier with the QSANN pipeline shape: front-end (positional
/// encoding on) -> dot-product attention -> mean pool -> linear softmax head.
class ClassicalTransformer : public Classifier {
public:
    ClassicalTransformer(FrontendConfig frontend, std::size_t n_classes) : fe_(frontend) {
        fe_.use_positional = true;
        head_ = {fe_.token_dim, n_classes};
        if (n_classes < 2) throw ConfigError("need at least two classes");
    }

    std::string name() const override { return "classical_transformer"; }
    std::size_t class_count() const override { return head_.classes; }
    const FrontendConfig& frontend() const { return fe_; }

    std::size_t attention_offset() const { return fe_.param_count(); }
    std::size_t head_offset() const { return attention_offset() + 3 * fe_.token_dim * fe_.token_dim; }

    std::vector<ParamKind> param_kinds() const override {
        return std::vector<ParamKind>(head_offset() + head_.param_count(), ParamKind::Classical);
    }

    std::vector<double> predict(const SequenceSample& s, std::span<const double> params) const override {
        const auto tokens = frontend_forward(s, fe_, params.subspan(0, fe_.param_count())).tokens;
        const auto att = scaled_dot_attention(tokens, AttentionWeights::view(params.subspan(attention_offset()), fe_.token_dim));
        return softmax(head_.logits(mean_pool(att.outputs), params.subspan(head_offset())));
    }

    double loss_and_grad(const SequenceSample& s, std::span<const double> params,
                         std::span<double> grad) const override {
        const auto fe = frontend_forward(s, fe_, params.subspan(0, fe_.param_count()));
        const auto w = AttentionWeights::view(params.subspan(attention_offset()), fe_.token_dim);
        const auto att = scaled_dot_attention(fe.tokens, w);
        const auto pooled = mean_pool(att.outputs);
        const auto hw = params.subspan(head_offset());
        const auto probs = softmax(head_.logits(pooled, hw));
        const double loss = cross_entropy_loss(probs, s.label);
        std::vector<double> d_logits(probs);
        d_logits[static_cast<std::size_t>(s.label)] -= 1.0;
        auto d_pooled = head_.backward(pooled, hw, d_logits, grad.subspan(head_offset()));
        for (auto& x : d_pooled) x /= static_cast<double>(att.outputs.size());
        std::vector<std::vector<double>> d_out(att.outputs.size(), d_pooled);
        const auto d_tok = scaled_dot_attention_backward(fe.tokens, w, att, d_out, grad.subspan(attention_offset()));
        frontend_backward(s, fe_, fe, d_tok, grad.subspan(0, fe_.param_count()));
        return loss;
    }

private:
    FrontendConfig fe_;
    LinearHead head_;
};

// ---------------------------------------------------------------------------

struct RnnShape {
    std::size_t input = 4;
    std::size_t hidden = 8;
    std::size_t output = 2;

    std::size_t param_count() const { return hidden * input + hidden * hidden + hidden + output * hidden + output; }
};

/// Views into a flat vector laid out as W_xh, W_hh, b_h, W_hy, b_y.
struct RnnWeights {
    std::span<const double> w_xh, w_hh, b_h, w_hy, b_y;

    static RnnWeights view(std::span<const double> p, const RnnShape& s) {
        if (p.size() < s.param_count()) throw DimensionError("RNN parameter vector too short");
        std::size_t o = 0;
        auto take = [&](std::size_t n) {
            auto v = p.subspan(o, n);
            o += n;
            return v;
        };
        RnnWeights w;
        w.w_xh = take(s.hidden * s.input);
        w.w_hh = take(s.hidden * s.hidden);
        w.b_h = take(s.hidden);
        w.w_hy = take(s.output * s.hidden);
        w.b_y = take(s.output);
        return w;
    }
};

struct RnnTrace {
    std::vector<std::vector<double>> h;  // h_1..h_T
    std::vector<std::vector<double>> y;  // y_1..y_T
};

/// h_t = tanh(W_xh x_t + W_hh h_{t-1} + b_h), y_t = W_hy h_t + b_y, h_0 = 0.
inline RnnTrace rnn_forward(const std::vector<FeatureVector>& seq, const RnnWeights& w, const RnnShape& shape) {
    if (seq.empty()) throw DimensionError("RNN needs a non-empty sequence");
    RnnTrace tr;
    std::vector<double> h(shape.hidden, 0.0);
    for (const auto& x : seq) {
        if (x.size() != shape.input) throw DimensionError("RNN input dimension mismatch");
        auto a = detail::matvec(w.w_xh, x, shape.hidden);
        const auto r = detail::matvec(w.w_hh, h, shape.hidden);
        for (std::size_t i = 0; i < shape.hidden; ++i) h[i] = std::tanh(a[i] + r[i] + w.b_h[i]);
        auto y = detail::matvec(w.w_hy, h, shape.output);
        for (std::size_t c = 0; c < shape.output; ++c) y[c] += w.b_y[c];
        tr.h.push_back(h);
        tr.y.push_back(std::move(y));
    }
    return tr;
}

/// Classifies from the last step's outputs through a softmax.
class ClassicalRnn : public Classifier {
public:
    explicit ClassicalRnn(RnnShape shape) : shape_(shape) {
        if (shape_.output < 2) throw ConfigError("need at least two classes");
    }

    std::string name() const override { return "classical_rnn"; }
    std::size_t class_count() const override { return shape_.output; }
    const RnnShape& shape() const { return shape_; }

    std::vector<ParamKind> param_kinds() const override {
        return std::vector<ParamKind>(shape_.param_count(), ParamKind::Classical);
    }

    std::vector<double> predict(const SequenceSample& s, std::span<const double> params) const override {
        return softmax(rnn_forward(s.steps, RnnWeights::view(params, shape_), shape_).y.back());
    }

    double loss_and_grad(const SequenceSample& s, std::span<const double> params,
                         std::span<double> grad) const override {
        const auto w = RnnWeights::view(params, shape_);
        const auto tr = rnn_forward(s.steps, w, shape_);
        const auto probs = softmax(tr.y.back());
        const double loss = cross_entropy_loss(probs, s.label);
        const std::size_t H = shape_.hidden, I = shape_.input, C = shape_.output;
        const std::size_t o_hh = H * I, o_bh = o_hh + H * H, o_hy = o_bh + H, o_by = o_hy + C * H;

        std::vector<double> dy(probs);
        dy[static_cast<std::size_t>(s.label)] -= 1.0;
        std::vector<double> dh(H, 0.0);
        const auto& hT = tr.h.back();
        for (std::size_t c = 0; c < C; ++c) {
            grad[o_by + c] += dy[c];
            for (std::size_t i = 0; i < H; ++i) {
                grad[o_hy + c * H + i] += dy[c] * hT[i];
                dh[i] += dy[c] * w.w_hy[c * H + i];
            }
        }
        for (std::size_t t = s.steps.size(); t-- > 0;) {
            std::vector<double> da(H);
            for (std::size_t i = 0; i < H; ++i) da[i] = dh[i] * (1 - tr.h[t][i] * tr.h[t][i]);
            std::vector<double> prev(H, 0.0);
            if (t > 0) prev = tr.h[t - 1];
            std::vector<double> dprev(H, 0.0);
            for (std::size_t i = 0; i < H; ++i) {
                grad[o_bh + i] += da[i];
                for (std::size_t j = 0; j < I; ++j) grad[i * I + j] += da[i] * s.steps[t][j];
                for (std::size_t j = 0; j < H; ++j) {
                    grad[o_hh + i * H + j] += da[i] * prev[j];
                    dprev[j] += w.w_hh[i * H + j] * da[i];
                }
            }
            dh = std::move(dprev);
        }
        return loss;
    }

private:
    RnnShape shape_;
};

}  // namespace qseq
