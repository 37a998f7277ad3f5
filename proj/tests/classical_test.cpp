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

#include "qseq/classical.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace qseq;

namespace {

std::vector<double> uniform(std::size_t k, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(k);
    for (auto& x : v) x = u(rng);
    return v;
}

void expect_tight_fd(const Classifier& m, const SequenceSample& s, std::span<const double> p) {
    std::vector<double> g(p.size(), 0.0);
    m.loss_and_grad(s, p, g);
    const auto fd = finite_difference_gradient(
        [&](std::span<const double> q) { return cross_entropy_loss(m.predict(s, q), s.label); }, p, 1e-5);
    for (std::size_t i = 0; i < g.size(); ++i)
        EXPECT_LE(std::abs(g[i] - fd[i]), std::max(1e-9, 1e-6 * std::abs(fd[i]))) << "param " << i;
}

}  // namespace

TEST(Classical, attention_trivial_cases) {
    std::mt19937_64 rng(31);
    const auto w = uniform(3 * 9, rng, -1, 1);
    const auto view = AttentionWeights::view(w, 3);
    const FeatureVector tok{0.3, -0.2, 0.9};
    auto same = scaled_dot_attention({tok, tok, tok}, view);
    for (const auto& row : same.weights)
        for (double x : row) EXPECT_NEAR(x, 1.0 / 3.0, 1e-15);
    auto one = scaled_dot_attention({tok}, view);
    EXPECT_EQ(one.weights[0], std::vector<double>{1.0});
    for (std::size_t m = 0; m < 3; ++m) EXPECT_NEAR(one.outputs[0][m], one.v[0][m], 1e-15);
    EXPECT_THROW(scaled_dot_attention({{0.1, 0.2}}, view), DimensionError);
}

TEST(Classical, attention_two_token_hand_computation) {
    // d = 2, U_q = I, U_k = [[1,0],[0,2]], U_v = [[0,1],[1,0]].
    const std::vector<double> w{1, 0, 0, 1, 1, 0, 0, 2, 0, 1, 1, 0};
    const std::vector<FeatureVector> x{{1, 0}, {0, 1}};
    auto r = scaled_dot_attention(x, AttentionWeights::view(w, 2));
    // q = x, k0 = (1,0), k1 = (0,2), v0 = (0,1), v1 = (1,0).
    const double s = 1 / std::sqrt(2.0);
    const double w00 = std::exp(s) / (std::exp(s) + 1), w11 = std::exp(2 * s) / (1 + std::exp(2 * s));
    EXPECT_NEAR(r.weights[0][0], w00, 1e-15);
    EXPECT_NEAR(r.weights[1][1], w11, 1e-15);
    EXPECT_NEAR(r.outputs[0][0], 1 - w00, 1e-15);
    EXPECT_NEAR(r.outputs[0][1], w00, 1e-15);
    EXPECT_NEAR(r.outputs[1][0], w11, 1e-15);
    EXPECT_NEAR(r.outputs[1][1], 1 - w11, 1e-15);
}

TEST(Classical, softmax_rows_normalized_and_shift_invariant) {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 20; ++trial) {
        auto z = uniform(5, rng, -8, 8);
        auto p = softmax(z);
        double sum = 0;
        for (double x : p) sum += x;
        EXPECT_NEAR(sum, 1.0, 1e-12);
        for (auto& x : z) x += 37.5;
        auto q = softmax(z);
        for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], q[i], 1e-10);
    }
}

TEST(Classical, rnn_trivial_cases) {
    RnnShape shape{3, 4, 2};
    std::vector<double> w(shape.param_count(), 0.0);
    const std::size_t bh = shape.hidden * shape.input + shape.hidden * shape.hidden;
    for (std::size_t i = 0; i < shape.hidden; ++i) w[bh + i] = 0.1 * static_cast<double>(i + 1);
    const std::vector<FeatureVector> seq{{0.2, 0.4, 0.6}, {0.9, 0.1, 0.3}};
    auto tr = rnn_forward(seq, RnnWeights::view(w, shape), shape);
    for (const auto& h : tr.h)
        for (std::size_t i = 0; i < shape.hidden; ++i) EXPECT_EQ(h[i], std::tanh(0.1 * static_cast<double>(i + 1)));
}

TEST(Classical, rnn_two_step_hand_trace) {
    // input 1, hidden 1, output 2.
    RnnShape shape{1, 1, 2};
    const double wxh = 0.5, whh = -0.7, bh = 0.1, wy0 = 1.5, wy1 = -2.0, by0 = 0.3, by1 = -0.1;
    const std::vector<double> w{wxh, whh, bh, wy0, wy1, by0, by1};
    const std::vector<FeatureVector> seq{{0.8}, {-0.4}};
    auto tr = rnn_forward(seq, RnnWeights::view(w, shape), shape);
    const double h1 = std::tanh(wxh * 0.8 + bh);
    const double h2 = std::tanh(wxh * -0.4 + whh * h1 + bh);
    EXPECT_DOUBLE_EQ(tr.h[0][0], h1);
    EXPECT_DOUBLE_EQ(tr.h[1][0], h2);
    EXPECT_DOUBLE_EQ(tr.y[1][0], wy0 * h2 + by0);
    EXPECT_DOUBLE_EQ(tr.y[1][1], wy1 * h2 + by1);
}

TEST(Classical, rnn_without_recurrence_is_memoryless) {
    RnnShape shape{4, 8, 2};
    std::mt19937_64 rng(33);
    auto w = uniform(shape.param_count(), rng, -1, 1);
    const std::size_t hh = shape.hidden * shape.input;
    std::fill(w.begin() + static_cast<std::ptrdiff_t>(hh),
              w.begin() + static_cast<std::ptrdiff_t>(hh + shape.hidden * shape.hidden), 0.0);
    std::vector<FeatureVector> seq{uniform(4, rng, 0, 1), uniform(4, rng, 0, 1), uniform(4, rng, 0, 1)};
    auto a = rnn_forward(seq, RnnWeights::view(w, shape), shape);
    seq[1] = uniform(4, rng, 0, 1);
    auto b = rnn_forward(seq, RnnWeights::view(w, shape), shape);
    EXPECT_EQ(a.y[2], b.y[2]);
    EXPECT_NE(a.y[1], b.y[1]);
}

TEST(Classical, transformer_trivial_cases) {
    FrontendConfig fe;
    fe.token_dim = 6;
    ClassicalTransformer model(fe, 2);
    EXPECT_TRUE(model.frontend().use_positional);
    std::mt19937_64 rng(34);
    auto p = model.init_params(1);
    SequenceSample s{{uniform(6, rng, 0, 1), uniform(6, rng, 0, 1)}, {}, 0};
    auto probs = model.predict(s, p);
    EXPECT_NEAR(probs[0] + probs[1], 1.0, 1e-12);
    std::fill(p.begin() + static_cast<std::ptrdiff_t>(model.head_offset()), p.end(), 0.0);
    probs = model.predict(s, p);
    EXPECT_NEAR(probs[0], 0.5, 1e-15);
}

TEST(ClassicalGradient, transformer_matches_finite_differences) {
    FrontendConfig fe;
    fe.token_dim = 6;
    fe.rescale_lo = -1.0;
    fe.rescale_hi = 2.0;  // keeps x + PE strictly inside the clamp window
    ClassicalTransformer model(fe, 3);
    std::mt19937_64 rng(35);
    for (int trial = 0; trial < 3; ++trial) {
        auto p = uniform(model.param_count(), rng, -1, 1);
        SequenceSample s{{uniform(6, rng, 0, 1), uniform(6, rng, 0, 1), uniform(6, rng, 0, 1)}, {}, trial};
        expect_tight_fd(model, s, p);
    }
}

TEST(ClassicalGradient, transformer_with_embedding) {
    FrontendConfig fe;
    fe.token_dim = 6;
    fe.use_embedding = true;
    fe.vocab_rows = 5;
    fe.embedding_dim = 2;
    fe.pieces = 2;
    ClassicalTransformer model(fe, 2);
    std::mt19937_64 rng(36);
    auto p = uniform(model.param_count(), rng, -1, 1);
    auto emb = uniform(fe.param_count(), rng, -0.3, -0.05);
    std::copy(emb.begin(), emb.end(), p.begin());
    SequenceSample s{{}, {1, 4, 3, 2}, 1};
    expect_tight_fd(model, s, p);
}

TEST(ClassicalGradient, rnn_matches_finite_differences) {
    ClassicalRnn model(RnnShape{4, 8, 2});
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 3; ++trial) {
        auto p = uniform(model.param_count(), rng, -0.8, 0.8);
        SequenceSample s{{uniform(4, rng, 0, 1), uniform(4, rng, 0, 1), uniform(4, rng, 0, 1)}, {}, trial % 2};
        expect_tight_fd(model, s, p);
    }
}
