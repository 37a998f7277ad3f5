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
 * @file sequence.hpp
 * @brief Pieces shared by the attention classifiers: samples, token
 *        front-end (embedding, positional encoding, rescaling), mean pooling
 *        and the linear softmax head.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qseq/autodiff.hpp"
#include "qseq/encodings.hpp"
#include "qseq/errors.hpp"

namespace qseq {

/// Ordered feature vectors (tokens, patches or timesteps) or token ids, plus a class label.
struct SequenceSample {
    std::vector<FeatureVector> steps;
    std::vector<int> ids;
    int label = 0;
};

/// Sinusoidal table: PE[pos][2i] = sin(pos / 10000^(2i/dim)), PE[pos][2i+1] = cos(same).
inline std::vector<FeatureVector> positional_encoding(std::size_t length, std::size_t dim) {
    std::vector<FeatureVector> pe(length, FeatureVector(dim, 0.0));
    for (std::size_t pos = 0; pos < length; ++pos)
        for (std::size_t j = 0; j < dim; ++j) {
            const double i2 = static_cast<double>(j - j % 2);
            const double arg = static_cast<double>(pos) / std::pow(10000.0, i2 / static_cast<double>(dim));
            pe[pos][j] = (j % 2 == 0) ? std::sin(arg) : std::cos(arg);
        }
    return pe;
}

/// Row lookup in a row-major table of `rows` x `dim`; ids outside [1, rows) map to row 0.
inline std::size_t embedding_row(int id, std::size_t rows) {
    return (id <= 0 || static_cast<std::size_t>(id) >= rows) ? 0 : static_cast<std::size_t>(id);
}

inline std::vector<FeatureVector> embed_tokens(std::span<const int> ids, std::span<const double> table,
                                               std::size_t dim) {
    if (dim == 0 || table.size() % dim != 0) throw DimensionError("embedding table size is not a multiple of dim");
    const std::size_t rows = table.size() / dim;
    std::vector<FeatureVector> out;
    out.reserve(ids.size());
    for (int id : ids) {
        const std::size_t r = embedding_row(id, rows);
        out.emplace_back(table.begin() + static_cast<std::ptrdiff_t>(r * dim),
                         table.begin() + static_cast<std::ptrdiff_t>((r + 1) * dim));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Token front-end

struct FrontendConfig {
    std::size_t token_dim = 6;
    bool use_embedding = false;
    std::size_t vocab_rows = 0;      // embedding rows, row 0 reserved for unknown ids
    std::size_t embedding_dim = 2;
    std::size_t pieces = 1;          // tokens per sentence when embedding
    bool use_positional = false;
    // Affine map (v - lo) / (hi - lo) + clamp applied after adding PE (and to embeddings).
    double rescale_lo = -1.0;
    double rescale_hi = 1.0;

    std::size_t param_count() const { return use_embedding ? vocab_rows * embedding_dim : 0; }
};

struct FrontendOutput {
    std::vector<FeatureVector> tokens;
    /// d token / d pre-rescale value per component (0 where clamped or padded).
    std::vector<std::vector<double>> slope;
};

inline FrontendOutput frontend_forward(const SequenceSample& s, const FrontendConfig& cfg,
                                       std::span<const double> emb) {
    FrontendOutput out;
    std::vector<FeatureVector> raw;
    const bool rescale = cfg.use_embedding || cfg.use_positional;
    if (cfg.use_embedding) {
        if (s.ids.empty()) throw DimensionError("embedding front-end needs token ids");
        if (cfg.pieces == 0 || s.ids.size() % cfg.pieces != 0) {
            throw DimensionError(std::to_string(s.ids.size()) + " ids cannot be split into " +
                                 std::to_string(cfg.pieces) + " pieces");
        }
        const std::size_t per = s.ids.size() / cfg.pieces;
        auto rows = embed_tokens(s.ids, emb, cfg.embedding_dim);
        for (std::size_t p = 0; p < cfg.pieces; ++p) {
            FeatureVector v;
            for (std::size_t w = 0; w < per; ++w) {
                const auto& r = rows[p * per + w];
                v.insert(v.end(), r.begin(), r.end());
            }
            if (v.size() > cfg.token_dim) {
                throw DimensionError("embedded piece of width " + std::to_string(v.size()) +
                                     " exceeds token dimension " + std::to_string(cfg.token_dim));
            }
            raw.push_back(std::move(v));
        }
    } else {
        if (s.steps.empty()) throw DimensionError("sample has no tokens");
        for (const auto& v : s.steps) {
            if (v.size() != cfg.token_dim) {
                throw DimensionError("token dimension " + std::to_string(v.size()) + " incompatible with " +
                                     std::to_string(cfg.token_dim));
            }
        }
        raw = s.steps;
    }
    if (cfg.use_positional && !raw.empty()) {
        const auto pe = positional_encoding(raw.size(), raw.front().size());
        for (std::size_t p = 0; p < raw.size(); ++p)
            for (std::size_t j = 0; j < raw[p].size(); ++j) raw[p][j] += pe[p][j];
    }
    const double span_ = cfg.rescale_hi - cfg.rescale_lo;
    for (auto& v : raw) {
        std::vector<double> slope(cfg.token_dim, 0.0);
        FeatureVector tok(v.size());
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (!rescale) {
                tok[j] = v[j];
                slope[j] = 1.0;
                continue;
            }
            const double t = (v[j] - cfg.rescale_lo) / span_;
            tok[j] = std::clamp(t, 0.0, 1.0);
            slope[j] = (t > 0.0 && t < 1.0) ? 1.0 / span_ : 0.0;
        }
        out.tokens.push_back(pad_features(tok, cfg.token_dim));
        out.slope.push_back(std::move(slope));
    }
    return out;
}

/// Accumulates d loss / d embedding table from d loss / d tokens.
inline void frontend_backward(const SequenceSample& s, const FrontendConfig& cfg, const FrontendOutput& fwd,
                              const std::vector<std::vector<double>>& d_tokens, std::span<double> d_emb) {
    if (!cfg.use_embedding) return;
    const std::size_t per = s.ids.size() / cfg.pieces;
    for (std::size_t p = 0; p < cfg.pieces; ++p)
        for (std::size_t w = 0; w < per; ++w) {
            const std::size_t row = embedding_row(s.ids[p * per + w], cfg.vocab_rows);
            for (std::size_t e = 0; e < cfg.embedding_dim; ++e) {
                const std::size_t j = w * cfg.embedding_dim + e;
                d_emb[row * cfg.embedding_dim + e] += d_tokens[p][j] * fwd.slope[p][j];
            }
        }
}

// ---------------------------------------------------------------------------
// Pooling + linear head

inline FeatureVector mean_pool(const std::vector<FeatureVector>& tokens) {
    if (tokens.empty()) throw DimensionError("cannot pool an empty sequence");
    FeatureVector m(tokens.front().size(), 0.0);
    for (const auto& t : tokens)
        for (std::size_t j = 0; j < m.size(); ++j) m[j] += t[j];
    for (auto& x : m) x /= static_cast<double>(tokens.size());
    return m;
}

inline std::vector<double> softmax(std::span<const double> logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double z = 0;
    for (std::size_t i = 0; i < p.size(); ++i) z += (p[i] = std::exp(logits[i] - mx));
    for (auto& x : p) x /= z;
    return p;
}

/// Weights are C x D row-major followed by C biases.
struct LinearHead {
    std::size_t in_dim = 0;
    std::size_t classes = 2;

    std::size_t param_count() const { return classes * in_dim + classes; }

    std::vector<double> logits(std::span<const double> x, std::span<const double> w) const {
        std::vector<double> z(classes);
        for (std::size_t c = 0; c < classes; ++c) {
            double acc = w[classes * in_dim + c];
            for (std::size_t j = 0; j < in_dim; ++j) acc += w[c * in_dim + j] * x[j];
            z[c] = acc;
        }
        return z;
    }

    /// Given d loss / d logits, accumulates weight gradients and returns d loss / d x.
    std::vector<double> backward(std::span<const double> x, std::span<const double> w,
                                 std::span<const double> d_logits, std::span<double> d_w) const {
        std::vector<double> dx(in_dim, 0.0);
        for (std::size_t c = 0; c < classes; ++c) {
            d_w[classes * in_dim + c] += d_logits[c];
            for (std::size_t j = 0; j < in_dim; ++j) {
                d_w[c * in_dim + j] += d_logits[c] * x[j];
                dx[j] += d_logits[c] * w[c * in_dim + j];
            }
        }
        return dx;
    }
};

/// Cross-entropy -ln p_label with p clamped at 1e-12.
inline double cross_entropy_loss(std::span<const double> probs, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= probs.size())
        throw ArgumentError("label " + std::to_string(label) + " outside class range");
    return -std::log(std::max(probs[static_cast<std::size_t>(label)], 1e-12));
}

// ---------------------------------------------------------------------------

/// Which initialisation distribution a parameter uses.
enum class ParamKind { Angle, Classical };

/// Common surface the trainer drives. Implementations are stateless apart
/// from their configuration; all trainables live in the ParameterVector.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual std::string name() const = 0;
    virtual std::size_t class_count() const = 0;
    virtual std::vector<ParamKind> param_kinds() const = 0;
    std::size_t param_count() const { return param_kinds().size(); }

    virtual std::vector<double> predict(const SequenceSample& s, std::span<const double> params) const = 0;

    /// Returns the sample loss and adds d loss / d params into `grad`.
    virtual double loss_and_grad(const SequenceSample& s, std::span<const double> params,
                                 std::span<double> grad) const = 0;

    /// Angles uniform in [0, 2 pi); classical weights uniform in [-0.1, 0.1].
    ParameterVector init_params(std::uint64_t seed) const {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> angle(0.0, 2 * std::numbers::pi), weight(-0.1, 0.1);
        const auto kinds = param_kinds();
        ParameterVector p(kinds.size());
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = kinds[i] == ParamKind::Angle ? angle(rng) : weight(rng);
        return p;
    }
};

}  // namespace qseq
