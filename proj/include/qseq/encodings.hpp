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

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qseq/errors.hpp"
#include "qseq/simcore.hpp"

namespace qseq {

using FeatureVector = std::vector<double>;

/// One RY(arccos x_i) per register qubit, so that <Z> on a fresh qubit reads back x_i.
inline Circuit qrnn_angle_encode(std::span<const double> x, std::span<const int> reg, int width) {
    if (x.size() != reg.size()) {
        throw DimensionError("angle encoding got " + std::to_string(x.size()) + " features for a " +
                             std::to_string(reg.size()) + "-qubit register");
    }
    Circuit c(width);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] >= 0.0 && x[i] <= 1.0)) {
            throw DomainError("feature " + std::to_string(i) + " = " + std::to_string(x[i]) + " outside [0, 1]");
        }
        c.add(Gate::ry(reg[i], std::acos(x[i])));
    }
    return c;
}

inline std::size_t qsann_feature_count(int n, int d_enc) {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(d_enc + 2);
}

inline void append_cnot_ring(Circuit& c, int n) {
    if (n == 2) {
        c.add(Gate::cnot(0, 1));
    } else if (n > 2) {
        for (int q = 0; q < n; ++q) c.add(Gate::cnot(q, (q + 1) % n));
    }
}

/// Feature map: (d_enc + 2) columns of RY(pi * x[col * n + q]); a CNOT ring
/// precedes every column after the first.
inline Circuit qsann_encode(std::span<const double> x, int n, int d_enc) {
    if (d_enc < 0) throw ConfigError("encoding depth must be non-negative");
    const std::size_t expected = qsann_feature_count(n, d_enc);
    if (x.size() != expected) {
        throw DimensionError("expected " + std::to_string(expected) + " features, got " + std::to_string(x.size()));
    }
    Circuit c(n);
    for (int col = 0; col < d_enc + 2; ++col) {
        if (col > 0) append_cnot_ring(c, n);
        for (int q = 0; q < n; ++q) {
            const double v = x[static_cast<std::size_t>(col * n + q)];
            if (!std::isfinite(v)) throw DomainError("feature " + std::to_string(col * n + q) + " is not finite");
            c.add(Gate::ry(q, std::numbers::pi * v));
        }
    }
    return c;
}

/// Gate index inside qsann_encode's circuit that carries feature i.
inline std::vector<std::size_t> qsann_feature_gate_indices(int n, int d_enc) {
    std::vector<std::size_t> idx;
    const std::size_t ring = n == 1 ? 0 : (n == 2 ? 1 : static_cast<std::size_t>(n));
    std::size_t g = 0;
    for (int col = 0; col < d_enc + 2; ++col) {
        if (col > 0) g += ring;
        for (int q = 0; q < n; ++q) idx.push_back(g++);
    }
    return idx;
}

/// (v - lo) / (hi - lo), clamped to [0, 1].
inline FeatureVector rescale_features(std::span<const double> raw, double lo, double hi) {
    if (!(hi > lo)) throw ArgumentError("rescale needs hi > lo");
    FeatureVector out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = std::clamp((raw[i] - lo) / (hi - lo), 0.0, 1.0);
    return out;
}

inline FeatureVector pad_features(std::span<const double> x, std::size_t target_len) {
    if (x.size() > target_len) {
        throw DimensionError("cannot pad " + std::to_string(x.size()) + " features down to " +
                             std::to_string(target_len));
    }
    FeatureVector out(x.begin(), x.end());
    out.resize(target_len, 0.0);
    return out;
}

}  // namespace qseq
