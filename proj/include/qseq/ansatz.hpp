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

#include <cstddef>
#include <utility>
#include <vector>

#include "qseq/errors.hpp"
#include "qseq/simcore.hpp"

namespace qseq {

/// Layered variational block: per qubit RX . RZ . RX, then cyclic RZZ.
struct AnsatzSpec {
    int n_qubits = 1;
    int depth = 1;
    std::size_t param_offset = 0;
};

/// Entangling pairs of one layer: ring for n >= 3, the single pair (0,1) for n = 2, none for n = 1.
inline std::vector<std::pair<int, int>> entangler_pairs(int n) {
    std::vector<std::pair<int, int>> p;
    if (n == 2) p.emplace_back(0, 1);
    if (n >= 3)
        for (int q = 0; q < n; ++q) p.emplace_back(q, (q + 1) % n);
    return p;
}

inline std::size_t param_count(const AnsatzSpec& spec) {
    if (spec.n_qubits < 1 || spec.depth < 1) throw ConfigError("ansatz needs n_qubits >= 1 and depth >= 1");
    const std::size_t n = static_cast<std::size_t>(spec.n_qubits);
    return static_cast<std::size_t>(spec.depth) * (3 * n + entangler_pairs(spec.n_qubits).size());
}

/// Refs are dense in [param_offset, param_offset + param_count(spec)), each used once.
inline Circuit build_ansatz(const AnsatzSpec& spec) {
    param_count(spec);  // validates
    Circuit c(spec.n_qubits);
    std::size_t ref = spec.param_offset;
    for (int layer = 0; layer < spec.depth; ++layer) {
        for (int q = 0; q < spec.n_qubits; ++q) {
            c.add(Gate::param(GateKind::RX, {q, q}, ref++));
            c.add(Gate::param(GateKind::RZ, {q, q}, ref++));
            c.add(Gate::param(GateKind::RX, {q, q}, ref++));
        }
        for (auto [a, b] : entangler_pairs(spec.n_qubits)) c.add(Gate::param(GateKind::RZZ, {a, b}, ref++));
    }
    return c;
}

}  // namespace qseq
