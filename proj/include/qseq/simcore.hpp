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
 * @file simcore.hpp
 * @brief Dense pure-state and density-matrix simulation of small circuits.
 *
 * Conventions used throughout the library:
 *  - Rotations are R_P(theta) = exp(-i theta P / 2) for P in {X, Y, Z, Z(x)Z}.
 *  - Qubit 0 is the most significant bit of a basis-state index, so on two
 *    qubits the amplitude vector is ordered |00>, |01>, |10>, |11> with the
 *    left label belonging to qubit 0.
 *  - A density matrix on n qubits is stored row-major; viewed as a vector it
 *    is a 2n-qubit register whose qubits 0..n-1 address the row and n..2n-1
 *    the column. Gates act as U on the row half and conj(U) on the column
 *    half, which lets both modes share the same strided kernels.
 */
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qseq/errors.hpp"

namespace qseq {

using cplx = std::complex<double>;

inline constexpr int kMaxQubits = 12;
inline constexpr int kMaxOracleQubits = 6;

enum class GateKind { RX, RY, RZ, RZZ, CNOT };

inline const char* gate_name(GateKind k) {
    switch (k) {
        case GateKind::RX: return "RX";
        case GateKind::RY: return "RY";
        case GateKind::RZ: return "RZ";
        case GateKind::RZZ: return "RZZ";
        case GateKind::CNOT: return "CNOT";
    }
    return "?";
}

/// One gate application. For CNOT, targets[0] is the control.
/// When param_ref is set the angle is looked up in the parameter vector at
/// evaluation time and the stored angle is ignored.
struct Gate {
    GateKind kind = GateKind::RX;
    std::array<int, 2> targets{0, 0};
    double angle = 0.0;
    std::optional<std::size_t> param_ref;

    int arity() const { return (kind == GateKind::RZZ || kind == GateKind::CNOT) ? 2 : 1; }
    bool is_rotation() const { return kind != GateKind::CNOT; }

    static Gate rx(int q, double a) { return {GateKind::RX, {q, q}, a, std::nullopt}; }
    static Gate ry(int q, double a) { return {GateKind::RY, {q, q}, a, std::nullopt}; }
    static Gate rz(int q, double a) { return {GateKind::RZ, {q, q}, a, std::nullopt}; }
    static Gate rzz(int a, int b, double t) { return {GateKind::RZZ, {a, b}, t, std::nullopt}; }
    static Gate cnot(int control, int target) {
        return {GateKind::CNOT, {control, target}, 0.0, std::nullopt};
    }
    static Gate param(GateKind kind, std::array<int, 2> targets, std::size_t ref) {
        return {kind, targets, 0.0, ref};
    }
};

inline double resolve_angle(const Gate& g, std::span<const double> params) {
    if (!g.param_ref) return g.angle;
    if (*g.param_ref >= params.size()) {
        throw IndexError("gate parameter reference " + std::to_string(*g.param_ref) +
                         " out of range for parameter vector of size " +
                         std::to_string(params.size()));
    }
    return params[*g.param_ref];
}

inline void validate_gate(const Gate& g, int n_qubits) {
    auto check = [&](int q) {
        if (q < 0 || q >= n_qubits) {
            throw IndexError(std::string(gate_name(g.kind)) + " target " + std::to_string(q) +
                             " out of range for " + std::to_string(n_qubits) + " qubits");
        }
    };
    check(g.targets[0]);
    if (g.arity() == 2) {
        check(g.targets[1]);
        if (g.targets[0] == g.targets[1]) {
            throw ArgumentError(std::string(gate_name(g.kind)) + " needs two distinct targets");
        }
    }
    if (g.kind == GateKind::CNOT && (g.param_ref || g.angle != 0.0)) {
        throw ArgumentError("CNOT carries no angle");
    }
}

class Circuit {
public:
    explicit Circuit(int n_qubits) : n_(n_qubits) {
        if (n_qubits < 1) throw ConfigError("circuit needs at least one qubit");
    }

    int n_qubits() const { return n_; }
    const std::vector<Gate>& gates() const { return gates_; }
    std::size_t size() const { return gates_.size(); }
    bool empty() const { return gates_.empty(); }

    Circuit& add(const Gate& g) {
        validate_gate(g, n_);
        gates_.push_back(g);
        return *this;
    }

    Circuit& append(const Circuit& other) {
        if (other.n_qubits() > n_) throw DimensionError("appended circuit is wider than target");
        for (const auto& g : other.gates()) add(g);
        return *this;
    }

    Gate& operator[](std::size_t i) { return gates_.at(i); }
    const Gate& operator[](std::size_t i) const { return gates_.at(i); }

    /// Largest param_ref + 1, or 0 when the circuit is parameter-free.
    std::size_t param_extent() const {
        std::size_t m = 0;
        for (const auto& g : gates_)
            if (g.param_ref) m = std::max(m, *g.param_ref + 1);
        return m;
    }

private:
    int n_;
    std::vector<Gate> gates_;
};

// ---------------------------------------------------------------------------
// Kernels on raw amplitude arrays. `nq` is the register width of the array
// (n for a statevector, 2n for a vectorised density matrix).

namespace kernels {

using Mat2 = std::array<cplx, 4>;  // row-major [[m0, m1], [m2, m3]]

inline Mat2 rotation_matrix(GateKind kind, double theta) {
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    switch (kind) {
        case GateKind::RX: return {cplx(c, 0), cplx(0, -s), cplx(0, -s), cplx(c, 0)};
        case GateKind::RY: return {cplx(c, 0), cplx(-s, 0), cplx(s, 0), cplx(c, 0)};
        case GateKind::RZ: return {cplx(c, -s), cplx(0, 0), cplx(0, 0), cplx(c, s)};
        default: throw UnsupportedGateError("not a single-qubit rotation");
    }
}

inline Mat2 conj(const Mat2& m) {
    return {std::conj(m[0]), std::conj(m[1]), std::conj(m[2]), std::conj(m[3])};
}

inline std::size_t bit_of(int nq, int q) { return std::size_t{1} << (nq - 1 - q); }

inline void apply_1q(std::span<cplx> a, int nq, int q, const Mat2& m) {
    const std::size_t stride = bit_of(nq, q);
    const std::size_t dim = a.size();
    for (std::size_t base = 0; base < dim; base += 2 * stride) {
        for (std::size_t i = base; i < base + stride; ++i) {
            const cplx a0 = a[i], a1 = a[i + stride];
            a[i] = m[0] * a0 + m[1] * a1;
            a[i + stride] = m[2] * a0 + m[3] * a1;
        }
    }
}

inline void apply_diag_1q(std::span<cplx> a, int nq, int q, cplx d0, cplx d1) {
    const std::size_t mask = bit_of(nq, q);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] *= (i & mask) ? d1 : d0;
}

/// exp(-i theta Z_a Z_b / 2): phase e^{-i theta/2} on equal bits, e^{+i theta/2} otherwise.
inline void apply_rzz(std::span<cplx> a, int nq, int qa, int qb, double theta) {
    const std::size_t ma = bit_of(nq, qa), mb = bit_of(nq, qb);
    const cplx same = std::polar(1.0, -theta / 2), diff = std::polar(1.0, theta / 2);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool pa = (i & ma) != 0, pb = (i & mb) != 0;
        a[i] *= (pa == pb) ? same : diff;
    }
}

inline void apply_cnot(std::span<cplx> a, int nq, int control, int target) {
    const std::size_t mc = bit_of(nq, control), mt = bit_of(nq, target);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if ((i & mc) && !(i & mt)) std::swap(a[i], a[i | mt]);
    }
}

/// Applies the gate with a resolved angle. `offset` shifts qubit labels (used
/// for the column half of a vectorised density matrix); `conjugate` applies
/// conj(U) instead of U.
inline void apply_resolved(std::span<cplx> a, int nq, const Gate& g, double theta, int offset,
                           bool conjugate) {
    const int t0 = g.targets[0] + offset, t1 = g.targets[1] + offset;
    switch (g.kind) {
        case GateKind::RX:
        case GateKind::RY: {
            auto m = rotation_matrix(g.kind, theta);
            apply_1q(a, nq, t0, conjugate ? conj(m) : m);
            break;
        }
        case GateKind::RZ: {
            const double s = conjugate ? -theta : theta;
            apply_diag_1q(a, nq, t0, std::polar(1.0, -s / 2), std::polar(1.0, s / 2));
            break;
        }
        case GateKind::RZZ: apply_rzz(a, nq, t0, t1, conjugate ? -theta : theta); break;
        case GateKind::CNOT: apply_cnot(a, nq, t0, t1); break;
    }
}

}  // namespace kernels

// ---------------------------------------------------------------------------

inline void check_qubit_count(int n) {
    if (n < 1 || n > kMaxQubits) {
        throw ConfigError("qubit count " + std::to_string(n) + " outside supported range [1, " +
                          std::to_string(kMaxQubits) + "]");
    }
}

class StateVector {
public:
    static StateVector zero(int n) {
        check_qubit_count(n);
        StateVector s;
        s.n_ = n;
        s.amps_.assign(std::size_t{1} << n, cplx{0, 0});
        s.amps_[0] = 1.0;
        return s;
    }

    /// Takes ownership of amplitudes; they must already be normalised (1e-10).
    static StateVector from_amplitudes(int n, std::vector<cplx> amps) {
        check_qubit_count(n);
        if (amps.size() != (std::size_t{1} << n)) {
            throw DimensionError("expected " + std::to_string(std::size_t{1} << n) +
                                 " amplitudes, got " + std::to_string(amps.size()));
        }
        StateVector s;
        s.n_ = n;
        s.amps_ = std::move(amps);
        if (std::abs(s.norm_squared() - 1.0) > 1e-10) throw ArgumentError("state is not normalised");
        return s;
    }

    int n_qubits() const { return n_; }
    std::size_t dim() const { return amps_.size(); }
    std::span<const cplx> amplitudes() const { return amps_; }
    std::span<cplx> mutable_amplitudes() { return amps_; }
    cplx operator[](std::size_t i) const { return amps_[i]; }

    double norm_squared() const {
        double s = 0;
        for (const auto& a : amps_) s += std::norm(a);
        return s;
    }

private:
    StateVector() = default;
    int n_ = 0;
    std::vector<cplx> amps_;
};

class DensityMatrix {
public:
    static DensityMatrix zero(int n) {
        check_qubit_count(n);
        DensityMatrix d(n);
        d.data_[0] = 1.0;
        return d;
    }

    static DensityMatrix maximally_mixed(int n) {
        check_qubit_count(n);
        DensityMatrix d(n);
        const std::size_t dim = d.dim();
        for (std::size_t i = 0; i < dim; ++i) d.data_[i * dim + i] = 1.0 / static_cast<double>(dim);
        return d;
    }

    /// Row-major entries; no validation beyond shape (callers building
    /// arbitrary operators, e.g. observables, use this too).
    static DensityMatrix from_entries(int n, std::vector<cplx> entries) {
        check_qubit_count(n);
        DensityMatrix d(n);
        if (entries.size() != d.data_.size()) throw DimensionError("density matrix entry count mismatch");
        d.data_ = std::move(entries);
        return d;
    }

    int n_qubits() const { return n_; }
    std::size_t dim() const { return std::size_t{1} << n_; }
    cplx operator()(std::size_t r, std::size_t c) const { return data_[r * dim() + c]; }
    cplx& operator()(std::size_t r, std::size_t c) { return data_[r * dim() + c]; }
    std::span<const cplx> entries() const { return data_; }
    std::span<cplx> mutable_entries() { return data_; }

    cplx trace() const {
        cplx t = 0;
        for (std::size_t i = 0; i < dim(); ++i) t += (*this)(i, i);
        return t;
    }

    double hermiticity_error() const {
        double e = 0;
        for (std::size_t r = 0; r < dim(); ++r)
            for (std::size_t c = 0; c < dim(); ++c) e = std::max(e, std::abs((*this)(r, c) - std::conj((*this)(c, r))));
        return e;
    }

private:
    explicit DensityMatrix(int n) : n_(n), data_(std::size_t{1} << (2 * n), cplx{0, 0}) {}
    int n_ = 0;
    std::vector<cplx> data_;
};

class PauliString {
public:
    /// Parses a word over {I, X, Y, Z}; letter i acts on qubit i.
    static PauliString parse(std::string_view word) {
        if (word.empty()) throw ArgumentError("empty Pauli string");
        for (char ch : word) {
            if (ch != 'I' && ch != 'X' && ch != 'Y' && ch != 'Z') {
                throw ArgumentError(std::string("invalid Pauli letter '") + ch + "'");
            }
        }
        PauliString p;
        p.letters_ = std::string(word);
        p.x_ = p.mask_of("XY");
        p.z_ = p.mask_of("YZ");
        p.y_phase_ = ipow()[static_cast<std::size_t>(std::count(word.begin(), word.end(), 'Y') % 4)];
        return p;
    }

    static PauliString identity(int n) { return parse(std::string(static_cast<std::size_t>(n), 'I')); }

    static PauliString single(int n, int q, char letter) {
        std::string w(static_cast<std::size_t>(n), 'I');
        w.at(static_cast<std::size_t>(q)) = letter;
        return parse(w);
    }

    int n_qubits() const { return static_cast<int>(letters_.size()); }
    const std::string& str() const { return letters_; }
    char operator[](int q) const { return letters_[static_cast<std::size_t>(q)]; }
    bool operator==(const PauliString&) const = default;

    std::size_t x_mask() const { return x_; }
    std::size_t z_mask() const { return z_; }
    int y_count() const { return static_cast<int>(std::count(letters_.begin(), letters_.end(), 'Y')); }

    /// phase(a) such that P|a> = phase(a) |a xor x_mask>.
    cplx phase(std::size_t a) const { return (std::popcount(a & z_) % 2) ? -y_phase_ : y_phase_; }

private:
    static constexpr std::array<cplx, 4> ipow() {
        return {cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
    }
    std::size_t mask_of(std::string_view which) const {
        std::size_t m = 0;
        const int n = n_qubits();
        for (int q = 0; q < n; ++q)
            if (which.find(letters_[static_cast<std::size_t>(q)]) != std::string_view::npos)
                m |= std::size_t{1} << (n - 1 - q);
        return m;
    }
    std::string letters_;
    std::size_t x_ = 0, z_ = 0;
    cplx y_phase_{1, 0};
};

// ---------------------------------------------------------------------------
// Operations

inline StateVector new_zero_state(int n) { return StateVector::zero(n); }

inline void apply_gate_inplace(StateVector& s, const Gate& g, std::span<const double> params) {
    validate_gate(g, s.n_qubits());
    kernels::apply_resolved(s.mutable_amplitudes(), s.n_qubits(), g, resolve_angle(g, params), 0, false);
}

inline StateVector apply_gate(StateVector s, const Gate& g, std::span<const double> params = {}) {
    apply_gate_inplace(s, g, params);
    return s;
}

inline void apply_circuit_inplace(StateVector& s, const Circuit& c, std::span<const double> params = {}) {
    if (c.n_qubits() != s.n_qubits()) throw DimensionError("circuit and state widths differ");
    for (const auto& g : c.gates())
        kernels::apply_resolved(s.mutable_amplitudes(), s.n_qubits(), g, resolve_angle(g, params), 0, false);
}

inline StateVector apply_circuit(StateVector s, const Circuit& c, std::span<const double> params = {}) {
    apply_circuit_inplace(s, c, params);
    return s;
}

inline double expectation_pauli(const StateVector& s, const PauliString& p) {
    if (p.n_qubits() != s.n_qubits()) throw DimensionError("Pauli string width differs from state");
    const std::size_t x = p.x_mask();
    const auto a = s.amplitudes();
    cplx acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i ^ x]) * p.phase(i) * a[i];
    return acc.real();
}

inline DensityMatrix to_density(const StateVector& s) {
    const std::size_t dim = s.dim();
    std::vector<cplx> m(dim * dim);
    const auto a = s.amplitudes();
    for (std::size_t r = 0; r < dim; ++r)
        for (std::size_t c = 0; c < dim; ++c) m[r * dim + c] = a[r] * std::conj(a[c]);
    return DensityMatrix::from_entries(s.n_qubits(), std::move(m));
}

/// rho -> U rho U^dagger with an explicit angle (used by shift engines).
namespace kernels {

/// rho -> M rho M^dagger for a single-qubit M, one pass over 2x2 row/column blocks.
inline void dm_apply_1q(std::span<cplx> a, std::size_t dim, std::size_t m, const Mat2& u) {
    const Mat2 uc = conj(u);
    for (std::size_t r = 0; r < dim; ++r) {
        if (r & m) continue;
        cplx* row0 = &a[r * dim];
        cplx* row1 = &a[(r | m) * dim];
        for (std::size_t cb = 0; cb < dim; cb += 2 * m) {
            for (std::size_t c = cb; c < cb + m; ++c) {
                const std::size_t c1 = c + m;
                const cplx b00 = u[0] * row0[c] + u[1] * row1[c], b01 = u[0] * row0[c1] + u[1] * row1[c1];
                const cplx b10 = u[2] * row0[c] + u[3] * row1[c], b11 = u[2] * row0[c1] + u[3] * row1[c1];
                row0[c] = b00 * uc[0] + b01 * uc[1];
                row0[c1] = b00 * uc[2] + b01 * uc[3];
                row1[c] = b10 * uc[0] + b11 * uc[1];
                row1[c1] = b10 * uc[2] + b11 * uc[3];
            }
        }
    }
}

/// Diagonal gate whose row/column phases depend on one parity bit each:
/// entries with equal parity are untouched, (odd, even) gain e^{i theta}.
template <class Parity>
inline void dm_apply_parity_phase(std::span<cplx> a, std::size_t dim, double theta, Parity parity) {
    const cplx up = std::polar(1.0, theta), one{1, 0};
    // factor[p][c]: multiplier for a row of parity p at column c.
    std::vector<cplx> f0(dim), f1(dim);
    for (std::size_t c = 0; c < dim; ++c) {
        const bool pc = parity(c);
        f0[c] = pc ? std::conj(up) : one;
        f1[c] = pc ? one : up;
    }
    for (std::size_t r = 0; r < dim; ++r) {
        const cplx* f = parity(r) ? f1.data() : f0.data();
        cplx* row = &a[r * dim];
        for (std::size_t c = 0; c < dim; ++c) row[c] *= f[c];
    }
}

}  // namespace kernels

inline void apply_gate_dm_resolved(DensityMatrix& d, const Gate& g, double theta) {
    const int n = d.n_qubits();
    const std::size_t dim = d.dim();
    auto a = d.mutable_entries();
    switch (g.kind) {
        case GateKind::RX:
        case GateKind::RY:
            kernels::dm_apply_1q(a, dim, kernels::bit_of(n, g.targets[0]), kernels::rotation_matrix(g.kind, theta));
            return;
        case GateKind::RZ: {
            const std::size_t m = kernels::bit_of(n, g.targets[0]);
            kernels::dm_apply_parity_phase(a, dim, theta, [m](std::size_t i) { return (i & m) != 0; });
            return;
        }
        case GateKind::RZZ: {
            const std::size_t ma = kernels::bit_of(n, g.targets[0]), mb = kernels::bit_of(n, g.targets[1]);
            kernels::dm_apply_parity_phase(a, dim, theta,
                                           [ma, mb](std::size_t i) { return ((i & ma) != 0) != ((i & mb) != 0); });
            return;
        }
        case GateKind::CNOT:
            kernels::apply_resolved(a, 2 * n, g, theta, 0, false);
            kernels::apply_resolved(a, 2 * n, g, theta, n, true);
            return;
    }
}

inline void apply_gate_dm_inplace(DensityMatrix& d, const Gate& g, std::span<const double> params) {
    validate_gate(g, d.n_qubits());
    apply_gate_dm_resolved(d, g, resolve_angle(g, params));
}

inline DensityMatrix apply_gate_dm(DensityMatrix d, const Gate& g, std::span<const double> params = {}) {
    apply_gate_dm_inplace(d, g, params);
    return d;
}

inline DensityMatrix apply_circuit_dm(DensityMatrix d, const Circuit& c, std::span<const double> params = {}) {
    if (c.n_qubits() != d.n_qubits()) throw DimensionError("circuit and state widths differ");
    for (const auto& g : c.gates()) apply_gate_dm_resolved(d, g, resolve_angle(g, params));
    return d;
}

inline void check_distinct_qubits(std::span<const int> qubits, int n) {
    for (std::size_t i = 0; i < qubits.size(); ++i) {
        if (qubits[i] < 0 || qubits[i] >= n) throw IndexError("reset qubit " + std::to_string(qubits[i]) + " out of range");
        for (std::size_t j = 0; j < i; ++j)
            if (qubits[i] == qubits[j]) throw ArgumentError("duplicate qubit " + std::to_string(qubits[i]) + " in reset list");
    }
}

/// Reset channel rho -> sum_k (|0><k|)_q rho (|k><0|)_q, applied per listed qubit.
inline void reset_qubits_inplace(DensityMatrix& d, std::span<const int> qubits) {
    check_distinct_qubits(qubits, d.n_qubits());
    const std::size_t dim = d.dim();
    for (int q : qubits) {
        const std::size_t m = kernels::bit_of(d.n_qubits(), q);
        for (std::size_t r = 0; r < dim; ++r) {
            if (r & m) continue;
            for (std::size_t c = 0; c < dim; ++c) {
                if (c & m) continue;
                d(r, c) += d(r | m, c | m);
                d(r | m, c | m) = 0;
                d(r | m, c) = 0;
                d(r, c | m) = 0;
            }
        }
    }
}

inline DensityMatrix reset_qubits(DensityMatrix d, std::span<const int> qubits) {
    reset_qubits_inplace(d, qubits);
    return d;
}

inline DensityMatrix reset_qubits(DensityMatrix d, std::initializer_list<int> qubits) {
    std::vector<int> q(qubits);
    reset_qubits_inplace(d, q);
    return d;
}

inline double expectation_pauli_dm(const DensityMatrix& d, const PauliString& p) {
    if (p.n_qubits() != d.n_qubits()) throw DimensionError("Pauli string width differs from state");
    const std::size_t x = p.x_mask();
    cplx acc = 0;
    for (std::size_t a = 0; a < d.dim(); ++a) acc += d(a, a ^ x) * p.phase(a);
    return acc.real();
}

inline double prob_one(const StateVector& s, int q) {
    if (q < 0 || q >= s.n_qubits()) throw IndexError("qubit " + std::to_string(q) + " out of range");
    const std::size_t m = kernels::bit_of(s.n_qubits(), q);
    double p = 0;
    const auto a = s.amplitudes();
    for (std::size_t i = 0; i < a.size(); ++i)
        if (i & m) p += std::norm(a[i]);
    return std::clamp(p, 0.0, 1.0);
}

inline double prob_one(const DensityMatrix& d, int q) {
    if (q < 0 || q >= d.n_qubits()) throw IndexError("qubit " + std::to_string(q) + " out of range");
    const std::size_t m = kernels::bit_of(d.n_qubits(), q);
    double p = 0;
    for (std::size_t i = 0; i < d.dim(); ++i)
        if (i & m) p += d(i, i).real();
    return std::clamp(p, 0.0, 1.0);
}

struct ParityProbabilities {
    double even = 0;  // class 0
    double odd = 0;   // class 1
};

inline ParityProbabilities parity_class_probabilities(const StateVector& s) {
    ParityProbabilities p;
    const auto a = s.amplitudes();
    for (std::size_t i = 0; i < a.size(); ++i) (std::popcount(i) % 2 ? p.odd : p.even) += std::norm(a[i]);
    return p;
}

// ---------------------------------------------------------------------------
// Brute-force matrix oracle. Deliberately independent of the strided kernels:
// every gate is expanded to a full 2^n x 2^n matrix from its local block.

struct CMatrix {
    std::size_t dim = 0;
    std::vector<cplx> a;

    static CMatrix identity(std::size_t dim) {
        CMatrix m{dim, std::vector<cplx>(dim * dim, 0.0)};
        for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
        return m;
    }
    cplx& operator()(std::size_t r, std::size_t c) { return a[r * dim + c]; }
    cplx operator()(std::size_t r, std::size_t c) const { return a[r * dim + c]; }

    CMatrix operator*(const CMatrix& o) const {
        CMatrix m{dim, std::vector<cplx>(dim * dim, 0.0)};
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t k = 0; k < dim; ++k) {
                const cplx x = (*this)(i, k);
                if (x == cplx{0, 0}) continue;
                for (std::size_t j = 0; j < dim; ++j) m(i, j) += x * o(k, j);
            }
        return m;
    }

    CMatrix adjoint() const {
        CMatrix m{dim, std::vector<cplx>(dim * dim)};
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) m(i, j) = std::conj((*this)(j, i));
        return m;
    }

    std::vector<cplx> apply(std::span<const cplx> v) const {
        std::vector<cplx> out(dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) out[i] += (*this)(i, j) * v[j];
        return out;
    }
};

namespace detail {

/// Local block of a gate in the basis of its targets (target 0 is the high bit).
inline CMatrix local_block(const Gate& g, double theta) {
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    const cplx i1(0, 1);
    switch (g.kind) {
        case GateKind::RX: return {2, {c, -i1 * s, -i1 * s, c}};
        case GateKind::RY: return {2, {c, -s, s, c}};
        case GateKind::RZ: return {2, {std::exp(-i1 * theta / 2.0), 0, 0, std::exp(i1 * theta / 2.0)}};
        case GateKind::RZZ: {
            CMatrix m{4, std::vector<cplx>(16, 0.0)};
            m(0, 0) = m(3, 3) = std::exp(-i1 * theta / 2.0);
            m(1, 1) = m(2, 2) = std::exp(i1 * theta / 2.0);
            return m;
        }
        case GateKind::CNOT: {
            CMatrix m{4, std::vector<cplx>(16, 0.0)};
            m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1.0;
            return m;
        }
    }
    return {};
}

}  // namespace detail

inline CMatrix gate_matrix(const Gate& g, int n, std::span<const double> params = {}) {
    validate_gate(g, n);
    const CMatrix block = detail::local_block(g, resolve_angle(g, params));
    const std::size_t dim = std::size_t{1} << n;
    std::vector<int> tg{g.targets[0]};
    if (g.arity() == 2) tg.push_back(g.targets[1]);
    auto bit = [&](std::size_t idx, int q) { return (idx >> (n - 1 - q)) & 1U; };
    std::size_t target_mask = 0;
    for (int q : tg) target_mask |= std::size_t{1} << (n - 1 - q);
    CMatrix m{dim, std::vector<cplx>(dim * dim, 0.0)};
    for (std::size_t r = 0; r < dim; ++r)
        for (std::size_t c = 0; c < dim; ++c) {
            if ((r & ~target_mask) != (c & ~target_mask)) continue;
            std::size_t lr = 0, lc = 0;
            for (int q : tg) {
                lr = (lr << 1) | bit(r, q);
                lc = (lc << 1) | bit(c, q);
            }
            m(r, c) = block(lr, lc);
        }
    return m;
}

/// Full unitary of a circuit (later gates multiply on the left). n <= 6.
inline CMatrix circuit_unitary(const Circuit& c, std::span<const double> params = {}) {
    if (c.n_qubits() > kMaxOracleQubits) {
        throw ConfigError("circuit_unitary is limited to " + std::to_string(kMaxOracleQubits) + " qubits");
    }
    CMatrix u = CMatrix::identity(std::size_t{1} << c.n_qubits());
    for (const auto& g : c.gates()) u = gate_matrix(g, c.n_qubits(), params) * u;
    return u;
}

}  // namespace qseq
