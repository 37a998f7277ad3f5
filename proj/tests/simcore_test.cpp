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

#include "qseq/simcore.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "test_util.hpp"

using namespace qseq;
using qseq::testing::max_abs_diff;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(SimCore, zero_state) {
    auto s1 = new_zero_state(1);
    EXPECT_EQ(s1[0], cplx(1, 0));
    EXPECT_EQ(s1[1], cplx(0, 0));
    auto s2 = new_zero_state(2);
    ASSERT_EQ(s2.dim(), 4u);
    EXPECT_EQ(s2[0], cplx(1, 0));
    for (std::size_t i = 1; i < 4; ++i) EXPECT_EQ(s2[i], cplx(0, 0));
    EXPECT_THROW(new_zero_state(13), ConfigError);
    EXPECT_THROW(new_zero_state(0), ConfigError);
    try {
        new_zero_state(13);
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("12"), std::string::npos);
    }
}

TEST(SimCore, rotation_examples) {
    auto s = apply_gate(new_zero_state(1), Gate::ry(0, 0.0));
    EXPECT_NEAR(std::abs(s[0] - cplx(1, 0)), 0.0, 1e-15);

    s = apply_gate(new_zero_state(1), Gate::ry(0, kPi));
    EXPECT_NEAR(std::abs(s[0]), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(s[1]), 1.0, 1e-15);
}

TEST(SimCore, cnot_bit_order) {
    // |10>: qubit 0 (most significant) is set.
    auto s = StateVector::from_amplitudes(2, {0, 0, 1, 0});
    s = apply_gate(s, Gate::cnot(0, 1));
    EXPECT_EQ(s[3], cplx(1, 0));
    EXPECT_EQ(s[2], cplx(0, 0));
    // control on qubit 1 does nothing to |10>
    auto t = apply_gate(StateVector::from_amplitudes(2, {0, 0, 1, 0}), Gate::cnot(1, 0));
    EXPECT_EQ(t[2], cplx(1, 0));
}

TEST(SimCore, invalid_targets) {
    auto s = new_zero_state(2);
    EXPECT_THROW(apply_gate(s, Gate::rx(2, 0.1)), IndexError);
    EXPECT_THROW(apply_gate(s, Gate::rzz(1, 1, 0.1)), ArgumentError);
    Circuit c(2);
    EXPECT_THROW(c.add(Gate::cnot(0, 3)), IndexError);
    EXPECT_THROW(c.add(Gate{GateKind::CNOT, {0, 1}, 0.3, std::nullopt}), ArgumentError);
    std::vector<double> p{0.1};
    EXPECT_THROW(apply_gate(s, Gate::param(GateKind::RX, {0, 0}, 4), p), IndexError);
}

TEST(SimCore, expectation_examples) {
    auto z = new_zero_state(1);
    EXPECT_DOUBLE_EQ(expectation_pauli(z, PauliString::parse("Z")), 1.0);
    EXPECT_NEAR(expectation_pauli(z, PauliString::parse("X")), 0.0, 1e-15);
    auto s = apply_gate(z, Gate::ry(0, std::acos(0.3)));
    EXPECT_NEAR(expectation_pauli(s, PauliString::parse("Z")), 0.3, 1e-12);
    EXPECT_THROW(expectation_pauli(z, PauliString::parse("ZZ")), DimensionError);
    EXPECT_THROW(PauliString::parse("ZQ"), ArgumentError);
}

TEST(SimCore, pauli_expectation_matches_matrix_oracle) {
    // <psi|P|psi> against an explicit Kronecker-product Pauli matrix.
    std::mt19937_64 rng(7);
    const std::array<std::array<cplx, 4>, 4> mats{{
        {1, 0, 0, 1},
        {0, 1, 1, 0},
        {0, cplx(0, -1), cplx(0, 1), 0},
        {1, 0, 0, -1},
    }};
    const std::string letters = "IXYZ";
    std::uniform_int_distribution<int> pick(0, 3);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + trial % 3;
        std::string w;
        for (int q = 0; q < n; ++q) w += letters[static_cast<std::size_t>(pick(rng))];
        auto s = qseq::testing::random_state(n, rng);
        const std::size_t dim = s.dim();
        cplx acc = 0;
        for (std::size_t r = 0; r < dim; ++r)
            for (std::size_t c = 0; c < dim; ++c) {
                cplx e = 1;
                for (int q = 0; q < n; ++q) {
                    const auto k = letters.find(w[static_cast<std::size_t>(q)]);
                    const int br = (r >> (n - 1 - q)) & 1, bc = (c >> (n - 1 - q)) & 1;
                    e *= mats[k][static_cast<std::size_t>(2 * br + bc)];
                }
                acc += std::conj(s[r]) * e * s[c];
            }
        EXPECT_NEAR(expectation_pauli(s, PauliString::parse(w)), acc.real(), 1e-12) << w;
        EXPECT_NEAR(expectation_pauli_dm(to_density(s), PauliString::parse(w)), acc.real(), 1e-12) << w;
    }
}

TEST(SimCore, to_density_examples) {
    auto d = to_density(new_zero_state(1));
    EXPECT_EQ(d(0, 0), cplx(1, 0));
    EXPECT_EQ(d(1, 1), cplx(0, 0));
    const double h = 1 / std::sqrt(2.0);
    auto plus = to_density(StateVector::from_amplitudes(1, {h, h}));
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(std::abs(plus(r, c) - 0.5), 0.0, 1e-15);

    std::mt19937_64 rng(3);
    auto rho = to_density(qseq::testing::random_state(3, rng));
    cplx purity = 0;
    for (std::size_t r = 0; r < rho.dim(); ++r)
        for (std::size_t c = 0; c < rho.dim(); ++c) purity += rho(r, c) * rho(c, r);
    EXPECT_NEAR(purity.real(), 1.0, 1e-12);
}

TEST(SimCore, dm_gate_examples) {
    auto mixed = DensityMatrix::maximally_mixed(2);
    for (const auto& g : {Gate::rx(0, 0.7), Gate::ry(1, 1.1), Gate::rz(0, -0.4), Gate::rzz(0, 1, 2.2), Gate::cnot(1, 0)}) {
        auto out = apply_gate_dm(mixed, g);
        EXPECT_LT(max_abs_diff(out.entries(), mixed.entries()), 1e-15);
    }
    auto one = apply_gate_dm(DensityMatrix::zero(1), Gate::ry(0, kPi));
    EXPECT_NEAR(one(1, 1).real(), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(one(0, 0)), 0.0, 1e-15);

    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t k = 0;
        auto c = qseq::testing::random_circuit(3, 15, rng, &k);
        auto params = qseq::testing::random_angles(k, rng);
        auto psi = qseq::testing::random_state(3, rng);
        auto via_dm = apply_circuit_dm(to_density(psi), c, params);
        auto via_sv = to_density(apply_circuit(psi, c, params));
        EXPECT_LT(max_abs_diff(via_dm.entries(), via_sv.entries()), 1e-12);
    }
}

TEST(SimCore, reset_examples) {
    auto one = to_density(StateVector::from_amplitudes(1, {0, 1}));
    auto r = reset_qubits(one, {0});
    EXPECT_NEAR(r(0, 0).real(), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(r(1, 1)), 0.0, 1e-15);

    // |+> (x) |1>: resetting qubit 0 leaves qubit 1 at |1><1|.
    const double h = 1 / std::sqrt(2.0);
    auto pp = to_density(StateVector::from_amplitudes(2, {0, h, 0, h}));
    auto m = qseq::testing::marginal(reset_qubits(pp, {0}), 1);
    EXPECT_NEAR(m[3].real(), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(m[0]) + std::abs(m[1]) + std::abs(m[2]), 0.0, 1e-15);

    EXPECT_THROW(reset_qubits(pp, {0, 0}), ArgumentError);
    EXPECT_THROW(reset_qubits(pp, {2}), IndexError);
}

TEST(SimCore, reset_bell_matches_kraus_sum) {
    const double h = 1 / std::sqrt(2.0);
    auto bell = to_density(StateVector::from_amplitudes(2, {h, 0, 0, h}));
    // Kraus operators on qubit 0 as 4x4 matrices: K0 = |0><0| (x) I, K1 = |0><1| (x) I.
    CMatrix k0{4, std::vector<cplx>(16, 0.0)}, k1{4, std::vector<cplx>(16, 0.0)};
    k0(0, 0) = k0(1, 1) = 1;
    k1(0, 2) = k1(1, 3) = 1;
    CMatrix rho{4, std::vector<cplx>(bell.entries().begin(), bell.entries().end())};
    auto expected = k0 * rho * k0.adjoint();
    auto t = k1 * rho * k1.adjoint();
    for (std::size_t i = 0; i < 16; ++i) expected.a[i] += t.a[i];
    // Hand value: (1/2)|0><0| (x) I.
    EXPECT_NEAR(expected(0, 0).real(), 0.5, 1e-15);
    EXPECT_NEAR(expected(1, 1).real(), 0.5, 1e-15);

    auto got = reset_qubits(bell, {0});
    EXPECT_LT(max_abs_diff(got.entries(), expected.a), 1e-15);
}

TEST(SimCore, dm_expectation_examples) {
    auto mixed = DensityMatrix::maximally_mixed(3);
    EXPECT_NEAR(expectation_pauli_dm(mixed, PauliString::parse("XZI")), 0.0, 1e-15);
    EXPECT_NEAR(expectation_pauli_dm(mixed, PauliString::parse("IIY")), 0.0, 1e-15);
    EXPECT_NEAR(expectation_pauli_dm(mixed, PauliString::identity(3)), 1.0, 1e-15);
}

TEST(SimCore, prob_one_examples) {
    EXPECT_EQ(prob_one(new_zero_state(1), 0), 0.0);
    EXPECT_NEAR(prob_one(StateVector::from_amplitudes(1, {0, 1}), 0), 1.0, 1e-15);
    EXPECT_NEAR(prob_one(apply_gate(new_zero_state(1), Gate::ry(0, kPi / 2)), 0), 0.5, 1e-15);
    std::mt19937_64 rng(5);
    auto s = qseq::testing::random_state(3, rng);
    for (int q = 0; q < 3; ++q) {
        const double z = expectation_pauli(s, PauliString::single(3, q, 'Z'));
        EXPECT_NEAR(prob_one(s, q), (1 - z) / 2, 1e-12);
        EXPECT_NEAR(prob_one(to_density(s), q), (1 - z) / 2, 1e-12);
    }
}

TEST(SimCore, parity_examples) {
    auto p = parity_class_probabilities(new_zero_state(2));
    EXPECT_EQ(p.even, 1.0);
    EXPECT_EQ(p.odd, 0.0);
    p = parity_class_probabilities(StateVector::from_amplitudes(2, {0, 1, 0, 0}));
    EXPECT_EQ(p.even, 0.0);
    EXPECT_EQ(p.odd, 1.0);
    const double h = 1 / std::sqrt(2.0);
    p = parity_class_probabilities(StateVector::from_amplitudes(2, {h, 0, 0, h}));
    EXPECT_NEAR(p.even, 1.0, 1e-15);
}

TEST(SimCore, circuit_unitary_examples) {
    Circuit empty(3);
    auto u = circuit_unitary(empty);
    EXPECT_LT(max_abs_diff(u.a, CMatrix::identity(8).a), 1e-15);

    Circuit cx(2);
    cx.add(Gate::cnot(0, 1));
    auto p = circuit_unitary(cx);
    const std::vector<cplx> perm{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0};
    EXPECT_LT(max_abs_diff(p.a, perm), 1e-15);

    EXPECT_THROW(circuit_unitary(Circuit(7)), ConfigError);

    std::mt19937_64 rng(99);
    std::size_t k = 0;
    auto c = qseq::testing::random_circuit(3, 20, rng, &k);
    auto params = qseq::testing::random_angles(k, rng);
    auto U = circuit_unitary(c, params);
    auto psi = apply_circuit(new_zero_state(3), c, params);
    std::vector<cplx> e0(8, 0.0);
    e0[0] = 1;
    EXPECT_LT(max_abs_diff(U.apply(e0), psi.amplitudes()), 1e-12);
    auto uu = U.adjoint() * U;
    EXPECT_LT(max_abs_diff(uu.a, CMatrix::identity(8).a), 1e-10);
}

TEST(SimCore, rzz_equals_cnot_rz_cnot) {
    for (double theta : {0.3, -1.7, 2.9}) {
        Circuit direct(3), decomposed(3);
        direct.add(Gate::rzz(0, 2, theta));
        decomposed.add(Gate::cnot(0, 2)).add(Gate::rz(2, theta)).add(Gate::cnot(0, 2));
        EXPECT_LT(max_abs_diff(circuit_unitary(direct).a, circuit_unitary(decomposed).a), 1e-14);
    }
}

// ---- properties ----

TEST(SimCoreProperty, norm_preserved) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ang(-10, 10);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + trial % 3;
        auto s = qseq::testing::random_state(n, rng);
        for (const auto& g : {Gate::rx(0, ang(rng)), Gate::ry(n - 1, ang(rng)), Gate::rz(1, ang(rng)),
                              Gate::rzz(0, n - 1, ang(rng)), Gate::cnot(n - 1, 0)}) {
            s = apply_gate(s, g);
            EXPECT_LT(std::abs(s.norm_squared() - 1.0), 1e-12);
        }
    }
}

TEST(SimCoreProperty, oracle_equivalence) {
    std::mt19937_64 rng(4242);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + trial % 4;
        std::size_t k = 0;
        auto c = qseq::testing::random_circuit(n, 1 + trial % 20, rng, &k);
        auto params = qseq::testing::random_angles(k, rng);
        auto psi0 = qseq::testing::random_state(n, rng);
        auto got = apply_circuit(psi0, c, params);
        auto want = circuit_unitary(c, params).apply(psi0.amplitudes());
        EXPECT_LT(max_abs_diff(got.amplitudes(), want), 1e-12);
    }
}

TEST(SimCoreProperty, density_evolution_matches_unitary_oracle) {
    std::mt19937_64 rng(515);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 1 + trial % 4;
        std::size_t k = 0;
        auto c = qseq::testing::random_circuit(n, 1 + trial % 20, rng, &k);
        auto params = qseq::testing::random_angles(k, rng);
        // rho = p |a><a| + (1 - p) |b><b|, evolved through the unitary matrix.
        auto a = qseq::testing::random_state(n, rng), b = qseq::testing::random_state(n, rng);
        const double p = u(rng);
        const auto U = circuit_unitary(c, params);
        const auto ua = U.apply(a.amplitudes()), ub = U.apply(b.amplitudes());
        const auto ra = to_density(a), rb = to_density(b);
        std::vector<cplx> mixed(ra.entries().size());
        for (std::size_t i = 0; i < mixed.size(); ++i) mixed[i] = p * ra.entries()[i] + (1 - p) * rb.entries()[i];
        const auto got = apply_circuit_dm(DensityMatrix::from_entries(n, mixed), c, params);
        const std::size_t dim = got.dim();
        double worst = 0;
        for (std::size_t r = 0; r < dim; ++r)
            for (std::size_t col = 0; col < dim; ++col) {
                const cplx want = p * ua[r] * std::conj(ua[col]) + (1 - p) * ub[r] * std::conj(ub[col]);
                worst = std::max(worst, std::abs(got(r, col) - want));
            }
        EXPECT_LT(worst, 1e-12) << "trial " << trial;
    }
}

TEST(SimCoreProperty, reset_channel_laws) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + trial % 3;
        auto rho = qseq::testing::random_density(n, rng);
        std::vector<int> qs{trial % n};
        auto once = reset_qubits(rho, qs);
        auto twice = reset_qubits(once, qs);
        EXPECT_NEAR(once.trace().real(), 1.0, 1e-10);
        EXPECT_LT(once.hermiticity_error(), 1e-10);
        EXPECT_GT(qseq::testing::min_eigenvalue(once), -1e-9);
        EXPECT_LT(max_abs_diff(once.entries(), twice.entries()), 1e-15);
        auto m = qseq::testing::marginal(once, qs[0]);
        EXPECT_NEAR(m[0].real(), 1.0, 1e-12);
    }
}

TEST(SimCoreProperty, encoding_identity) {
    for (int i = 0; i <= 100; ++i) {
        const double x = i / 100.0;
        auto s = apply_gate(new_zero_state(1), Gate::ry(0, std::acos(x)));
        EXPECT_NEAR(expectation_pauli(s, PauliString::parse("Z")), x, 1e-12);
    }
}

TEST(SimCoreProperty, parity_identity) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + trial % 4;
        auto s = qseq::testing::random_state(n, rng);
        auto p = parity_class_probabilities(s);
        const double zz = expectation_pauli(s, PauliString::parse(std::string(static_cast<std::size_t>(n), 'Z')));
        EXPECT_NEAR(p.even, (1 + zz) / 2, 1e-12);
        EXPECT_NEAR(p.even + p.odd, 1.0, 1e-12);
    }
}

TEST(SimCoreProperty, deterministic) {
    std::mt19937_64 rng(1);
    std::size_t k = 0;
    auto c = qseq::testing::random_circuit(4, 20, rng, &k);
    auto params = qseq::testing::random_angles(k, rng);
    auto a = apply_circuit(new_zero_state(4), c, params);
    auto b = apply_circuit(new_zero_state(4), c, params);
    for (std::size_t i = 0; i < a.dim(); ++i) EXPECT_EQ(a[i], b[i]);
}
