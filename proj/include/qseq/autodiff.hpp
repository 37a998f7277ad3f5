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
 * @file autodiff.hpp
 * @brief Parameter-shift gradients of circuit expectation values.
 *
 * With every rotation written as exp(-i theta P / 2) and P having
 * eigenvalues +-1, the derivative of any expectation with respect to one
 * gate occurrence is exactly [f(theta + pi/2) - f(theta - pi/2)] / 2. A
 * parameter bound to several occurrences receives the sum of the
 * per-occurrence terms.
 *
 * Three evaluation routes live here:
 *  - ExpectationNode: the reference route, re-simulating the whole circuit
 *    for every shifted occurrence.
 *  - occurrence_jacobian: pure-state route that caches the state in front of
 *    each shifted gate and only re-runs the suffix. Returns derivatives of a
 *    vector-valued readout.
 *  - ChannelProgram: density-matrix programs with resets and readouts (the
 *    recurrent models). Its gradient evaluates each shifted pair against the
 *    back-propagated readout operator, which is the same two-term rule made
 *    cheap by linearity of the readouts in rho.
 */
#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <variant>
#include <vector>

#include "qseq/errors.hpp"
#include "qseq/simcore.hpp"

namespace qseq {

/// Flat trainable parameters: circuit angles in radians, classical weights unitless.
using ParameterVector = std::vector<double>;

inline constexpr double kShift = std::numbers::pi / 2;

inline void check_finite(std::span<const double> v, const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i])) throw NumericError(std::string(what) + " entry " + std::to_string(i) + " is not finite");
}

enum class StateMode { Pure, Density };

/// A circuit whose param_refs are local slots; `bindings[slot]` names the
/// ParameterVector entry feeding that slot. One slot may drive many gates.
struct ExpectationNode {
    Circuit circuit;
    PauliString observable;
    StateMode mode = StateMode::Pure;
    std::vector<std::size_t> bindings;
};

namespace detail {

inline std::vector<double> bind_local(const ExpectationNode& node, std::span<const double> theta) {
    std::vector<double> local(node.bindings.size());
    for (std::size_t s = 0; s < node.bindings.size(); ++s) {
        if (node.bindings[s] >= theta.size()) {
            throw ConfigError("slot " + std::to_string(s) + " bound to missing parameter " +
                              std::to_string(node.bindings[s]));
        }
        local[s] = theta[node.bindings[s]];
    }
    for (const auto& g : node.circuit.gates())
        if (g.param_ref && *g.param_ref >= local.size())
            throw ConfigError("unbound circuit parameter slot " + std::to_string(*g.param_ref));
    return local;
}

inline double eval_circuit(const Circuit& c, const PauliString& obs, StateMode mode, std::span<const double> local) {
    if (obs.n_qubits() != c.n_qubits()) throw DimensionError("observable width differs from circuit");
    if (mode == StateMode::Pure) return expectation_pauli(apply_circuit(StateVector::zero(c.n_qubits()), c, local), obs);
    return expectation_pauli_dm(apply_circuit_dm(DensityMatrix::zero(c.n_qubits()), c, local), obs);
}

}  // namespace detail

inline double eval_expectation(const ExpectationNode& node, std::span<const double> theta) {
    const auto local = detail::bind_local(node, theta);
    return detail::eval_circuit(node.circuit, node.observable, node.mode, local);
}

/// Reference parameter-shift gradient (full re-simulation per shifted occurrence).
inline std::vector<double> param_shift_gradient(const ExpectationNode& node, std::span<const double> theta) {
    const auto local = detail::bind_local(node, theta);
    std::vector<double> grad(theta.size(), 0.0);
    Circuit shifted = node.circuit;
    for (std::size_t gi = 0; gi < node.circuit.size(); ++gi) {
        const Gate& g = node.circuit[gi];
        if (!g.param_ref) continue;
        if (!g.is_rotation()) throw UnsupportedGateError("parameter bound to non-rotation gate");
        const double base = local[*g.param_ref];
        Gate& sg = shifted[gi];
        sg.param_ref.reset();
        sg.angle = base + kShift;
        const double plus = detail::eval_circuit(shifted, node.observable, node.mode, local);
        sg.angle = base - kShift;
        const double minus = detail::eval_circuit(shifted, node.observable, node.mode, local);
        sg = g;
        grad[node.bindings[*g.param_ref]] += 0.5 * (plus - minus);
    }
    return grad;
}

inline std::vector<double> finite_difference_gradient(const std::function<double(std::span<const double>)>& f,
                                                      std::span<const double> theta, double h = 1e-4) {
    std::vector<double> grad(theta.size());
    std::vector<double> x(theta.begin(), theta.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double fp = f(x);
        x[i] = keep - h;
        const double fm = f(x);
        x[i] = keep;
        grad[i] = (fp - fm) / (2 * h);
    }
    return grad;
}

inline std::vector<double> finite_difference_gradient(const ExpectationNode& node, std::span<const double> theta,
                                                      double h = 1e-4) {
    return finite_difference_gradient([&](std::span<const double> t) { return eval_expectation(node, t); }, theta, h);
}

/// dL/dtheta = sum_k (dL/d out_k) * (d out_k / dtheta).
inline std::vector<double> chain_gradients(const std::vector<std::vector<double>>& quantum_partials,
                                           std::span<const double> classical_jacobian) {
    if (quantum_partials.size() != classical_jacobian.size())
        throw DimensionError("one classical partial is needed per quantum node");
    if (quantum_partials.empty()) return {};
    std::vector<double> grad(quantum_partials.front().size(), 0.0);
    for (std::size_t k = 0; k < quantum_partials.size(); ++k) {
        if (quantum_partials[k].size() != grad.size()) throw DimensionError("ragged quantum partials");
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += classical_jacobian[k] * quantum_partials[k][i];
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Pure-state cached shifts.

using Readout = std::function<std::vector<double>(const StateVector&)>;

struct ReadoutJacobian {
    std::vector<double> value;              // readout at the unshifted angles
    std::vector<std::vector<double>> rows;  // rows[k][j] = d value_j / d angle of occurrences[k]
};

/// Derivatives of `readout(U(params)|0>)` with respect to the angles of the
/// listed gate occurrences (indices into c.gates(), ascending). Constant-angle
/// rotations may be listed too; they are shifted the same way.
inline ReadoutJacobian occurrence_jacobian(const Circuit& c, std::span<const double> params,
                                           std::span<const std::size_t> occurrences, const Readout& readout) {
    const auto& gates = c.gates();
    const int n = c.n_qubits();
    ReadoutJacobian out;
    out.rows.resize(occurrences.size());

    std::vector<double> angles(gates.size());
    for (std::size_t g = 0; g < gates.size(); ++g) angles[g] = resolve_angle(gates[g], params);

    StateVector s = StateVector::zero(n);
    std::size_t next = 0;
    for (std::size_t g = 0; g < gates.size(); ++g) {
        while (next < occurrences.size() && occurrences[next] == g) {
            if (!gates[g].is_rotation()) throw UnsupportedGateError("cannot shift a CNOT");
            for (int sign : {+1, -1}) {
                StateVector t = s;
                kernels::apply_resolved(t.mutable_amplitudes(), n, gates[g], angles[g] + sign * kShift, 0, false);
                for (std::size_t h = g + 1; h < gates.size(); ++h)
                    kernels::apply_resolved(t.mutable_amplitudes(), n, gates[h], angles[h], 0, false);
                auto r = readout(t);
                auto& row = out.rows[next];
                if (row.empty()) row.assign(r.size(), 0.0);
                for (std::size_t j = 0; j < r.size(); ++j) row[j] += 0.5 * sign * r[j];
            }
            ++next;
        }
        kernels::apply_resolved(s.mutable_amplitudes(), n, gates[g], angles[g], 0, false);
    }
    if (next != occurrences.size()) throw IndexError("occurrence list must be ascending and in range");
    out.value = readout(s);
    return out;
}

namespace detail {

/// dst = P src, where P is the generator of a rotation gate.
inline void apply_generator(std::span<const cplx> src, std::span<cplx> dst, int nq, const Gate& g) {
    const std::size_t m = kernels::bit_of(nq, g.targets[0]);
    const cplx i1(0, 1);
    switch (g.kind) {
        case GateKind::RX:
            for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i ^ m];
            break;
        case GateKind::RY:
            for (std::size_t i = 0; i < src.size(); ++i) dst[i] = (i & m) ? i1 * src[i ^ m] : -i1 * src[i ^ m];
            break;
        case GateKind::RZ:
            for (std::size_t i = 0; i < src.size(); ++i) dst[i] = (i & m) ? -src[i] : src[i];
            break;
        case GateKind::RZZ: {
            const std::size_t mb = kernels::bit_of(nq, g.targets[1]);
            for (std::size_t i = 0; i < src.size(); ++i) dst[i] = (((i & m) != 0) != ((i & mb) != 0)) ? -src[i] : src[i];
            break;
        }
        case GateKind::CNOT: throw UnsupportedGateError("cannot shift a CNOT");
    }
}

inline void apply_pauli(std::span<const cplx> src, std::span<cplx> dst, const PauliString& p) {
    const std::size_t x = p.x_mask();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i ^ x] = p.phase(i) * src[i];
}

}  // namespace detail

/// Same result as occurrence_jacobian for Pauli readouts, in time linear in
/// the gate count. With psi the state just after occurrence g and lambda the
/// readout observable pulled back through the gates after g,
/// [f(theta + pi/2) - f(theta - pi/2)] / 2 = Im <lambda psi | P_g psi>, so the
/// shifted pair is evaluated while walking the circuit backwards.
inline ReadoutJacobian pauli_occurrence_jacobian(const Circuit& c, std::span<const double> params,
                                                 std::span<const std::size_t> occurrences,
                                                 const std::vector<PauliString>& observables) {
    const auto& gates = c.gates();
    const int n = c.n_qubits();
    for (const auto& p : observables)
        if (p.n_qubits() != n) throw DimensionError("Pauli string width differs from circuit");
    for (std::size_t k = 0; k < occurrences.size(); ++k) {
        if (occurrences[k] >= gates.size() || (k > 0 && occurrences[k] <= occurrences[k - 1]))
            throw IndexError("occurrence list must be ascending and in range");
        if (!gates[occurrences[k]].is_rotation()) throw UnsupportedGateError("cannot shift a CNOT");
    }
    std::vector<double> angles(gates.size());
    for (std::size_t g = 0; g < gates.size(); ++g) angles[g] = resolve_angle(gates[g], params);

    StateVector psi = apply_circuit(StateVector::zero(n), c, params);
    ReadoutJacobian out;
    out.rows.assign(occurrences.size(), std::vector<double>(observables.size(), 0.0));
    std::vector<std::vector<cplx>> lambda(observables.size(), std::vector<cplx>(psi.dim()));
    for (std::size_t j = 0; j < observables.size(); ++j) {
        out.value.push_back(expectation_pauli(psi, observables[j]));
        detail::apply_pauli(psi.amplitudes(), lambda[j], observables[j]);
    }
    std::vector<cplx> gen(psi.dim());
    std::size_t next = occurrences.size();
    for (std::size_t g = gates.size(); g-- > 0;) {
        if (next > 0 && occurrences[next - 1] == g) {
            --next;
            detail::apply_generator(psi.amplitudes(), gen, n, gates[g]);
            for (std::size_t j = 0; j < observables.size(); ++j) {
                double acc = 0;
                for (std::size_t i = 0; i < gen.size(); ++i) acc += (std::conj(lambda[j][i]) * gen[i]).imag();
                out.rows[next][j] = acc;
            }
        }
        if (g == 0) break;
        const double back = gates[g].is_rotation() ? -angles[g] : 0.0;
        kernels::apply_resolved(psi.mutable_amplitudes(), n, gates[g], back, 0, false);
        for (auto& l : lambda) kernels::apply_resolved(l, n, gates[g], back, 0, false);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Density-matrix programs with resets and probability readouts.

struct ResetOp {
    std::vector<int> qubits;
};

/// Records P(|1>) of `qubit` at this point of the program.
struct ReadoutOp {
    int qubit = 0;
};

using ProgramOp = std::variant<Gate, ResetOp, ReadoutOp>;

/// Gate param_refs index the global ParameterVector directly.
struct ChannelProgram {
    int n_qubits = 1;
    std::vector<ProgramOp> ops;

    std::size_t readout_count() const {
        std::size_t k = 0;
        for (const auto& op : ops) k += std::holds_alternative<ReadoutOp>(op);
        return k;
    }
};

struct ProgramRun {
    std::vector<double> readouts;
    DensityMatrix final_state = DensityMatrix::zero(1);
};

namespace detail {

/// Runs the program; when `shift_gate` names an op index, that gate's angle is offset by `shift`.
inline ProgramRun run_program_impl(const ChannelProgram& prog, std::span<const double> params,
                                   std::size_t shift_gate, double shift) {
    ProgramRun run{{}, DensityMatrix::zero(prog.n_qubits)};
    DensityMatrix& rho = run.final_state;
    for (std::size_t k = 0; k < prog.ops.size(); ++k) {
        const auto& op = prog.ops[k];
        if (const auto* g = std::get_if<Gate>(&op)) {
            double theta = resolve_angle(*g, params);
            if (k == shift_gate) theta += shift;
            apply_gate_dm_resolved(rho, *g, theta);
        } else if (const auto* r = std::get_if<ResetOp>(&op)) {
            reset_qubits_inplace(rho, r->qubits);
        } else {
            run.readouts.push_back(prob_one(rho, std::get<ReadoutOp>(op).qubit));
        }
    }
    return run;
}

/// Im Tr(O P rho) for Hermitian O and the generator P of rotation gate g.
/// With P|c> = ph(c)|c xor x>, Tr(O P rho) = sum_c ph(c) sum_r conj(O[c, r]) rho[c xor x, r].
inline double generator_trace(const DensityMatrix& o, const DensityMatrix& rho, const Gate& g) {
    const int n = rho.n_qubits();
    const std::size_t dim = rho.dim();
    const std::size_t m = kernels::bit_of(n, g.targets[0]);
    const std::size_t mb = g.kind == GateKind::RZZ ? kernels::bit_of(n, g.targets[1]) : 0;
    const std::size_t x = (g.kind == GateKind::RX || g.kind == GateKind::RY) ? m : 0;
    const auto oe = o.entries(), re = rho.entries();
    cplx z = 0;
    for (std::size_t c = 0; c < dim; ++c) {
        cplx ph;
        switch (g.kind) {
            case GateKind::RX: ph = 1; break;
            case GateKind::RY: ph = (c & m) ? cplx(0, 1) : cplx(0, -1); break;
            case GateKind::RZ: ph = (c & m) ? -1 : 1; break;
            case GateKind::RZZ: ph = (((c & m) != 0) != ((c & mb) != 0)) ? -1 : 1; break;
            default: throw UnsupportedGateError("cannot shift a CNOT");
        }
        const cplx* orow = &oe[c * dim];
        const cplx* rrow = &re[(c ^ x) * dim];
        cplx acc = 0;
        for (std::size_t r = 0; r < dim; ++r) acc += std::conj(orow[r]) * rrow[r];
        z += ph * acc;
    }
    return z.imag();
}

/// Heisenberg adjoint of the reset channel: O -> I_q (x) <0|O|0>_q.
inline void reset_adjoint_inplace(DensityMatrix& o, std::span<const int> qubits) {
    const std::size_t dim = o.dim();
    for (int q : qubits) {
        const std::size_t m = kernels::bit_of(o.n_qubits(), q);
        for (std::size_t r = 0; r < dim; ++r) {
            if (r & m) continue;
            for (std::size_t c = 0; c < dim; ++c) {
                if (c & m) continue;
                o(r | m, c | m) = o(r, c);
                o(r | m, c) = 0;
                o(r, c | m) = 0;
            }
        }
    }
}

}  // namespace detail

inline void validate_program(const ChannelProgram& prog) {
    check_qubit_count(prog.n_qubits);
    for (const auto& op : prog.ops) {
        if (const auto* g = std::get_if<Gate>(&op)) validate_gate(*g, prog.n_qubits);
        else if (const auto* r = std::get_if<ResetOp>(&op)) check_distinct_qubits(r->qubits, prog.n_qubits);
        else if (const auto* ro = std::get_if<ReadoutOp>(&op); ro->qubit < 0 || ro->qubit >= prog.n_qubits)
            throw IndexError("readout qubit out of range");
    }
}

inline ProgramRun run_program(const ChannelProgram& prog, std::span<const double> params) {
    return detail::run_program_impl(prog, params, prog.ops.size(), 0.0);
}

/// Reference route: d(sum_t w_t y_t)/dparams by re-running the whole program
/// for each shifted gate occurrence.
inline std::vector<double> program_gradient_naive(const ChannelProgram& prog, std::span<const double> params,
                                                  std::span<const double> weights) {
    if (weights.size() != prog.readout_count()) throw DimensionError("one weight per readout required");
    std::vector<double> grad(params.size(), 0.0);
    for (std::size_t k = 0; k < prog.ops.size(); ++k) {
        const auto* g = std::get_if<Gate>(&prog.ops[k]);
        if (!g || !g->param_ref) continue;
        const auto plus = detail::run_program_impl(prog, params, k, kShift).readouts;
        const auto minus = detail::run_program_impl(prog, params, k, -kShift).readouts;
        double d = 0;
        for (std::size_t t = 0; t < weights.size(); ++t) d += weights[t] * (plus[t] - minus[t]);
        grad[*g->param_ref] += 0.5 * d;
    }
    return grad;
}

/// Same derivative as program_gradient_naive. One forward pass caches rho in
/// front of every reset; the backward pass rebuilds earlier states by
/// inverting gates, carries the Heisenberg-evolved readout operator O, and
/// evaluates each occurrence's shifted pair against O in closed form.
inline std::vector<double> program_gradient(const ChannelProgram& prog, std::span<const double> params,
                                            std::span<const double> weights) {
    if (weights.size() != prog.readout_count()) throw DimensionError("one weight per readout required");
    const int n = prog.n_qubits;
    std::vector<double> grad(params.size(), 0.0);

    std::vector<DensityMatrix> before_reset;
    DensityMatrix rho = DensityMatrix::zero(n);
    for (const auto& op : prog.ops) {
        if (const auto* g = std::get_if<Gate>(&op)) {
            apply_gate_dm_resolved(rho, *g, resolve_angle(*g, params));
        } else if (const auto* r = std::get_if<ResetOp>(&op)) {
            before_reset.push_back(rho);
            reset_qubits_inplace(rho, r->qubits);
        }
    }

    DensityMatrix obs = DensityMatrix::from_entries(n, std::vector<cplx>(rho.entries().size(), 0.0));
    std::size_t t = weights.size();
    std::size_t reset_idx = before_reset.size();
    for (std::size_t k = prog.ops.size(); k-- > 0;) {
        const auto& op = prog.ops[k];
        if (const auto* ro = std::get_if<ReadoutOp>(&op)) {
            const double w = weights[--t];
            const std::size_t m = kernels::bit_of(n, ro->qubit);
            for (std::size_t i = 0; i < obs.dim(); ++i)
                if (i & m) obs(i, i) += w;
        } else if (const auto* r = std::get_if<ResetOp>(&op)) {
            rho = before_reset[--reset_idx];
            detail::reset_adjoint_inplace(obs, r->qubits);
        } else {
            const Gate& g = std::get<Gate>(op);
            const double theta = resolve_angle(g, params);
            // rho holds the state after g. The shifted pair difference
            // [Tr(O rho+) - Tr(O rho-)] / 2 equals Im Tr(O P rho).
            if (g.param_ref) grad[*g.param_ref] += detail::generator_trace(obs, rho, g);
            apply_gate_dm_resolved(rho, g, -theta);
            // O -> U^dagger O U
            apply_gate_dm_resolved(obs, g, -theta);
        }
    }
    return grad;
}

}  // namespace qseq
