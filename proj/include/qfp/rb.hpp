#pragma once

#include <cstdint>
#include <vector>

#include "qfp/circuit.hpp"
#include "qfp/rng.hpp"
#include "qfp/transpile.hpp"

namespace qfp {

// Spec for one randomized-benchmarking circuit.
struct RBSpec {
    int n_active = 1;
    int seq_len = 1;               // number of random Clifford elements
    int gates_per_element_min = 0; // 0 -> default 5 * n_active
    int gates_per_element_max = 0; // 0 -> default 20 * n_active
    std::uint64_t seed = 0;
    Layout placement;              // onto device qubits
    int device_width = 0;          // 0 -> n_active (identity placement)
};

namespace detail {

constexpr GateKind rb_1q_gates[] = {GateKind::x, GateKind::z, GateKind::s, GateKind::h};
constexpr GateKind rb_2q_gates[] = {GateKind::cx, GateKind::cz, GateKind::swap};

} // namespace detail

// Uniform random word over the Clifford generators {x, z, s, h} and, for
// n >= 2, {cx, cz, swap} on random distinct ordered pairs. 1q vs 2q is chosen
// proportionally to the number of available gate kinds (4 : 3).
inline Circuit random_clifford_word(int n, int len, std::uint64_t seed) {
    if (n < 1 || len < 1) throw InvalidArgument("random_clifford_word: n and len must be >= 1");
    Circuit c;
    c.n_qubits = n;
    SplitMix64 rng(seed);
    const int n_kinds = n >= 2 ? 7 : 4;
    for (int i = 0; i < len; i++) {
        int pick = static_cast<int>(rng.below(n_kinds));
        if (pick < 4) {
            int q = static_cast<int>(rng.below(n));
            c.add(make_gate(detail::rb_1q_gates[pick], {q}));
        } else {
            int a = static_cast<int>(rng.below(n));
            int b = static_cast<int>(rng.below(n - 1));
            if (b >= a) b++;
            c.add(make_gate(detail::rb_2q_gates[pick - 4], {a, b}));
        }
    }
    return c;
}

// Appends the gate-wise reversed inverse so the total unitary is identity up
// to global phase. s inverts as [z, s]; sdg as [s]; rz(t) as rz(-t).
inline Circuit append_inverse(const Circuit& c) {
    Circuit out = c;
    for (auto it = c.gates.rbegin(); it != c.gates.rend(); ++it) {
        const Gate& g = *it;
        switch (g.kind) {
            case GateKind::id:
            case GateKind::x:
            case GateKind::y:
            case GateKind::z:
            case GateKind::h:
            case GateKind::cx:
            case GateKind::cz:
            case GateKind::swap:
                out.add(g);
                break;
            case GateKind::s:
                out.add(make_gate(GateKind::z, {g.qubits[0]}));
                out.add(make_gate(GateKind::s, {g.qubits[0]}));
                break;
            case GateKind::sdg:
                out.add(make_gate(GateKind::s, {g.qubits[0]}));
                break;
            case GateKind::sx:
                // sx^-1 = sx^3
                out.add(g);
                out.add(g);
                out.add(g);
                break;
            case GateKind::rz:
                out.add(make_gate(GateKind::rz, {g.qubits[0]}, {-g.params[0]}));
                break;
            case GateKind::barrier:
                break;
            default:
                throw InvalidArgument("append_inverse: circuit contains a non-invertible element");
        }
    }
    return out;
}

// Random words + computed reversal + measurement of all active qubits,
// remapped onto device qubits through spec.placement.
inline Circuit generate_rb_circuit(const RBSpec& spec) {
    if (spec.n_active < 1 || spec.seq_len < 1) throw InvalidArgument("invalid RB spec");
    const int gmin = spec.gates_per_element_min > 0 ? spec.gates_per_element_min
                                                    : 5 * spec.n_active;
    const int gmax = spec.gates_per_element_max > 0 ? spec.gates_per_element_max
                                                    : 20 * spec.n_active;
    if (gmax < gmin) throw InvalidArgument("invalid gates_per_element range");

    Circuit c;
    c.n_qubits = spec.n_active;
    SplitMix64 lens(child_seed(spec.seed, 0));
    for (int e = 0; e < spec.seq_len; e++) {
        int len = gmin + static_cast<int>(lens.below(gmax - gmin + 1));
        Circuit word = random_clifford_word(spec.n_active, len, child_seed(spec.seed, e + 1));
        for (const auto& g : word.gates) c.add(g);
    }
    c = append_inverse(c);
    c.n_clbits = spec.n_active;
    for (int q = 0; q < spec.n_active; q++) c.add(make_gate(GateKind::measure, {q}, {}, q));

    Layout placement = spec.placement;
    int width = spec.device_width;
    if (placement.map.empty()) {
        placement = Layout::identity(spec.n_active);
        if (width == 0) width = spec.n_active;
    }
    return remap(c, placement, width);
}

} // namespace qfp
