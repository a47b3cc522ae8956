#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <vector>

#include "qfp/circuit.hpp"

namespace qfp {

struct BasisSet {
    std::set<GateKind> allowed_1q;
    std::set<GateKind> allowed_2q;

    bool allows(GateKind k) const {
        if (!is_unitary_kind(k)) return true; // measure/reset/barrier always pass through
        return allowed_1q.count(k) > 0 || allowed_2q.count(k) > 0;
    }

    // The native set of IBM's fixed-frequency transmon devices: {id, rz, sx, x} + cx.
    static BasisSet ibm_default() {
        return BasisSet{{GateKind::id, GateKind::rz, GateKind::sx, GateKind::x}, {GateKind::cx}};
    }
};

// Injective logical -> physical qubit assignment.
struct Layout {
    std::map<int, int> map;

    bool injective() const {
        std::set<int> seen;
        for (auto [l, p] : map)
            if (!seen.insert(p).second) return false;
        return true;
    }
    int at(int logical) const {
        auto it = map.find(logical);
        if (it == map.end()) throw InvalidArgument("logical qubit not in layout");
        return it->second;
    }
    static Layout identity(int n) {
        Layout l;
        for (int i = 0; i < n; i++) l.map[i] = i;
        return l;
    }
};

namespace detail {

// Fixed rewrite table into {rz, sx, x} + cx words. Entries may contain gates
// that themselves need a second rewrite round (cz -> h words around cx).
inline bool decompose_step(const Gate& g, std::vector<Gate>& out) {
    constexpr double pi = std::numbers::pi;
    const int q = g.qubits.empty() ? -1 : g.qubits[0];
    switch (g.kind) {
        case GateKind::h:
            out.push_back(make_gate(GateKind::rz, {q}, {pi / 2}));
            out.push_back(make_gate(GateKind::sx, {q}));
            out.push_back(make_gate(GateKind::rz, {q}, {pi / 2}));
            return true;
        case GateKind::s:
            out.push_back(make_gate(GateKind::rz, {q}, {pi / 2}));
            return true;
        case GateKind::sdg:
            out.push_back(make_gate(GateKind::rz, {q}, {-pi / 2}));
            return true;
        case GateKind::z:
            out.push_back(make_gate(GateKind::rz, {q}, {pi}));
            return true;
        case GateKind::y:
            out.push_back(make_gate(GateKind::rz, {q}, {pi}));
            out.push_back(make_gate(GateKind::x, {q}));
            return true;
        case GateKind::cz: {
            int t = g.qubits[1];
            out.push_back(make_gate(GateKind::h, {t}));
            out.push_back(make_gate(GateKind::cx, {g.qubits[0], t}));
            out.push_back(make_gate(GateKind::h, {t}));
            return true;
        }
        case GateKind::swap: {
            int a = g.qubits[0], b = g.qubits[1];
            out.push_back(make_gate(GateKind::cx, {a, b}));
            out.push_back(make_gate(GateKind::cx, {b, a}));
            out.push_back(make_gate(GateKind::cx, {a, b}));
            return true;
        }
        default:
            return false;
    }
}

} // namespace detail

inline Circuit decompose_to_basis(const Circuit& c, const BasisSet& b) {
    Circuit out;
    out.n_qubits = c.n_qubits;
    out.n_clbits = c.n_clbits;
    for (const auto& g : c.gates) {
        std::vector<Gate> frontier{g};
        // bounded rewrite rounds; the table is acyclic (cz -> h -> rz/sx)
        for (int round = 0; round < 4; round++) {
            std::vector<Gate> next;
            bool changed = false;
            for (const auto& fg : frontier) {
                if (b.allows(fg.kind)) {
                    next.push_back(fg);
                } else if (detail::decompose_step(fg, next)) {
                    changed = true;
                } else {
                    throw InvalidArgument(std::string("no decomposition for gate '") +
                                          kind_name(fg.kind) + "' into the target basis");
                }
            }
            frontier = std::move(next);
            if (!changed) break;
        }
        for (auto& fg : frontier) {
            if (!b.allows(fg.kind))
                throw InvalidArgument(std::string("no decomposition for gate '") +
                                      kind_name(fg.kind) + "' into the target basis");
            out.add(std::move(fg));
        }
    }
    return out;
}

namespace detail {

inline bool self_inverse(GateKind k) {
    switch (k) {
        case GateKind::x:
        case GateKind::z:
        case GateKind::h:
        case GateKind::cx:
        case GateKind::cz:
        case GateKind::swap:
            return true;
        default:
            return false;
    }
}

inline bool cancels(const Gate& a, const Gate& b) {
    if (a.qubits != b.qubits) return false;
    if (a.kind != b.kind) return false;
    if (self_inverse(a.kind)) return true;
    if (a.kind == GateKind::rz) {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        double s = std::fmod(a.params[0] + b.params[0], two_pi);
        if (s < 0) s += two_pi;
        return s < 1e-12 || two_pi - s < 1e-12;
    }
    return false;
}

} // namespace detail

// Single-window peephole: removes adjacent inverse pairs (no intervening gate
// on any shared qubit) until a fixpoint is reached.
inline Circuit cancel_adjacent_inverses(const Circuit& c) {
    std::vector<Gate> gates = c.gates;
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<bool> dead(gates.size(), false);
        for (size_t i = 0; i < gates.size(); i++) {
            if (dead[i] || !is_unitary_kind(gates[i].kind) || gates[i].kind == GateKind::barrier)
                continue;
            // find the next live gate touching any of gates[i]'s qubits
            for (size_t j = i + 1; j < gates.size(); j++) {
                if (dead[j]) continue;
                const auto& gj = gates[j];
                bool overlaps = gj.kind == GateKind::barrier;
                for (int q : gj.qubits)
                    for (int p : gates[i].qubits)
                        if (p == q) overlaps = true;
                if (!overlaps) continue;
                if (detail::cancels(gates[i], gj)) {
                    dead[i] = dead[j] = true;
                    changed = true;
                }
                break;
            }
        }
        if (changed) {
            std::vector<Gate> kept;
            for (size_t i = 0; i < gates.size(); i++)
                if (!dead[i]) kept.push_back(std::move(gates[i]));
            gates = std::move(kept);
        }
    }
    Circuit out;
    out.n_qubits = c.n_qubits;
    out.n_clbits = c.n_clbits;
    for (auto& g : gates) out.add(std::move(g));
    return out;
}

inline Circuit remap(const Circuit& c, const Layout& l, int device_width) {
    if (!l.injective()) throw InvalidArgument("layout is not injective");
    Circuit out;
    out.n_qubits = device_width;
    out.n_clbits = c.n_clbits;
    for (const auto& g : c.gates) {
        Gate ng = g;
        for (auto& q : ng.qubits) {
            q = l.at(q);
            if (q < 0 || q >= device_width)
                throw InvalidArgument("physical qubit index out of device range");
        }
        out.add(std::move(ng));
    }
    return out;
}

} // namespace qfp
