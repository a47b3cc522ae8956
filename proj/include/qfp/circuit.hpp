#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qfp/errors.hpp"

namespace qfp {

enum class GateKind {
    id, x, y, z, h, s, sdg, sx, rz, cx, cz, swap, measure, reset, barrier
};

struct GateKindInfo {
    const char* name;
    int arity;       // qubit count (barrier: 0)
    int param_count; // rotation parameters
};

inline const GateKindInfo& kind_info(GateKind k) {
    static const std::array<GateKindInfo, 15> table{{
        {"id", 1, 0},   {"x", 1, 0},    {"y", 1, 0},  {"z", 1, 0},
        {"h", 1, 0},    {"s", 1, 0},    {"sdg", 1, 0}, {"sx", 1, 0},
        {"rz", 1, 1},   {"cx", 2, 0},   {"cz", 2, 0}, {"swap", 2, 0},
        {"measure", 1, 0}, {"reset", 1, 0}, {"barrier", 0, 0},
    }};
    return table[static_cast<int>(k)];
}

inline const char* kind_name(GateKind k) { return kind_info(k).name; }

inline std::optional<GateKind> kind_from_name(std::string_view s) {
    for (int i = 0; i < 15; i++) {
        auto k = static_cast<GateKind>(i);
        if (s == kind_info(k).name) return k;
    }
    return std::nullopt;
}

inline bool is_unitary_kind(GateKind k) {
    return k != GateKind::measure && k != GateKind::reset && k != GateKind::barrier;
}

struct Gate {
    GateKind kind;
    std::vector<int> qubits;   // ordered; control first for cx/cz
    std::vector<double> params; // radians, length = param_count
    int clbit = -1;             // measure only

    bool operator==(const Gate&) const = default;
};

inline Gate make_gate(GateKind k, std::vector<int> qubits, std::vector<double> params = {},
                      int clbit = -1) {
    const auto& info = kind_info(k);
    if (static_cast<int>(qubits.size()) != info.arity)
        throw InvalidArgument(std::string("gate ") + info.name + ": wrong qubit count");
    if (static_cast<int>(params.size()) != info.param_count)
        throw InvalidArgument(std::string("gate ") + info.name + ": wrong param count");
    if (info.arity == 2 && qubits[0] == qubits[1])
        throw InvalidArgument(std::string("gate ") + info.name + ": duplicate qubit");
    if (k == GateKind::measure && clbit < 0)
        throw InvalidArgument("measure requires a classical bit target");
    return Gate{k, std::move(qubits), std::move(params), clbit};
}

struct Circuit {
    int n_qubits = 0;
    int n_clbits = 0;
    std::vector<Gate> gates;

    bool operator==(const Circuit&) const = default;

    void add(Gate g) {
        for (int q : g.qubits)
            if (q < 0 || q >= n_qubits)
                throw InvalidArgument("qubit index out of range");
        if (g.kind == GateKind::measure && (g.clbit < 0 || g.clbit >= n_clbits))
            throw InvalidArgument("classical bit index out of range");
        gates.push_back(std::move(g));
    }

    // Sorted classical bits that receive a measurement.
    std::vector<int> measured_clbits() const {
        std::vector<bool> seen(n_clbits, false);
        for (const auto& g : gates)
            if (g.kind == GateKind::measure) {
                if (seen[g.clbit]) throw InvalidArgument("classical bit measured twice");
                seen[g.clbit] = true;
            }
        std::vector<int> out;
        for (int i = 0; i < n_clbits; i++)
            if (seen[i]) out.push_back(i);
        return out;
    }
};

// ---------------------------------------------------------------------------
// Text format: strict OpenQASM-2 subset. One statement per line, `//` comments.
//   qreg q[N]; creg c[M];
//   h q[0];  cx q[0],q[1];  rz(0.5) q[2];  measure q[0] -> c[0];  barrier;
// ---------------------------------------------------------------------------

namespace detail {

struct LineParser {
    std::string_view s;
    int line;
    size_t pos = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, line, static_cast<int>(pos) + 1);
    }
    void skip_ws() {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) pos++;
    }
    bool eat(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) { pos++; return true; }
        return false;
    }
    void expect(char c) {
        if (!eat(c)) fail(std::string("expected '") + c + "'");
    }
    void expect_str(std::string_view t) {
        skip_ws();
        if (s.substr(pos, t.size()) != t) fail("expected '" + std::string(t) + "'");
        pos += t.size();
    }
    std::string ident() {
        skip_ws();
        size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
            pos++;
        if (pos == start) fail("expected identifier");
        return std::string(s.substr(start, pos - start));
    }
    int integer() {
        skip_ws();
        size_t start = pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) pos++;
        if (pos == start) fail("expected integer");
        return std::stoi(std::string(s.substr(start, pos - start)));
    }
    double number() {
        skip_ws();
        size_t start = pos;
        if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) pos++;
        while (pos < s.size() &&
               (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.' ||
                s[pos] == 'e' || s[pos] == 'E' ||
                ((s[pos] == '+' || s[pos] == '-') && (s[pos - 1] == 'e' || s[pos - 1] == 'E'))))
            pos++;
        if (pos == start) fail("expected number");
        try {
            return std::stod(std::string(s.substr(start, pos - start)));
        } catch (const std::exception&) {
            fail("malformed number");
        }
    }
    int qubit_ref() {
        expect_str("q");
        expect('[');
        int i = integer();
        expect(']');
        return i;
    }
    void end() {
        skip_ws();
        if (pos != s.size()) fail("trailing characters");
    }
};

} // namespace detail

inline Circuit parse_circuit(std::string_view text) {
    Circuit c;
    bool have_qreg = false;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        line_no++;
        if (auto cpos = raw.find("//"); cpos != std::string::npos) raw.erase(cpos);
        // trim
        size_t a = raw.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue;
        size_t b = raw.find_last_not_of(" \t\r");
        std::string stmt = raw.substr(a, b - a + 1);

        detail::LineParser p{stmt, line_no};
        std::string head = p.ident();
        if (head == "OPENQASM" || head == "include") continue; // tolerated prologue
        if (head == "qreg") {
            if (have_qreg) p.fail("duplicate qreg");
            p.expect_str("q");
            p.expect('[');
            c.n_qubits = p.integer();
            p.expect(']');
            p.expect(';');
            p.end();
            if (c.n_qubits < 1) p.fail("qreg size must be >= 1");
            have_qreg = true;
            continue;
        }
        if (head == "creg") {
            p.expect_str("c");
            p.expect('[');
            c.n_clbits = p.integer();
            p.expect(']');
            p.expect(';');
            p.end();
            continue;
        }
        if (!have_qreg) p.fail("statement before qreg declaration");

        if (head == "barrier") {
            p.expect(';');
            p.end();
            c.add(Gate{GateKind::barrier, {}, {}, -1});
            continue;
        }
        if (head == "measure") {
            int q = p.qubit_ref();
            p.expect_str("->");
            p.expect_str("c");
            p.expect('[');
            int cb = p.integer();
            p.expect(']');
            p.expect(';');
            p.end();
            if (q >= c.n_qubits) p.fail("qubit index out of range");
            if (cb >= c.n_clbits) p.fail("classical bit index out of range");
            c.add(make_gate(GateKind::measure, {q}, {}, cb));
            continue;
        }
        auto kind = kind_from_name(head);
        if (!kind) p.fail("unknown gate '" + head + "'");
        const auto& info = kind_info(*kind);
        std::vector<double> params;
        if (info.param_count > 0) {
            p.expect('(');
            params.push_back(p.number());
            p.expect(')');
        }
        std::vector<int> qubits;
        qubits.push_back(p.qubit_ref());
        if (info.arity == 2) {
            p.expect(',');
            qubits.push_back(p.qubit_ref());
        }
        p.expect(';');
        p.end();
        for (int q : qubits)
            if (q >= c.n_qubits) p.fail("qubit index out of range");
        if (info.arity == 2 && qubits[0] == qubits[1]) p.fail("duplicate qubit operand");
        c.add(make_gate(*kind, std::move(qubits), std::move(params)));
    }
    if (!have_qreg) throw ParseError("missing qreg declaration", 0, 0);
    return c;
}

inline std::string emit_circuit(const Circuit& c) {
    std::ostringstream out;
    out << "qreg q[" << c.n_qubits << "];\n";
    if (c.n_clbits > 0) out << "creg c[" << c.n_clbits << "];\n";
    for (const auto& g : c.gates) {
        if (g.kind == GateKind::barrier) {
            out << "barrier;\n";
        } else if (g.kind == GateKind::measure) {
            out << "measure q[" << g.qubits[0] << "] -> c[" << g.clbit << "];\n";
        } else {
            out << kind_name(g.kind);
            if (!g.params.empty()) {
                std::ostringstream num;
                num.precision(17);
                num << g.params[0];
                out << "(" << num.str() << ")";
            }
            out << " q[" << g.qubits[0] << "]";
            if (g.qubits.size() == 2) out << ",q[" << g.qubits[1] << "]";
            out << ";\n";
        }
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// ASAP layering. Barriers force a boundary and occupy no lane.
// ---------------------------------------------------------------------------

struct LayeredCircuit {
    int lanes = 0;
    // layers[t][lane] = gate index into the source circuit, or -1 for idle
    std::vector<std::vector<int>> layers;
};

inline LayeredCircuit layerize(const Circuit& c) {
    LayeredCircuit lc;
    lc.lanes = c.n_qubits;
    std::vector<int> next_free(c.n_qubits, 0);
    int barrier_floor = 0;
    for (size_t gi = 0; gi < c.gates.size(); gi++) {
        const auto& g = c.gates[gi];
        if (g.kind == GateKind::barrier) {
            for (int q = 0; q < c.n_qubits; q++)
                barrier_floor = std::max(barrier_floor, next_free[q]);
            continue;
        }
        int layer = barrier_floor;
        for (int q : g.qubits) layer = std::max(layer, next_free[q]);
        while (static_cast<int>(lc.layers.size()) <= layer)
            lc.layers.emplace_back(c.n_qubits, -1);
        for (int q : g.qubits) {
            lc.layers[layer][q] = static_cast<int>(gi);
            next_free[q] = layer + 1;
        }
    }
    return lc;
}

inline int depth(const Circuit& c) { return static_cast<int>(layerize(c).layers.size()); }

// CNOT count after SWAP lowering (swap = 3 cx).
inline int cnot_count(const Circuit& c) {
    int n = 0;
    for (const auto& g : c.gates) {
        if (g.kind == GateKind::cx) n++;
        if (g.kind == GateKind::swap) n += 3;
    }
    return n;
}

} // namespace qfp
