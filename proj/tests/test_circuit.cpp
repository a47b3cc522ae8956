#include <doctest.h>

#include "qfp/circuit.hpp"
#include "qfp/rb.hpp"

using namespace qfp;

TEST_CASE("parse a minimal circuit") {
    auto c = parse_circuit("qreg q[3];\ncreg c[2];\nh q[0];\ncx q[0],q[1];\n"
                           "measure q[0] -> c[0];\nmeasure q[1] -> c[1];\n");
    CHECK(c.n_qubits == 3);
    CHECK(c.n_clbits == 2);
    REQUIRE(c.gates.size() == 4);
    CHECK(c.gates[0] == make_gate(GateKind::h, {0}));
    CHECK(c.gates[1] == make_gate(GateKind::cx, {0, 1}));
    CHECK(c.gates[2] == make_gate(GateKind::measure, {0}, {}, 0));
    CHECK(c.gates[3] == make_gate(GateKind::measure, {1}, {}, 1));
}

TEST_CASE("parse tolerates comments, blank lines and a qasm prologue") {
    auto c = parse_circuit("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n\n"
                           "// a comment\nqreg q[1];\nx q[0]; // trailing\n");
    CHECK(c.n_qubits == 1);
    REQUIRE(c.gates.size() == 1);
    CHECK(c.gates[0].kind == GateKind::x);
}

TEST_CASE("parse rz parameter") {
    auto c = parse_circuit("qreg q[1];\nrz(1.5707963267948966) q[0];\n");
    REQUIRE(c.gates.size() == 1);
    CHECK(c.gates[0].params[0] == doctest::Approx(1.5707963267948966).epsilon(1e-15));
    auto neg = parse_circuit("qreg q[1];\nrz(-0.25e-1) q[0];\n");
    CHECK(neg.gates[0].params[0] == doctest::Approx(-0.025));
}

TEST_CASE("parse errors carry line information") {
    CHECK_THROWS_AS(parse_circuit("qreg q[2];\nfoo q[0];\n"), ParseError);
    CHECK_THROWS_AS(parse_circuit("qreg q[2];\nh q[5];\n"), ParseError);
    CHECK_THROWS_AS(parse_circuit("qreg q[2];\ncx q[1],q[1];\n"), ParseError);
    CHECK_THROWS_AS(parse_circuit("h q[0];\n"), ParseError);
    CHECK_THROWS_AS(parse_circuit("qreg q[2];\nh q[0]\n"), ParseError);
    CHECK_THROWS_AS(parse_circuit("qreg q[1];\ncreg c[0];\nmeasure q[0] -> c[0];\n"), ParseError);
    try {
        parse_circuit("qreg q[2];\nfoo q[0];\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
        CHECK(e.column >= 1);
    }
}

TEST_CASE("emit is canonical and round-trips") {
    auto c = parse_circuit("qreg q[2] ;\ncreg c[1];\n  h   q[0];\ncx q[0] , q[1];\n"
                           "rz( 0.5 ) q[1];\nbarrier;\nmeasure q[1] -> c[0];\n");
    std::string text = emit_circuit(c);
    auto c2 = parse_circuit(text);
    CHECK(c2 == c);
    CHECK(emit_circuit(c2) == text);
}

TEST_CASE("round-trip property over random circuits") {
    for (std::uint64_t seed = 0; seed < 40; seed++) {
        Circuit c = random_clifford_word(3, 30, seed);
        c.n_clbits = 3;
        c.add(make_gate(GateKind::rz, {0}, {0.1234567890123 * (double)(seed + 1)}));
        c.add(make_gate(GateKind::barrier, {}));
        c.add(make_gate(GateKind::measure, {1}, {}, 0));
        auto c2 = parse_circuit(emit_circuit(c));
        CHECK(c2 == c);
    }
}

TEST_CASE("layering packs independent gates and keeps dependencies ordered") {
    auto c = parse_circuit("qreg q[3];\nh q[0];\nh q[1];\ncx q[0],q[1];\nx q[2];\n");
    auto lc = layerize(c);
    REQUIRE(lc.layers.size() == 2);
    CHECK(lc.layers[0][0] == 0);
    CHECK(lc.layers[0][1] == 1);
    CHECK(lc.layers[0][2] == 3); // x q[2] slides into the first layer
    CHECK(lc.layers[1][0] == 2);
    CHECK(lc.layers[1][1] == 2);
    CHECK(lc.layers[1][2] == -1);
}

TEST_CASE("layering soundness over random circuits") {
    for (std::uint64_t seed = 100; seed < 130; seed++) {
        Circuit c = random_clifford_word(4, 50, seed);
        auto lc = layerize(c);
        // each gate appears exactly once, on all of its qubits, in one layer
        std::vector<int> layer_of(c.gates.size(), -1);
        for (size_t t = 0; t < lc.layers.size(); t++)
            for (int lane = 0; lane < lc.lanes; lane++) {
                int gi = lc.layers[t][lane];
                if (gi < 0) continue;
                if (layer_of[gi] == -1) layer_of[gi] = (int)t;
                CHECK(layer_of[gi] == (int)t);
                bool lane_in_gate = false;
                for (int q : c.gates[gi].qubits) lane_in_gate |= q == lane;
                CHECK(lane_in_gate);
            }
        // dependencies: gates sharing a qubit keep their order across layers
        for (size_t i = 0; i < c.gates.size(); i++) {
            CHECK(layer_of[i] >= 0);
            for (size_t j = i + 1; j < c.gates.size(); j++) {
                bool share = false;
                for (int a : c.gates[i].qubits)
                    for (int b : c.gates[j].qubits) share |= a == b;
                if (share) CHECK(layer_of[i] < layer_of[j]);
            }
        }
        CHECK((int)lc.layers.size() <= (int)c.gates.size());
    }
}

TEST_CASE("barrier forces a layer boundary") {
    auto c = parse_circuit("qreg q[2];\nh q[0];\nbarrier;\nh q[1];\n");
    CHECK(depth(c) == 2);
    auto c2 = parse_circuit("qreg q[2];\nh q[0];\nh q[1];\n");
    CHECK(depth(c2) == 1);
}

TEST_CASE("depth and cnot count") {
    CHECK(depth(Circuit{1, 0, {}}) == 0);
    auto c = parse_circuit("qreg q[1];\nh q[0];\nh q[0];\nh q[0];\n");
    CHECK(depth(c) == 3);
    auto d = parse_circuit("qreg q[2];\ncx q[0],q[1];\nswap q[0],q[1];\ncz q[0],q[1];\n");
    CHECK(cnot_count(d) == 4);
}

TEST_CASE("measured_clbits rejects double measurement into one bit") {
    auto c = parse_circuit("qreg q[2];\ncreg c[1];\nmeasure q[0] -> c[0];\nmeasure q[1] -> c[0];\n");
    CHECK_THROWS_AS(c.measured_clbits(), InvalidArgument);
}

TEST_CASE("make_gate validates shapes") {
    CHECK_THROWS_AS(make_gate(GateKind::cx, {0}), InvalidArgument);
    CHECK_THROWS_AS(make_gate(GateKind::h, {0}, {1.0}), InvalidArgument);
    CHECK_THROWS_AS(make_gate(GateKind::swap, {1, 1}), InvalidArgument);
    CHECK_THROWS_AS(make_gate(GateKind::measure, {0}), InvalidArgument);
}
