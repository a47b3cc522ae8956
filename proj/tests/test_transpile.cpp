#include <doctest.h>

#include "oracle.hpp"
#include "qfp/rb.hpp"
#include "qfp/simulator.hpp"
#include "qfp/transpile.hpp"

using namespace qfp;

namespace {

Circuit one_gate(GateKind k, std::vector<int> q, std::vector<double> p = {}) {
    Circuit c;
    c.n_qubits = 2;
    c.add(make_gate(k, std::move(q), std::move(p)));
    return c;
}

bool in_basis(const Circuit& c, const BasisSet& b) {
    for (const auto& g : c.gates)
        if (!b.allows(g.kind)) return false;
    return true;
}

} // namespace

TEST_CASE("every supported gate decomposes into the default basis, unitary preserved") {
    const auto basis = BasisSet::ibm_default();
    std::vector<Circuit> cases = {
        one_gate(GateKind::h, {0}),    one_gate(GateKind::s, {0}),
        one_gate(GateKind::sdg, {1}),  one_gate(GateKind::z, {0}),
        one_gate(GateKind::y, {1}),    one_gate(GateKind::x, {0}),
        one_gate(GateKind::sx, {1}),   one_gate(GateKind::id, {0}),
        one_gate(GateKind::rz, {0}, {0.7}),
        one_gate(GateKind::cx, {0, 1}), one_gate(GateKind::cz, {1, 0}),
        one_gate(GateKind::swap, {0, 1}),
    };
    for (const auto& c : cases) {
        auto d = decompose_to_basis(c, basis);
        CHECK(in_basis(d, basis));
        CHECK(oracle::phase_distance(oracle::circuit_unitary(d), oracle::circuit_unitary(c)) <
              1e-10);
    }
}

TEST_CASE("h decomposition is the rz-sx-rz sandwich") {
    auto d = decompose_to_basis(one_gate(GateKind::h, {0}), BasisSet::ibm_default());
    REQUIRE(d.gates.size() == 3);
    CHECK(d.gates[0].kind == GateKind::rz);
    CHECK(d.gates[1].kind == GateKind::sx);
    CHECK(d.gates[2].kind == GateKind::rz);
}

TEST_CASE("unitary preservation over random circuits (3 qubits)") {
    const auto basis = BasisSet::ibm_default();
    for (std::uint64_t seed = 0; seed < 25; seed++) {
        Circuit c = random_clifford_word(3, 25, seed);
        auto d = decompose_to_basis(c, basis);
        CHECK(in_basis(d, basis));
        CHECK(oracle::phase_distance(oracle::circuit_unitary(d), oracle::circuit_unitary(c)) <
              1e-9);
        auto e = cancel_adjacent_inverses(d);
        CHECK(e.gates.size() <= d.gates.size());
        CHECK(oracle::phase_distance(oracle::circuit_unitary(e), oracle::circuit_unitary(c)) <
              1e-9);
    }
}

TEST_CASE("measure and reset pass through decomposition unchanged, in order") {
    auto c = parse_circuit("qreg q[2];\ncreg c[1];\nh q[0];\nreset q[1];\nmeasure q[0] -> c[0];\n");
    auto d = decompose_to_basis(c, BasisSet::ibm_default());
    REQUIRE(d.gates.size() == 5);
    CHECK(d.gates[3].kind == GateKind::reset);
    CHECK(d.gates[4].kind == GateKind::measure);
    CHECK(d.gates[4].clbit == 0);
}

TEST_CASE("decomposition into a basis without sx fails cleanly") {
    BasisSet b{{GateKind::rz, GateKind::x}, {GateKind::cx}};
    CHECK_THROWS_AS(decompose_to_basis(one_gate(GateKind::h, {0}), b), InvalidArgument);
}

TEST_CASE("peephole cancels adjacent self-inverse pairs") {
    auto c = parse_circuit("qreg q[2];\ncx q[0],q[1];\ncx q[0],q[1];\n");
    CHECK(cancel_adjacent_inverses(c).gates.empty());

    auto d = parse_circuit("qreg q[2];\nh q[0];\nx q[1];\nh q[0];\n");
    auto dc = cancel_adjacent_inverses(d);
    REQUIRE(dc.gates.size() == 1);
    CHECK(dc.gates[0].kind == GateKind::x);
}

TEST_CASE("peephole respects intervening gates on shared qubits") {
    auto c = parse_circuit("qreg q[2];\ncx q[0],q[1];\nh q[1];\ncx q[0],q[1];\n");
    CHECK(cancel_adjacent_inverses(c).gates.size() == 3);
    // a barrier also blocks cancellation
    auto b = parse_circuit("qreg q[1];\nh q[0];\nbarrier;\nh q[0];\n");
    CHECK(cancel_adjacent_inverses(b).gates.size() == 3);
}

TEST_CASE("peephole merges rz pairs summing to a multiple of 2*pi") {
    Circuit c;
    c.n_qubits = 1;
    c.add(make_gate(GateKind::rz, {0}, {1.25}));
    c.add(make_gate(GateKind::rz, {0}, {2 * std::numbers::pi - 1.25}));
    CHECK(cancel_adjacent_inverses(c).gates.empty());

    Circuit d;
    d.n_qubits = 1;
    d.add(make_gate(GateKind::rz, {0}, {1.25}));
    d.add(make_gate(GateKind::rz, {0}, {1.0}));
    CHECK(cancel_adjacent_inverses(d).gates.size() == 2);
}

TEST_CASE("peephole cascades to a fixpoint and is idempotent") {
    auto c = parse_circuit("qreg q[1];\nh q[0];\nx q[0];\nx q[0];\nh q[0];\n");
    auto r = cancel_adjacent_inverses(c);
    CHECK(r.gates.empty());
    for (std::uint64_t seed = 50; seed < 70; seed++) {
        Circuit w = random_clifford_word(3, 40, seed);
        auto once = cancel_adjacent_inverses(w);
        auto twice = cancel_adjacent_inverses(once);
        CHECK(once == twice);
        CHECK(oracle::phase_distance(oracle::circuit_unitary(once), oracle::circuit_unitary(w)) <
              1e-9);
    }
}

TEST_CASE("remap relabels qubits through a layout") {
    auto c = parse_circuit("qreg q[2];\ncreg c[2];\ncx q[0],q[1];\nmeasure q[0] -> c[0];\n");
    Layout l;
    l.map = {{0, 5}, {1, 3}};
    auto r = remap(c, l, 7);
    CHECK(r.n_qubits == 7);
    CHECK(r.gates[0] == make_gate(GateKind::cx, {5, 3}));
    CHECK(r.gates[1] == make_gate(GateKind::measure, {5}, {}, 0));
    // relabeling does not change the measured distribution
    auto bell = parse_circuit(
        "qreg q[2];\ncreg c[2];\nh q[0];\ncx q[0],q[1];\nmeasure q[0] -> c[0];\nmeasure q[1] -> c[1];\n");
    auto mapped = remap(bell, l, 7);
    auto d0 = run_ideal(bell);
    auto d1 = run_ideal(mapped);
    REQUIRE(d0.size() == d1.size());
    for (const auto& [k, p] : d0) CHECK(d1.at(k) == doctest::Approx(p).epsilon(1e-12));
}

TEST_CASE("remap rejects bad layouts") {
    auto c = parse_circuit("qreg q[2];\ncx q[0],q[1];\n");
    Layout dup;
    dup.map = {{0, 2}, {1, 2}};
    CHECK_THROWS_AS(remap(c, dup, 7), InvalidArgument);
    Layout oob;
    oob.map = {{0, 0}, {1, 9}};
    CHECK_THROWS_AS(remap(c, oob, 7), InvalidArgument);
    Layout missing;
    missing.map = {{0, 0}};
    CHECK_THROWS_AS(remap(c, missing, 7), InvalidArgument);
}
