#include <doctest.h>

#include "qfp/rb.hpp"
#include "qfp/tokenizer.hpp"

using namespace qfp;

TEST_CASE("labels name the gate with its physical qubit indices") {
    CHECK(gate_label(make_gate(GateKind::h, {2})) == "h2");
    CHECK(gate_label(make_gate(GateKind::cx, {0, 3})) == "cx03");
    CHECK(gate_label(make_gate(GateKind::measure, {0}, {}, 0)) == "m0");
    CHECK(gate_label(make_gate(GateKind::reset, {1})) == "r1");
    CHECK(gate_label(make_gate(GateKind::swap, {5, 2})) == "swap52");
}

TEST_CASE("labelize places two-qubit labels in both lanes of the same column") {
    auto c = parse_circuit("qreg q[3];\ncreg c[2];\nh q[0];\ncx q[0],q[1];\n"
                           "measure q[0] -> c[0];\nmeasure q[1] -> c[1];\n");
    auto g = labelize(c, 7);
    CHECK(g.lanes == 7);
    REQUIRE(g.depth() == 3);
    CHECK(g.labels[0][0] == "h0");
    CHECK(g.labels[1][0] == "none");
    CHECK(g.labels[0][1] == "cx01");
    CHECK(g.labels[1][1] == "cx01");
    CHECK(g.labels[0][2] == "m0");
    CHECK(g.labels[1][2] == "m1");
    for (int lane = 3; lane < 7; lane++)
        for (int col = 0; col < 3; col++) CHECK(g.labels[lane][col] == "none");
}

TEST_CASE("labelize rejects circuits wider than the device") {
    auto c = parse_circuit("qreg q[9];\nh q[8];\n");
    CHECK_THROWS_AS(labelize(c, 7), InvalidArgument);
}

TEST_CASE("vocabulary ranks by frequency with lexicographic ties, ids from 1") {
    LabelGrid g;
    g.lanes = 1;
    g.labels = {{"b", "a", "b", "c", "a", "b"}};
    VocabBuilder vb;
    vb.add(g);
    auto v = vb.build();
    CHECK(v.at("b") == 1); // freq 3
    CHECK(v.at("a") == 2); // freq 2
    CHECK(v.at("c") == 3); // freq 1
    CHECK(v.freq.at("b") == 3);

    LabelGrid tie;
    tie.lanes = 1;
    tie.labels = {{"zz", "aa"}};
    VocabBuilder vb2;
    vb2.add(tie);
    auto v2 = vb2.build();
    CHECK(v2.at("aa") == 1);
    CHECK(v2.at("zz") == 2);
}

TEST_CASE("padding dominates a sparse corpus so none ranks first") {
    std::vector<LabelGrid> corpus;
    for (std::uint64_t seed = 0; seed < 10; seed++) {
        RBSpec spec;
        spec.n_active = 2;
        spec.seq_len = 2;
        spec.seed = seed;
        spec.device_width = 7;
        spec.placement.map = {{0, (int)(seed % 7)}, {1, (int)((seed + 1) % 7)}};
        corpus.push_back(labelize(generate_rb_circuit(spec), 7));
    }
    auto v = fit_vocab(corpus);
    CHECK(v.at("none") == 1);
}

TEST_CASE("encode pre-pads and post-truncates to T") {
    LabelGrid g;
    g.lanes = 2;
    g.labels = {{"h0", "cx01"}, {"none", "cx01"}};
    Vocab v;
    v.table = {{"none", 1}, {"cx01", 2}, {"h0", 3}};
    v.freq = {{"none", 5}, {"cx01", 2}, {"h0", 1}};

    auto tc = encode(g, v, 5);
    CHECK(tc.lanes == 2);
    CHECK(tc.T == 5);
    CHECK(tc.tokens[0] == std::vector<int>{0, 0, 0, 3, 2});
    CHECK(tc.tokens[1] == std::vector<int>{0, 0, 0, 1, 2});

    auto cut = encode(g, v, 1); // keeps the first column
    CHECK(cut.tokens[0] == std::vector<int>{3});
    CHECK(cut.tokens[1] == std::vector<int>{1});
}

TEST_CASE("encode rejects out-of-vocabulary labels") {
    LabelGrid g;
    g.lanes = 1;
    g.labels = {{"mystery"}};
    Vocab v;
    v.table = {{"none", 1}};
    v.freq = {{"none", 1}};
    CHECK_THROWS_AS(encode(g, v, 4), InvalidArgument);
}

TEST_CASE("vocabulary json round-trips byte-for-byte") {
    LabelGrid g;
    g.lanes = 1;
    g.labels = {{"h0", "none", "none", "cx01", "cx01", "cx01"}};
    VocabBuilder vb;
    vb.add(g);
    auto v = vb.build();
    auto j1 = v.to_json().dump();
    auto v2 = Vocab::from_json(nlohmann::json::parse(j1));
    CHECK(v2.table == v.table);
    CHECK(v2.freq == v.freq);
    CHECK(v2.to_json().dump() == j1);
    CHECK(v2.hash() == v.hash());
}

TEST_CASE("vocabulary hash distinguishes different rank orders") {
    Vocab a;
    a.table = {{"x", 1}, {"y", 2}};
    a.freq = {{"x", 2}, {"y", 1}};
    Vocab b;
    b.table = {{"x", 2}, {"y", 1}};
    b.freq = {{"x", 1}, {"y", 2}};
    CHECK(a.hash() != b.hash());
}

TEST_CASE("tokenization pipeline is deterministic end to end") {
    auto make = [](std::uint64_t seed) {
        RBSpec spec;
        spec.n_active = 2;
        spec.seq_len = 2;
        spec.seed = seed;
        return labelize(generate_rb_circuit(spec), 7);
    };
    std::vector<LabelGrid> corpus{make(1), make(2), make(3)};
    auto v1 = fit_vocab(corpus);
    auto v2 = fit_vocab(corpus);
    CHECK(v1.table == v2.table);
    auto t1 = encode(corpus[0], v1, 50);
    auto t2 = encode(corpus[0], v2, 50);
    CHECK(t1.tokens == t2.tokens);
}

TEST_CASE("an empty corpus cannot produce a vocabulary") {
    CHECK_THROWS_AS(fit_vocab({}), InvalidArgument);
}
