#include <doctest.h>

#include <algorithm>
#include <set>

#include "qfp/baseline.hpp"
#include "qfp/layout.hpp"

using namespace qfp;

namespace {

// Brute force: try every injective assignment of vertices to device qubits.
std::set<std::vector<int>> brute_force_images(const InteractionGraph& g, const CouplingMap& cm) {
    const int k = (int)g.vertices.size();
    std::vector<int> phys(cm.n_qubits);
    for (int i = 0; i < cm.n_qubits; i++) phys[i] = i;
    std::set<std::vector<int>> out;
    std::vector<int> pick(k, 0);
    std::function<void(int, std::vector<int>&)> rec = [&](int step, std::vector<int>& img) {
        if (step == k) {
            for (const auto& [a, b] : g.edges) {
                int ia = (int)(std::find(g.vertices.begin(), g.vertices.end(), a) -
                               g.vertices.begin());
                int ib = (int)(std::find(g.vertices.begin(), g.vertices.end(), b) -
                               g.vertices.begin());
                if (!cm.coupled(img[ia], img[ib])) return;
            }
            out.insert(img);
            return;
        }
        for (int p = 0; p < cm.n_qubits; p++) {
            if (std::find(img.begin(), img.begin() + step, p) != img.begin() + step) continue;
            img[step] = p;
            rec(step + 1, img);
        }
    };
    std::vector<int> img(k, -1);
    rec(0, img);
    return out;
}

std::set<std::vector<int>> images_of(const std::vector<Layout>& layouts,
                                     const InteractionGraph& g) {
    std::set<std::vector<int>> out;
    for (const auto& l : layouts) {
        std::vector<int> img;
        for (int v : g.vertices) img.push_back(l.map.at(v));
        out.insert(img);
    }
    return out;
}

} // namespace

TEST_CASE("interaction graph collects vertices and two-qubit edges") {
    auto c = parse_circuit("qreg q[4];\ncreg c[1];\nh q[0];\ncx q[0],q[1];\ncz q[2],q[1];\n"
                           "measure q[3] -> c[0];\n");
    auto g = interaction_graph(c);
    CHECK(g.vertices == std::vector<int>{0, 1, 2, 3});
    CHECK(g.edges == std::set<std::pair<int, int>>{{0, 1}, {1, 2}});
}

TEST_CASE("the 27-qubit map has the heavy-hex shape") {
    auto cm = CouplingMap::montreal();
    CHECK(cm.n_qubits == 27);
    CHECK(cm.edges.size() == 28);
    std::map<int, int> deg_hist;
    for (int q = 0; q < 27; q++) deg_hist[cm.degree(q)]++;
    CHECK(deg_hist[1] == 6);
    CHECK(deg_hist[2] == 13);
    CHECK(deg_hist[3] == 8);
}

TEST_CASE("the 7-qubit map has the H shape") {
    auto cm = CouplingMap::nairobi();
    CHECK(cm.n_qubits == 7);
    CHECK(cm.edges.size() == 6);
    CHECK(cm.degree(1) == 3);
    CHECK(cm.degree(5) == 3);
}

TEST_CASE("a single-edge circuit has 56 embeddings on the 27-qubit map") {
    auto c = parse_circuit("qreg q[2];\ncx q[0],q[1];\n");
    auto layouts = enumerate_layouts(interaction_graph(c), CouplingMap::montreal());
    CHECK(layouts.size() == 56); // 2 * 28 edges
    CHECK(top_fraction_count((int)layouts.size()) == 6);
}

TEST_CASE("a three-qubit chain has 74 embeddings on the 27-qubit map") {
    auto c = parse_circuit("qreg q[3];\ncx q[0],q[1];\ncx q[1],q[2];\n");
    auto layouts = enumerate_layouts(interaction_graph(c), CouplingMap::montreal());
    CHECK(layouts.size() == 74);
    CHECK(top_fraction_count((int)layouts.size()) == 7);
}

TEST_CASE("a single isolated qubit embeds anywhere") {
    auto c = parse_circuit("qreg q[1];\nh q[0];\n");
    auto layouts = enumerate_layouts(interaction_graph(c), CouplingMap::nairobi());
    CHECK(layouts.size() == 7);
}

TEST_CASE("enumeration matches brute force on small maps") {
    CouplingMap small;
    small.n_qubits = 6;
    small.name = "test6";
    for (auto [a, b] : {std::pair{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {1, 4}})
        small.add_edge(a, b);

    std::vector<const char*> circuits = {
        "qreg q[2];\ncx q[0],q[1];\n",
        "qreg q[3];\ncx q[0],q[1];\ncx q[1],q[2];\n",
        "qreg q[3];\ncx q[0],q[1];\ncx q[1],q[2];\ncx q[0],q[2];\n", // triangle: none
        "qreg q[4];\ncx q[0],q[1];\ncx q[1],q[2];\ncx q[2],q[3];\n",
        "qreg q[4];\ncx q[0],q[1];\ncx q[2],q[3];\n", // two disjoint edges
        "qreg q[4];\ncx q[0],q[1];\ncx q[0],q[2];\ncx q[0],q[3];\n", // star, centers at deg-3 nodes
    };
    for (const char* text : circuits) {
        auto g = interaction_graph(parse_circuit(text));
        auto fast = enumerate_layouts(g, small);
        auto slow = brute_force_images(g, small);
        CHECK(images_of(fast, g) == slow);
        CHECK(fast.size() == slow.size());
    }
}

TEST_CASE("enumerated layouts are valid and sorted deterministically") {
    auto c = parse_circuit("qreg q[3];\ncx q[0],q[1];\ncx q[1],q[2];\n");
    auto g = interaction_graph(c);
    auto cm = CouplingMap::nairobi();
    auto layouts = enumerate_layouts(g, cm);
    for (const auto& l : layouts) {
        CHECK(l.injective());
        for (const auto& [a, b] : g.edges) CHECK(cm.coupled(l.at(a), l.at(b)));
    }
    auto again = enumerate_layouts(g, cm);
    REQUIRE(layouts.size() == again.size());
    for (size_t i = 0; i < layouts.size(); i++) CHECK(layouts[i].map == again[i].map);
    // strict lexicographic order by image tuple
    for (size_t i = 1; i < layouts.size(); i++) {
        std::vector<int> prev, cur;
        for (int v : g.vertices) {
            prev.push_back(layouts[i - 1].map.at(v));
            cur.push_back(layouts[i].map.at(v));
        }
        CHECK(prev < cur);
    }
}

TEST_CASE("top fraction count rounds to nearest and never hits zero") {
    CHECK(top_fraction_count(56) == 6);
    CHECK(top_fraction_count(74) == 7);
    CHECK(top_fraction_count(75) == 8);
    CHECK(top_fraction_count(3) == 1);
    CHECK(top_fraction_count(1) == 1);
    CHECK(top_fraction_count(12) == 1);
    CHECK(top_fraction_count(15) == 2);
}

TEST_CASE("rank_layouts sorts by score and reports every embedding") {
    auto c = parse_circuit("qreg q[2];\ncreg c[2];\ncx q[0],q[1];\n"
                           "measure q[0] -> c[0];\nmeasure q[1] -> c[1];\n");
    auto cm = CouplingMap::nairobi();
    // price one edge much worse than the rest
    ErrorMap em;
    for (int q = 0; q < 7; q++)
        em.eps_1q[q] = {{"x", 0.001}, {"sx", 0.001}, {"rz", 0.0}, {"h", 0.001}};
    for (const auto& [a, b] : cm.edges) em.eps_2q[{a, b}] = 0.01;
    em.eps_2q[{3, 5}] = 0.4;
    em.eps_ro.assign(7, 0.02);

    auto ranked = rank_layouts(c, cm, [&](const Circuit& mapped) {
        return estimate_fidelity(mapped, em);
    });
    CHECK(ranked.size() == 12); // 6 edges, 2 orientations
    for (size_t i = 1; i < ranked.size(); i++) CHECK(ranked[i - 1].second >= ranked[i].second);
    // the two orientations of the bad edge rank last
    for (size_t i = ranked.size() - 2; i < ranked.size(); i++) {
        std::set<int> img{ranked[i].first.map.at(0), ranked[i].first.map.at(1)};
        CHECK(img == std::set<int>{3, 5});
    }
}

TEST_CASE("rank_layouts reports non-embeddable circuits") {
    auto c = parse_circuit("qreg q[3];\ncx q[0],q[1];\ncx q[1],q[2];\ncx q[0],q[2];\n");
    CHECK_THROWS_AS(rank_layouts(c, CouplingMap::nairobi(), [](const Circuit&) { return 0.0; }),
                    InvalidArgument);
}

TEST_CASE("coupling map json round trip and validation") {
    auto cm = CouplingMap::nairobi();
    auto back = CouplingMap::from_json(cm.to_json());
    CHECK(back.edges == cm.edges);
    CHECK(back.n_qubits == cm.n_qubits);
    nlohmann::json bad{{"n_qubits", 3}, {"edges", {{0, 3}}}};
    CHECK_THROWS_AS(CouplingMap::from_json(bad), InvalidArgument);
}
