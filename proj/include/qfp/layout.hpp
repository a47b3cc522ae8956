#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "qfp/circuit.hpp"
#include "qfp/transpile.hpp"

namespace qfp {

struct CouplingMap {
    std::string name;
    int n_qubits = 0;
    std::set<std::pair<int, int>> edges; // normalized (min, max)

    void add_edge(int a, int b) {
        if (a == b || a < 0 || b < 0 || a >= n_qubits || b >= n_qubits)
            throw InvalidArgument("bad coupling edge");
        edges.insert(std::minmax(a, b));
    }
    bool coupled(int a, int b) const { return edges.count(std::minmax(a, b)) > 0; }
    int degree(int q) const {
        int d = 0;
        for (const auto& [a, b] : edges)
            if (a == q || b == q) d++;
        return d;
    }

    static CouplingMap from_json(const nlohmann::json& j) {
        CouplingMap cm;
        cm.name = j.value("name", "");
        cm.n_qubits = j.at("n_qubits").get<int>();
        for (const auto& e : j.at("edges")) cm.add_edge(e.at(0).get<int>(), e.at(1).get<int>());
        return cm;
    }
    nlohmann::json to_json() const {
        nlohmann::json je = nlohmann::json::array();
        for (const auto& [a, b] : edges) je.push_back({a, b});
        return nlohmann::json{{"name", name}, {"n_qubits", n_qubits}, {"edges", je}};
    }

    // 7-qubit H-shaped map.
    static CouplingMap nairobi() {
        CouplingMap cm;
        cm.name = "nairobi";
        cm.n_qubits = 7;
        for (auto [a, b] : {std::pair{0, 1}, {1, 2}, {1, 3}, {3, 5}, {4, 5}, {5, 6}})
            cm.add_edge(a, b);
        return cm;
    }

    // 27-qubit heavy-hex map (28 edges).
    static CouplingMap montreal() {
        CouplingMap cm;
        cm.name = "montreal";
        cm.n_qubits = 27;
        for (auto [a, b] : {std::pair{0, 1}, {1, 2},   {1, 4},   {2, 3},   {3, 5},   {4, 7},
                            {5, 8},          {6, 7},   {7, 10},  {8, 9},   {8, 11},  {10, 12},
                            {11, 14},        {12, 13}, {12, 15}, {13, 14}, {14, 16}, {15, 18},
                            {16, 19},        {17, 18}, {18, 21}, {19, 20}, {19, 22}, {21, 23},
                            {22, 25},        {23, 24}, {24, 25}, {25, 26}})
            cm.add_edge(a, b);
        return cm;
    }
};

struct InteractionGraph {
    std::vector<int> vertices;            // logical qubits used, sorted
    std::set<std::pair<int, int>> edges;  // normalized pairs coupled by any 2q gate
};

inline InteractionGraph interaction_graph(const Circuit& c) {
    InteractionGraph g;
    std::set<int> verts;
    for (const auto& gate : c.gates) {
        for (int q : gate.qubits) verts.insert(q);
        if (gate.qubits.size() == 2 && is_unitary_kind(gate.kind))
            g.edges.insert(std::minmax(gate.qubits[0], gate.qubits[1]));
    }
    g.vertices.assign(verts.begin(), verts.end());
    return g;
}

// All injective vertex->qubit mappings placing every interaction edge on a
// coupling edge. VF2-style backtracking with degree pruning; results sorted
// lexicographically by image tuple (in vertex order).
inline std::vector<Layout> enumerate_layouts(const InteractionGraph& g, const CouplingMap& cm) {
    const int k = static_cast<int>(g.vertices.size());
    if (k > cm.n_qubits) throw InvalidArgument("more logical qubits than device qubits");

    std::vector<int> vdeg(k, 0);
    auto vidx = [&](int v) {
        return static_cast<int>(std::lower_bound(g.vertices.begin(), g.vertices.end(), v) -
                                g.vertices.begin());
    };
    std::vector<std::vector<int>> adj(k);
    for (const auto& [a, b] : g.edges) {
        int ia = vidx(a), ib = vidx(b);
        adj[ia].push_back(ib);
        adj[ib].push_back(ia);
        vdeg[ia]++;
        vdeg[ib]++;
    }
    // match order: descending degree keeps the search connected early
    std::vector<int> order(k);
    for (int i = 0; i < k; i++) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return vdeg[a] > vdeg[b]; });

    std::vector<Layout> out;
    std::vector<int> image(k, -1);
    std::vector<bool> taken(cm.n_qubits, false);
    std::function<void(int)> rec = [&](int step) {
        if (step == k) {
            Layout l;
            for (int i = 0; i < k; i++) l.map[g.vertices[i]] = image[i];
            out.push_back(std::move(l));
            return;
        }
        int v = order[step];
        for (int p = 0; p < cm.n_qubits; p++) {
            if (taken[p] || cm.degree(p) < vdeg[v]) continue;
            bool ok = true;
            for (int u : adj[v])
                if (image[u] >= 0 && !cm.coupled(p, image[u])) { ok = false; break; }
            if (!ok) continue;
            image[v] = p;
            taken[p] = true;
            rec(step + 1);
            image[v] = -1;
            taken[p] = false;
        }
    };
    rec(0);

    std::sort(out.begin(), out.end(), [&](const Layout& a, const Layout& b) {
        for (int v : g.vertices) {
            int pa = a.map.at(v), pb = b.map.at(v);
            if (pa != pb) return pa < pb;
        }
        return false;
    });
    return out;
}

// Size of the "top 10%" subset: nearest integer, at least 1.
inline int top_fraction_count(int n_layouts, double fraction = 0.1) {
    return std::max(1, static_cast<int>(std::llround(fraction * n_layouts)));
}

// Score every embedding of c with `scorer` (higher = better) and sort
// descending; ties keep enumeration order.
inline std::vector<std::pair<Layout, double>>
rank_layouts(const Circuit& c, const CouplingMap& cm,
             const std::function<double(const Circuit&)>& scorer) {
    auto layouts = enumerate_layouts(interaction_graph(c), cm);
    if (layouts.empty())
        throw InvalidArgument("circuit does not embed in the coupling map (routing needed)");
    std::vector<std::pair<Layout, double>> scored;
    scored.reserve(layouts.size());
    for (const auto& l : layouts)
        scored.emplace_back(l, scorer(remap(c, l, cm.n_qubits)));
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return scored;
}

} // namespace qfp
