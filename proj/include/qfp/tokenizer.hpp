#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "qfp/circuit.hpp"

namespace qfp {

// Per-qubit-lane gate labels, one column per circuit layer.
struct LabelGrid {
    int lanes = 0;
    // labels[lane][col]
    std::vector<std::vector<std::string>> labels;

    int depth() const { return lanes == 0 ? 0 : static_cast<int>(labels[0].size()); }
};

inline std::string gate_label(const Gate& g) {
    switch (g.kind) {
        case GateKind::measure: return "m" + std::to_string(g.qubits[0]);
        case GateKind::reset: return "r" + std::to_string(g.qubits[0]);
        default: {
            std::string s = kind_name(g.kind);
            for (int q : g.qubits) s += std::to_string(q);
            return s;
        }
    }
}

// Layerize and map each (lane, column) cell to its gate label or "none".
// Two-qubit labels appear in both participating lanes of the same column.
inline LabelGrid labelize(const Circuit& c, int device_width) {
    if (c.n_qubits > device_width)
        throw InvalidArgument("circuit wider than device");
    auto lc = layerize(c);
    LabelGrid g;
    g.lanes = device_width;
    g.labels.assign(device_width, std::vector<std::string>(lc.layers.size(), "none"));
    for (size_t col = 0; col < lc.layers.size(); col++)
        for (int lane = 0; lane < lc.lanes; lane++) {
            int gi = lc.layers[col][lane];
            if (gi >= 0) g.labels[lane][col] = gate_label(c.gates[gi]);
        }
    return g;
}

// Frequency-ranked label table; token ids start at 1, 0 is reserved padding.
struct Vocab {
    std::map<std::string, int> table;
    std::map<std::string, std::uint64_t> freq;

    int size() const { return static_cast<int>(table.size()); }
    int at(const std::string& label) const {
        auto it = table.find(label);
        if (it == table.end())
            throw InvalidArgument("label '" + label + "' not in vocabulary");
        return it->second;
    }

    nlohmann::json to_json() const {
        nlohmann::ordered_json labels = nlohmann::ordered_json::object();
        nlohmann::ordered_json freqs = nlohmann::ordered_json::object();
        std::vector<std::string> order(table.size());
        for (const auto& [label, id] : table) order[id - 1] = label;
        for (const auto& label : order) {
            labels[label] = table.at(label);
            freqs[label] = freq.at(label);
        }
        nlohmann::ordered_json j;
        j["labels"] = labels;
        j["freq"] = freqs;
        return j;
    }
    static Vocab from_json(const nlohmann::json& j) {
        Vocab v;
        for (auto& [label, id] : j.at("labels").items()) v.table[label] = id.get<int>();
        for (auto& [label, n] : j.at("freq").items()) v.freq[label] = n.get<std::uint64_t>();
        return v;
    }

    // FNV-1a over the rank-ordered labels; ties a checkpoint to its vocabulary.
    std::uint64_t hash() const {
        std::vector<std::string> order(table.size());
        for (const auto& [label, id] : table) order[id - 1] = label;
        std::uint64_t h = 0xCBF29CE484222325ULL;
        for (const auto& label : order) {
            for (char ch : label) h = (h ^ static_cast<unsigned char>(ch)) * 0x100000001B3ULL;
            h = (h ^ 0x1F) * 0x100000001B3ULL;
        }
        return h;
    }
};

class VocabBuilder {
  public:
    void add(const LabelGrid& g) {
        for (const auto& lane : g.labels)
            for (const auto& label : lane) counts_[label]++;
    }

    Vocab build() const {
        if (counts_.empty()) throw InvalidArgument("empty corpus");
        std::vector<std::pair<std::string, std::uint64_t>> ranked(counts_.begin(), counts_.end());
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first; // tie: lexicographic
        });
        Vocab v;
        for (size_t i = 0; i < ranked.size(); i++) {
            v.table[ranked[i].first] = static_cast<int>(i) + 1;
            v.freq[ranked[i].first] = ranked[i].second;
        }
        return v;
    }

  private:
    std::map<std::string, std::uint64_t> counts_;
};

inline Vocab fit_vocab(const std::vector<LabelGrid>& corpus) {
    VocabBuilder b;
    for (const auto& g : corpus) b.add(g);
    return b.build();
}

// lanes x T integer grid; 0 occurs only as full-column prefix padding.
struct TokenizedCircuit {
    int lanes = 0;
    int T = 0;
    std::vector<std::vector<int>> tokens; // [lane][t]
};

// Pre-padding / post-truncation to exactly T columns.
inline TokenizedCircuit encode(const LabelGrid& g, const Vocab& v, int T) {
    TokenizedCircuit tc;
    tc.lanes = g.lanes;
    tc.T = T;
    tc.tokens.assign(g.lanes, std::vector<int>(T, 0));
    const int d = g.depth();
    const int kept = std::min(d, T);
    const int pad = T - kept;
    for (int lane = 0; lane < g.lanes; lane++)
        for (int col = 0; col < kept; col++)
            tc.tokens[lane][pad + col] = v.at(g.labels[lane][col]);
    return tc;
}

} // namespace qfp
