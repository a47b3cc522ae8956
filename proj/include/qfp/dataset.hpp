#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qfp/circuit.hpp"
#include "qfp/layout.hpp"
#include "qfp/metrics.hpp"
#include "qfp/rb.hpp"
#include "qfp/simulator.hpp"
#include "qfp/tokenizer.hpp"
#include "qfp/transpile.hpp"

namespace qfp {

struct DatasetRecord {
    std::uint64_t id = 0;
    std::string circuit;   // text format, transpiled
    std::string device;
    int depth = 0;
    int n_qubits_active = 0;
    std::vector<int> placement; // active index -> physical qubit
    std::uint64_t seed = 0;
    std::uint64_t shots = 0;
    double label = 0.0; // d-R^2

    nlohmann::ordered_json to_json() const {
        return {{"id", id},
                {"circuit", circuit},
                {"device", device},
                {"depth", depth},
                {"n_qubits_active", n_qubits_active},
                {"placement", placement},
                {"seed", seed},
                {"shots", shots},
                {"label", label}};
    }
    static DatasetRecord from_json(const nlohmann::json& j) {
        DatasetRecord r;
        r.id = j.at("id").get<std::uint64_t>();
        r.circuit = j.at("circuit").get<std::string>();
        r.device = j.at("device").get<std::string>();
        r.depth = j.at("depth").get<int>();
        r.n_qubits_active = j.at("n_qubits_active").get<int>();
        r.placement = j.at("placement").get<std::vector<int>>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.shots = j.at("shots").get<std::uint64_t>();
        r.label = j.at("label").get<double>();
        return r;
    }
};

struct DatasetConfig {
    std::string device_name = "nairobi";
    CouplingMap coupling = CouplingMap::nairobi();
    NoiseModel noise;
    int n_records = 2000;
    int seq_len_min = 1, seq_len_max = 5;
    int active_min = 1, active_max = 3;
    int gates_per_element_min = 0, gates_per_element_max = 0; // 0 -> [5n, 20n]
    std::uint64_t shots = 1024;
    int depth_cutoff = 500;
    std::uint64_t master_seed = 1;
    std::array<double, 3> split_ratios{0.7, 0.2, 0.1};

    static DatasetConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

inline DatasetConfig DatasetConfig::from_json(const nlohmann::json& j) {
    DatasetConfig c;
    c.device_name = j.value("device", std::string("nairobi"));
    if (j.contains("coupling_map"))
        c.coupling = CouplingMap::from_json(j.at("coupling_map"));
    else if (c.device_name == "nairobi")
        c.coupling = CouplingMap::nairobi();
    else if (c.device_name == "montreal")
        c.coupling = CouplingMap::montreal();
    else
        throw ParseError("unknown device '" + c.device_name + "' and no coupling_map given");
    if (j.contains("noise_model"))
        c.noise = NoiseModel::from_json(j.at("noise_model"));
    else
        throw ParseError("dataset config requires a noise_model");
    c.n_records = j.value("n_records", 2000);
    c.seq_len_min = j.value("seq_len_min", 1);
    c.seq_len_max = j.value("seq_len_max", 5);
    c.active_min = j.value("active_min", 1);
    c.active_max = j.value("active_max", 3);
    c.gates_per_element_min = j.value("gates_per_element_min", 0);
    c.gates_per_element_max = j.value("gates_per_element_max", 0);
    c.shots = j.value("shots", std::uint64_t{1024});
    c.depth_cutoff = j.value("depth_cutoff", 500);
    c.master_seed = j.value("master_seed", std::uint64_t{1});
    if (j.contains("split_ratios")) {
        auto v = j.at("split_ratios").get<std::vector<double>>();
        if (v.size() != 3) throw ParseError("split_ratios must have 3 entries");
        c.split_ratios = {v[0], v[1], v[2]};
    }
    double s = c.split_ratios[0] + c.split_ratios[1] + c.split_ratios[2];
    if (std::abs(s - 1.0) > 1e-9) throw ParseError("split ratios must sum to 1");
    if (c.depth_cutoff < 1 || c.n_records < 1) throw ParseError("bad dataset config");
    return c;
}

inline nlohmann::json DatasetConfig::to_json() const {
    return {{"device", device_name},
            {"coupling_map", coupling.to_json()},
            {"noise_model", noise.to_json()},
            {"n_records", n_records},
            {"seq_len_min", seq_len_min},
            {"seq_len_max", seq_len_max},
            {"active_min", active_min},
            {"active_max", active_max},
            {"gates_per_element_min", gates_per_element_min},
            {"gates_per_element_max", gates_per_element_max},
            {"shots", shots},
            {"depth_cutoff", depth_cutoff},
            {"master_seed", master_seed},
            {"split_ratios", std::vector<double>{split_ratios[0], split_ratios[1], split_ratios[2]}}};
}

// d-R^2 label for one circuit under one noise model. When `ideal_all_zeros`
// is set (RB circuits) the ideal distribution is known without simulation.
inline double label_record(const Circuit& c, const NoiseModel& nm, std::uint64_t shots,
                           std::uint64_t seed, bool ideal_all_zeros = false) {
    Counts noisy = run_noisy(c, nm, shots, seed);
    Counts ideal;
    if (ideal_all_zeros) {
        ideal.shots = shots;
        ideal.width = noisy.width;
        ideal.counts[std::string(noisy.width, '0')] = shots;
    } else {
        ideal = expected_ideal_counts(run_ideal(c), shots);
        ideal.width = noisy.width;
    }
    return d_r2(align(ideal, noisy));
}

struct Dataset {
    std::vector<DatasetRecord> records;
};

struct DatasetStats {
    std::map<std::string, std::uint64_t> label_histogram; // gate label -> count
    // mean d-R^2 per depth decile of the cutoff range
    std::vector<double> depth_decile_mean;
    std::vector<std::uint64_t> depth_decile_count;
    std::uint64_t generated = 0;
    std::uint64_t retained = 0;

    nlohmann::ordered_json to_json() const {
        return {{"generated", generated},
                {"retained", retained},
                {"gate_label_histogram", label_histogram},
                {"depth_decile_mean_fidelity", depth_decile_mean},
                {"depth_decile_count", depth_decile_count}};
    }
};

// Uniformly random injective placement of k logical qubits onto the device.
inline Layout random_placement(int k, int device_width, SplitMix64& rng) {
    std::vector<int> phys(device_width);
    std::iota(phys.begin(), phys.end(), 0);
    // Fisher-Yates prefix
    for (int i = 0; i < k; i++) {
        int j = i + static_cast<int>(rng.below(device_width - i));
        std::swap(phys[i], phys[j]);
    }
    Layout l;
    for (int i = 0; i < k; i++) l.map[i] = phys[i];
    return l;
}

inline Dataset build_dataset(const DatasetConfig& cfg, DatasetStats* stats_out = nullptr) {
    Dataset ds;
    DatasetStats stats;
    stats.depth_decile_mean.assign(10, 0.0);
    stats.depth_decile_count.assign(10, 0);
    const BasisSet basis = BasisSet::ibm_default();

    for (int i = 0; i < cfg.n_records; i++) {
        std::uint64_t rec_seed = child_seed(cfg.master_seed, static_cast<std::uint64_t>(i));
        SplitMix64 rng(rec_seed);
        RBSpec spec;
        spec.n_active = cfg.active_min + static_cast<int>(rng.below(cfg.active_max - cfg.active_min + 1));
        spec.seq_len = cfg.seq_len_min + static_cast<int>(rng.below(cfg.seq_len_max - cfg.seq_len_min + 1));
        spec.gates_per_element_min =
            cfg.gates_per_element_min > 0 ? cfg.gates_per_element_min * spec.n_active : 0;
        spec.gates_per_element_max =
            cfg.gates_per_element_max > 0 ? cfg.gates_per_element_max * spec.n_active : 0;
        spec.seed = rng();
        spec.placement = random_placement(spec.n_active, cfg.coupling.n_qubits, rng);
        spec.device_width = cfg.coupling.n_qubits;
        std::uint64_t sim_seed = rng();

        Circuit c = generate_rb_circuit(spec);
        c = cancel_adjacent_inverses(decompose_to_basis(c, basis));
        int d = depth(c);
        stats.generated++;
        if (d > cfg.depth_cutoff) continue;

        DatasetRecord r;
        r.id = static_cast<std::uint64_t>(i);
        r.circuit = emit_circuit(c);
        r.device = cfg.device_name;
        r.depth = d;
        r.n_qubits_active = spec.n_active;
        r.placement.resize(spec.n_active);
        for (int q = 0; q < spec.n_active; q++) r.placement[q] = spec.placement.map.at(q);
        r.seed = sim_seed;
        r.shots = cfg.shots;
        r.label = label_record(c, cfg.noise, cfg.shots, sim_seed, /*ideal_all_zeros=*/true);
        stats.retained++;

        auto grid = labelize(c, cfg.coupling.n_qubits);
        for (const auto& lane : grid.labels)
            for (const auto& label : lane) stats.label_histogram[label]++;
        int decile = std::min(9, d * 10 / cfg.depth_cutoff);
        stats.depth_decile_mean[decile] += r.label;
        stats.depth_decile_count[decile]++;

        ds.records.push_back(std::move(r));
    }
    if (ds.records.empty()) throw InvalidArgument("no records retained after depth filtering");
    for (int i = 0; i < 10; i++)
        if (stats.depth_decile_count[i] > 0)
            stats.depth_decile_mean[i] /= static_cast<double>(stats.depth_decile_count[i]);
    if (stats_out) *stats_out = std::move(stats);
    return ds;
}

struct DatasetSplit {
    std::vector<DatasetRecord> train, val, test;
};

inline DatasetSplit split(const std::vector<DatasetRecord>& records,
                          const std::array<double, 3>& ratios, std::uint64_t seed) {
    double s = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(s - 1.0) > 1e-9) throw InvalidArgument("split ratios must sum to 1");
    const auto n = records.size();
    // largest-remainder apportionment of n over the three parts
    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> rem{};
    std::size_t assigned = 0;
    for (int i = 0; i < 3; i++) {
        double exact = ratios[i] * static_cast<double>(n);
        sizes[i] = static_cast<std::size_t>(exact);
        rem[i] = exact - static_cast<double>(sizes[i]);
        assigned += sizes[i];
    }
    while (assigned < n) {
        int best = 0;
        for (int i = 1; i < 3; i++)
            if (rem[i] > rem[best]) best = i;
        sizes[best]++;
        rem[best] = -1;
        assigned++;
    }
    for (int i = 0; i < 3; i++)
        if (ratios[i] > 0 && sizes[i] == 0)
            throw InvalidArgument("degenerate split: empty partition");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    SplitMix64 rng(seed);
    for (std::size_t i = n; i > 1; i--) std::swap(idx[i - 1], idx[rng.below(i)]);

    DatasetSplit out;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < sizes[0]; i++) out.train.push_back(records[idx[pos++]]);
    for (std::size_t i = 0; i < sizes[1]; i++) out.val.push_back(records[idx[pos++]]);
    for (std::size_t i = 0; i < sizes[2]; i++) out.test.push_back(records[idx[pos++]]);
    return out;
}

// JSON-lines persistence, one record per line.
inline void save_jsonl(const Dataset& ds, std::ostream& out) {
    for (const auto& r : ds.records) out << r.to_json().dump() << "\n";
}
inline void save_jsonl(const Dataset& ds, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot open '" + path + "' for writing");
    save_jsonl(ds, f);
}
inline Dataset load_jsonl(std::istream& in) {
    Dataset ds;
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ln++;
        if (line.empty()) continue;
        try {
            ds.records.push_back(DatasetRecord::from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad dataset record: ") + e.what(), ln, 1);
        }
    }
    return ds;
}
inline Dataset load_jsonl_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot open dataset file '" + path + "'");
    return load_jsonl(f);
}

} // namespace qfp
