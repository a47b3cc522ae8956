#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "qfp/circuit.hpp"
#include "qfp/rng.hpp"

namespace qfp {

using cplx = std::complex<double>;

// 2x2 unitary of a single-qubit gate kind.
inline std::array<cplx, 4> unitary_1q(GateKind k, const std::vector<double>& params) {
    constexpr cplx i{0.0, 1.0};
    const double r2 = 1.0 / std::numbers::sqrt2;
    switch (k) {
        case GateKind::id: return {1, 0, 0, 1};
        case GateKind::x: return {0, 1, 1, 0};
        case GateKind::y: return {0, -i, i, 0};
        case GateKind::z: return {1, 0, 0, -1};
        case GateKind::h: return {r2, r2, r2, -r2};
        case GateKind::s: return {1, 0, 0, i};
        case GateKind::sdg: return {1, 0, 0, -i};
        case GateKind::sx:
            return {cplx{0.5, 0.5}, cplx{0.5, -0.5}, cplx{0.5, -0.5}, cplx{0.5, 0.5}};
        case GateKind::rz: {
            double t = params.at(0) / 2.0;
            return {std::exp(-i * t), 0, 0, std::exp(i * t)};
        }
        default:
            throw InvalidArgument("not a single-qubit unitary");
    }
}

// Little-endian state vector: qubit 0 is the least significant bit.
class StateVector {
  public:
    explicit StateVector(int n_qubits)
        : n_(n_qubits), amps_(std::size_t{1} << n_qubits, cplx{0, 0}) {
        if (n_qubits < 0 || n_qubits > 28) throw InvalidArgument("qubit count out of range");
        amps_[0] = 1.0;
    }

    int n_qubits() const { return n_; }
    const std::vector<cplx>& amplitudes() const { return amps_; }
    std::vector<cplx>& amplitudes() { return amps_; }

    void apply_1q(const std::array<cplx, 4>& u, int q) {
        const std::size_t bit = std::size_t{1} << q;
        const std::size_t n = amps_.size();
        for (std::size_t base = 0; base < n; base += 2 * bit) {
            for (std::size_t off = 0; off < bit; off++) {
                std::size_t i0 = base + off, i1 = i0 + bit;
                cplx a = amps_[i0], b = amps_[i1];
                amps_[i0] = u[0] * a + u[1] * b;
                amps_[i1] = u[2] * a + u[3] * b;
            }
        }
    }

    // u is 4x4 row-major over basis |q1 q0> = |00>,|01>,|10>,|11> with q0 the
    // first qubit argument (least significant of the pair).
    void apply_2q(const std::array<cplx, 16>& u, int q0, int q1) {
        const std::size_t b0 = std::size_t{1} << q0;
        const std::size_t b1 = std::size_t{1} << q1;
        const std::size_t n = amps_.size();
        for (std::size_t i = 0; i < n; i++) {
            if ((i & b0) || (i & b1)) continue;
            std::size_t idx[4] = {i, i | b0, i | b1, i | b0 | b1};
            cplx v[4];
            for (int k = 0; k < 4; k++) v[k] = amps_[idx[k]];
            for (int r = 0; r < 4; r++) {
                cplx acc{0, 0};
                for (int k = 0; k < 4; k++) acc += u[r * 4 + k] * v[k];
                amps_[idx[r]] = acc;
            }
        }
    }

    void apply_cx(int control, int target) {
        const std::size_t bc = std::size_t{1} << control;
        const std::size_t bt = std::size_t{1} << target;
        for (std::size_t i = 0; i < amps_.size(); i++)
            if ((i & bc) && !(i & bt)) std::swap(amps_[i], amps_[i | bt]);
    }

    void apply_cz(int a, int b) {
        const std::size_t ba = std::size_t{1} << a;
        const std::size_t bb = std::size_t{1} << b;
        for (std::size_t i = 0; i < amps_.size(); i++)
            if ((i & ba) && (i & bb)) amps_[i] = -amps_[i];
    }

    void apply_swap(int a, int b) {
        const std::size_t ba = std::size_t{1} << a;
        const std::size_t bb = std::size_t{1} << b;
        for (std::size_t i = 0; i < amps_.size(); i++)
            if ((i & ba) && !(i & bb)) std::swap(amps_[i], amps_[(i & ~ba) | bb]);
    }

    void apply_gate(const Gate& g) {
        switch (g.kind) {
            case GateKind::cx: apply_cx(g.qubits[0], g.qubits[1]); break;
            case GateKind::cz: apply_cz(g.qubits[0], g.qubits[1]); break;
            case GateKind::swap: apply_swap(g.qubits[0], g.qubits[1]); break;
            case GateKind::barrier: break;
            case GateKind::measure:
            case GateKind::reset:
                throw InvalidArgument("non-unitary gate in apply_gate");
            default: apply_1q(unitary_1q(g.kind, g.params), g.qubits[0]); break;
        }
    }

    double prob_one(int q) const {
        const std::size_t bit = std::size_t{1} << q;
        double p = 0;
        for (std::size_t i = 0; i < amps_.size(); i++)
            if (i & bit) p += std::norm(amps_[i]);
        return p;
    }

    // Project qubit q to outcome (0/1) and renormalize.
    void collapse(int q, int outcome, double p_outcome) {
        const std::size_t bit = std::size_t{1} << q;
        const double scale = 1.0 / std::sqrt(p_outcome);
        for (std::size_t i = 0; i < amps_.size(); i++) {
            bool one = (i & bit) != 0;
            if (one == (outcome == 1))
                amps_[i] *= scale;
            else
                amps_[i] = 0;
        }
    }

    double norm() const {
        double s = 0;
        for (const auto& a : amps_) s += std::norm(a);
        return std::sqrt(s);
    }

  private:
    int n_;
    std::vector<cplx> amps_;
};

// ---------------------------------------------------------------------------
// Noise model
// ---------------------------------------------------------------------------

struct NoiseModel {
    std::vector<double> p1;     // per-qubit 1q depolarizing
    std::map<std::pair<int, int>, double> p2; // per undirected edge
    double p2_default = 0.0;    // rate for pairs without an explicit entry
    std::vector<double> p_meas; // readout bit-flip
    std::vector<double> p_reset;
    std::vector<double> p_idle; // per-layer idle depolarizing
    double multiplier = 1.0;

    static NoiseModel zero(int width) { return uniform(width, 0, 0, 0, 0, 0); }

    static NoiseModel uniform(int width, double gate1, double gate2, double meas, double reset,
                              double idle) {
        NoiseModel nm;
        nm.p1.assign(width, gate1);
        nm.p2_default = gate2;
        nm.p_meas.assign(width, meas);
        nm.p_reset.assign(width, reset);
        nm.p_idle.assign(width, idle);
        return nm;
    }

    int width() const { return static_cast<int>(p1.size()); }

    double eff(double base) const { return std::clamp(base * multiplier, 0.0, 1.0); }
    double eff_p1(int q) const { return eff(p1.at(q)); }
    double eff_p2(int a, int b) const {
        auto it = p2.find(std::minmax(a, b));
        return eff(it == p2.end() ? p2_default : it->second);
    }
    double eff_meas(int q) const { return eff(p_meas.at(q)); }
    double eff_reset(int q) const { return eff(p_reset.at(q)); }
    double eff_idle(int q) const { return eff(p_idle.at(q)); }

    NoiseModel scaled(double factor) const {
        NoiseModel nm = *this;
        for (auto& v : nm.p1) v *= factor;
        for (auto& [k, v] : nm.p2) v *= factor;
        nm.p2_default *= factor;
        for (auto& v : nm.p_meas) v *= factor;
        for (auto& v : nm.p_reset) v *= factor;
        for (auto& v : nm.p_idle) v *= factor;
        return nm;
    }

    static NoiseModel from_json(const nlohmann::json& j) {
        NoiseModel nm;
        nm.p1 = j.at("p1").get<std::vector<double>>();
        nm.p_meas = j.at("p_meas").get<std::vector<double>>();
        nm.p_reset = j.at("p_reset").get<std::vector<double>>();
        nm.p_idle = j.at("p_idle").get<std::vector<double>>();
        nm.multiplier = j.value("multiplier", 1.0);
        nm.p2_default = j.value("p2_default", 0.0);
        if (j.contains("p2")) {
            for (auto& [key, val] : j.at("p2").items()) {
                auto dash = key.find('-');
                if (dash == std::string::npos)
                    throw ParseError("bad edge key '" + key + "' in noise model");
                int a = std::stoi(key.substr(0, dash));
                int b = std::stoi(key.substr(dash + 1));
                nm.p2[std::minmax(a, b)] = val.get<double>();
            }
        }
        auto in_range = [](const std::vector<double>& v) {
            return std::all_of(v.begin(), v.end(), [](double p) { return p >= 0 && p <= 1; });
        };
        if (!in_range(nm.p1) || !in_range(nm.p_meas) || !in_range(nm.p_reset) ||
            !in_range(nm.p_idle) || nm.multiplier < 0)
            throw ParseError("noise model rates out of range");
        return nm;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["p1"] = p1;
        nlohmann::json edges = nlohmann::json::object();
        for (auto& [k, v] : p2)
            edges[std::to_string(k.first) + "-" + std::to_string(k.second)] = v;
        j["p2"] = edges;
        j["p2_default"] = p2_default;
        j["p_meas"] = p_meas;
        j["p_reset"] = p_reset;
        j["p_idle"] = p_idle;
        j["multiplier"] = multiplier;
        return j;
    }
};

// ---------------------------------------------------------------------------
// Counts
// ---------------------------------------------------------------------------

struct Counts {
    std::map<std::string, std::uint64_t> counts;
    std::uint64_t shots = 0;
    int width = 0; // bits per key

    bool operator==(const Counts&) const = default;

    static Counts from_json(const nlohmann::json& j) {
        Counts c;
        c.shots = j.at("shots").get<std::uint64_t>();
        std::uint64_t sum = 0;
        for (auto& [k, v] : j.at("counts").items()) {
            c.counts[k] = v.get<std::uint64_t>();
            c.width = static_cast<int>(k.size());
            sum += c.counts[k];
        }
        if (sum != c.shots) throw ParseError("counts do not sum to shots");
        return c;
    }
    nlohmann::json to_json() const {
        nlohmann::json j;
        j["shots"] = shots;
        j["counts"] = counts;
        return j;
    }
};

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

namespace detail {

// Restriction of a circuit to the qubits it actually touches. Untouched
// qubits stay in |0> and are never measured, so dropping them is exact.
struct CompactCircuit {
    std::vector<int> used;          // dense index -> original qubit
    std::vector<int> dense;         // original qubit -> dense index (-1 unused)
    Circuit circuit;                // gates rewritten onto dense indices
    std::vector<int> measured_bits; // sorted clbit indices
};

inline CompactCircuit compact(const Circuit& c) {
    CompactCircuit cc;
    cc.dense.assign(c.n_qubits, -1);
    for (const auto& g : c.gates)
        for (int q : g.qubits)
            if (cc.dense[q] < 0) {
                cc.dense[q] = static_cast<int>(cc.used.size());
                cc.used.push_back(q);
            }
    cc.circuit.n_qubits = std::max<int>(1, static_cast<int>(cc.used.size()));
    cc.circuit.n_clbits = c.n_clbits;
    for (const auto& g : c.gates) {
        Gate ng = g;
        for (auto& q : ng.qubits) q = cc.dense[q];
        cc.circuit.gates.push_back(std::move(ng));
    }
    cc.measured_bits = c.measured_clbits();
    return cc;
}

inline std::string bits_to_key(const std::vector<int>& bit_by_clbit,
                               const std::vector<int>& measured) {
    // highest clbit index leftmost
    std::string key(measured.size(), '0');
    for (size_t i = 0; i < measured.size(); i++)
        key[measured.size() - 1 - i] = bit_by_clbit[measured[i]] ? '1' : '0';
    return key;
}

} // namespace detail

// Exact Born-rule output distribution over measured classical bits.
// Handles mid-circuit measure/reset by branching into a weighted ensemble.
inline std::map<std::string, double> run_ideal(const Circuit& c) {
    auto cc = detail::compact(c);
    if (cc.measured_bits.empty()) throw InvalidArgument("circuit has no measurements");
    if (static_cast<int>(cc.used.size()) > 20)
        throw InvalidArgument("circuit touches more than 20 qubits");

    struct Branch {
        double weight;
        StateVector state;
        std::vector<int> bits; // by clbit
    };
    std::vector<Branch> branches;
    branches.push_back({1.0, StateVector(cc.circuit.n_qubits), std::vector<int>(c.n_clbits, 0)});

    // Measures with no later gate on the same qubit are deferred to the end
    // (joint marginal); only genuinely mid-circuit measures force a branch.
    std::vector<std::pair<int, int>> deferred; // (dense qubit, clbit)
    const auto& gates = cc.circuit.gates;
    auto qubit_reused_after = [&](size_t gi, int q) {
        for (size_t j = gi + 1; j < gates.size(); j++) {
            if (gates[j].kind == GateKind::barrier) continue;
            for (int p : gates[j].qubits)
                if (p == q && gates[j].kind != GateKind::measure) return true;
        }
        return false;
    };

    for (size_t gi = 0; gi < gates.size(); gi++) {
        const auto& g = gates[gi];
        if (g.kind == GateKind::barrier) continue;
        if (g.kind == GateKind::measure) {
            int q = g.qubits[0];
            if (!qubit_reused_after(gi, q)) {
                deferred.push_back({q, g.clbit});
                continue;
            }
            std::vector<Branch> next;
            for (auto& br : branches) {
                double p1 = br.state.prob_one(q);
                for (int outcome : {0, 1}) {
                    double p = outcome ? p1 : 1.0 - p1;
                    if (p < 1e-15) continue;
                    Branch nb = br;
                    nb.weight *= p;
                    nb.state.collapse(q, outcome, p);
                    nb.bits[g.clbit] = outcome;
                    next.push_back(std::move(nb));
                }
            }
            branches = std::move(next);
        } else if (g.kind == GateKind::reset) {
            int q = g.qubits[0];
            std::vector<Branch> next;
            for (auto& br : branches) {
                double p1 = br.state.prob_one(q);
                for (int outcome : {0, 1}) {
                    double p = outcome ? p1 : 1.0 - p1;
                    if (p < 1e-15) continue;
                    Branch nb = br;
                    nb.weight *= p;
                    nb.state.collapse(q, outcome, p);
                    if (outcome == 1) nb.state.apply_1q(unitary_1q(GateKind::x, {}), q);
                    next.push_back(std::move(nb));
                }
            }
            branches = std::move(next);
        } else {
            for (auto& br : branches) br.state.apply_gate(g);
        }
    }

    std::map<std::string, double> dist;
    for (const auto& br : branches) {
        // joint marginal over deferred measurement qubits
        const auto& amps = br.state.amplitudes();
        std::map<std::string, double> local;
        for (std::size_t i = 0; i < amps.size(); i++) {
            double p = std::norm(amps[i]);
            if (p < 1e-300) continue;
            std::vector<int> bits = br.bits;
            for (auto [q, cb] : deferred) bits[cb] = (i >> q) & 1;
            local[detail::bits_to_key(bits, cc.measured_bits)] += p;
        }
        for (auto& [k, p] : local) dist[k] += br.weight * p;
    }
    return dist;
}

// Monte-Carlo trajectory sampling under the depolarizing/bit-flip noise model.
// Deterministic given (c, nm, shots, seed); shot k uses child_seed(seed, k).
inline Counts run_noisy(const Circuit& c, const NoiseModel& nm, std::uint64_t shots,
                        std::uint64_t seed) {
    if (shots < 1) throw InvalidArgument("shots must be >= 1");
    auto cc = detail::compact(c);
    if (cc.measured_bits.empty()) throw InvalidArgument("circuit has no measurements");
    if (static_cast<int>(cc.used.size()) > 20)
        throw InvalidArgument("circuit touches more than 20 qubits");

    const auto layered = layerize(cc.circuit);
    const int n_dense = cc.circuit.n_qubits;
    const auto pauli_x = unitary_1q(GateKind::x, {});
    const auto pauli_y = unitary_1q(GateKind::y, {});
    const auto pauli_z = unitary_1q(GateKind::z, {});
    auto apply_pauli = [&](StateVector& sv, int q, int which) {
        switch (which) {
            case 0: sv.apply_1q(pauli_x, q); break;
            case 1: sv.apply_1q(pauli_y, q); break;
            default: sv.apply_1q(pauli_z, q); break;
        }
    };

    Counts out;
    out.shots = shots;
    out.width = static_cast<int>(cc.measured_bits.size());
    for (std::uint64_t shot = 0; shot < shots; shot++) {
        SplitMix64 rng(child_seed(seed, shot));
        StateVector sv(n_dense);
        std::vector<int> bits(c.n_clbits, 0);
        for (const auto& layer : layered.layers) {
            std::vector<bool> busy(n_dense, false);
            for (int lane = 0; lane < layered.lanes; lane++) {
                int gi = layer[lane];
                if (gi < 0) continue;
                const auto& g = cc.circuit.gates[gi];
                if (g.qubits[0] != lane) continue; // visit each gate once
                for (int q : g.qubits) busy[q] = true;
                switch (g.kind) {
                    case GateKind::measure: {
                        int q = g.qubits[0];
                        double p1 = sv.prob_one(q);
                        int outcome = rng.uniform() < p1 ? 1 : 0;
                        sv.collapse(q, outcome, outcome ? p1 : 1.0 - p1);
                        if (rng.uniform() < nm.eff_meas(cc.used[q])) outcome ^= 1;
                        bits[g.clbit] = outcome;
                        break;
                    }
                    case GateKind::reset: {
                        int q = g.qubits[0];
                        double p1 = sv.prob_one(q);
                        int outcome = rng.uniform() < p1 ? 1 : 0;
                        sv.collapse(q, outcome, outcome ? p1 : 1.0 - p1);
                        if (outcome == 1) sv.apply_1q(pauli_x, q);
                        // faulty reset leaves the qubit in |1>
                        if (rng.uniform() < nm.eff_reset(cc.used[q])) sv.apply_1q(pauli_x, q);
                        break;
                    }
                    default: {
                        sv.apply_gate(g);
                        if (g.qubits.size() == 1) {
                            if (rng.uniform() < nm.eff_p1(cc.used[g.qubits[0]]))
                                apply_pauli(sv, g.qubits[0], static_cast<int>(rng.below(3)));
                        } else {
                            double p = nm.eff_p2(cc.used[g.qubits[0]], cc.used[g.qubits[1]]);
                            if (rng.uniform() < p) {
                                // one of the 15 non-identity two-qubit Paulis
                                int w = static_cast<int>(rng.below(15)) + 1;
                                int pa = w % 4, pb = w / 4;
                                if (pa > 0) apply_pauli(sv, g.qubits[0], pa - 1);
                                if (pb > 0) apply_pauli(sv, g.qubits[1], pb - 1);
                            }
                        }
                        break;
                    }
                }
            }
            for (int q = 0; q < n_dense; q++) {
                if (busy[q]) continue;
                if (rng.uniform() < nm.eff_idle(cc.used[q]))
                    apply_pauli(sv, q, static_cast<int>(rng.below(3)));
            }
        }
        out.counts[detail::bits_to_key(bits, cc.measured_bits)]++;
    }
    return out;
}

inline Counts sample_ideal(const Circuit& c, std::uint64_t shots, std::uint64_t seed) {
    return run_noisy(c, NoiseModel::zero(c.n_qubits), shots, seed);
}

} // namespace qfp
