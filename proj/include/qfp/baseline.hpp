#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "qfp/circuit.hpp"

namespace qfp {

// Static per-gate error rates for the product-form estimator.
struct ErrorMap {
    std::map<int, std::map<std::string, double>> eps_1q; // qubit -> gate name -> rate
    std::map<std::pair<int, int>, double> eps_2q;        // undirected edge -> rate
    std::vector<double> eps_ro;                          // per-qubit readout

    static ErrorMap from_json(const nlohmann::json& j) {
        ErrorMap em;
        for (auto& [q, gates] : j.at("eps_1q").items())
            for (auto& [name, rate] : gates.items())
                em.eps_1q[std::stoi(q)][name] = rate.get<double>();
        if (j.contains("eps_2q"))
            for (auto& [key, rate] : j.at("eps_2q").items()) {
                auto dash = key.find('-');
                if (dash == std::string::npos)
                    throw ParseError("bad edge key '" + key + "' in error map");
                int a = std::stoi(key.substr(0, dash));
                int b = std::stoi(key.substr(dash + 1));
                em.eps_2q[std::minmax(a, b)] = rate.get<double>();
            }
        em.eps_ro = j.at("eps_ro").get<std::vector<double>>();
        return em;
    }
    nlohmann::json to_json() const {
        nlohmann::json j1 = nlohmann::json::object();
        for (auto& [q, gates] : eps_1q) j1[std::to_string(q)] = gates;
        nlohmann::json j2 = nlohmann::json::object();
        for (auto& [e, r] : eps_2q)
            j2[std::to_string(e.first) + "-" + std::to_string(e.second)] = r;
        return nlohmann::json{{"eps_1q", j1}, {"eps_2q", j2}, {"eps_ro", eps_ro}};
    }
};

// Product of per-gate survival factors; the mapomatic-style estimate.
// Insensitive to gate ordering by construction.
inline double estimate_fidelity(const Circuit& c, const ErrorMap& em) {
    double f = 1.0;
    for (const auto& g : c.gates) {
        if (g.kind == GateKind::barrier || g.kind == GateKind::id ||
            g.kind == GateKind::measure || g.kind == GateKind::reset)
            continue;
        if (g.qubits.size() == 1) {
            auto qit = em.eps_1q.find(g.qubits[0]);
            if (qit == em.eps_1q.end())
                throw InvalidArgument("error map has no entry for qubit " +
                                      std::to_string(g.qubits[0]));
            auto git = qit->second.find(kind_name(g.kind));
            if (git == qit->second.end())
                throw InvalidArgument(std::string("error map does not price gate '") +
                                      kind_name(g.kind) + "' on qubit " +
                                      std::to_string(g.qubits[0]));
            f *= 1.0 - git->second;
        } else {
            auto eit = em.eps_2q.find(std::minmax(g.qubits[0], g.qubits[1]));
            if (eit == em.eps_2q.end())
                throw InvalidArgument("error map does not price edge " +
                                      std::to_string(g.qubits[0]) + "-" +
                                      std::to_string(g.qubits[1]));
            f *= 1.0 - eit->second;
        }
    }
    for (const auto& g : c.gates)
        if (g.kind == GateKind::measure) f *= 1.0 - em.eps_ro.at(g.qubits[0]);
    return f;
}

} // namespace qfp
