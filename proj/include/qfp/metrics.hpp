#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qfp/errors.hpp"
#include "qfp/simulator.hpp"

namespace qfp {

// Ideal (Y) and noisy (y) count vectors expanded over all 2^n bitstrings in
// canonical binary order, zero-filled for absent keys.
struct AlignedPair {
    std::vector<double> Y;
    std::vector<double> y;
    int n = 0; // measured-bit count
};

namespace detail {

inline std::size_t key_index(const std::string& key) {
    std::size_t v = 0;
    for (char ch : key) {
        if (ch != '0' && ch != '1') throw InvalidArgument("bitstring key contains non-binary char");
        v = (v << 1) | (ch == '1' ? 1u : 0u);
    }
    return v;
}

inline std::vector<double> expand(const Counts& c) {
    std::vector<double> v(std::size_t{1} << c.width, 0.0);
    for (const auto& [k, n] : c.counts) {
        if (static_cast<int>(k.size()) != c.width)
            throw InvalidArgument("inconsistent bitstring width in counts");
        v[key_index(k)] = static_cast<double>(n);
    }
    return v;
}

} // namespace detail

inline AlignedPair align(const Counts& ideal, const Counts& noisy) {
    if (ideal.width != noisy.width)
        throw InvalidArgument("cannot align counts of different bit widths");
    if (ideal.shots != noisy.shots)
        throw InvalidArgument("cannot align counts with different shot totals");
    return AlignedPair{detail::expand(ideal), detail::expand(noisy), ideal.width};
}

inline double d_r2_unbounded(const AlignedPair& p) {
    double mean = 0;
    for (double v : p.Y) mean += v;
    mean /= static_cast<double>(p.Y.size());
    double ssr = 0, sst = 0;
    for (std::size_t i = 0; i < p.Y.size(); i++) {
        double dr = p.Y[i] - p.y[i];
        double dt = p.Y[i] - mean;
        ssr += dr * dr;
        sst += dt * dt;
    }
    if (sst == 0)
        throw NumericalError("d-R^2 undefined: ideal output is uniform by design (SST = 0)");
    return 1.0 - ssr / sst;
}

inline double d_r2(const AlignedPair& p) { return std::max(0.0, d_r2_unbounded(p)); }

// Probability of successful trials.
inline double pst(const std::set<std::string>& correct, const Counts& noisy) {
    if (correct.empty()) throw InvalidArgument("pst: empty correct-state set");
    std::uint64_t good = 0;
    for (const auto& k : correct) {
        auto it = noisy.counts.find(k);
        if (it != noisy.counts.end()) good += it->second;
    }
    return static_cast<double>(good) / static_cast<double>(noisy.shots);
}

// Largest-remainder rounding of a probability distribution into integer counts.
inline Counts expected_ideal_counts(const std::map<std::string, double>& dist,
                                    std::uint64_t shots) {
    if (dist.empty()) throw InvalidArgument("empty distribution");
    struct Entry {
        std::string key;
        std::uint64_t base;
        double rem;
    };
    std::vector<Entry> entries;
    std::uint64_t assigned = 0;
    int width = static_cast<int>(dist.begin()->first.size());
    for (const auto& [k, p] : dist) {
        double exact = p * static_cast<double>(shots);
        auto base = static_cast<std::uint64_t>(std::floor(exact));
        entries.push_back({k, base, exact - std::floor(exact)});
        assigned += base;
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.rem > b.rem; });
    for (std::size_t i = 0; assigned < shots; i = (i + 1) % entries.size(), assigned++)
        entries[i].base++;
    Counts out;
    out.shots = shots;
    out.width = width;
    for (const auto& e : entries)
        if (e.base > 0) out.counts[e.key] = e.base;
    return out;
}

// Interpretation bands with boundaries at 0, 0.3, 0.5, 0.7, 1.
inline std::string fidelity_band(double v) {
    if (v >= 1.0) return "perfect";
    if (v > 0.7) return "good";
    if (v > 0.5) return "fair";
    if (v > 0.3) return "significant noise";
    if (v > 0.0) return "extremely noisy";
    return "no better than uniform";
}

} // namespace qfp
