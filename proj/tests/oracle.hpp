// Independent brute-force oracles used by the tests. Gate matrices here are
// written out from their textbook definitions and multiplied naively; nothing
// is shared with the library's simulation path except the Circuit type.
#pragma once

#include <complex>
#include <numbers>
#include <vector>

#include "qfp/circuit.hpp"

namespace oracle {

using cplx = std::complex<double>;
using Mat = std::vector<std::vector<cplx>>; // row-major dense

inline Mat identity(std::size_t n) {
    Mat m(n, std::vector<cplx>(n, 0));
    for (std::size_t i = 0; i < n; i++) m[i][i] = 1;
    return m;
}

inline Mat matmul(const Mat& a, const Mat& b) {
    std::size_t n = a.size();
    Mat c(n, std::vector<cplx>(n, 0));
    for (std::size_t i = 0; i < n; i++)
        for (std::size_t k = 0; k < n; k++) {
            cplx av = a[i][k];
            if (av == cplx{0, 0}) continue;
            for (std::size_t j = 0; j < n; j++) c[i][j] += av * b[k][j];
        }
    return c;
}

// Full 2^n x 2^n matrix of one gate (little-endian qubit order).
inline Mat gate_matrix(const qfp::Gate& g, int n_qubits) {
    const std::size_t dim = std::size_t{1} << n_qubits;
    const cplx i{0, 1};
    const double r2 = 1.0 / std::numbers::sqrt2;
    Mat m(dim, std::vector<cplx>(dim, 0));

    auto fill_1q = [&](const cplx u[2][2], int q) {
        const std::size_t bit = std::size_t{1} << q;
        for (std::size_t col = 0; col < dim; col++) {
            int b = (col & bit) ? 1 : 0;
            for (int r = 0; r < 2; r++) {
                std::size_t row = (col & ~bit) | (r ? bit : 0);
                m[row][col] += u[r][b];
            }
        }
    };

    switch (g.kind) {
        case qfp::GateKind::id: return identity(dim);
        case qfp::GateKind::barrier: return identity(dim);
        case qfp::GateKind::x: {
            const cplx u[2][2] = {{0, 1}, {1, 0}};
            fill_1q(u, g.qubits[0]);
            return m;
        }
        case qfp::GateKind::y: {
            const cplx u[2][2] = {{0, -i}, {i, 0}};
            fill_1q(u, g.qubits[0]);
            return m;
        }
        case qfp::GateKind::z: {
            const cplx u[2][2] = {{1, 0}, {0, -1}};
            fill_1q(u, g.qubits[0]);
            return m;
        }
        case qfp::GateKind::h: {
            const cplx u[2][2] = {{r2, r2}, {r2, -r2}};
            fill_1q(u, g.qubits[0]);
            return m;
        }
        case qfp::GateKind::s: {
            const cplx u[2][2] = {{1, 0}, {0, i}};
            fill_1q(u, g.qubits[0]);
            return m;
        }
        case qfp::GateKind::sdg: {
            const cplx u[2][2] = {{1, 0}, {0, -i}};
            fill_1q(u, g.qubits[0]);
            return m;
        }
        case qfp::GateKind::sx: {
            const cplx u[2][2] = {{cplx{0.5, 0.5}, cplx{0.5, -0.5}},
                                  {cplx{0.5, -0.5}, cplx{0.5, 0.5}}};
            fill_1q(u, g.qubits[0]);
            return m;
        }
        case qfp::GateKind::rz: {
            double t = g.params[0] / 2;
            const cplx u[2][2] = {{std::exp(-i * t), 0}, {0, std::exp(i * t)}};
            fill_1q(u, g.qubits[0]);
            return m;
        }
        case qfp::GateKind::cx: {
            const std::size_t bc = std::size_t{1} << g.qubits[0];
            const std::size_t bt = std::size_t{1} << g.qubits[1];
            for (std::size_t col = 0; col < dim; col++)
                m[(col & bc) ? col ^ bt : col][col] = 1;
            return m;
        }
        case qfp::GateKind::cz: {
            const std::size_t ba = std::size_t{1} << g.qubits[0];
            const std::size_t bb = std::size_t{1} << g.qubits[1];
            for (std::size_t col = 0; col < dim; col++)
                m[col][col] = ((col & ba) && (col & bb)) ? -1 : 1;
            return m;
        }
        case qfp::GateKind::swap: {
            const std::size_t ba = std::size_t{1} << g.qubits[0];
            const std::size_t bb = std::size_t{1} << g.qubits[1];
            for (std::size_t col = 0; col < dim; col++) {
                std::size_t row = col;
                bool a = col & ba, b = col & bb;
                if (a != b) row = (col ^ ba) ^ bb;
                m[row][col] = 1;
            }
            return m;
        }
        default:
            throw std::runtime_error("oracle: non-unitary gate");
    }
}

inline Mat circuit_unitary(const qfp::Circuit& c) {
    Mat u = identity(std::size_t{1} << c.n_qubits);
    for (const auto& g : c.gates) {
        if (g.kind == qfp::GateKind::barrier) continue;
        u = matmul(gate_matrix(g, c.n_qubits), u);
    }
    return u;
}

// max |a_ij - phase * b_ij| minimized over a single global phase
inline double phase_distance(const Mat& a, const Mat& b) {
    std::size_t n = a.size();
    // pick the largest entry of b as phase reference
    cplx ref_a = 0, ref_b = 0;
    double best = -1;
    for (std::size_t i2 = 0; i2 < n; i2++)
        for (std::size_t j = 0; j < n; j++)
            if (std::abs(b[i2][j]) > best) {
                best = std::abs(b[i2][j]);
                ref_a = a[i2][j];
                ref_b = b[i2][j];
            }
    if (std::abs(ref_b) < 1e-14 || std::abs(ref_a) < 1e-14) return 1e9;
    cplx phase = ref_a / ref_b;
    phase /= std::abs(phase);
    double maxdiff = 0;
    for (std::size_t i2 = 0; i2 < n; i2++)
        for (std::size_t j = 0; j < n; j++)
            maxdiff = std::max(maxdiff, std::abs(a[i2][j] - phase * b[i2][j]));
    return maxdiff;
}

inline double distance_to_identity_up_to_phase(const Mat& a) {
    return phase_distance(a, identity(a.size()));
}

} // namespace oracle
