#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "qfp/errors.hpp"
#include "qfp/rng.hpp"
#include "qfp/tokenizer.hpp"

namespace qfp {

struct ModelConfig {
    int lanes = 7;
    int vocab_size = 0;
    int embed_dim = 64;
    int lstm_units = 256;
    std::vector<int> dense_sizes{64, 16, 1};
    int T = 500;
    bool shared_embedding = true;

    bool operator==(const ModelConfig&) const = default;

    int input_width() const { return lanes * embed_dim; }
    int n_embed_tables() const { return shared_embedding ? 1 : lanes; }

    nlohmann::ordered_json to_json() const {
        return {{"lanes", lanes},         {"vocab_size", vocab_size},
                {"embed_dim", embed_dim}, {"lstm_units", lstm_units},
                {"dense_sizes", dense_sizes}, {"T", T},
                {"shared_embedding", shared_embedding}};
    }
    static ModelConfig from_json(const nlohmann::json& j) {
        ModelConfig c;
        c.lanes = j.at("lanes").get<int>();
        c.vocab_size = j.at("vocab_size").get<int>();
        c.embed_dim = j.at("embed_dim").get<int>();
        c.lstm_units = j.at("lstm_units").get<int>();
        c.dense_sizes = j.at("dense_sizes").get<std::vector<int>>();
        c.T = j.at("T").get<int>();
        c.shared_embedding = j.at("shared_embedding").get<bool>();
        return c;
    }
};

// Trainable parameter count, excluding the frozen padding embedding row.
inline std::int64_t param_count(const ModelConfig& cfg) {
    std::int64_t embed = std::int64_t{cfg.n_embed_tables()} * cfg.vocab_size * cfg.embed_dim;
    std::int64_t in = cfg.input_width(), u = cfg.lstm_units;
    std::int64_t lstm = 4 * (in * u + u * u + u);
    std::int64_t dense = 0;
    std::int64_t prev = u;
    for (int s : cfg.dense_sizes) {
        dense += prev * s + s;
        prev = s;
    }
    return embed + lstm + dense;
}

// Gate row blocks in W/U/b: [0,U) input, [U,2U) forget, [2U,3U) cell, [3U,4U) output.
template <typename S>
struct Model {
    ModelConfig cfg;
    std::uint64_t vocab_hash = 0;
    std::vector<S> embed;                 // tables * (vocab+1) * embed_dim; row 0 frozen zero
    std::vector<S> W;                     // 4U x input_width, row-major
    std::vector<S> U;                     // 4U x U, row-major
    std::vector<S> b;                     // 4U
    std::vector<std::vector<S>> dense_w;  // [k]: out x in, row-major
    std::vector<std::vector<S>> dense_b;  // [k]: out

    const S* embed_row(int lane, int token) const {
        int table = cfg.shared_embedding ? 0 : lane;
        return embed.data() +
               (static_cast<std::size_t>(table) * (cfg.vocab_size + 1) + token) * cfg.embed_dim;
    }
};

template <typename S>
Model<S> init_model(const ModelConfig& cfg, std::uint64_t seed) {
    if (cfg.dense_sizes.empty() || cfg.dense_sizes.back() != 1)
        throw InvalidArgument("dense_sizes must end in 1");
    if (cfg.embed_dim < 1 || cfg.lstm_units < 1 || cfg.lanes < 1 || cfg.vocab_size < 1)
        throw InvalidArgument("bad model config");
    Model<S> m;
    m.cfg = cfg;
    SplitMix64 rng(seed);
    auto xavier = [&](std::vector<S>& w, std::size_t n, int fan_in, int fan_out) {
        double limit = std::sqrt(6.0 / (fan_in + fan_out));
        w.resize(n);
        for (auto& v : w) v = static_cast<S>((rng.uniform() * 2.0 - 1.0) * limit);
    };
    const int in = cfg.input_width(), u = cfg.lstm_units, vp1 = cfg.vocab_size + 1;
    m.embed.resize(static_cast<std::size_t>(cfg.n_embed_tables()) * vp1 * cfg.embed_dim);
    for (int t = 0; t < cfg.n_embed_tables(); t++)
        for (int r = 0; r < vp1; r++)
            for (int e = 0; e < cfg.embed_dim; e++)
                m.embed[(static_cast<std::size_t>(t) * vp1 + r) * cfg.embed_dim + e] =
                    r == 0 ? S{0} : static_cast<S>(rng.uniform() * 0.1 - 0.05);
    xavier(m.W, static_cast<std::size_t>(4) * u * in, in, 4 * u);
    xavier(m.U, static_cast<std::size_t>(4) * u * u, u, 4 * u);
    m.b.assign(static_cast<std::size_t>(4) * u, S{0});
    for (int i = u; i < 2 * u; i++) m.b[i] = S{1}; // forget-gate bias
    int prev = u;
    for (int s : cfg.dense_sizes) {
        std::vector<S> w, bias(s, S{0});
        xavier(w, static_cast<std::size_t>(s) * prev, prev, s);
        m.dense_w.push_back(std::move(w));
        m.dense_b.push_back(std::move(bias));
        prev = s;
    }
    return m;
}

namespace nn_detail {

template <typename S>
S sigmoid(S x) {
    return S{1} / (S{1} + std::exp(-x));
}

// A timestep is masked when every lane holds the padding token.
inline bool masked_step(const TokenizedCircuit& x, int t) {
    for (int lane = 0; lane < x.lanes; lane++)
        if (x.tokens[lane][t] != 0) return false;
    return true;
}

template <typename S>
void dense_forward(const Model<S>& m, const S* h, S* scratch_a, S* scratch_b, S& out) {
    int in = m.cfg.lstm_units;
    const S* cur = h;
    S* bufs[2] = {scratch_a, scratch_b};
    int which = 0;
    for (std::size_t k = 0; k < m.dense_w.size(); k++) {
        int o = m.cfg.dense_sizes[k];
        S* dst = bufs[which];
        for (int r = 0; r < o; r++) {
            S acc = m.dense_b[k][r];
            const S* wr = m.dense_w[k].data() + static_cast<std::size_t>(r) * in;
            for (int i = 0; i < in; i++) acc += wr[i] * cur[i];
            dst[r] = k + 1 < m.dense_w.size() ? std::max(S{0}, acc) : sigmoid(acc);
        }
        cur = dst;
        in = o;
        which ^= 1;
    }
    out = cur[0];
}

} // namespace nn_detail

// Pure single-input inference.
template <typename S>
S forward(const Model<S>& m, const TokenizedCircuit& x) {
    const auto& cfg = m.cfg;
    if (x.lanes != cfg.lanes || x.T != cfg.T)
        throw InvalidArgument("input dimensions do not match model config");
    for (int lane = 0; lane < x.lanes; lane++)
        for (int t = 0; t < x.T; t++)
            if (x.tokens[lane][t] < 0 || x.tokens[lane][t] > cfg.vocab_size)
                throw InvalidArgument("token out of vocabulary range");

    const int in = cfg.input_width(), u = cfg.lstm_units;
    std::vector<S> h(u, S{0}), c(u, S{0}), xt(in), z(4 * u);
    for (int t = 0; t < cfg.T; t++) {
        if (nn_detail::masked_step(x, t)) continue;
        for (int lane = 0; lane < cfg.lanes; lane++) {
            const S* row = m.embed_row(lane, x.tokens[lane][t]);
            std::copy(row, row + cfg.embed_dim, xt.begin() + lane * cfg.embed_dim);
        }
        for (int r = 0; r < 4 * u; r++) {
            S acc = m.b[r];
            const S* wr = m.W.data() + static_cast<std::size_t>(r) * in;
            for (int i = 0; i < in; i++) acc += wr[i] * xt[i];
            const S* ur = m.U.data() + static_cast<std::size_t>(r) * u;
            for (int i = 0; i < u; i++) acc += ur[i] * h[i];
            z[r] = acc;
        }
        for (int i = 0; i < u; i++) {
            S gi = nn_detail::sigmoid(z[i]);
            S gf = nn_detail::sigmoid(z[u + i]);
            S gg = std::tanh(z[2 * u + i]);
            S go = nn_detail::sigmoid(z[3 * u + i]);
            c[i] = gf * c[i] + gi * gg;
            h[i] = go * std::tanh(c[i]);
        }
    }
    std::vector<S> sa(cfg.lstm_units), sb(cfg.lstm_units);
    S out;
    nn_detail::dense_forward(m, h.data(), sa.data(), sb.data(), out);
    return out;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
    int batch_size = 32;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int epochs = 20;
    int patience = 5; // <=0 disables early stopping
    std::uint64_t seed = 0;
};

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    int best_epoch = -1; // argmin val loss

    nlohmann::ordered_json to_json() const {
        return {{"train_loss", train_loss}, {"val_loss", val_loss}, {"best_epoch", best_epoch}};
    }
};

template <typename S>
struct LabeledSample {
    TokenizedCircuit x;
    S label;
};

namespace nn_detail {

// Gradient buffers mirroring the model tensors.
template <typename S>
struct Grads {
    std::vector<S> embed, W, U, b;
    std::vector<std::vector<S>> dense_w, dense_b;

    static Grads like(const Model<S>& m) {
        Grads g;
        g.embed.assign(m.embed.size(), S{0});
        g.W.assign(m.W.size(), S{0});
        g.U.assign(m.U.size(), S{0});
        g.b.assign(m.b.size(), S{0});
        for (const auto& w : m.dense_w) g.dense_w.emplace_back(w.size(), S{0});
        for (const auto& b : m.dense_b) g.dense_b.emplace_back(b.size(), S{0});
        return g;
    }
    void zero() {
        std::fill(embed.begin(), embed.end(), S{0});
        std::fill(W.begin(), W.end(), S{0});
        std::fill(U.begin(), U.end(), S{0});
        std::fill(b.begin(), b.end(), S{0});
        for (auto& w : dense_w) std::fill(w.begin(), w.end(), S{0});
        for (auto& b2 : dense_b) std::fill(b2.begin(), b2.end(), S{0});
    }
};

// Forward + backward over one mini-batch; returns the batch MSE. Gradients of
// the mean loss are accumulated into `g` (which must be zeroed by the caller).
template <typename S>
double batch_grad(const Model<S>& m, const std::vector<const LabeledSample<S>*>& batch,
                  Grads<S>& g) {
    const auto& cfg = m.cfg;
    const int B = static_cast<int>(batch.size());
    const int in = cfg.input_width(), u = cfg.lstm_units, T = cfg.T;

    // first unmasked timestep across the batch (padding is prefix-only)
    int t0 = T;
    std::vector<int> first(B, T);
    for (int s = 0; s < B; s++) {
        const auto& x = batch[s]->x;
        if (x.lanes != cfg.lanes || x.T != cfg.T)
            throw InvalidArgument("sample dimensions do not match model config");
        for (int t = 0; t < T; t++)
            if (!masked_step(x, t)) { first[s] = t; break; }
        t0 = std::min(t0, first[s]);
    }
    const int steps = T - t0;

    auto buf = [&](int per_sample_dim) {
        return std::vector<S>(static_cast<std::size_t>(steps) * B * per_sample_dim, S{0});
    };
    std::vector<S> xs = buf(in);
    std::vector<S> gi = buf(u), gf = buf(u), gg = buf(u), go = buf(u);
    std::vector<S> cs = buf(u), tc = buf(u);
    // h history needs steps+1 slices (h before t0 is zero)
    std::vector<S> hs(static_cast<std::size_t>(steps + 1) * B * u, S{0});
    std::vector<S> c_prev_init(static_cast<std::size_t>(B) * u, S{0});

    auto slice = [&](std::vector<S>& v, int step, int dim) {
        return v.data() + (static_cast<std::size_t>(step) * B) * dim;
    };

    std::vector<S> z(static_cast<std::size_t>(B) * 4 * u);
    for (int st = 0; st < steps; st++) {
        const int t = t0 + st;
        S* x_t = slice(xs, st, in);
        const S* h_prev = slice(hs, st, u);
        S* h_t = slice(hs, st + 1, u);
        const S* c_prev = st == 0 ? c_prev_init.data() : slice(cs, st - 1, u);
        S* c_t = slice(cs, st, u);
        for (int s = 0; s < B; s++) {
            const auto& x = batch[s]->x;
            const bool active = t >= first[s];
            if (!active) {
                // carry state through the masked step
                std::copy(h_prev + s * u, h_prev + (s + 1) * u, h_t + s * u);
                std::copy(c_prev + s * u, c_prev + (s + 1) * u, c_t + s * u);
                continue;
            }
            S* xrow = x_t + static_cast<std::size_t>(s) * in;
            for (int lane = 0; lane < cfg.lanes; lane++) {
                int tok = x.tokens[lane][t];
                if (tok < 0 || tok > cfg.vocab_size)
                    throw InvalidArgument("token out of vocabulary range");
                const S* row = m.embed_row(lane, tok);
                std::copy(row, row + cfg.embed_dim, xrow + lane * cfg.embed_dim);
            }
            S* zrow = z.data() + static_cast<std::size_t>(s) * 4 * u;
            const S* hrow = h_prev + static_cast<std::size_t>(s) * u;
            for (int r = 0; r < 4 * u; r++) {
                S acc = m.b[r];
                const S* wr = m.W.data() + static_cast<std::size_t>(r) * in;
                for (int i = 0; i < in; i++) acc += wr[i] * xrow[i];
                const S* ur = m.U.data() + static_cast<std::size_t>(r) * u;
                for (int i = 0; i < u; i++) acc += ur[i] * hrow[i];
                zrow[r] = acc;
            }
            S* pi = slice(gi, st, u) + s * u;
            S* pf = slice(gf, st, u) + s * u;
            S* pg = slice(gg, st, u) + s * u;
            S* po = slice(go, st, u) + s * u;
            S* ptc = slice(tc, st, u) + s * u;
            const S* cp = c_prev + static_cast<std::size_t>(s) * u;
            S* ct = c_t + static_cast<std::size_t>(s) * u;
            S* ht = h_t + static_cast<std::size_t>(s) * u;
            for (int i = 0; i < u; i++) {
                pi[i] = sigmoid(zrow[i]);
                pf[i] = sigmoid(zrow[u + i]);
                pg[i] = std::tanh(zrow[2 * u + i]);
                po[i] = sigmoid(zrow[3 * u + i]);
                ct[i] = pf[i] * cp[i] + pi[i] * pg[i];
                ptc[i] = std::tanh(ct[i]);
                ht[i] = po[i] * ptc[i];
            }
        }
    }

    // dense head forward (per sample, caching layer activations)
    const int n_dense = static_cast<int>(m.dense_w.size());
    std::vector<std::vector<S>> acts(n_dense + 1); // acts[0] = h_T
    acts[0].assign(static_cast<std::size_t>(B) * u, S{0});
    std::copy(slice(hs, steps, u), slice(hs, steps, u) + static_cast<std::size_t>(B) * u,
              acts[0].begin());
    {
        int prev = u;
        for (int k = 0; k < n_dense; k++) {
            int o = cfg.dense_sizes[k];
            acts[k + 1].assign(static_cast<std::size_t>(B) * o, S{0});
            for (int s = 0; s < B; s++) {
                const S* inrow = acts[k].data() + static_cast<std::size_t>(s) * prev;
                S* outrow = acts[k + 1].data() + static_cast<std::size_t>(s) * o;
                for (int r = 0; r < o; r++) {
                    S acc = m.dense_b[k][r];
                    const S* wr = m.dense_w[k].data() + static_cast<std::size_t>(r) * prev;
                    for (int i = 0; i < prev; i++) acc += wr[i] * inrow[i];
                    outrow[r] = k + 1 < n_dense ? std::max(S{0}, acc) : sigmoid(acc);
                }
            }
            prev = o;
        }
    }

    double loss = 0;
    std::vector<S> dact(static_cast<std::size_t>(B), S{0});
    for (int s = 0; s < B; s++) {
        S pred = acts[n_dense][s];
        S err = pred - batch[s]->label;
        loss += static_cast<double>(err) * static_cast<double>(err);
        // d(mean MSE)/dpred, then through the final sigmoid
        dact[s] = S{2} * err / static_cast<S>(B) * pred * (S{1} - pred);
    }
    loss /= B;

    // dense backward
    std::vector<S> dh(static_cast<std::size_t>(B) * u, S{0});
    {
        std::vector<S> dcur = dact; // gradient wrt pre-activation of layer k (start: last)
        for (int k = n_dense - 1; k >= 0; k--) {
            int o = cfg.dense_sizes[k];
            int prev = k == 0 ? u : cfg.dense_sizes[k - 1];
            std::vector<S> dprev(static_cast<std::size_t>(B) * prev, S{0});
            for (int s = 0; s < B; s++) {
                const S* inrow = acts[k].data() + static_cast<std::size_t>(s) * prev;
                const S* drow = dcur.data() + static_cast<std::size_t>(s) * o;
                S* dprow = dprev.data() + static_cast<std::size_t>(s) * prev;
                for (int r = 0; r < o; r++) {
                    S d = drow[r];
                    if (d == S{0}) continue;
                    S* gw = g.dense_w[k].data() + static_cast<std::size_t>(r) * prev;
                    const S* wr = m.dense_w[k].data() + static_cast<std::size_t>(r) * prev;
                    for (int i = 0; i < prev; i++) {
                        gw[i] += d * inrow[i];
                        dprow[i] += d * wr[i];
                    }
                    g.dense_b[k][r] += d;
                }
            }
            if (k > 0) {
                // through the ReLU of layer k-1
                for (std::size_t i = 0; i < dprev.size(); i++)
                    if (acts[k][i] <= S{0}) dprev[i] = S{0};
                dcur = std::move(dprev);
            } else {
                dh = std::move(dprev);
            }
        }
    }

    // BPTT
    std::vector<S> dc(static_cast<std::size_t>(B) * u, S{0});
    std::vector<S> dz(static_cast<std::size_t>(B) * 4 * u, S{0});
    std::vector<S> dh_prev(static_cast<std::size_t>(B) * u, S{0});
    const int vp1 = cfg.vocab_size + 1;
    for (int st = steps - 1; st >= 0; st--) {
        const int t = t0 + st;
        const S* h_prev = slice(hs, st, u);
        const S* c_prev = st == 0 ? c_prev_init.data() : slice(cs, st - 1, u);
        std::fill(dz.begin(), dz.end(), S{0});
        std::fill(dh_prev.begin(), dh_prev.end(), S{0});
        for (int s = 0; s < B; s++) {
            const bool active = t >= first[s];
            S* dhrow = dh.data() + static_cast<std::size_t>(s) * u;
            S* dcrow = dc.data() + static_cast<std::size_t>(s) * u;
            if (!active) continue; // dh/dc pass through unchanged
            const S* pi = slice(gi, st, u) + s * u;
            const S* pf = slice(gf, st, u) + s * u;
            const S* pg = slice(gg, st, u) + s * u;
            const S* po = slice(go, st, u) + s * u;
            const S* ptc = slice(tc, st, u) + s * u;
            const S* cp = c_prev + static_cast<std::size_t>(s) * u;
            S* dzrow = dz.data() + static_cast<std::size_t>(s) * 4 * u;
            for (int i = 0; i < u; i++) {
                S dhi = dhrow[i];
                S doo = dhi * ptc[i];
                S dci = dcrow[i] + dhi * po[i] * (S{1} - ptc[i] * ptc[i]);
                S dfi = dci * cp[i];
                S dii = dci * pg[i];
                S dgi = dci * pi[i];
                dzrow[i] = dii * pi[i] * (S{1} - pi[i]);
                dzrow[u + i] = dfi * pf[i] * (S{1} - pf[i]);
                dzrow[2 * u + i] = dgi * (S{1} - pg[i] * pg[i]);
                dzrow[3 * u + i] = doo * po[i] * (S{1} - po[i]);
                dcrow[i] = dci * pf[i]; // becomes dc_prev
            }
        }
        // parameter grads and upstream grads
        const S* x_t = slice(xs, st, in);
        std::vector<S> dx(in);
        for (int s = 0; s < B; s++) {
            const bool active = t >= first[s];
            if (!active) continue;
            const S* dzrow = dz.data() + static_cast<std::size_t>(s) * 4 * u;
            const S* xrow = x_t + static_cast<std::size_t>(s) * in;
            const S* hrow = h_prev + static_cast<std::size_t>(s) * u;
            S* dhprow = dh_prev.data() + static_cast<std::size_t>(s) * u;
            std::fill(dx.begin(), dx.end(), S{0});
            for (int r = 0; r < 4 * u; r++) {
                S d = dzrow[r];
                if (d == S{0}) continue;
                S* gw = g.W.data() + static_cast<std::size_t>(r) * in;
                const S* wr = m.W.data() + static_cast<std::size_t>(r) * in;
                for (int i = 0; i < in; i++) {
                    gw[i] += d * xrow[i];
                    dx[i] += d * wr[i];
                }
                S* gu = g.U.data() + static_cast<std::size_t>(r) * u;
                const S* ur = m.U.data() + static_cast<std::size_t>(r) * u;
                for (int i = 0; i < u; i++) {
                    gu[i] += d * hrow[i];
                    dhprow[i] += d * ur[i];
                }
                g.b[r] += d;
            }
            // scatter dx into the embedding rows of this step's tokens
            const auto& x = batch[s]->x;
            for (int lane = 0; lane < cfg.lanes; lane++) {
                int tok = x.tokens[lane][t];
                if (tok == 0) continue; // frozen padding row
                int table = cfg.shared_embedding ? 0 : lane;
                S* grow = g.embed.data() +
                          (static_cast<std::size_t>(table) * vp1 + tok) * cfg.embed_dim;
                for (int e = 0; e < cfg.embed_dim; e++)
                    grow[e] += dx[lane * cfg.embed_dim + e];
            }
        }
        // dh for the previous step: carried (masked) rows keep dh, active rows get dh_prev
        for (int s = 0; s < B; s++) {
            if (t < first[s]) continue;
            std::copy(dh_prev.begin() + static_cast<std::size_t>(s) * u,
                      dh_prev.begin() + static_cast<std::size_t>(s + 1) * u,
                      dh.begin() + static_cast<std::size_t>(s) * u);
        }
    }
    return loss;
}

template <typename S>
struct AdamState {
    Grads<S> m1, m2;
    std::int64_t step = 0;

    static AdamState like(const Model<S>& model) {
        return AdamState{Grads<S>::like(model), Grads<S>::like(model), 0};
    }
};

template <typename S>
void adam_update_tensor(std::vector<S>& w, const std::vector<S>& g, std::vector<S>& m1,
                        std::vector<S>& m2, const TrainConfig& tc, double bc1, double bc2) {
    for (std::size_t i = 0; i < w.size(); i++) {
        double gi = static_cast<double>(g[i]);
        double m = tc.beta1 * static_cast<double>(m1[i]) + (1 - tc.beta1) * gi;
        double v = tc.beta2 * static_cast<double>(m2[i]) + (1 - tc.beta2) * gi * gi;
        m1[i] = static_cast<S>(m);
        m2[i] = static_cast<S>(v);
        w[i] -= static_cast<S>(tc.lr * (m / bc1) / (std::sqrt(v / bc2) + tc.eps));
    }
}

template <typename S>
void adam_step(Model<S>& m, const Grads<S>& g, AdamState<S>& st, const TrainConfig& tc) {
    st.step++;
    double bc1 = 1.0 - std::pow(tc.beta1, static_cast<double>(st.step));
    double bc2 = 1.0 - std::pow(tc.beta2, static_cast<double>(st.step));
    adam_update_tensor(m.embed, g.embed, st.m1.embed, st.m2.embed, tc, bc1, bc2);
    // re-freeze the padding row(s); token 0 never receives gradient, but the
    // update must not drift it through Adam's moment terms either
    const int vp1 = m.cfg.vocab_size + 1;
    for (int t = 0; t < m.cfg.n_embed_tables(); t++)
        for (int e = 0; e < m.cfg.embed_dim; e++)
            m.embed[(static_cast<std::size_t>(t) * vp1) * m.cfg.embed_dim + e] = S{0};
    adam_update_tensor(m.W, g.W, st.m1.W, st.m2.W, tc, bc1, bc2);
    adam_update_tensor(m.U, g.U, st.m1.U, st.m2.U, tc, bc1, bc2);
    adam_update_tensor(m.b, g.b, st.m1.b, st.m2.b, tc, bc1, bc2);
    for (std::size_t k = 0; k < m.dense_w.size(); k++) {
        adam_update_tensor(m.dense_w[k], g.dense_w[k], st.m1.dense_w[k], st.m2.dense_w[k], tc, bc1,
                           bc2);
        adam_update_tensor(m.dense_b[k], g.dense_b[k], st.m1.dense_b[k], st.m2.dense_b[k], tc, bc1,
                           bc2);
    }
}

} // namespace nn_detail

template <typename S>
double evaluate_mse(const Model<S>& m, const std::vector<LabeledSample<S>>& samples) {
    if (samples.empty()) throw InvalidArgument("empty evaluation set");
    double loss = 0;
    for (const auto& s : samples) {
        double err = static_cast<double>(forward(m, s.x)) - static_cast<double>(s.label);
        loss += err * err;
    }
    return loss / static_cast<double>(samples.size());
}

// Mini-batch Adam with validation-based early stopping. On return the model
// holds the parameters of the best validation epoch.
template <typename S>
TrainHistory train(Model<S>& m, const std::vector<LabeledSample<S>>& train_set,
                   const std::vector<LabeledSample<S>>& val_set, const TrainConfig& tc) {
    if (train_set.empty() || val_set.empty())
        throw InvalidArgument("train/validation sets must be non-empty");
    TrainHistory hist;

    // Start the output at the base rate: with the final bias at the logit of
    // the training-label mean, an uninformative (fully masked) input reads
    // out near that mean instead of 0.5, and the first epochs need not spend
    // steps shifting the global offset.
    double label_mean = 0;
    for (const auto& s : train_set) label_mean += static_cast<double>(s.label);
    label_mean = std::clamp(label_mean / static_cast<double>(train_set.size()), 0.01, 0.99);
    m.dense_b.back().back() = static_cast<S>(std::log(label_mean / (1.0 - label_mean)));

    auto adam = nn_detail::AdamState<S>::like(m);
    auto grads = nn_detail::Grads<S>::like(m);
    Model<S> best = m;
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); i++) order[i] = i;

    for (int epoch = 0; epoch < tc.epochs; epoch++) {
        SplitMix64 rng(child_seed(tc.seed, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; i--)
            std::swap(order[i - 1], order[rng.below(i)]);

        double epoch_loss = 0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
            std::vector<const LabeledSample<S>*> batch;
            for (std::size_t i = start; i < std::min(order.size(), start + tc.batch_size); i++)
                batch.push_back(&train_set[order[i]]);
            grads.zero();
            double loss = nn_detail::batch_grad(m, batch, grads);
            if (!std::isfinite(loss))
                throw NumericalError("training diverged: non-finite loss at epoch " +
                                     std::to_string(epoch));
            nn_detail::adam_step(m, grads, adam, tc);
            epoch_loss += loss * batch.size();
            n_batches++;
        }
        hist.train_loss.push_back(epoch_loss / static_cast<double>(train_set.size()));
        double vl = evaluate_mse(m, val_set);
        hist.val_loss.push_back(vl);
        if (vl < best_val) {
            best_val = vl;
            hist.best_epoch = epoch;
            best = m;
            since_best = 0;
        } else {
            since_best++;
            if (tc.patience > 0 && since_best >= tc.patience) break;
        }
    }
    m = best;
    return hist;
}

// Continue Adam from the current parameters on new samples only.
template <typename S>
void fine_tune(Model<S>& m, const std::vector<LabeledSample<S>>& new_samples,
               const TrainConfig& tc) {
    if (new_samples.empty()) return;
    auto adam = nn_detail::AdamState<S>::like(m);
    auto grads = nn_detail::Grads<S>::like(m);
    std::vector<std::size_t> order(new_samples.size());
    for (std::size_t i = 0; i < order.size(); i++) order[i] = i;
    for (int epoch = 0; epoch < tc.epochs; epoch++) {
        SplitMix64 rng(child_seed(tc.seed, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; i--)
            std::swap(order[i - 1], order[rng.below(i)]);
        for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
            std::vector<const LabeledSample<S>*> batch;
            for (std::size_t i = start; i < std::min(order.size(), start + tc.batch_size); i++)
                batch.push_back(&new_samples[order[i]]);
            grads.zero();
            double loss = nn_detail::batch_grad(m, batch, grads);
            if (!std::isfinite(loss)) throw NumericalError("fine-tuning diverged");
            nn_detail::adam_step(m, grads, adam, tc);
        }
    }
}

// ---------------------------------------------------------------------------
// Gradient verification (central finite differences, double precision)
// ---------------------------------------------------------------------------

inline double grad_check(Model<double>& m, const LabeledSample<double>& sample,
                         double fd_eps = 1e-3) {
    auto grads = nn_detail::Grads<double>::like(m);
    std::vector<const LabeledSample<double>*> batch{&sample};
    nn_detail::batch_grad(m, batch, grads);

    auto loss_at = [&]() {
        double err = forward(m, sample.x) - sample.label;
        return err * err;
    };
    double max_rel = 0;
    auto check_tensor = [&](std::vector<double>& w, const std::vector<double>& g,
                            const std::vector<std::size_t>* frozen = nullptr) {
        for (std::size_t i = 0; i < w.size(); i++) {
            if (frozen &&
                std::find(frozen->begin(), frozen->end(), i) != frozen->end())
                continue;
            double orig = w[i];
            w[i] = orig + fd_eps;
            double lp = loss_at();
            w[i] = orig - fd_eps;
            double lm = loss_at();
            w[i] = orig;
            double gn = (lp - lm) / (2 * fd_eps);
            double rel = std::abs(g[i] - gn) / (std::abs(g[i]) + std::abs(gn) + 1e-6);
            max_rel = std::max(max_rel, rel);
        }
    };
    // skip padding embedding rows: frozen by contract
    std::vector<std::size_t> frozen;
    const int vp1 = m.cfg.vocab_size + 1;
    for (int t = 0; t < m.cfg.n_embed_tables(); t++)
        for (int e = 0; e < m.cfg.embed_dim; e++)
            frozen.push_back((static_cast<std::size_t>(t) * vp1) * m.cfg.embed_dim + e);
    check_tensor(m.embed, grads.embed, &frozen);
    check_tensor(m.W, grads.W);
    check_tensor(m.U, grads.U);
    check_tensor(m.b, grads.b);
    for (std::size_t k = 0; k < m.dense_w.size(); k++) {
        check_tensor(m.dense_w[k], grads.dense_w[k]);
        check_tensor(m.dense_b[k], grads.dense_b[k]);
    }
    return max_rel;
}

// Analytic gradients for a single sample, exposed for masking/frozen-row tests.
inline nn_detail::Grads<double> analytic_grads(const Model<double>& m,
                                               const LabeledSample<double>& sample) {
    auto grads = nn_detail::Grads<double>::like(m);
    std::vector<const LabeledSample<double>*> batch{&sample};
    nn_detail::batch_grad(m, batch, grads);
    return grads;
}

// ---------------------------------------------------------------------------
// Checkpoints: magic, LE uint64 header length, JSON header, float32 tensors.
// ---------------------------------------------------------------------------

namespace nn_detail {

constexpr char kCkptMagic[8] = {'Q', 'F', 'P', 'C', 'K', 'P', 'T', '1'};

inline void write_f32(std::ostream& out, const std::vector<float>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(float)));
}

template <typename S>
std::vector<float> to_f32(const std::vector<S>& v) {
    return std::vector<float>(v.begin(), v.end());
}

} // namespace nn_detail

template <typename S>
void save_checkpoint(const Model<S>& m, std::ostream& out) {
    nlohmann::ordered_json header;
    header["format_version"] = 1;
    header["config"] = m.cfg.to_json();
    header["vocab_hash"] = m.vocab_hash;
    nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
    auto add = [&](const std::string& name, std::size_t size) {
        tensors.push_back({{"name", name}, {"size", size}});
    };
    add("embed", m.embed.size());
    add("W", m.W.size());
    add("U", m.U.size());
    add("b", m.b.size());
    for (std::size_t k = 0; k < m.dense_w.size(); k++) {
        add("dense_w" + std::to_string(k), m.dense_w[k].size());
        add("dense_b" + std::to_string(k), m.dense_b[k].size());
    }
    header["tensors"] = tensors;
    std::string hs = header.dump();
    out.write(nn_detail::kCkptMagic, 8);
    std::uint64_t len = hs.size();
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    nn_detail::write_f32(out, nn_detail::to_f32(m.embed));
    nn_detail::write_f32(out, nn_detail::to_f32(m.W));
    nn_detail::write_f32(out, nn_detail::to_f32(m.U));
    nn_detail::write_f32(out, nn_detail::to_f32(m.b));
    for (std::size_t k = 0; k < m.dense_w.size(); k++) {
        nn_detail::write_f32(out, nn_detail::to_f32(m.dense_w[k]));
        nn_detail::write_f32(out, nn_detail::to_f32(m.dense_b[k]));
    }
}

template <typename S>
void save_checkpoint(const Model<S>& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot open '" + path + "' for writing");
    save_checkpoint(m, f);
}

template <typename S = float>
Model<S> load_checkpoint(std::istream& in) {
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, nn_detail::kCkptMagic, 8) != 0)
        throw ParseError("not a model checkpoint (bad magic)");
    std::uint64_t len = 0;
    if (!in.read(reinterpret_cast<char*>(&len), 8) || len == 0 || len > (1u << 20))
        throw ParseError("corrupted checkpoint header");
    std::string hs(len, '\0');
    if (!in.read(hs.data(), static_cast<std::streamsize>(len)))
        throw ParseError("truncated checkpoint header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hs);
    } catch (const nlohmann::json::exception&) {
        throw ParseError("corrupted checkpoint header (bad JSON)");
    }
    if (header.value("format_version", 0) != 1)
        throw ParseError("unsupported checkpoint format version");
    Model<S> m;
    m.cfg = ModelConfig::from_json(header.at("config"));
    m.vocab_hash = header.value("vocab_hash", std::uint64_t{0});

    auto read_tensor = [&](const std::string& name, std::size_t expect) {
        std::vector<float> buf(expect);
        if (!in.read(reinterpret_cast<char*>(buf.data()),
                     static_cast<std::streamsize>(expect * sizeof(float))))
            throw ParseError("truncated tensor '" + name + "' in checkpoint");
        return std::vector<S>(buf.begin(), buf.end());
    };
    const std::size_t vp1 = m.cfg.vocab_size + 1;
    std::size_t in_w = m.cfg.input_width(), u = m.cfg.lstm_units;
    // shapes are derived from the config; the header's sizes must agree
    std::map<std::string, std::size_t> expected{
        {"embed", static_cast<std::size_t>(m.cfg.n_embed_tables()) * vp1 * m.cfg.embed_dim},
        {"W", 4 * u * in_w},
        {"U", 4 * u * u},
        {"b", 4 * u}};
    std::size_t prev = u;
    for (std::size_t k = 0; k < m.cfg.dense_sizes.size(); k++) {
        expected["dense_w" + std::to_string(k)] = prev * m.cfg.dense_sizes[k];
        expected["dense_b" + std::to_string(k)] = m.cfg.dense_sizes[k];
        prev = m.cfg.dense_sizes[k];
    }
    for (const auto& t : header.at("tensors")) {
        auto name = t.at("name").get<std::string>();
        auto it = expected.find(name);
        if (it == expected.end() || it->second != t.at("size").get<std::size_t>())
            throw ParseError("checkpoint tensor '" + name + "' does not match its config");
    }
    m.embed = read_tensor("embed", expected["embed"]);
    m.W = read_tensor("W", expected["W"]);
    m.U = read_tensor("U", expected["U"]);
    m.b = read_tensor("b", expected["b"]);
    prev = u;
    for (std::size_t k = 0; k < m.cfg.dense_sizes.size(); k++) {
        m.dense_w.push_back(read_tensor("dense_w" + std::to_string(k),
                                        prev * m.cfg.dense_sizes[k]));
        m.dense_b.push_back(
            read_tensor("dense_b" + std::to_string(k), m.cfg.dense_sizes[k]));
        prev = m.cfg.dense_sizes[k];
    }
    return m;
}

template <typename S = float>
Model<S> load_checkpoint_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot open checkpoint '" + path + "'");
    return load_checkpoint<S>(f);
}

} // namespace qfp
