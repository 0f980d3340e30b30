#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "headsynth/errors.hpp"
#include "headsynth/rng.hpp"
#include "headsynth/tensor.hpp"

namespace headsynth {

enum class Activation { identity, sigmoid, tanh };

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

// --- Dense layer: y = act(x * W^T + b), applied row-wise.

struct DenseLayer {
    Tensor w; // [out x in]
    Tensor b; // [out]
    Activation act = Activation::identity;

    std::size_t in_dim() const { return w.shape[1]; }
    std::size_t out_dim() const { return w.shape[0]; }

    static DenseLayer glorot(std::size_t in, std::size_t out, Activation act, Rng& rng) {
        DenseLayer l;
        l.w = Tensor({out, in});
        l.b = Tensor({out});
        l.act = act;
        double lim = glorot_limit(in, out);
        for (double& v : l.w.values) v = rng.uniform(-lim, lim);
        return l;
    }
};

struct DenseGrads {
    Tensor w;
    Tensor b;

    void match(const DenseLayer& l) {
        if (!w.same_shape(l.w)) {
            w = Tensor(l.w.shape);
            b = Tensor(l.b.shape);
        }
    }
    void zero() {
        w.fill(0.0);
        b.fill(0.0);
    }
};

struct DenseCache {
    Tensor x; // [rows x in]
    Tensor y; // [rows x out], post-activation
};

inline Tensor dense_forward(const DenseLayer& layer, const Tensor& x, DenseCache* cache = nullptr) {
    if (x.shape.empty() || x.shape.back() != layer.in_dim())
        throw ArgumentError("dense_forward: input width does not match layer");
    const std::size_t rows = x.numel() / layer.in_dim();
    const std::size_t in = layer.in_dim(), out = layer.out_dim();

    Tensor y({rows, out});
    gemm_nt(x.data(), in, layer.w.data(), in, y.data(), out, rows, in, out, false);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < out; ++j) y.values[i * out + j] += layer.b.values[j];
    switch (layer.act) {
    case Activation::identity: break;
    case Activation::sigmoid:
        for (double& v : y.values) v = sigmoid(v);
        break;
    case Activation::tanh:
        for (double& v : y.values) v = std::tanh(v);
        break;
    }
    if (cache) {
        cache->x = x;
        cache->y = y;
    }
    return y;
}

// Returns grad wrt x; accumulates parameter grads into `grads`.
inline Tensor dense_backward(const DenseLayer& layer, const DenseCache& cache, const Tensor& grad_y,
                             DenseGrads& grads) {
    const std::size_t in = layer.in_dim(), out = layer.out_dim();
    const std::size_t rows = cache.y.numel() / out;
    if (grad_y.numel() != rows * out) throw ArgumentError("dense_backward: grad shape mismatch");
    grads.match(layer);

    Tensor da({rows, out}); // grad wrt pre-activation
    for (std::size_t i = 0; i < rows * out; ++i) {
        double g = grad_y.values[i];
        double y = cache.y.values[i];
        switch (layer.act) {
        case Activation::identity: break;
        case Activation::sigmoid: g *= y * (1.0 - y); break;
        case Activation::tanh: g *= 1.0 - y * y; break;
        }
        da.values[i] = g;
    }

    // dW[out x in] += da^T * x;  db += column sums;  dx = da * W.
    gemm_tn(da.data(), out, cache.x.data(), in, grads.w.data(), in, rows, out, in, true);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < out; ++j) grads.b.values[j] += da.values[i * out + j];

    Tensor dx({rows, in});
    gemm_nn(da.data(), out, layer.w.data(), in, dx.data(), in, rows, out, in, false);
    return dx;
}

// --- Multi-layer GRU with the convention
//   z = sigmoid(Wz x + Uz h + bz)
//   r = sigmoid(Wr x + Ur h + br)
//   n = tanh(Wn x + Un (r o h) + bn)
//   h' = (1 - z) o n + z o h
// Layer 0 consumes the input sequence, higher layers the previous layer's
// output sequence. Sequences are step-major: [T x B x width].

struct GruLayer {
    Tensor wz, wr, wn; // [H x in]
    Tensor uz, ur, un; // [H x H]
    Tensor bz, br, bn; // [H]
};

struct GruStack {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    std::vector<GruLayer> layers;

    std::size_t num_layers() const { return layers.size(); }

    static GruStack glorot(std::size_t input_dim, std::size_t hidden_dim, std::size_t num_layers,
                           Rng& rng) {
        GruStack s;
        s.input_dim = input_dim;
        s.hidden_dim = hidden_dim;
        s.layers.resize(num_layers);
        for (std::size_t l = 0; l < num_layers; ++l) {
            const std::size_t in = l == 0 ? input_dim : hidden_dim;
            auto init = [&](Tensor& t, std::size_t rows, std::size_t cols) {
                t = Tensor({rows, cols});
                double lim = glorot_limit(cols, rows);
                for (double& v : t.values) v = rng.uniform(-lim, lim);
            };
            auto& L = s.layers[l];
            init(L.wz, hidden_dim, in);
            init(L.wr, hidden_dim, in);
            init(L.wn, hidden_dim, in);
            init(L.uz, hidden_dim, hidden_dim);
            init(L.ur, hidden_dim, hidden_dim);
            init(L.un, hidden_dim, hidden_dim);
            L.bz = Tensor({hidden_dim});
            L.br = Tensor({hidden_dim});
            L.bn = Tensor({hidden_dim});
        }
        return s;
    }
};

struct GruGrads {
    std::vector<GruLayer> layers; // same shapes as the stack's parameters

    void match(const GruStack& s) {
        if (layers.size() == s.layers.size() && !s.layers.empty() &&
            layers[0].wz.same_shape(s.layers[0].wz))
            return;
        layers.clear();
        layers.resize(s.layers.size());
        for (std::size_t l = 0; l < s.layers.size(); ++l) {
            auto& g = layers[l];
            const auto& p = s.layers[l];
            g.wz = Tensor(p.wz.shape);
            g.wr = Tensor(p.wr.shape);
            g.wn = Tensor(p.wn.shape);
            g.uz = Tensor(p.uz.shape);
            g.ur = Tensor(p.ur.shape);
            g.un = Tensor(p.un.shape);
            g.bz = Tensor(p.bz.shape);
            g.br = Tensor(p.br.shape);
            g.bn = Tensor(p.bn.shape);
        }
    }
    void zero() {
        for (auto& g : layers) {
            g.wz.fill(0);
            g.wr.fill(0);
            g.wn.fill(0);
            g.uz.fill(0);
            g.ur.fill(0);
            g.un.fill(0);
            g.bz.fill(0);
            g.br.fill(0);
            g.bn.fill(0);
        }
    }
};

namespace detail {

// Per-layer packed weight views for batched steps: W [in x 3H] (z|r|n),
// Uzr [H x 2H] (z|r), Un [H x H], bias [3H].
struct GruPacked {
    std::vector<double> w, uzr, un, bias;
};

inline GruPacked pack_gru_layer(const GruLayer& L, std::size_t in, std::size_t H) {
    GruPacked p;
    p.w.assign(in * 3 * H, 0.0);
    p.uzr.assign(H * 2 * H, 0.0);
    p.un.assign(H * H, 0.0);
    p.bias.assign(3 * H, 0.0);
    const Tensor* wg[3] = {&L.wz, &L.wr, &L.wn};
    const Tensor* bg[3] = {&L.bz, &L.br, &L.bn};
    for (std::size_t g = 0; g < 3; ++g)
        for (std::size_t h = 0; h < H; ++h) {
            for (std::size_t j = 0; j < in; ++j) p.w[j * 3 * H + g * H + h] = wg[g]->at(h, j);
            p.bias[g * H + h] = bg[g]->values[h];
        }
    const Tensor* ug[2] = {&L.uz, &L.ur};
    for (std::size_t g = 0; g < 2; ++g)
        for (std::size_t h = 0; h < H; ++h)
            for (std::size_t j = 0; j < H; ++j) p.uzr[j * 2 * H + g * H + h] = ug[g]->at(h, j);
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t j = 0; j < H; ++j) p.un[j * H + h] = L.un.at(h, j);
    return p;
}

} // namespace detail

struct GruCache {
    std::size_t T = 0, B = 0;
    Tensor input;                      // [T x B x input_dim]
    Tensor h0;                         // [num_layers x B x H]
    std::vector<Tensor> outputs;       // per layer, [T x B x H]
    std::vector<Tensor> z, r, n, rh;   // per layer, [T x B x H]
    std::vector<detail::GruPacked> packed;
};

// Forward pass over a step-major sequence. `input` is [T x B x input_dim]
// (a [T x input_dim] single sequence is accepted as B = 1); `h0` is
// [num_layers x B x H] or empty for zeros. Returns the top layer's output
// sequence [T x B x H].
inline Tensor gru_forward(const GruStack& stack, const Tensor& input, const Tensor& h0,
                          GruCache& cache) {
    const std::size_t H = stack.hidden_dim;
    std::size_t T = 0, B = 0;
    if (input.shape.size() == 3) {
        T = input.shape[0];
        B = input.shape[1];
        if (input.shape[2] != stack.input_dim)
            throw ArgumentError("gru_forward: input width does not match stack input_dim");
    } else if (input.shape.size() == 2) {
        T = input.shape[0];
        B = 1;
        if (input.shape[1] != stack.input_dim)
            throw ArgumentError("gru_forward: input width does not match stack input_dim");
    } else {
        throw ArgumentError("gru_forward: input must be [T x B x D] or [T x D]");
    }
    if (h0.numel() != 0 && h0.numel() != stack.num_layers() * B * H)
        throw ArgumentError("gru_forward: h0 must be [num_layers x B x H]");

    cache.T = T;
    cache.B = B;
    cache.input = input;
    cache.input.shape = {T, B, stack.input_dim};
    cache.h0 = h0.numel() ? h0 : Tensor({stack.num_layers(), B, H});
    cache.h0.shape = {stack.num_layers(), B, H};
    cache.outputs.assign(stack.num_layers(), Tensor({T, B, H}));
    cache.z.assign(stack.num_layers(), Tensor({T, B, H}));
    cache.r.assign(stack.num_layers(), Tensor({T, B, H}));
    cache.n.assign(stack.num_layers(), Tensor({T, B, H}));
    cache.rh.assign(stack.num_layers(), Tensor({T, B, H}));
    cache.packed.clear();

    std::vector<double> gates(B * 3 * H);
    for (std::size_t l = 0; l < stack.num_layers(); ++l) {
        const std::size_t in = l == 0 ? stack.input_dim : H;
        cache.packed.push_back(detail::pack_gru_layer(stack.layers[l], in, H));
        const auto& pk = cache.packed.back();
        const double* x_seq = l == 0 ? cache.input.data() : cache.outputs[l - 1].data();
        const double* h_prev = cache.h0.data() + l * B * H;

        for (std::size_t t = 0; t < T; ++t) {
            const double* xt = x_seq + t * B * in;
            double* zt = cache.z[l].data() + t * B * H;
            double* rt = cache.r[l].data() + t * B * H;
            double* nt = cache.n[l].data() + t * B * H;
            double* rht = cache.rh[l].data() + t * B * H;
            double* ht = cache.outputs[l].data() + t * B * H;

            gemm_nn(xt, in, pk.w.data(), 3 * H, gates.data(), 3 * H, B, in, 3 * H, false);
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t j = 0; j < 3 * H; ++j) gates[b * 3 * H + j] += pk.bias[j];
            gemm_nn(h_prev, H, pk.uzr.data(), 2 * H, gates.data(), 3 * H, B, H, 2 * H, true);
            for (std::size_t b = 0; b < B; ++b) {
                double* g = gates.data() + b * 3 * H;
                const double* hp = h_prev + b * H;
                for (std::size_t j = 0; j < H; ++j) {
                    zt[b * H + j] = sigmoid(g[j]);
                    rt[b * H + j] = sigmoid(g[H + j]);
                    rht[b * H + j] = rt[b * H + j] * hp[j];
                }
            }
            gemm_nn(rht, H, pk.un.data(), H, gates.data() + 2 * H, 3 * H, B, H, H, true);
            for (std::size_t b = 0; b < B; ++b) {
                const double* g = gates.data() + b * 3 * H;
                const double* hp = h_prev + b * H;
                for (std::size_t j = 0; j < H; ++j) {
                    double nv = std::tanh(g[2 * H + j]);
                    nt[b * H + j] = nv;
                    ht[b * H + j] = (1.0 - zt[b * H + j]) * nv + zt[b * H + j] * hp[j];
                }
            }
            h_prev = ht;
        }
    }
    return cache.outputs.back();
}

struct GruBackwardResult {
    Tensor grad_input; // [T x B x input_dim]
    Tensor grad_h0;    // [num_layers x B x H]
};

// Exact backpropagation through time. `grad_outputs` matches the forward
// return shape; parameter grads accumulate into `grads`.
inline GruBackwardResult gru_backward(const GruStack& stack, const GruCache& cache,
                                      const Tensor& grad_outputs, GruGrads& grads) {
    const std::size_t H = stack.hidden_dim;
    const std::size_t T = cache.T, B = cache.B;
    if (T == 0 || cache.packed.size() != stack.num_layers())
        throw ArgumentError("gru_backward: cache does not match a completed forward pass");
    if (grad_outputs.numel() != T * B * H)
        throw ArgumentError("gru_backward: grad_outputs shape mismatch");
    grads.match(stack);

    GruBackwardResult res;
    res.grad_h0 = Tensor({stack.num_layers(), B, H});

    // dY for the layer currently being processed (top first).
    Tensor dy = grad_outputs;
    dy.shape = {T, B, H};

    std::vector<double> dg(B * 3 * H), dh(B * H), dh_next(B * H), drh(B * H);

    for (std::size_t l = stack.num_layers(); l-- > 0;) {
        const std::size_t in = l == 0 ? stack.input_dim : H;
        const auto& pk = cache.packed[l];
        const double* x_seq = l == 0 ? cache.input.data() : cache.outputs[l - 1].data();

        // Packed parameter grad accumulators for this layer.
        std::vector<double> dW(in * 3 * H, 0.0), dUzr(H * 2 * H, 0.0), dUn(H * H, 0.0),
            dBias(3 * H, 0.0);
        Tensor dx({T, B, in});
        std::fill(dh.begin(), dh.end(), 0.0);

        for (std::size_t t = T; t-- > 0;) {
            const double* zt = cache.z[l].data() + t * B * H;
            const double* rt = cache.r[l].data() + t * B * H;
            const double* nt = cache.n[l].data() + t * B * H;
            const double* rht = cache.rh[l].data() + t * B * H;
            const double* h_prev =
                t == 0 ? cache.h0.data() + l * B * H : cache.outputs[l].data() + (t - 1) * B * H;
            const double* dyt = dy.data() + t * B * H;
            const double* xt = x_seq + t * B * in;

            // dh = grad from this step's output + carry from the future.
            // Gate grads: dz via (h_prev - n), dn via (1 - z), carry via z.
            for (std::size_t b = 0; b < B; ++b) {
                for (std::size_t j = 0; j < H; ++j) {
                    const std::size_t idx = b * H + j;
                    const double dh_t = dyt[idx] + dh[idx];
                    const double z = zt[idx], r = rt[idx], nv = nt[idx];
                    const double dz = dh_t * (h_prev[idx] - nv);
                    const double dn = dh_t * (1.0 - z);
                    dh_next[idx] = dh_t * z;
                    const double dan = dn * (1.0 - nv * nv);
                    dg[b * 3 * H + j] = dz * z * (1.0 - z);
                    dg[b * 3 * H + 2 * H + j] = dan;
                    (void)r;
                }
            }
            // drh = dan * Un^T; then dr and the r-part of the carry.
            gemm_nt(dg.data() + 2 * H, 3 * H, pk.un.data(), H, drh.data(), H, B, H, H, false);
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t j = 0; j < H; ++j) {
                    const std::size_t idx = b * H + j;
                    const double r = rt[idx];
                    const double dr = drh[idx] * h_prev[idx];
                    dh_next[idx] += drh[idx] * r;
                    dg[b * 3 * H + H + j] = dr * r * (1.0 - r);
                }

            // Parameter grads.
            gemm_tn(xt, in, dg.data(), 3 * H, dW.data(), 3 * H, B, in, 3 * H, true);
            gemm_tn(h_prev, H, dg.data(), 3 * H, dUzr.data(), 2 * H, B, H, 2 * H, true);
            gemm_tn(rht, H, dg.data() + 2 * H, 3 * H, dUn.data(), H, B, H, H, true);
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t j = 0; j < 3 * H; ++j) dBias[j] += dg[b * 3 * H + j];

            // Input grad and hidden carry.
            gemm_nt(dg.data(), 3 * H, pk.w.data(), 3 * H, dx.data() + t * B * in, in, B, 3 * H, in,
                    false);
            gemm_nt(dg.data(), 3 * H, pk.uzr.data(), 2 * H, dh_next.data(), H, B, 2 * H, H, true);

            std::swap(dh, dh_next);
        }

        double* gh0 = res.grad_h0.data() + l * B * H;
        for (std::size_t i = 0; i < B * H; ++i) gh0[i] = dh[i];

        // Unpack into the per-gate grad tensors.
        auto& G = grads.layers[l];
        Tensor* wg[3] = {&G.wz, &G.wr, &G.wn};
        Tensor* bg[3] = {&G.bz, &G.br, &G.bn};
        for (std::size_t g = 0; g < 3; ++g)
            for (std::size_t h = 0; h < H; ++h) {
                for (std::size_t j = 0; j < in; ++j) wg[g]->at(h, j) += dW[j * 3 * H + g * H + h];
                bg[g]->values[h] += dBias[g * H + h];
            }
        Tensor* ug[2] = {&G.uz, &G.ur};
        for (std::size_t g = 0; g < 2; ++g)
            for (std::size_t h = 0; h < H; ++h)
                for (std::size_t j = 0; j < H; ++j) ug[g]->at(h, j) += dUzr[j * 2 * H + g * H + h];
        for (std::size_t h = 0; h < H; ++h)
            for (std::size_t j = 0; j < H; ++j) G.un.at(h, j) += dUn[j * H + h];

        if (l == 0)
            res.grad_input = std::move(dx);
        else
            dy = std::move(dx);
    }
    return res;
}

// Single-sequence convenience overloads matching the [T x D] contract.
inline Tensor gru_forward(const GruStack& stack, const Tensor& input, GruCache& cache) {
    return gru_forward(stack, input, Tensor{}, cache);
}

} // namespace headsynth
