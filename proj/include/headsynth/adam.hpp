#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "headsynth/errors.hpp"
#include "headsynth/tensor.hpp"

namespace headsynth {

// Adam with standard bias correction. Moment tensors are kept aligned with
// the parameter list handed to adam_step; the list order must be stable.
struct AdamState {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;

    bool initialised() const { return !m.empty(); }
};

inline void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
                      AdamState& state) {
    if (params.size() != grads.size()) throw ArgumentError("adam_step: param/grad count mismatch");
    if (!state.initialised()) {
        state.m.reserve(params.size());
        state.v.reserve(params.size());
        for (const Tensor* p : params) {
            state.m.emplace_back(p->shape);
            state.v.emplace_back(p->shape);
        }
    }
    if (state.m.size() != params.size()) throw ArgumentError("adam_step: state does not match params");

    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);

    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        if (!p.same_shape(g) || !p.same_shape(state.m[i]))
            throw ArgumentError("adam_step: shape mismatch at parameter " + std::to_string(i));
        double* mp = state.m[i].data();
        double* vp = state.v[i].data();
        double* pp = p.data();
        const double* gp = g.data();
        for (std::size_t j = 0; j < p.numel(); ++j) {
            mp[j] = state.beta1 * mp[j] + (1.0 - state.beta1) * gp[j];
            vp[j] = state.beta2 * vp[j] + (1.0 - state.beta2) * gp[j] * gp[j];
            const double mhat = mp[j] / bc1;
            const double vhat = vp[j] / bc2;
            pp[j] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

} // namespace headsynth
