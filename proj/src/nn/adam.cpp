#include "gdl/nn.hpp"

#include "gdl/errors.hpp"

#include <algorithm>
#include <cmath>

namespace gdl::nn {

void adam_step(ParamSet &params, const ParamSet &grads, AdamState &state, const AdamConfig &config,
               const std::vector<std::string> &frozen) {
    if (!params.same_layout(grads)) {
        throw ContractError("adam_step: gradient layout does not match parameters");
    }
    if (state.m.size() != params.size()) {
        state.m.clear();
        state.v.clear();
        for (const auto &t : params) {
            state.m.emplace_back(t.numel(), 0.0);
            state.v.emplace_back(t.numel(), 0.0);
        }
        state.step = 0;
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor &p = params[i];
        if (std::find(frozen.begin(), frozen.end(), p.name) != frozen.end()) {
            continue;
        }
        const auto &g = grads[i].data;
        auto &m = state.m[i];
        auto &v = state.v[i];
        for (std::size_t j = 0; j < p.numel(); ++j) {
            m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
            v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p.data[j] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
        }
    }
}

} // namespace gdl::nn
