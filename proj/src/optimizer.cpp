#include "v2xsim/optimizer.hpp"

#include "v2xsim/errors.hpp"

#include <cmath>

namespace v2xsim {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
               const AdamParams& hp, std::span<const double> lr_scale) {
    if (params.size() != grads.size()) {
        throw InvalidInput("adam: parameter and gradient sizes differ");
    }
    if (state.m.empty() && state.step == 0) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size()) {
        throw InvalidInput("adam: state size differs from parameter size");
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(hp.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(hp.beta2, double(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = hp.beta1 * state.m[i] + (1 - hp.beta1) * g;
        state.v[i] = hp.beta2 * state.v[i] + (1 - hp.beta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        const double step = lr_scale.empty() ? lr : lr * lr_scale[i % lr_scale.size()];
        params[i] -= step * mhat / (std::sqrt(vhat) + hp.eps);
    }
}

}  // namespace v2xsim
