#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace v2xsim {

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-15;
};

/// First and second moments for one flat parameter block.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;

    void reset(std::size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
        step = 0;
    }
};

/// One bias-corrected Adam update, in place. The state is sized on first use;
/// a size change afterwards is an error. When `lr_scale` is non-empty,
/// element i uses lr * lr_scale[i % lr_scale.size()].
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
               const AdamParams& hp = {}, std::span<const double> lr_scale = {});

}  // namespace v2xsim
