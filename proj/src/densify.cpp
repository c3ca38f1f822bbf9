#include "v2xsim/densify.hpp"

#include "v2xsim/errors.hpp"

#include <cmath>

namespace v2xsim {

double split_opacity(double opacity) { return 1.0 - std::sqrt(1.0 - opacity); }

DensifyResult densify_and_prune(GaussianSet& set, const DensifyStats& stats, const DensifyConfig& config,
                                std::mt19937_64& rng) {
    const std::size_t n = set.size();
    if (stats.count.size() != n || stats.grad_sum.size() != n) {
        throw InvalidInput("densify: statistics size differs from the set size");
    }
    DensifyResult result;
    GaussianSet children(set.sh_degree(), set.num_classes());
    std::vector<char> keep(n, 1);
    std::normal_distribution<double> normal(0.0, 1.0);

    for (std::size_t i = 0; i < n; ++i) {
        if (stats.mean(i) < config.grad_threshold || n + children.size() >= config.max_gaussians) {
            continue;
        }
        Gaussian g = set.get(i);
        if (g.scale.maxCoeff() <= config.clone_max_scale) {
            const double o = split_opacity(g.opacity);
            g.opacity = o;
            set.opacity_logit(i) = logit(o);
            children.push_back(g);
            ++result.cloned;
        } else {
            const Mat3 R = quat_to_matrix(g.rotation.normalized());
            Gaussian child = g;
            child.scale = g.scale / config.split_scale_divisor;
            for (int c = 0; c < 2; ++c) {
                Vec3 z(normal(rng), normal(rng), normal(rng));
                if (z.norm() > 3.0) z *= 3.0 / z.norm();
                child.position = g.position + R * g.scale.cwiseProduct(z);
                children.push_back(child);
            }
            keep[i] = 0;
            ++result.split;
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        result.origin.push_back(std::ptrdiff_t(i));
    }
    set.append(children);
    result.origin.resize(set.size(), -1);

    std::vector<char> mask(set.size(), 1);
    for (std::size_t i = 0; i < n; ++i) mask[i] = keep[i];
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (mask[i] && set.opacity(i) < config.prune_opacity) {
            mask[i] = 0;
            ++result.pruned;
        }
    }
    set.keep(mask);
    std::vector<std::ptrdiff_t> origin;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) origin.push_back(result.origin[i]);
    }
    result.origin = std::move(origin);
    return result;
}

std::vector<double> remap_rows(const std::vector<double>& rows, std::size_t row_size,
                               const std::vector<std::ptrdiff_t>& origin) {
    std::vector<double> out(origin.size() * row_size, 0.0);
    for (std::size_t i = 0; i < origin.size(); ++i) {
        if (origin[i] < 0) continue;
        std::copy_n(rows.begin() + origin[i] * row_size, row_size, out.begin() + i * row_size);
    }
    return out;
}

}  // namespace v2xsim
