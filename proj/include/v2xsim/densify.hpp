#pragma once

#include "v2xsim/gaussian.hpp"

#include <cstddef>
#include <random>
#include <vector>

namespace v2xsim {

/// Running screen-space positional gradient magnitudes, one slot per Gaussian.
struct DensifyStats {
    std::vector<double> grad_sum;
    std::vector<int> count;

    void reset(std::size_t n) {
        grad_sum.assign(n, 0.0);
        count.assign(n, 0);
    }
    void add(std::size_t i, double mean2d_grad_norm) {
        grad_sum[i] += mean2d_grad_norm;
        ++count[i];
    }
    double mean(std::size_t i) const { return count[i] ? grad_sum[i] / count[i] : 0.0; }
};

struct DensifyConfig {
    /// Mean |dL/d mean2d| (normalized device units) above which a Gaussian is densified.
    double grad_threshold = 2e-4;
    /// Gaussians whose largest scale is at most this are cloned, larger ones split.
    double clone_max_scale = 0.05;
    double split_scale_divisor = 1.6;
    double prune_opacity = 0.005;
    /// Upper bound on the set size; densification stops adding beyond it.
    std::size_t max_gaussians = 200000;
};

struct DensifyResult {
    std::size_t cloned = 0;
    std::size_t split = 0;
    std::size_t pruned = 0;
    /// For each output Gaussian, the input index it was copied from, or -1
    /// for a newly created child.
    std::vector<std::ptrdiff_t> origin;
};

/// Opacity given to each of two coincident copies so that together they
/// occlude like the original: 1 - sqrt(1 - o).
double split_opacity(double opacity);

/// Clone (small) or split (large) Gaussians with high mean positional
/// gradient, then prune those below the opacity threshold. Clones sit on the
/// parent with split_opacity applied to both; split children are drawn from
/// the parent distribution (truncated to 3 sigma) with scales divided by
/// the split divisor, and replace the parent.
DensifyResult densify_and_prune(GaussianSet& set, const DensifyStats& stats, const DensifyConfig& config,
                                std::mt19937_64& rng);

/// Gathers rows of a per-Gaussian block by `origin`, zero-filling -1 rows.
std::vector<double> remap_rows(const std::vector<double>& rows, std::size_t row_size,
                               const std::vector<std::ptrdiff_t>& origin);

}  // namespace v2xsim
