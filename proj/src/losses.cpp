#include "v2xsim/losses.hpp"

#include "v2xsim/errors.hpp"
#include "v2xsim/ssim.hpp"

#include <algorithm>
#include <cmath>

namespace v2xsim {
namespace {

void require_same_size(const Image& a, const Image& b, const char* what) {
    if (!b.empty() && !a.same_size(b)) {
        throw InvalidInput(std::string(what) + ": image sizes differ");
    }
}

bool masked(const Image& mask, int x, int y) { return !mask.empty() && mask.at(x, y) != 0; }

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

ColorLoss loss_color(const Image& rendered, const Image& gt, const AppearanceGrid& grid, const Image& mask,
                     double ssim_weight) {
    if (!rendered.same_shape(gt) || rendered.channels() != 3) {
        throw InvalidInput("color loss: rendered and gt must be matching 3-channel images");
    }
    require_same_size(rendered, mask, "color loss mask");
    Image corrected = appearance_correct(rendered, grid);
    // masked pixels hold the same constant in both images so SSIM windows
    // straddling the mask edge see neither the render nor the target there
    Image target = gt;
    std::size_t unmasked = 0;
    for (int y = 0; y < gt.height(); ++y) {
        for (int x = 0; x < gt.width(); ++x) {
            if (masked(mask, x, y)) {
                for (int c = 0; c < 3; ++c) corrected.at(x, y, c) = target.at(x, y, c) = 0.0;
            } else {
                ++unmasked;
            }
        }
    }
    ColorLoss out;
    out.d_grid = grid.grid_width() > 0 ? grid.zeros() : AppearanceGrid{};
    Image d_corr(gt.width(), gt.height(), 3);
    const double l1_weight = 1.0 - ssim_weight;
    if (unmasked > 0) {
        const double inv = 1.0 / (double(unmasked) * 3);
        for (std::size_t i = 0; i < gt.data().size(); ++i) {
            const double d = corrected.data()[i] - target.data()[i];
            out.l1 += std::abs(d);
            d_corr.data()[i] = l1_weight * inv * (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0));
        }
        out.l1 *= inv;
    }
    if (ssim_weight > 0) {
        Image d_ssim;
        out.ssim = ssim_windowed(corrected, target, SsimOptions{}, mask, &d_ssim);
        for (std::size_t i = 0; i < d_corr.data().size(); ++i) d_corr.data()[i] -= ssim_weight * d_ssim.data()[i];
    }
    out.value = l1_weight * out.l1 + ssim_weight * (1.0 - out.ssim);
    for (int y = 0; y < gt.height(); ++y) {
        for (int x = 0; x < gt.width(); ++x) {
            if (masked(mask, x, y)) {
                for (int c = 0; c < 3; ++c) d_corr.at(x, y, c) = 0.0;
            }
        }
    }
    out.d_rendered = appearance_correct_backward(rendered, grid, d_corr, out.d_grid);
    return out;
}

PixelLoss loss_depth(const Image& rendered_depth, const Image& lidar_depth, const Image& validity, const Image& alpha,
                     const Image& mask) {
    require_same_size(rendered_depth, lidar_depth, "depth loss");
    require_same_size(rendered_depth, validity, "depth loss validity");
    require_same_size(rendered_depth, alpha, "depth loss alpha");
    require_same_size(rendered_depth, mask, "depth loss mask");
    PixelLoss out;
    out.grad = Image(rendered_depth.width(), rendered_depth.height(), 1);
    std::size_t n = 0;
    for (int y = 0; y < rendered_depth.height(); ++y) {
        for (int x = 0; x < rendered_depth.width(); ++x) {
            if (validity.at(x, y) == 0 || alpha.at(x, y) < 0.5 || masked(mask, x, y)) continue;
            const double d = rendered_depth.at(x, y) - lidar_depth.at(x, y);
            out.value += std::abs(d);
            out.grad.at(x, y) = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
            ++n;
        }
    }
    if (n == 0) {
        return out;
    }
    out.value /= double(n);
    for (auto& g : out.grad.data()) g /= double(n);
    return out;
}

PixelLoss loss_normal(const Image& rendered_normal, const Image& input_normal, const Image& alpha, const Image& mask) {
    require_same_size(rendered_normal, input_normal, "normal loss");
    require_same_size(rendered_normal, alpha, "normal loss alpha");
    require_same_size(rendered_normal, mask, "normal loss mask");
    PixelLoss out;
    out.grad = Image(rendered_normal.width(), rendered_normal.height(), 3);
    std::size_t n = 0;
    for (int y = 0; y < rendered_normal.height(); ++y) {
        for (int x = 0; x < rendered_normal.width(); ++x) {
            if (alpha.at(x, y) < 0.5 || masked(mask, x, y)) continue;
            const Vec3 r(rendered_normal.at(x, y, 0), rendered_normal.at(x, y, 1), rendered_normal.at(x, y, 2));
            const Vec3 t(input_normal.at(x, y, 0), input_normal.at(x, y, 1), input_normal.at(x, y, 2));
            const double len = r.norm();
            if (len < 1e-12 || t.squaredNorm() == 0) continue;
            const Vec3 u = r / len;
            Vec3 sign;
            for (int c = 0; c < 3; ++c) {
                const double d = u[c] - t[c];
                out.value += std::abs(d);
                sign[c] = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
            }
            const Vec3 g = (sign - u * u.dot(sign)) / len;
            for (int c = 0; c < 3; ++c) out.grad.at(x, y, c) = g[c];
            ++n;
        }
    }
    if (n == 0) {
        return out;
    }
    out.value /= double(n);
    for (auto& g : out.grad.data()) g /= double(n);
    return out;
}

PixelLoss loss_sky(const Image& alpha, const Image& sky_mask, const Image& mask) {
    require_same_size(alpha, sky_mask, "sky loss");
    require_same_size(alpha, mask, "sky loss mask");
    constexpr double eps = 1e-7;
    PixelLoss out;
    out.grad = Image(alpha.width(), alpha.height(), 1);
    std::size_t n = 0;
    for (int y = 0; y < alpha.height(); ++y) {
        for (int x = 0; x < alpha.width(); ++x) {
            if (masked(mask, x, y)) continue;
            ++n;
            const double target = 1.0 - (sky_mask.at(x, y) != 0 ? 1.0 : 0.0);
            // Each log is floored separately so an exact fit contributes exactly 0.
            const double a = std::max(alpha.at(x, y), eps);
            const double b = std::max(1.0 - alpha.at(x, y), eps);
            double g = 0;
            if (target > 0) {
                out.value -= target * std::log(a);
                g -= target / a;
            }
            if (target < 1) {
                out.value -= (1 - target) * std::log(b);
                g += (1 - target) / b;
            }
            out.grad.at(x, y) = g;
        }
    }
    if (n == 0) {
        return out;
    }
    out.value /= double(n);
    for (auto& g : out.grad.data()) g /= double(n);
    return out;
}

PixelLoss loss_semantic(const Image& logits, const Image& labels, const Image& mask) {
    require_same_size(logits, labels, "semantic loss");
    require_same_size(logits, mask, "semantic loss mask");
    const int K = logits.channels();
    PixelLoss out;
    out.grad = Image(logits.width(), logits.height(), K);
    std::size_t n = 0;
    std::vector<double> p(K);
    for (int y = 0; y < logits.height(); ++y) {
        for (int x = 0; x < logits.width(); ++x) {
            const int label = int(std::lround(labels.at(x, y)));
            if (label == kIgnoreLabel || masked(mask, x, y)) continue;
            if (label < 0 || label >= K) {
                throw InvalidInput("semantic label " + std::to_string(label) + " outside [0, " + std::to_string(K) + ")");
            }
            const auto z = logits.pixel(x, y);
            const double zmax = *std::max_element(z.begin(), z.end());
            double sum = 0;
            for (int k = 0; k < K; ++k) {
                p[k] = std::exp(z[k] - zmax);
                sum += p[k];
            }
            out.value += std::log(sum) + zmax - z[label];
            for (int k = 0; k < K; ++k) out.grad.at(x, y, k) = p[k] / sum - (k == label ? 1.0 : 0.0);
            ++n;
        }
    }
    if (n == 0) {
        return out;
    }
    out.value /= double(n);
    for (auto& g : out.grad.data()) g /= double(n);
    return out;
}

SetLoss loss_reg(const GaussianSet& flat) {
    SetLoss out;
    out.grad = GaussianSet::zeros_like(flat);
    if (flat.empty()) {
        return out;
    }
    const double inv = 1.0 / double(flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const double x = flat.opacity_logit(i);
        const double s = sigmoid(x);
        // ln s = -softplus(-x), ln(1-s) = -softplus(x)
        out.value += s * softplus(-x) + (1 - s) * softplus(x);
        out.grad.opacity_logit(i) = -x * s * (1 - s) * inv;
    }
    out.value *= inv;
    return out;
}

}  // namespace v2xsim
