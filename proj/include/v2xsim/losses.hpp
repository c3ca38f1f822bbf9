#pragma once

#include "v2xsim/appearance.hpp"
#include "v2xsim/gaussian.hpp"
#include "v2xsim/image.hpp"

namespace v2xsim {

// Masks passed to the per-pixel losses are single-channel; a nonzero value
// excludes the pixel (ego-car body). An empty mask excludes nothing.

/// Value and gradient w.r.t. the first (rendered) argument.
struct PixelLoss {
    double value = 0;
    Image grad;
};

struct ColorLoss {
    double value = 0;
    double l1 = 0;
    double ssim = 1;
    Image d_rendered;
    AppearanceGrid d_grid;
};

/// 0.8 * L1 + 0.2 * (1 - SSIM) of the appearance-corrected render against gt.
/// Masked pixels are replaced by gt before the comparison, so they carry no
/// loss and no gradient; L1 divides by the unmasked sample count.
ColorLoss loss_color(const Image& rendered, const Image& gt, const AppearanceGrid& grid, const Image& mask = {},
                     double ssim_weight = 0.2);

/// Mean |rendered - lidar| over pixels with validity != 0, alpha >= 0.5 and
/// not masked; 0 without such pixels.
PixelLoss loss_depth(const Image& rendered_depth, const Image& lidar_depth, const Image& validity, const Image& alpha,
                     const Image& mask = {});

/// Per-pixel L1 between the normalized rendered normal and the input unit
/// normal, summed over the three components and averaged over pixels with
/// alpha >= 0.5 (not masked, input normal nonzero). Opposite axis-aligned
/// unit vectors therefore score 2.
PixelLoss loss_normal(const Image& rendered_normal, const Image& input_normal, const Image& alpha,
                      const Image& mask = {});

/// Mean binary cross-entropy of alpha against 1 - sky over unmasked pixels.
PixelLoss loss_sky(const Image& alpha, const Image& sky_mask, const Image& mask = {});

inline constexpr int kIgnoreLabel = 255;

/// Mean softmax cross-entropy of the rendered logits against integer labels;
/// label 255 is ignored. Labels outside [0, K) otherwise raise InvalidInput.
PixelLoss loss_semantic(const Image& logits, const Image& labels, const Image& mask = {});

struct SetLoss {
    double value = 0;
    GaussianSet grad;
};

/// Mean binary entropy of the opacities; 0 for an empty set.
SetLoss loss_reg(const GaussianSet& flat);

}  // namespace v2xsim
