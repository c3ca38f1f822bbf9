#pragma once

#include "v2xsim/image.hpp"

namespace v2xsim {

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double c1 = 0.01 * 0.01;
    double c2 = 0.03 * 0.03;
};

/// Windowed SSIM over "valid" window positions (no padding), averaged over
/// windows and channels. Window weights are a normalized Gaussian.
/// When `center_mask` is non-empty, only windows whose center pixel has a
/// zero mask value are averaged; with no such window the result is 1.
/// If `d_a` is non-null it receives d(result)/d(a).
double ssim_windowed(const Image& a, const Image& b, const SsimOptions& options = {}, const Image& center_mask = {},
                     Image* d_a = nullptr);

}  // namespace v2xsim
