#pragma once

#include "v2xsim/image.hpp"

namespace v2xsim {

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) for images in [0,1], capped at 99 dB. With a mask,
/// only pixels whose mask value is zero are compared.
double psnr(const Image& a, const Image& b, const Image& mask = {});

/// Windowed SSIM, 11x11 Gaussian window (sigma 1.5), mean over valid windows
/// and channels.
double ssim(const Image& a, const Image& b);

}  // namespace v2xsim
