#include "v2xsim/metrics.hpp"

#include "v2xsim/errors.hpp"
#include "v2xsim/ssim.hpp"

#include <algorithm>
#include <cmath>

namespace v2xsim {

double psnr(const Image& a, const Image& b, const Image& mask) {
    if (!a.same_shape(b)) {
        throw InvalidInput("psnr: image shapes differ");
    }
    if (!mask.empty() && (!mask.same_size(a) || mask.channels() != 1)) {
        throw InvalidInput("psnr: mask must be single-channel with the image size");
    }
    double se = 0;
    std::size_t n = 0;
    const int C = a.channels();
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
            if (!mask.empty() && mask.at(x, y) != 0) continue;
            for (int c = 0; c < C; ++c) {
                const double d = a.at(x, y, c) - b.at(x, y, c);
                se += d * d;
            }
            n += C;
        }
    }
    if (n == 0 || se == 0) {
        return kPsnrCap;
    }
    return std::min(kPsnrCap, 10.0 * std::log10(double(n) / se));
}

double ssim(const Image& a, const Image& b) { return ssim_windowed(a, b); }

}  // namespace v2xsim
