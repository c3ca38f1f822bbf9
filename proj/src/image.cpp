#include "v2xsim/image.hpp"

#include "v2xsim/errors.hpp"

#include <algorithm>
#include <cmath>

namespace v2xsim {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0 || channels < 0) {
        throw InvalidInput("negative image dimension");
    }
    data_.assign(std::size_t(width) * std::size_t(height) * std::size_t(channels), fill);
}

void Image::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

double mean_abs_diff(const Image& a, const Image& b) {
    if (!a.same_shape(b)) {
        throw InvalidInput("mean_abs_diff: shape mismatch");
    }
    if (a.empty()) {
        return 0.0;
    }
    double s = 0;
    const auto da = a.data();
    const auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) {
        s += std::abs(da[i] - db[i]);
    }
    return s / double(da.size());
}

}  // namespace v2xsim
