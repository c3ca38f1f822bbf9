#include "v2xsim/appearance.hpp"

#include "v2xsim/errors.hpp"

#include <algorithm>
#include <cmath>

namespace v2xsim {
namespace {

struct Bilinear {
    int i0, i1;
    double t;
};

Bilinear locate(int pixel, int extent, int nodes) {
    if (nodes == 1 || extent == 1) {
        return {0, 0, 0.0};
    }
    const double u = double(pixel) * double(nodes - 1) / double(extent - 1);
    const int i0 = std::min(int(std::floor(u)), nodes - 2);
    return {i0, i0 + 1, u - i0};
}

}  // namespace

AppearanceGrid::AppearanceGrid(int grid_width, int grid_height)
    : gw_(grid_width), gh_(grid_height),
      a_(std::size_t(grid_width) * grid_height * 3, 1.0), b_(std::size_t(grid_width) * grid_height * 3, 0.0) {
    if (grid_width < 1 || grid_height < 1) {
        throw InvalidInput("appearance grid must be at least 1x1");
    }
}

AppearanceGrid AppearanceGrid::zeros() const {
    AppearanceGrid g = *this;
    std::fill(g.a_.begin(), g.a_.end(), 0.0);
    std::fill(g.b_.begin(), g.b_.end(), 0.0);
    return g;
}

bool AppearanceGrid::is_identity() const {
    return std::all_of(a_.begin(), a_.end(), [](double v) { return v == 1.0; }) &&
           std::all_of(b_.begin(), b_.end(), [](double v) { return v == 0.0; });
}

Image appearance_correct(const Image& image, const AppearanceGrid& grid) {
    if (grid.grid_width() == 0) {
        return image;
    }
    if (image.channels() != 3) {
        throw InvalidInput("appearance correction expects a 3-channel image");
    }
    Image out(image.width(), image.height(), 3);
    const auto& A = grid.gain();
    const auto& B = grid.offset();
    const int gw = grid.grid_width();
    for (int y = 0; y < image.height(); ++y) {
        const Bilinear by = locate(y, image.height(), grid.grid_height());
        for (int x = 0; x < image.width(); ++x) {
            const Bilinear bx = locate(x, image.width(), gw);
            const std::size_t n00 = (std::size_t(by.i0) * gw + bx.i0) * 3, n10 = (std::size_t(by.i0) * gw + bx.i1) * 3;
            const std::size_t n01 = (std::size_t(by.i1) * gw + bx.i0) * 3, n11 = (std::size_t(by.i1) * gw + bx.i1) * 3;
            const double w00 = (1 - bx.t) * (1 - by.t), w10 = bx.t * (1 - by.t);
            const double w01 = (1 - bx.t) * by.t, w11 = bx.t * by.t;
            for (int c = 0; c < 3; ++c) {
                const double a = w00 * A[n00 + c] + w10 * A[n10 + c] + w01 * A[n01 + c] + w11 * A[n11 + c];
                const double b = w00 * B[n00 + c] + w10 * B[n10 + c] + w01 * B[n01 + c] + w11 * B[n11 + c];
                out.at(x, y, c) = a * image.at(x, y, c) + b;
            }
        }
    }
    return out;
}

Image appearance_correct_backward(const Image& image, const AppearanceGrid& grid, const Image& d_out,
                                  AppearanceGrid& d_grid) {
    if (grid.grid_width() == 0) {
        return d_out;
    }
    if (!image.same_shape(d_out)) {
        throw InvalidInput("appearance backward: gradient shape differs from image");
    }
    Image d_img(image.width(), image.height(), 3);
    const auto& A = grid.gain();
    auto& dA = d_grid.gain();
    auto& dB = d_grid.offset();
    const int gw = grid.grid_width();
    for (int y = 0; y < image.height(); ++y) {
        const Bilinear by = locate(y, image.height(), grid.grid_height());
        for (int x = 0; x < image.width(); ++x) {
            const Bilinear bx = locate(x, image.width(), gw);
            const std::size_t n[4] = {(std::size_t(by.i0) * gw + bx.i0) * 3, (std::size_t(by.i0) * gw + bx.i1) * 3,
                                      (std::size_t(by.i1) * gw + bx.i0) * 3, (std::size_t(by.i1) * gw + bx.i1) * 3};
            const double w[4] = {(1 - bx.t) * (1 - by.t), bx.t * (1 - by.t), (1 - bx.t) * by.t, bx.t * by.t};
            for (int c = 0; c < 3; ++c) {
                const double g = d_out.at(x, y, c);
                double a = 0;
                for (int k = 0; k < 4; ++k) {
                    a += w[k] * A[n[k] + c];
                    dA[n[k] + c] += w[k] * g * image.at(x, y, c);
                    dB[n[k] + c] += w[k] * g;
                }
                d_img.at(x, y, c) = a * g;
            }
        }
    }
    return d_img;
}

}  // namespace v2xsim
