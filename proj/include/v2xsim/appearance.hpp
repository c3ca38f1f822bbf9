#pragma once

#include "v2xsim/image.hpp"

#include <vector>

namespace v2xsim {

/// Low-resolution per-image affine color correction. Grid node (i,j) holds
/// a 3-channel gain `a` and offset `b`; nodes sit on the image corners and
/// are spread evenly between them (align-corners bilinear upsampling).
class AppearanceGrid {
public:
    AppearanceGrid() = default;
    /// Identity correction: a = 1, b = 0.
    AppearanceGrid(int grid_width, int grid_height);

    int grid_width() const { return gw_; }
    int grid_height() const { return gh_; }
    std::vector<double>& gain() { return a_; }
    const std::vector<double>& gain() const { return a_; }
    std::vector<double>& offset() { return b_; }
    const std::vector<double>& offset() const { return b_; }

    double& gain(int i, int j, int c) { return a_[(std::size_t(j) * gw_ + i) * 3 + c]; }
    double& offset(int i, int j, int c) { return b_[(std::size_t(j) * gw_ + i) * 3 + c]; }

    /// Same layout, all zeros (gradient container).
    AppearanceGrid zeros() const;
    bool is_identity() const;

private:
    int gw_ = 0, gh_ = 0;
    std::vector<double> a_, b_;
};

/// color' = a(u,v) * color + b(u,v). A default-constructed grid is the identity.
Image appearance_correct(const Image& image, const AppearanceGrid& grid);
/// Given d(out), returns d(image) and accumulates d(grid) into `d_grid`.
Image appearance_correct_backward(const Image& image, const AppearanceGrid& grid, const Image& d_out,
                                  AppearanceGrid& d_grid);

}  // namespace v2xsim
