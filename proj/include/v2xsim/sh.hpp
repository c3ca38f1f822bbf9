#pragma once

#include "v2xsim/gaussian.hpp"

#include <array>
#include <span>

namespace v2xsim {

inline constexpr double kShC0 = 0.28209479177387814;

/// Real SH basis values up to degree 3 (16 entries; only the first
/// (degree+1)^2 are meaningful) for a unit direction.
std::array<double, 16> sh_basis(int degree, const Vec3& dir);

/// color_c = max(0, sum_k basis_k(dir) * sh[k*3+c] + 0.5).
Vec3 eval_sh(std::span<const double> sh, int degree, const Vec3& dir);

struct ShBackward {
    std::array<double, 48> d_sh{};  // same layout as the coefficient block
    Vec3 d_dir = Vec3::Zero();       // w.r.t. the unit direction
};

/// Adjoint of eval_sh. Clamped channels propagate no gradient.
ShBackward eval_sh_backward(std::span<const double> sh, int degree, const Vec3& dir, const Vec3& d_color);

}  // namespace v2xsim
