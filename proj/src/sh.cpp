#include "v2xsim/sh.hpp"

#include "v2xsim/errors.hpp"

namespace v2xsim {

namespace {

constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005, -1.0925484305920792,
                          0.5462742152960396};
constexpr double kC3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658, 0.3731763325901154,
                          -0.4570457994644658, 1.445305721320277, -0.5900435899266435};

void check_block(std::span<const double> sh, int degree) {
    if (degree < 0 || degree > kMaxShDegree) {
        throw InvalidInput("SH degree must be in 0..3");
    }
    if (sh.size() < std::size_t(3 * sh_coeff_count(degree))) {
        throw InvalidInput("SH coefficient block too small for degree");
    }
}

// d basis_k / d(x,y,z)
std::array<Vec3, 16> sh_basis_grad(int degree, const Vec3& d) {
    std::array<Vec3, 16> g;
    g.fill(Vec3::Zero());
    const double x = d.x(), y = d.y(), z = d.z();
    if (degree >= 1) {
        g[1] = Vec3(0, -kC1, 0);
        g[2] = Vec3(0, 0, kC1);
        g[3] = Vec3(-kC1, 0, 0);
    }
    if (degree >= 2) {
        g[4] = kC2[0] * Vec3(y, x, 0);
        g[5] = kC2[1] * Vec3(0, z, y);
        g[6] = kC2[2] * Vec3(-2 * x, -2 * y, 4 * z);
        g[7] = kC2[3] * Vec3(z, 0, x);
        g[8] = kC2[4] * Vec3(2 * x, -2 * y, 0);
    }
    if (degree >= 3) {
        const double xx = x * x, yy = y * y, zz = z * z;
        g[9] = kC3[0] * Vec3(6 * x * y, 3 * xx - 3 * yy, 0);
        g[10] = kC3[1] * Vec3(y * z, x * z, x * y);
        g[11] = kC3[2] * Vec3(-2 * x * y, 4 * zz - xx - 3 * yy, 8 * y * z);
        g[12] = kC3[3] * Vec3(-6 * x * z, -6 * y * z, 6 * zz - 3 * xx - 3 * yy);
        g[13] = kC3[4] * Vec3(4 * zz - 3 * xx - yy, -2 * x * y, 8 * x * z);
        g[14] = kC3[5] * Vec3(2 * x * z, -2 * y * z, xx - yy);
        g[15] = kC3[6] * Vec3(3 * xx - 3 * yy, -6 * x * y, 0);
    }
    return g;
}

}  // namespace

std::array<double, 16> sh_basis(int degree, const Vec3& d) {
    std::array<double, 16> b{};
    const double x = d.x(), y = d.y(), z = d.z();
    b[0] = kShC0;
    if (degree >= 1) {
        b[1] = -kC1 * y;
        b[2] = kC1 * z;
        b[3] = -kC1 * x;
    }
    if (degree >= 2) {
        const double xx = x * x, yy = y * y, zz = z * z;
        b[4] = kC2[0] * x * y;
        b[5] = kC2[1] * y * z;
        b[6] = kC2[2] * (2 * zz - xx - yy);
        b[7] = kC2[3] * x * z;
        b[8] = kC2[4] * (xx - yy);
        if (degree >= 3) {
            b[9] = kC3[0] * y * (3 * xx - yy);
            b[10] = kC3[1] * x * y * z;
            b[11] = kC3[2] * y * (4 * zz - xx - yy);
            b[12] = kC3[3] * z * (2 * zz - 3 * xx - 3 * yy);
            b[13] = kC3[4] * x * (4 * zz - xx - yy);
            b[14] = kC3[5] * z * (xx - yy);
            b[15] = kC3[6] * x * (xx - 3 * yy);
        }
    }
    return b;
}

Vec3 eval_sh(std::span<const double> sh, int degree, const Vec3& dir) {
    check_block(sh, degree);
    const auto b = sh_basis(degree, dir);
    const int n = sh_coeff_count(degree);
    Vec3 c = Vec3::Constant(0.5);
    for (int k = 0; k < n; ++k) {
        for (int ch = 0; ch < 3; ++ch) {
            c[ch] += b[k] * sh[3 * k + ch];
        }
    }
    return c.cwiseMax(0.0);
}

ShBackward eval_sh_backward(std::span<const double> sh, int degree, const Vec3& dir, const Vec3& d_color) {
    check_block(sh, degree);
    const auto b = sh_basis(degree, dir);
    const int n = sh_coeff_count(degree);
    Vec3 raw = Vec3::Constant(0.5);
    for (int k = 0; k < n; ++k) {
        for (int ch = 0; ch < 3; ++ch) {
            raw[ch] += b[k] * sh[3 * k + ch];
        }
    }
    Vec3 dc = d_color;
    for (int ch = 0; ch < 3; ++ch) {
        if (raw[ch] < 0) {
            dc[ch] = 0;
        }
    }
    ShBackward out;
    for (int k = 0; k < n; ++k) {
        for (int ch = 0; ch < 3; ++ch) {
            out.d_sh[3 * k + ch] = b[k] * dc[ch];
        }
    }
    if (degree >= 1) {
        const auto g = sh_basis_grad(degree, dir);
        for (int k = 1; k < n; ++k) {
            double s = 0;
            for (int ch = 0; ch < 3; ++ch) {
                s += sh[3 * k + ch] * dc[ch];
            }
            out.d_dir += s * g[k];
        }
    }
    return out;
}

}  // namespace v2xsim
