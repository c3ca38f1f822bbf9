#include "test_util.hpp"

#include "v2xsim/errors.hpp"
#include "v2xsim/gaussian.hpp"
#include "v2xsim/ply.hpp"
#include "v2xsim/sh.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <limits>

using namespace v2xsim;
using v2xsim::testing::random_quat;

TEST(BuildCovariance, IdentityCases) {
    const Vec4 id(1, 0, 0, 0);
    EXPECT_TRUE(build_covariance(id, Vec3(1, 1, 1)).isApprox(Mat3::Identity(), 1e-15));
    const Mat3 expected = Vec3(4, 1, 1).asDiagonal();
    EXPECT_TRUE(build_covariance(id, Vec3(2, 1, 1)).isApprox(expected, 1e-15));
}

TEST(BuildCovariance, EigenvaluesAreSquaredScales) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const Mat3 cov = build_covariance(random_quat(rng), Vec3(3, 2, 1));
        Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
        const Vec3 ev = es.eigenvalues();  // ascending
        EXPECT_NEAR(ev[0], 1.0, 1e-12);
        EXPECT_NEAR(ev[1], 4.0, 1e-12);
        EXPECT_NEAR(ev[2], 9.0, 1e-12);
    }
}

TEST(BuildCovariance, SymmetricPositiveDefiniteProperty) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(1e-3, 5.0);
    for (int trial = 0; trial < 500; ++trial) {
        const Mat3 cov = build_covariance(random_quat(rng), Vec3(u(rng), u(rng), u(rng)));
        EXPECT_EQ(cov, cov.transpose());
        Eigen::LLT<Mat3> llt(cov);
        EXPECT_EQ(llt.info(), Eigen::Success);
    }
}

TEST(BuildCovariance, RejectsNonFinite) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(build_covariance(Vec4(1, 0, 0, 0), Vec3(nan, 1, 1)), InvalidInput);
    EXPECT_THROW(build_covariance(Vec4(nan, 0, 0, 0), Vec3(1, 1, 1)), InvalidInput);
    EXPECT_THROW(build_covariance(Vec4(1, 0, 0, 0), Vec3(0, 1, 1)), InvalidInput);
}

TEST(CanonicalizeScales, SortsAndPreservesCovariance) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        Gaussian g;
        g.rotation = random_quat(rng);
        g.scale = Vec3(1, 3, 2);
        const Gaussian c = canonicalize_scales(g);
        EXPECT_EQ(c.scale, Vec3(3, 2, 1));
        const Mat3 before = build_covariance(g.rotation, g.scale);
        const Mat3 after = build_covariance(c.rotation, c.scale);
        EXPECT_LE((before - after).norm() / before.norm(), 1e-9);
        EXPECT_NEAR(c.rotation.norm(), 1.0, 1e-6);
        EXPECT_NEAR(quat_to_matrix(c.rotation).determinant(), 1.0, 1e-9);
    }
}

TEST(CanonicalizeScales, RandomScalesProperty) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.01, 4.0);
    for (int trial = 0; trial < 500; ++trial) {
        Gaussian g;
        g.rotation = random_quat(rng);
        g.scale = Vec3(u(rng), u(rng), u(rng));
        const Gaussian c = canonicalize_scales(g);
        EXPECT_GE(c.scale[0], c.scale[1]);
        EXPECT_GE(c.scale[1], c.scale[2]);
        const Mat3 before = build_covariance(g.rotation, g.scale);
        const Mat3 after = build_covariance(c.rotation, c.scale);
        EXPECT_LE((before - after).norm() / before.norm(), 1e-9);
        EXPECT_NEAR(quat_to_matrix(c.rotation).determinant(), 1.0, 1e-9);
    }
}

TEST(CanonicalizeScales, SortedAndIsotropicInputs) {
    Gaussian g;
    g.rotation = Vec4(1, 0, 0, 0);
    g.scale = Vec3(3, 2, 1);
    const Gaussian c = canonicalize_scales(g);
    EXPECT_EQ(c.scale, g.scale);
    EXPECT_TRUE(c.rotation.isApprox(g.rotation, 1e-12));

    g.scale = Vec3(2, 2, 2);
    std::mt19937_64 rng(1);
    g.rotation = random_quat(rng);
    const Gaussian iso = canonicalize_scales(g);
    EXPECT_EQ(iso.scale, g.scale);
    EXPECT_LE((build_covariance(iso.rotation, iso.scale) - build_covariance(g.rotation, g.scale)).norm(), 1e-9);
}

TEST(GeometricLosses, ScaleLossValues) {
    EXPECT_EQ(loss_scale(Vec3(2, 1, 0.5)), 0.5);
    EXPECT_EQ(loss_scale(Vec3(1, 1, 1e-9)), 1e-9);

    GaussianSet set(0, 0);
    Gaussian a;
    a.scale = Vec3(2, 1, 0.5);
    set.push_back(a);
    a.scale = Vec3(1, 1, 1);
    set.push_back(a);
    EXPECT_NEAR(loss_scale_set(set).value, 0.75, 1e-15);
}

TEST(GeometricLosses, RatioLossValues) {
    EXPECT_EQ(loss_ratio(Vec3(3, 1, 0.5)), 2.0);
    EXPECT_EQ(loss_ratio(Vec3(1.7, 1.7, 0.1)), 0.0);
    EXPECT_NEAR(loss_ratio(Vec3(1.5, 1.2, 0.1)), 0.25, 1e-15);
    EXPECT_THROW(loss_ratio(Vec3(1.0, 0.0, 0.0)), InvalidInput);
}

TEST(GeometricLosses, NonNegativeAndZeroSet) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(1e-4, 3.0);
    for (int i = 0; i < 1000; ++i) {
        Vec3 s(u(rng), u(rng), u(rng));
        EXPECT_GE(loss_scale(s), 0.0);
        EXPECT_GE(loss_ratio(s), 0.0);
        s[1] = s[0];
        EXPECT_EQ(loss_ratio(s.cwiseMax(Vec3::Constant(0)).eval()), loss_ratio(s));
    }
    // zero exactly when the two largest coincide
    EXPECT_EQ(loss_ratio(Vec3(0.3, 2.0, 2.0)), 0.0);
}

TEST(GeometricLosses, GradientsMatchFiniteDifferences) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    const double h = 1e-5;
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        Vec3 s(u(rng), u(rng), u(rng));
        // stay away from the kinks s_i = s_j
        if (std::abs(s[0] - s[1]) < 1e-2 || std::abs(s[1] - s[2]) < 1e-2 || std::abs(s[0] - s[2]) < 1e-2) continue;
        const Vec3 gs = loss_scale_grad(s);
        const Vec3 gr = loss_ratio_grad(s);
        for (int k = 0; k < 3; ++k) {
            const double fd_s = v2xsim::testing::central_difference([&] { return loss_scale(s); }, s[k], h);
            const double fd_r = v2xsim::testing::central_difference([&] { return loss_ratio(s); }, s[k], h);
            EXPECT_LT(v2xsim::testing::relative_error(gs[k], fd_s, 1e-6), 1e-4);
            EXPECT_LT(v2xsim::testing::relative_error(gr[k], fd_r, 1e-6), 1e-4);
        }
        ++checked;
    }
    EXPECT_GT(checked, 100);
}

TEST(GeometricLosses, TiesUseZeroSubgradient) {
    EXPECT_EQ(loss_scale_grad(Vec3(1, 1, 1)), Vec3::Zero());
    EXPECT_EQ(loss_ratio_grad(Vec3(2, 2, 1)), Vec3::Zero());
}

TEST(EvalSh, DcOffsetAndDirectionIndependence) {
    std::vector<double> zero(3 * 16, 0.0);
    EXPECT_TRUE(eval_sh(zero, 3, Vec3(0, 0, 1)).isApprox(Vec3::Constant(0.5)));
    EXPECT_TRUE(eval_sh(zero, 3, Vec3(1, 0, 0)).isApprox(Vec3::Constant(0.5)));

    std::vector<double> dc = {0.5 / kShC0, 0.5 / kShC0, 0.5 / kShC0};
    EXPECT_TRUE(eval_sh(dc, 0, Vec3(0, 0, 1)).isApprox(Vec3::Ones(), 1e-14));

    std::vector<double> c0 = {0.3, -0.2, 0.9};
    EXPECT_EQ(eval_sh(c0, 0, Vec3(0, 0, 1)), eval_sh(c0, 0, Vec3(0.6, 0.8, 0)));
}

TEST(EvalSh, ClampsToNonNegative) {
    std::vector<double> dc = {-10.0, 0.0, 10.0};
    const Vec3 c = eval_sh(dc, 0, Vec3(0, 0, 1));
    EXPECT_EQ(c[0], 0.0);
    EXPECT_GT(c[2], 1.0);
}

TEST(EvalSh, BackwardMatchesFiniteDifferences) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0, 0.3);
    for (int degree = 0; degree <= 3; ++degree) {
        std::vector<double> sh(3 * sh_coeff_count(degree));
        for (auto& c : sh) c = n(rng);
        sh[0] = sh[1] = sh[2] = 1.0;  // keep every channel unclamped
        Vec3 dir = Vec3(n(rng), n(rng), n(rng)).normalized();
        const Vec3 w(0.3, -0.7, 1.1);
        auto f = [&] { return w.dot(eval_sh(sh, degree, dir)); };
        const ShBackward b = eval_sh_backward(sh, degree, dir, w);
        for (std::size_t k = 0; k < sh.size(); ++k) {
            const double fd = v2xsim::testing::central_difference(f, sh[k], 1e-6);
            EXPECT_NEAR(b.d_sh[k], fd, 1e-7);
        }
        for (int k = 0; k < 3; ++k) {
            const double fd = v2xsim::testing::central_difference(f, dir[k], 1e-6);
            EXPECT_NEAR(b.d_dir[k], fd, 1e-7);
        }
    }
}

TEST(Quaternion, MatrixBackwardMatchesFiniteDifferences) {
    std::mt19937_64 rng(8);
    const Vec4 q = random_quat(rng) * 1.3;
    Mat3 W = Mat3::Random();
    auto f = [&](const Vec4& qq) { return (W.array() * quat_to_matrix(qq / qq.norm()).array()).sum(); };
    const Vec4 qh = q / q.norm();
    const Vec4 g = normalize_backward(q, quat_to_matrix_backward(qh, W));
    for (int k = 0; k < 4; ++k) {
        Vec4 qp = q, qm = q;
        qp[k] += 1e-6;
        qm[k] -= 1e-6;
        EXPECT_NEAR(g[k], (f(qp) - f(qm)) / 2e-6, 1e-7);
    }
}

TEST(GaussianSet, KeepAppendAndAccessors) {
    GaussianSet set(1, 2);
    for (int i = 0; i < 5; ++i) {
        Gaussian g;
        g.position = Vec3(i, 0, 0);
        g.opacity = 0.1 + 0.1 * i;
        g.semantic = {double(i), -double(i)};
        set.push_back(g);
    }
    EXPECT_EQ(set.size(), 5u);
    EXPECT_NEAR(set.opacity(2), 0.3, 1e-12);
    std::vector<char> mask = {1, 0, 1, 0, 1};
    set.keep(mask);
    ASSERT_EQ(set.size(), 3u);
    EXPECT_EQ(set.position(1).x(), 2.0);
    EXPECT_EQ(set.semantic(2)[1], -4.0);
    GaussianSet other = set;
    set.append(other);
    EXPECT_EQ(set.size(), 6u);
    EXPECT_EQ(set.position(5).x(), 4.0);
    EXPECT_THROW(set.append(GaussianSet(0, 2)), InvalidInput);
}

TEST(GaussianPly, RoundTripPreservesParameters) {
    std::mt19937_64 rng(2);
    const GaussianSet set = v2xsim::testing::random_scene(rng, 17, 2, 3);
    const auto path = std::filesystem::temp_directory_path() / "v2xsim_gauss_rt.ply";
    write_gaussian_ply(path, set);
    const GaussianSet back = read_gaussian_ply(path);
    ASSERT_EQ(back.size(), set.size());
    EXPECT_EQ(back.sh_degree(), 2);
    EXPECT_EQ(back.num_classes(), 3);
    for (int g = 0; g < GaussianSet::kNumGroups; ++g) {
        const auto a = set.group(GaussianSet::Group(g));
        const auto b = back.group(GaussianSet::Group(g));
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            EXPECT_NEAR(a[k], b[k], 1e-6 * std::max(1.0, std::abs(a[k])));
        }
    }
    std::filesystem::remove(path);
}
