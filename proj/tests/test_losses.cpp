#include "test_util.hpp"

#include "v2xsim/appearance.hpp"
#include "v2xsim/densify.hpp"
#include "v2xsim/errors.hpp"
#include "v2xsim/losses.hpp"
#include "v2xsim/metrics.hpp"
#include "v2xsim/optimizer.hpp"
#include "v2xsim/ssim.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace v2xsim;

namespace {

Image random_image(std::mt19937_64& rng, int w, int h, int c, double lo = 0, double hi = 1) {
    std::uniform_real_distribution<double> u(lo, hi);
    Image img(w, h, c);
    for (auto& v : img.data()) v = u(rng);
    return img;
}

// Direct per-window SSIM with 2D weights.
double scalar_ssim(const Image& a, const Image& b) {
    const int n = 11;
    double w1[n], sum = 0;
    for (int i = 0; i < n; ++i) {
        w1[i] = std::exp(-(i - 5.0) * (i - 5.0) / (2 * 1.5 * 1.5));
        sum += w1[i];
    }
    const double C1 = 1e-4, C2 = 9e-4;
    double total = 0;
    int count = 0;
    for (int c = 0; c < a.channels(); ++c) {
        for (int y0 = 0; y0 + n <= a.height(); ++y0) {
            for (int x0 = 0; x0 + n <= a.width(); ++x0) {
                double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
                for (int j = 0; j < n; ++j) {
                    for (int i = 0; i < n; ++i) {
                        const double w = w1[i] * w1[j] / (sum * sum);
                        mx += w * a.at(x0 + i, y0 + j, c);
                        my += w * b.at(x0 + i, y0 + j, c);
                    }
                }
                for (int j = 0; j < n; ++j) {
                    for (int i = 0; i < n; ++i) {
                        const double w = w1[i] * w1[j] / (sum * sum);
                        const double dx = a.at(x0 + i, y0 + j, c) - mx, dy = b.at(x0 + i, y0 + j, c) - my;
                        sxx += w * dx * dx;
                        syy += w * dy * dy;
                        sxy += w * dx * dy;
                    }
                }
                total += (2 * mx * my + C1) * (2 * sxy + C2) / ((mx * mx + my * my + C1) * (sxx + syy + C2));
                ++count;
            }
        }
    }
    return total / count;
}

template <class F>
void expect_gradient(const Image& analytic, Image& x, F&& f, double tol, double h = 1e-6) {
    for (std::size_t i = 0; i < x.data().size(); ++i) {
        const double fd = v2xsim::testing::central_difference(f, x.data()[i], h);
        EXPECT_LT(v2xsim::testing::relative_error(analytic.data()[i], fd, 1e-6), tol) << "index " << i;
    }
}

}  // namespace

TEST(Psnr, HandValues) {
    const Image a(16, 16, 3, 0.5);
    EXPECT_EQ(psnr(a, a), kPsnrCap);
    const Image b(16, 16, 3, 0.6);
    EXPECT_NEAR(psnr(a, b), 20.0, 1e-12);
    EXPECT_EQ(psnr(a, b), psnr(b, a));
    std::mt19937_64 rng(1);
    const Image x = random_image(rng, 20, 10, 3), y = random_image(rng, 20, 10, 3);
    double se = 0;
    for (std::size_t i = 0; i < x.data().size(); ++i) se += std::pow(x.data()[i] - y.data()[i], 2);
    EXPECT_NEAR(psnr(x, y), 10 * std::log10(1.0 / (se / x.data().size())), 1e-12);
}

TEST(Psnr, MaskedPixelsAreIgnored) {
    Image a(8, 8, 3, 0.2), b(8, 8, 3, 0.3), mask(8, 8, 1);
    for (int x = 0; x < 8; ++x) {
        for (int c = 0; c < 3; ++c) b.at(x, 7, c) = 0.9;
        mask.at(x, 7) = 1;
    }
    EXPECT_NEAR(psnr(a, b, mask), 20.0, 1e-12);
}

TEST(Ssim, IdentityAndConstantCases) {
    std::mt19937_64 rng(2);
    const Image x = random_image(rng, 24, 20, 3);
    EXPECT_DOUBLE_EQ(ssim(x, x), 1.0);
    const Image c(16, 16, 1, 0.5);
    Image neg = c;
    for (auto& v : neg.data()) v = 1 - v;
    EXPECT_DOUBLE_EQ(ssim(c, neg), 1.0);
    const Image d(16, 16, 1, 0.6);
    const double expected = (2 * 0.5 * 0.6 + 1e-4) / (0.25 + 0.36 + 1e-4);
    EXPECT_NEAR(ssim(c, d), expected, 1e-12);
    EXPECT_THROW(ssim(Image(8, 8, 1), Image(8, 8, 1)), InvalidInput);
}

TEST(Ssim, MatchesScalarImplementation) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const Image a = random_image(rng, 17 + trial, 13 + 2 * trial, 1 + 2 * (trial % 2));
        Image b = a;
        std::normal_distribution<double> n(0, 0.1 * (trial + 1));
        for (auto& v : b.data()) v += n(rng);
        EXPECT_NEAR(ssim(a, b), scalar_ssim(a, b), 1e-4);
        EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
    }
}

TEST(Ssim, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(4);
    Image a = random_image(rng, 14, 13, 2);
    const Image b = random_image(rng, 14, 13, 2);
    Image mask(14, 13, 1);
    mask.at(6, 6) = 1;
    Image grad;
    ssim_windowed(a, b, {}, mask, &grad);
    expect_gradient(grad, a, [&] { return ssim_windowed(a, b, {}, mask); }, 1e-4, 1e-5);
}

TEST(Appearance, IdentityAndConstantGrid) {
    std::mt19937_64 rng(5);
    const Image x = random_image(rng, 9, 7, 3);
    const Image same = appearance_correct(x, AppearanceGrid(8, 8));
    for (std::size_t i = 0; i < x.data().size(); ++i) EXPECT_DOUBLE_EQ(same.data()[i], x.data()[i]);

    AppearanceGrid g(1, 1);
    for (int c = 0; c < 3; ++c) {
        g.gain(0, 0, c) = 0.5;
        g.offset(0, 0, c) = 0.25;
    }
    const Image corrected = appearance_correct(Image(5, 5, 3, 0.5), g);
    for (double v : corrected.data()) EXPECT_DOUBLE_EQ(v, 0.5);
    EXPECT_THROW(AppearanceGrid(0, 3), InvalidInput);
}

TEST(Appearance, CornerPixelsMatchCornerNodes) {
    AppearanceGrid g(2, 2);
    double v = 0.1;
    for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) {
            for (int c = 0; c < 3; ++c) {
                g.gain(i, j, c) = 1 + v;
                g.offset(i, j, c) = v;
                v += 0.05;
            }
        }
    }
    const Image x(10, 6, 3, 0.4);
    const Image out = appearance_correct(x, g);
    const int px[2] = {0, 9}, py[2] = {0, 5};
    for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) {
            for (int c = 0; c < 3; ++c) {
                EXPECT_NEAR(out.at(px[i], py[j], c), g.gain(i, j, c) * 0.4 + g.offset(i, j, c), 1e-15);
            }
        }
    }
    // bilinear midpoint along the top edge
    const Image wide = appearance_correct(Image(3, 2, 3, 1.0), g);
    EXPECT_NEAR(wide.at(1, 0, 0), 0.5 * (g.gain(0, 0, 0) + g.offset(0, 0, 0) + g.gain(1, 0, 0) + g.offset(1, 0, 0)),
                1e-15);
}

TEST(Appearance, BackwardMatchesFiniteDifferences) {
    std::mt19937_64 rng(6);
    Image x = random_image(rng, 7, 5, 3);
    const Image w = random_image(rng, 7, 5, 3, -1, 1);
    AppearanceGrid g(3, 2);
    for (auto& v : g.gain()) v = 1 + 0.2 * std::uniform_real_distribution<double>(-1, 1)(rng);
    for (auto& v : g.offset()) v = 0.1 * std::uniform_real_distribution<double>(-1, 1)(rng);
    auto f = [&] {
        const Image y = appearance_correct(x, g);
        double s = 0;
        for (std::size_t i = 0; i < y.data().size(); ++i) s += w.data()[i] * y.data()[i];
        return s;
    };
    AppearanceGrid dg = g.zeros();
    const Image dx = appearance_correct_backward(x, g, w, dg);
    expect_gradient(dx, x, f, 1e-6);
    for (std::size_t i = 0; i < g.gain().size(); ++i) {
        EXPECT_NEAR(dg.gain()[i], v2xsim::testing::central_difference(f, g.gain()[i], 1e-6), 1e-7);
        EXPECT_NEAR(dg.offset()[i], v2xsim::testing::central_difference(f, g.offset()[i], 1e-6), 1e-7);
    }
}

TEST(ColorLoss, PerfectFitAndConstantOffset) {
    std::mt19937_64 rng(7);
    const Image x = random_image(rng, 16, 16, 3);
    EXPECT_NEAR(loss_color(x, x, AppearanceGrid(8, 8)).value, 0.0, 1e-15);

    const Image a(16, 16, 3, 0.5), b(16, 16, 3, 0.6);
    const double s = (2 * 0.5 * 0.6 + 1e-4) / (0.25 + 0.36 + 1e-4);
    const ColorLoss l = loss_color(a, b, AppearanceGrid{});
    EXPECT_NEAR(l.l1, 0.1, 1e-12);
    EXPECT_NEAR(l.value, 0.08 + 0.2 * (1 - s), 1e-12);

    const Image full(16, 16, 1, 1.0);
    const ColorLoss masked = loss_color(a, b, AppearanceGrid{}, full);
    EXPECT_EQ(masked.value, 0.0);
    for (double g : masked.d_rendered.data()) EXPECT_EQ(g, 0.0);
    EXPECT_THROW(loss_color(a, Image(16, 15, 3), AppearanceGrid{}), InvalidInput);
}

TEST(ColorLoss, GradientIsZeroAtMaskedPixelsAndMatchesFiniteDifferences) {
    std::mt19937_64 rng(8);
    Image r = random_image(rng, 16, 14, 3);
    const Image gt = random_image(rng, 16, 14, 3);
    Image mask(16, 14, 1);
    for (int y = 7; y < 14; ++y)
        for (int x = 0; x < 16; ++x) mask.at(x, y) = 1;
    AppearanceGrid grid(2, 2);
    grid.gain(1, 0, 2) = 1.2;
    const ColorLoss l = loss_color(r, gt, grid, mask);
    for (int y = 7; y < 14; ++y)
        for (int x = 0; x < 16; ++x)
            for (int c = 0; c < 3; ++c) EXPECT_EQ(l.d_rendered.at(x, y, c), 0.0);
    expect_gradient(l.d_rendered, r, [&] { return loss_color(r, gt, grid, mask).value; }, 1e-4);
}

TEST(ColorLoss, MaskedPixelsNeverReachSsimWindows) {
    std::mt19937_64 rng(9);
    Image r = random_image(rng, 24, 20, 3);
    const Image gt = random_image(rng, 24, 20, 3);
    Image mask(24, 20, 1);
    for (int y = 10; y < 20; ++y)
        for (int x = 0; x < 24; ++x) mask.at(x, y) = 1;
    const ColorLoss base = loss_color(r, gt, AppearanceGrid{}, mask, 0.2);
    Image gt2 = gt, r2 = r;
    for (int y = 10; y < 20; ++y)
        for (int x = 0; x < 24; ++x)
            for (int c = 0; c < 3; ++c) gt2.at(x, y, c) = 1 - gt.at(x, y, c), r2.at(x, y, c) = 0.5;
    const ColorLoss moved = loss_color(r2, gt2, AppearanceGrid{}, mask, 0.2);
    EXPECT_EQ(moved.value, base.value);
    const auto a = moved.d_rendered.data(), b = base.d_rendered.data();
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    expect_gradient(base.d_rendered, r, [&] { return loss_color(r, gt, AppearanceGrid{}, mask, 0.2).value; }, 1e-4);
}

TEST(DepthLoss, Examples) {
    const Image alpha(4, 4, 1, 1.0);
    const Image d(4, 4, 1, 5.0);
    const Image valid(4, 4, 1, 1.0);
    EXPECT_EQ(loss_depth(d, d, valid, alpha).value, 0.0);
    Image one_valid(4, 4, 1);
    one_valid.at(2, 1) = 1;
    Image far = d;
    far.at(2, 1) = 7.0;
    EXPECT_DOUBLE_EQ(loss_depth(d, far, one_valid, alpha).value, 2.0);
    EXPECT_EQ(loss_depth(d, far, Image(4, 4, 1), alpha).value, 0.0);

    std::mt19937_64 rng(9);
    const Image r = random_image(rng, 9, 8, 1, 1, 10), t = random_image(rng, 9, 8, 1, 1, 10);
    const Image a = random_image(rng, 9, 8, 1), v = random_image(rng, 9, 8, 1);
    double sum = 0;
    int n = 0;
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 9; ++x) {
            if (v.at(x, y) > 0.5 && a.at(x, y) >= 0.5) {
                sum += std::abs(r.at(x, y) - t.at(x, y));
                ++n;
            }
        }
    }
    Image v01 = v;
    for (auto& e : v01.data()) e = e > 0.5 ? 1 : 0;
    EXPECT_NEAR(loss_depth(r, t, v01, a).value, sum / n, 1e-12);
}

TEST(NormalLoss, Examples) {
    Image n(3, 3, 3), opp(3, 3, 3);
    for (int y = 0; y < 3; ++y) {
        for (int x = 0; x < 3; ++x) {
            n.at(x, y, 2) = 1;
            opp.at(x, y, 2) = -1;
        }
    }
    const Image alpha(3, 3, 1, 0.9);
    EXPECT_EQ(loss_normal(n, n, alpha).value, 0.0);
    EXPECT_DOUBLE_EQ(loss_normal(n, opp, alpha).value, 2.0);

    std::mt19937_64 rng(10);
    Image r = random_image(rng, 5, 4, 3, -1, 1);
    Image t = random_image(rng, 5, 4, 3, -1, 1);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 5; ++x) {
            Vec3 v(t.at(x, y, 0), t.at(x, y, 1), t.at(x, y, 2));
            v.normalize();
            for (int c = 0; c < 3; ++c) t.at(x, y, c) = v[c];
        }
    }
    const Image a = random_image(rng, 5, 4, 1);
    double sum = 0;
    int cnt = 0;
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 5; ++x) {
            if (a.at(x, y) < 0.5) continue;
            const Vec3 u = Vec3(r.at(x, y, 0), r.at(x, y, 1), r.at(x, y, 2)).normalized();
            for (int c = 0; c < 3; ++c) sum += std::abs(u[c] - t.at(x, y, c));
            ++cnt;
        }
    }
    const PixelLoss l = loss_normal(r, t, a);
    EXPECT_NEAR(l.value, sum / cnt, 1e-12);
    expect_gradient(l.grad, r, [&] { return loss_normal(r, t, a).value; }, 1e-5);
}

TEST(SkyLoss, Examples) {
    Image alpha(2, 1, 1), sky(2, 1, 1, 1.0);
    EXPECT_EQ(loss_sky(alpha, sky).value, 0.0);
    EXPECT_NEAR(loss_sky(Image(3, 3, 1, 0.5), Image(3, 3, 1)).value, std::log(2.0), 1e-12);
    EXPECT_NEAR(loss_sky(Image(3, 3, 1, 0.5), Image(3, 3, 1, 1.0)).value, std::log(2.0), 1e-12);

    std::mt19937_64 rng(11);
    Image a = random_image(rng, 6, 5, 1, 0.01, 0.99);
    Image s = random_image(rng, 6, 5, 1);
    for (auto& v : s.data()) v = v > 0.5 ? 1 : 0;
    double sum = 0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        const double y = 1 - s.data()[i];
        sum -= y * std::log(a.data()[i]) + (1 - y) * std::log(1 - a.data()[i]);
    }
    const PixelLoss l = loss_sky(a, s);
    EXPECT_NEAR(l.value, sum / a.data().size(), 1e-12);
    expect_gradient(l.grad, a, [&] { return loss_sky(a, s).value; }, 1e-5);
}

TEST(SemanticLoss, Examples) {
    Image logits(2, 2, 3), labels(2, 2, 1);
    for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < 2; ++x) {
            const int k = (x + y) % 3;
            labels.at(x, y) = k;
            logits.at(x, y, k) = 20;
        }
    }
    EXPECT_LT(loss_semantic(logits, labels).value, 1e-8);
    EXPECT_NEAR(loss_semantic(Image(2, 2, 3), labels).value, std::log(3.0), 1e-12);
    EXPECT_EQ(loss_semantic(logits, Image(2, 2, 1, 255)).value, 0.0);
    EXPECT_THROW(loss_semantic(logits, Image(2, 2, 1, 3)), InvalidInput);

    std::mt19937_64 rng(12);
    Image z = random_image(rng, 4, 3, 4, -3, 3);
    Image lab(4, 3, 1);
    for (auto& v : lab.data()) v = double(rng() % 5);
    for (auto& v : lab.data()) if (v == 4) v = 255;
    const PixelLoss l = loss_semantic(z, lab);
    expect_gradient(l.grad, z, [&] { return loss_semantic(z, lab).value; }, 1e-5);
}

TEST(RegLoss, Examples) {
    GaussianSet set(0, 0);
    Gaussian g;
    g.sh = {0, 0, 0};
    for (int i = 0; i < 4; ++i) set.push_back(g);
    EXPECT_NEAR(loss_reg(set).value, std::log(2.0), 1e-12);
    for (int i = 0; i < 4; ++i) set.opacity_logit(i) = logit(i % 2 ? 1e-6 : 1 - 1e-6);
    EXPECT_LT(loss_reg(set).value, 2e-5);
    EXPECT_EQ(loss_reg(GaussianSet(0, 0)).value, 0.0);

    set.opacity_logit(0) = 0.3;
    set.opacity_logit(1) = -2.0;
    const SetLoss l = loss_reg(set);
    for (std::size_t i = 0; i < 4; ++i) {
        const double fd = v2xsim::testing::central_difference([&] { return loss_reg(set).value; },
                                                              set.opacity_logit(i), 1e-6);
        EXPECT_NEAR(l.grad.opacity_logit(i), fd, 1e-8);
    }
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
    std::vector<double> p{1, -2, 3};
    const std::vector<double> g{0, 0, 0};
    AdamState s;
    adam_step(p, g, s, 0.1);
    EXPECT_EQ(p, (std::vector<double>{1, -2, 3}));
}

TEST(Adam, FirstStepIsBiasCorrected) {
    // At t = 1, mhat = g and vhat = g^2, so the step is lr * sign(g).
    std::vector<double> p{1.0, 1.0};
    AdamState s;
    adam_step(p, std::vector<double>{0.5, -3.0}, s, 0.01, AdamParams{0.9, 0.999, 0.0});
    EXPECT_DOUBLE_EQ(p[0], 0.99);
    EXPECT_DOUBLE_EQ(p[1], 1.01);
}

TEST(Adam, SecondStepMatchesHandFormula) {
    std::vector<double> p{2.0};
    AdamState s;
    s.m = {0.1};
    s.v = {0.02};
    s.step = 1;
    adam_step(p, std::vector<double>{0.4}, s, 0.05, AdamParams{0.9, 0.999, 1e-8});
    const double m = 0.9 * 0.1 + 0.1 * 0.4;
    const double v = 0.999 * 0.02 + 0.001 * 0.16;
    const double mhat = m / (1 - 0.81), vhat = v / (1 - 0.999 * 0.999);
    EXPECT_NEAR(p[0], 2.0 - 0.05 * mhat / (std::sqrt(vhat) + 1e-8), 1e-15);
    EXPECT_NEAR(s.m[0], m, 1e-15);
    EXPECT_EQ(s.step, 2);
}

namespace {

GaussianSet densify_fixture(std::mt19937_64& rng, std::size_t n) {
    GaussianSet set = v2xsim::testing::random_scene(rng, n, 1, 0, 0.2, 0.9);
    return set;
}

}  // namespace

TEST(Densify, NothingToDo) {
    std::mt19937_64 rng(13);
    GaussianSet set = densify_fixture(rng, 20);
    const GaussianSet before = set;
    DensifyStats stats;
    stats.reset(set.size());
    const DensifyResult r = densify_and_prune(set, stats, DensifyConfig{}, rng);
    EXPECT_EQ(r.cloned + r.split + r.pruned, 0u);
    ASSERT_EQ(set.size(), before.size());
    for (std::size_t i = 0; i < set.size(); ++i) EXPECT_EQ(set.position(i), before.position(i));
}

TEST(Densify, SplitChildrenStayInsideParentEllipsoid) {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 50; ++trial) {
        GaussianSet set = densify_fixture(rng, 3);
        for (std::size_t i = 0; i < 3; ++i) set.log_scale(i) = Vec3(std::log(0.5), std::log(0.3), std::log(0.2));
        const Gaussian parent = set.get(1);
        DensifyStats stats;
        stats.reset(3);
        stats.add(1, 1.0);
        DensifyConfig cfg;
        const DensifyResult r = densify_and_prune(set, stats, cfg, rng);
        EXPECT_EQ(r.split, 1u);
        ASSERT_EQ(set.size(), 4u);
        const Mat3 inv = build_covariance(parent.rotation, parent.scale).inverse();
        for (std::size_t i = 2; i < 4; ++i) {
            const Vec3 d = set.position(i) - parent.position;
            EXPECT_LE(std::sqrt(d.dot(inv * d)), 3.0 + 1e-9);
            EXPECT_LT((set.scale(i) - parent.scale / 1.6).norm(), 1e-12);
            EXPECT_EQ(r.origin[i], -1);
        }
    }
}

TEST(Densify, CloneKeepsRenderCloseAndPruneEmptiesSet) {
    std::mt19937_64 rng(15);
    Camera cam = v2xsim::testing::make_camera(48, 48, 40);
    GaussianSet set = v2xsim::testing::random_scene(rng, 30, 1, 0, 0.1, 0.9);
    for (std::size_t i = 0; i < set.size(); ++i) set.log_scale(i) = set.log_scale(i).cwiseMin(std::log(0.04));
    const RenderOutput before = rasterize(set, cam, Vec3::Zero());
    const GaussianSet original = set;
    DensifyStats stats;
    stats.reset(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) stats.add(i, 1.0);
    const DensifyResult r = densify_and_prune(set, stats, DensifyConfig{}, rng);
    EXPECT_EQ(r.cloned, 30u);
    EXPECT_EQ(set.size(), 60u);
    const RenderOutput after = rasterize(set, cam, Vec3::Zero());
    EXPECT_LT(mean_abs_diff(before.color, after.color), 5e-2);
    // Two stacked copies reproduce the original opacity.
    for (std::size_t i = 0; i < 30; ++i) {
        EXPECT_EQ(r.origin[i], std::ptrdiff_t(i));
        EXPECT_EQ(r.origin[30 + i], -1);
        EXPECT_NEAR(1 - std::pow(1 - set.opacity(i), 2), original.opacity(i), 1e-12);
        EXPECT_NEAR(set.opacity(30 + i), set.opacity(i), 1e-15);
        EXPECT_EQ(set.position(30 + i), original.position(i));
    }

    for (std::size_t i = 0; i < set.size(); ++i) set.opacity_logit(i) = logit(0.001);
    stats.reset(set.size());
    const DensifyResult p = densify_and_prune(set, stats, DensifyConfig{}, rng);
    EXPECT_EQ(p.pruned, 60u);
    EXPECT_TRUE(set.empty());
}

TEST(Densify, PruneNeverChangesSurvivors) {
    std::mt19937_64 rng(16);
    GaussianSet set = densify_fixture(rng, 40);
    for (std::size_t i = 0; i < 40; i += 3) set.opacity_logit(i) = logit(0.001);
    const GaussianSet before = set;
    DensifyStats stats;
    stats.reset(40);
    const DensifyResult r = densify_and_prune(set, stats, DensifyConfig{}, rng);
    EXPECT_EQ(r.pruned, 14u);
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto src = std::size_t(r.origin[i]);
        EXPECT_EQ(set.position(i), before.position(src));
        EXPECT_EQ(set.opacity_logit(i), before.opacity_logit(src));
        EXPECT_EQ(set.log_scale(i), before.log_scale(src));
    }
}
