#include "test_util.hpp"

#include "v2xsim/annotations.hpp"
#include "v2xsim/corner_cases.hpp"
#include "v2xsim/errors.hpp"
#include "v2xsim/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace v2xsim;
using v2xsim::testing::make_camera;

namespace {

Camera camera_at(const Vec3& eye, const Vec3& target, int w = 64, int h = 48, double f = 40) {
    Camera cam = make_camera(w, h, f);
    cam.world_to_camera = look_at(eye, target);
    return cam;
}

/// Gaussians on a grid filling 80% of the unit cube [-1,1]^3.
GaussianSet block_asset(double scale = 0.08, Vec3 rgb_dc = Vec3(0.8, 0.2, 0.1)) {
    GaussianSet set(1, 0);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            for (int k = 0; k < 5; ++k) {
                Gaussian g;
                g.position = 0.8 * Vec3(-1 + 0.5 * i, -1 + 0.5 * j, -1 + 0.5 * k);
                g.scale = Vec3::Constant(scale);
                g.opacity = 0.9;
                g.sh.assign(12, 0.0);
                for (int c = 0; c < 3; ++c) g.sh[c] = rgb_dc[c];
                set.push_back(g);
            }
        }
    }
    return set;
}

PoseTrack track_of(const std::vector<Vec3>& centers, double yaw = 0) {
    std::vector<Pose> poses(centers.size());
    for (std::size_t i = 0; i < centers.size(); ++i) {
        poses[i].translation = centers[i];
        poses[i].rotation = Vec4(std::cos(yaw / 2), 0, 0, std::sin(yaw / 2));
    }
    return PoseTrack(0, poses);
}

DynamicObject box_object(const std::string& id, const Vec3& size, const std::vector<Vec3>& centers) {
    DynamicObject o;
    o.id = id;
    o.size = size;
    o.gaussians = fit_asset_to_box(block_asset(), 0.8 * size);
    o.track = track_of(centers);
    return o;
}

SceneGraph empty_scene(int frames, const Camera& ego, const Camera& infra) {
    SceneGraph s;
    s.num_frames = frames;
    s.background = GaussianSet(1, 0);
    s.rig.ego.assign(std::size_t(frames), ego);
    s.rig.infra.assign(std::size_t(frames), infra);
    return s;
}

/// Small textured ground patch around the origin.
GaussianSet ground(double half = 30, double step = 2) {
    GaussianSet set(1, 0);
    for (double x = -half; x <= half; x += step) {
        for (double y = -half; y <= half; y += step) {
            Gaussian g;
            g.position = Vec3(x, y, 0);
            g.scale = Vec3(0.6, 0.6, 0.02);
            g.opacity = 0.9;
            g.sh.assign(12, 0.0);
            g.sh[0] = g.sh[1] = g.sh[2] = 0.2 + 0.1 * std::sin(x + 2 * y);
            set.push_back(g);
        }
    }
    return set;
}

Vec3 bbox_center(const GaussianSet& s) {
    Vec3 lo = s.position(0), hi = s.position(0);
    for (std::size_t i = 1; i < s.size(); ++i) {
        lo = lo.cwiseMin(Vec3(s.position(i)));
        hi = hi.cwiseMax(Vec3(s.position(i)));
    }
    return 0.5 * (lo + hi);
}

Vec3 bbox_extent(const GaussianSet& s) {
    Vec3 lo = s.position(0), hi = s.position(0);
    for (std::size_t i = 1; i < s.size(); ++i) {
        lo = lo.cwiseMin(Vec3(s.position(i)));
        hi = hi.cwiseMax(Vec3(s.position(i)));
    }
    return hi - lo;
}

bool images_equal(const Image& a, const Image& b) {
    return a.same_shape(b) && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

}  // namespace

// ---------------------------------------------------------------- fit

TEST(FitAsset, ExactAssetKeepsScale) {
    GaussianSet asset(1, 0);
    for (int k = 0; k < 8; ++k) {
        Gaussian g;
        g.position = Vec3(k & 1 ? 2 : -2, k & 2 ? 1 : -1, k & 4 ? 0.8 : -0.8);
        g.sh.assign(12, 0.0);
        asset.push_back(g);
    }
    double f = 0;
    const GaussianSet out = fit_asset_to_box(asset, Vec3(4, 2, 1.6), &f);
    EXPECT_NEAR(f, 1.0, 1e-12);
    for (std::size_t i = 0; i < out.size(); ++i) {
        EXPECT_LT((Vec3(out.position(i)) - Vec3(asset.position(i))).norm(), 1e-12);
        EXPECT_LT((Vec3(out.log_scale(i)) - Vec3(asset.log_scale(i))).norm(), 1e-12);
    }
}

TEST(FitAsset, UnitCubeTakesSmallestRatio) {
    GaussianSet asset(1, 0);
    for (int k = 0; k < 8; ++k) {
        Gaussian g;
        g.position = Vec3(k & 1 ? 3.5 : 2.5, k & 2 ? -4.5 : -5.5, k & 4 ? 1 : 0);
        g.scale = Vec3(0.1, 0.2, 0.3);
        g.sh.assign(12, 0.0);
        asset.push_back(g);
    }
    double f = 0;
    const GaussianSet out = fit_asset_to_box(asset, Vec3(4, 2, 1.6), &f);
    EXPECT_NEAR(f, 1.6, 1e-12);
    EXPECT_LT(bbox_center(out).norm(), 1e-12);
    EXPECT_LT((bbox_extent(out) - Vec3(1.6, 1.6, 1.6)).norm(), 1e-12);
    EXPECT_LT((out.scale(0) - 1.6 * Vec3(0.1, 0.2, 0.3)).norm(), 1e-12);
}

TEST(FitAsset, LongerSideTurnsOntoX) {
    GaussianSet asset(1, 0);
    for (int k = 0; k < 8; ++k) {
        Gaussian g;
        g.position = Vec3(k & 1 ? 0.5 : -0.5, k & 2 ? 2 : -2, k & 4 ? 0.4 : -0.4);
        g.scale = Vec3(0.3, 0.1, 0.1);  // long along asset x
        g.sh.assign(12, 0.0);
        asset.push_back(g);
    }
    double f = 0;
    const GaussianSet out = fit_asset_to_box(asset, Vec3(4, 1, 0.8), &f);
    EXPECT_NEAR(f, 1.0, 1e-12);
    EXPECT_LT((bbox_extent(out) - Vec3(4, 1, 0.8)).norm(), 1e-12);
    // the Gaussian's long axis now points along world y
    const Mat3 R = quat_to_matrix(Vec4(out.rotation(0)).normalized());
    EXPECT_NEAR(std::abs(R.col(0).y()), 1.0, 1e-12);
}

TEST(FitAsset, DegenerateAssetsAreRejected) {
    EXPECT_THROW(fit_asset_to_box(GaussianSet(1, 0), Vec3(4, 2, 1.6)), InvalidInput);
    GaussianSet flat(1, 0);
    for (int k = 0; k < 4; ++k) {
        Gaussian g;
        g.position = Vec3(k & 1, k >> 1, 0);
        g.sh.assign(12, 0.0);
        flat.push_back(g);
    }
    EXPECT_THROW(fit_asset_to_box(flat, Vec3(4, 2, 1.6)), InvalidInput);
}

// ---------------------------------------------------------------- render_v2x

TEST(RenderV2X, StaticSceneFramesAreBitIdentical) {
    const Camera ego = camera_at(Vec3(-15, 0, 1.5), Vec3(0, 0, 1));
    const Camera infra = camera_at(Vec3(5, -15, 8), Vec3(0, 0, 0));
    SceneGraph s = empty_scene(4, ego, infra);
    s.background = ground();
    insert_object(s, box_object("car", Vec3(4, 2, 1.6), std::vector<Vec3>(4, Vec3(0, 0, 0.8))));
    const auto frames = render_v2x(s, 0, 3);
    ASSERT_EQ(frames.size(), 4u);
    for (const auto& fr : frames) {
        EXPECT_TRUE(images_equal(fr.ego.color, frames[0].ego.color));
        EXPECT_TRUE(images_equal(fr.infra.color, frames[0].infra.color));
    }
    EXPECT_EQ(frames[2].frame, 2);
}

TEST(RenderV2X, OneCompositionPerFrame) {
    const Camera cam = camera_at(Vec3(-15, 0, 1.5), Vec3(0, 0, 1));
    SceneGraph s = empty_scene(6, cam, cam);
    insert_object(s, box_object("car", Vec3(4, 2, 1.6), std::vector<Vec3>(6, Vec3(0, 0, 0.8))));
    const auto before = compose_frame_count();
    const auto frames = render_v2x(s, 1, 5);
    EXPECT_EQ(compose_frame_count() - before, 5u);
    EXPECT_EQ(frames.size(), 5u);
}

TEST(RenderV2X, RangeOutsideSceneThrows) {
    const Camera cam = camera_at(Vec3(-15, 0, 1.5), Vec3(0, 0, 1));
    const SceneGraph s = empty_scene(3, cam, cam);
    EXPECT_THROW(render_v2x(s, 0, 3), OutOfRange);
    EXPECT_THROW(render_v2x(s, -1, 1), OutOfRange);
    EXPECT_THROW(render_v2x(s, 2, 1), OutOfRange);
}

TEST(RenderV2X, MovingObjectFollowsProjectedMotion) {
    // infra camera looks straight down the y axis at a box driving along x
    const Camera infra = camera_at(Vec3(0, -30, 0.8), Vec3(0, 0, 0.8), 128, 64, 60);
    const Camera ego = camera_at(Vec3(-30, 0, 1.5), Vec3(0, 0, 1));
    std::vector<Vec3> centers;
    for (int f = 0; f < 5; ++f) centers.push_back(Vec3(-2.0 + f, 0, 0.8));
    SceneGraph s = empty_scene(5, ego, infra);
    insert_object(s, box_object("car", Vec3(4, 2, 1.6), centers));
    const auto frames = render_v2x(s, 0, 4);

    auto centroid_x = [](const Image& alpha) {
        double sum = 0, wsum = 0;
        for (int y = 0; y < alpha.height(); ++y) {
            for (int x = 0; x < alpha.width(); ++x) {
                sum += alpha.at(x, y) * x;
                wsum += alpha.at(x, y);
            }
        }
        return sum / wsum;
    };
    const double c0 = centroid_x(frames[0].infra.alpha);
    const double p0 = infra.project_camera(infra.to_camera(centers[0])).x();
    for (int f = 1; f < 5; ++f) {
        const double moved = centroid_x(frames[std::size_t(f)].infra.alpha) - c0;
        const double expected = infra.project_camera(infra.to_camera(centers[std::size_t(f)])).x() - p0;
        EXPECT_NEAR(moved, expected, 0.25) << "frame " << f;
        EXPECT_NEAR(expected, 2.0 * f, 1e-9);  // 1 m at 30 m with f = 60
    }
}

// ---------------------------------------------------------------- paste_ego

TEST(PasteEgo, MaskSelectsPerPixel) {
    Image rendered(6, 4, 3), source(6, 4, 3);
    for (std::size_t i = 0; i < rendered.data().size(); ++i) {
        rendered.data()[i] = 0.01 * double(i);
        source.data()[i] = 1.0 - 0.01 * double(i);
    }
    EXPECT_TRUE(images_equal(paste_ego(rendered, source, Image(6, 4, 1, 0.0)), rendered));
    EXPECT_TRUE(images_equal(paste_ego(rendered, source, Image(6, 4, 1, 1.0)), source));

    Image checker(6, 4, 1);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 6; ++x) checker.at(x, y) = (x + y) % 2;
    }
    const Image out = paste_ego(rendered, source, checker);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 6; ++x) {
            const Image& want = (x + y) % 2 ? source : rendered;
            for (int c = 0; c < 3; ++c) EXPECT_EQ(out.at(x, y, c), want.at(x, y, c));
        }
    }
}

TEST(PasteEgo, ShapeMismatchThrows) {
    EXPECT_THROW(paste_ego(Image(4, 4, 3), Image(4, 3, 3), Image(4, 4, 1)), InvalidInput);
    EXPECT_THROW(paste_ego(Image(4, 4, 3), Image(4, 4, 3), Image(4, 4, 3)), InvalidInput);
}

// ---------------------------------------------------------------- annotations

TEST(ProjectBox, CubeStraightAheadBracket) {
    const Camera cam = make_camera(64, 64, 100);
    const auto b = project_box(Box3{Vec3(0, 0, 10), Vec3(2, 2, 2), 0}, cam);
    ASSERT_TRUE(b.has_value());
    const double half_w = 0.5 * ((*b)[2] - (*b)[0]);
    EXPECT_GE(half_w, 100.0 / 11 - 1e-9);
    EXPECT_LE(half_w, 100.0 / 9 + 1e-9);
    // symmetric about the principal point
    EXPECT_NEAR(0.5 * ((*b)[0] + (*b)[2]), cam.cx, 1e-9);
    EXPECT_NEAR(0.5 * ((*b)[1] + (*b)[3]), cam.cy, 1e-9);
}

TEST(ProjectBox, BehindCameraIsEmpty) {
    const Camera cam = make_camera(64, 64, 100);
    EXPECT_FALSE(project_box(Box3{Vec3(0, 0, -10), Vec3(2, 2, 2), 0}, cam).has_value());
    // straddling the near plane still yields bounds
    EXPECT_TRUE(project_box(Box3{Vec3(0, 0, 0.5), Vec3(2, 2, 2), 0}, cam).has_value());
}

TEST(ExportAnnotations, CubeStraightAheadRecord) {
    const Camera cam = make_camera(64, 64, 100);
    SceneGraph s = empty_scene(1, cam, cam);
    insert_object(s, box_object("cube", Vec3(2, 2, 2), {Vec3(0, 0, 10)}));
    const auto recs = export_annotations(s, 0, 0);
    ASSERT_EQ(recs.size(), 2u);
    for (const auto& r : recs) {
        EXPECT_EQ(r.id, "cube");
        EXPECT_LT((r.center_camera - Vec3(0, 0, 10)).norm(), 1e-12);
        EXPECT_NEAR(r.truncation, 0.0, 1e-12);
        EXPECT_NEAR(r.occlusion, 0.0, 1e-12);
        EXPECT_NEAR(0.5 * (r.box2d[0] + r.box2d[2]), cam.cx, 1e-9);
        for (int k = 0; k < 4; ++k) {
            EXPECT_GE(r.box2d[std::size_t(k)], 0.0);
            EXPECT_LE(r.box2d[std::size_t(k)], 63.0);
        }
    }
    EXPECT_EQ(recs[0].view, View::kEgo);
    EXPECT_EQ(recs[1].view, View::kInfra);
}

TEST(ExportAnnotations, OutsideBothFrustaGivesNoRecords) {
    const Camera ego = camera_at(Vec3(0, 0, 1.5), Vec3(10, 0, 1.5));
    const Camera infra = camera_at(Vec3(0, 5, 10), Vec3(10, 5, 0));
    SceneGraph s = empty_scene(2, ego, infra);
    insert_object(s, box_object("behind", Vec3(4, 2, 1.6), {Vec3(-20, 0, 0.8), Vec3(-20, 80, 0.8)}));
    EXPECT_TRUE(export_annotations(s, 0, 1).empty());
}

TEST(ExportAnnotations, PartlyOutsideIsTruncatedAndClamped) {
    const Camera cam = make_camera(64, 64, 100);
    SceneGraph s = empty_scene(1, cam, cam);
    // center projects at column 31.5 + 100*3/10 = 61.5, half width ~10 px
    insert_object(s, box_object("edge", Vec3(2, 2, 2), {Vec3(3, 0, 10)}));
    const auto recs = export_annotations(s, 0, 0);
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[0].box2d[2], 63.0);
    EXPECT_GT(recs[0].truncation, 0.2);
    EXPECT_LT(recs[0].truncation, 0.8);
}

TEST(KittiLine, LevelCameraConventions) {
    const Camera cam = camera_at(Vec3(0, 0, 1.5), Vec3(10, 0, 1.5));
    SceneGraph s = empty_scene(1, cam, cam);
    insert_object(s, box_object("car", Vec3(4, 2, 1.6), {Vec3(10, 0, 0.8)}));
    const auto recs = export_annotations(s, 0, 0);
    ASSERT_FALSE(recs.empty());
    const AnnotationRecord& r = recs[0];
    EXPECT_NEAR(r.rotation_y, -std::numbers::pi / 2, 1e-12);  // heading away from the camera

    std::istringstream in(kitti_line(r));
    std::string type;
    double trunc, alpha, x1, y1, x2, y2, h, w, l, x, y, z, ry;
    int occ;
    in >> type >> trunc >> occ >> alpha >> x1 >> y1 >> x2 >> y2 >> h >> w >> l >> x >> y >> z >> ry;
    ASSERT_FALSE(in.fail());
    EXPECT_EQ(type, "Car");
    EXPECT_EQ(occ, 0);
    EXPECT_NEAR(h, 1.6, 1e-9);
    EXPECT_NEAR(w, 2.0, 1e-9);
    EXPECT_NEAR(l, 4.0, 1e-9);
    // bottom center sits on the ground, 1.5 m below a level camera
    EXPECT_NEAR(x, 0.0, 1e-2);
    EXPECT_NEAR(y, 1.5, 1e-2);
    EXPECT_NEAR(z, 10.0, 1e-2);
    EXPECT_NEAR(alpha, -std::numbers::pi / 2, 1e-2);
}

TEST(ExportAnnotations, RemovingObjectChangesPixelsOnlyInsideItsBox) {
    const Camera ego = camera_at(Vec3(-15, 2, 1.5), Vec3(0, 0, 1));
    const Camera infra = camera_at(Vec3(4, -14, 9), Vec3(0, 0, 0));
    SceneGraph s = empty_scene(3, ego, infra);
    s.background = ground();
    insert_object(s, box_object("a", Vec3(4, 2, 1.6), {Vec3(0, 0, 0.8), Vec3(1, 0, 0.8), Vec3(2, 0, 0.8)}));
    insert_object(s, box_object("b", Vec3(4.5, 1.9, 1.6), {Vec3(-3, 4, 0.8), Vec3(-3, 3, 0.8), Vec3(-3, 2, 0.8)}));
    const auto recs = export_annotations(s, 0, 2);
    const auto with = render_v2x(s, 0, 2);

    SceneGraph without = s;
    remove_object(without, "a");
    const auto without_a = render_v2x(without, 0, 2);
    int changed = 0;
    for (int f = 0; f < 3; ++f) {
        for (View view : {View::kEgo, View::kInfra}) {
            const AnnotationRecord* rec = nullptr;
            for (const auto& r : recs) {
                if (r.frame == f && r.view == view && r.id == "a") rec = &r;
            }
            ASSERT_NE(rec, nullptr);
            const Image& a = view == View::kEgo ? with[std::size_t(f)].ego.color : with[std::size_t(f)].infra.color;
            const Image& b =
                view == View::kEgo ? without_a[std::size_t(f)].ego.color : without_a[std::size_t(f)].infra.color;
            for (int y = 0; y < a.height(); ++y) {
                for (int x = 0; x < a.width(); ++x) {
                    bool diff = false;
                    for (int c = 0; c < 3; ++c) diff |= a.at(x, y, c) != b.at(x, y, c);
                    if (!diff) continue;
                    ++changed;
                    const bool inside = x >= rec->box2d[0] - 2 && x <= rec->box2d[2] + 2 && y >= rec->box2d[1] - 2 &&
                                        y <= rec->box2d[3] + 2;
                    EXPECT_TRUE(inside) << "frame " << f << " view " << view_name(view) << " pixel " << x << "," << y;
                }
            }
        }
    }
    EXPECT_GT(changed, 50);
}

// ---------------------------------------------------------------- corner cases

namespace {

// Ego camera at 1.5 m looks along +x; the van stands between it and the
// jeep. The infra camera watches both from the side.
SceneGraph van_jeep_scene(bool with_van) {
    const Camera ego = camera_at(Vec3(0, 0, 1.5), Vec3(10, 0, 1.5));
    const Camera infra = camera_at(Vec3(15, -25, 10), Vec3(15, 0, 0));
    SceneGraph s = empty_scene(1, ego, infra);
    if (with_van) insert_object(s, box_object("van", Vec3(5, 2.1, 2.6), {Vec3(10, 0, 1.3)}));
    insert_object(s, box_object("jeep", Vec3(4.5, 1.9, 1.8), {Vec3(20, 0, 0.9)}));
    return s;
}

}  // namespace

TEST(BoxSurfaceSamples, CountAndPlacement) {
    const Box3 box{Vec3(1, 2, 3), Vec3(4, 2, 1), 0.3};
    const auto pts = box_surface_samples(box, 3);
    ASSERT_EQ(pts.size(), 54u);
    const Eigen::Isometry3d inv = box.pose().inverse();
    for (const Vec3& p : pts) {
        const Vec3 l = inv * p;
        const Vec3 r = (2 * l).cwiseQuotient(box.size).cwiseAbs();
        EXPECT_NEAR(r.maxCoeff(), 1.0, 1e-12);
    }
    EXPECT_THROW(box_surface_samples(box, 0), InvalidInput);
}

TEST(CornerCases, SingleClearObjectGivesNone) {
    const SceneGraph s = van_jeep_scene(false);
    const Visibility ego = object_visibility(s, 0, 0, s.camera(View::kEgo, 0));
    EXPECT_EQ(ego.samples, 216);
    EXPECT_EQ(ego.in_frustum, 216);
    EXPECT_EQ(ego.occluded, 0);
    EXPECT_TRUE(detect_corner_cases(s, 0, 0).empty());
}

TEST(CornerCases, VanBlocksJeep) {
    const SceneGraph s = van_jeep_scene(true);
    const auto cases = detect_corner_cases(s, 0, 0);
    ASSERT_EQ(cases.size(), 1u);
    EXPECT_EQ(cases[0].id, "jeep");
    EXPECT_EQ(cases[0].occluder, "van");
    EXPECT_GE(cases[0].visibility_infra, 0.5);
    EXPECT_LE(cases[0].visibility_ego, 0.1);
    EXPECT_EQ(cases[0].frame, 0);
}

TEST(CornerCases, RemovingVanClearsTheCase) {
    SceneGraph s = van_jeep_scene(true);
    remove_object(s, "van");
    EXPECT_TRUE(detect_corner_cases(s, 0, 0).empty());
}

TEST(CornerCases, OutOfEgoViewIsFlaggedWithoutOccluder) {
    const Camera ego = camera_at(Vec3(0, 0, 1.5), Vec3(10, 0, 1.5));
    const Camera infra = camera_at(Vec3(-10, -25, 10), Vec3(-10, 0, 0));
    SceneGraph s = empty_scene(1, ego, infra);
    insert_object(s, box_object("behind", Vec3(4.5, 1.9, 1.6), {Vec3(-10, 0, 0.8)}));
    const auto cases = detect_corner_cases(s, 0, 0);
    ASSERT_EQ(cases.size(), 1u);
    EXPECT_EQ(cases[0].visibility_ego, 0.0);
    EXPECT_EQ(cases[0].occluder, "");
}

TEST(CornerCases, EmptySceneIsRejected) {
    const Camera cam = make_camera(16, 16, 10);
    EXPECT_THROW(detect_corner_cases(empty_scene(1, cam, cam), 0, 0), InvalidInput);
}

TEST(CornerCases, SwappingRigsSwapsRoles) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    int flagged = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const Camera a = camera_at(Vec3(12 * u(rng), 12 * u(rng), 1.5 + 6 * (u(rng) + 1)), Vec3(0, 0, 0));
        const Camera b = camera_at(Vec3(12 * u(rng), 12 * u(rng), 1.5 + 6 * (u(rng) + 1)), Vec3(0, 0, 0));
        SceneGraph s = empty_scene(1, a, b);
        for (int k = 0; k < 4; ++k) {
            insert_object(s, box_object("o" + std::to_string(k), Vec3(4, 2, 1.6),
                                        {Vec3(6 * u(rng), 6 * u(rng), 0.8)}));
        }
        SceneGraph swapped = s;
        std::swap(swapped.rig.ego, swapped.rig.infra);

        // flags in the swapped scene are exactly the objects the original
        // ego camera sees clearly and the original infra camera does not
        std::vector<std::string> expected;
        for (std::size_t i = 0; i < s.objects.size(); ++i) {
            const double va = object_visibility(s, i, 0, a).visible_fraction();
            const double vb = object_visibility(s, i, 0, b).visible_fraction();
            if (va >= 0.5 && vb <= 0.1) expected.push_back(s.objects[i].id);
        }
        std::vector<std::string> got;
        for (const auto& c : detect_corner_cases(swapped, 0, 0)) got.push_back(c.id);
        EXPECT_EQ(got, expected) << "trial " << trial;
        flagged += int(got.size());

        const auto orig = detect_corner_cases(s, 0, 0);
        const auto swap = detect_corner_cases(swapped, 0, 0);
        for (const auto& c : orig) {
            for (const auto& d : swap) EXPECT_NE(c.id, d.id);  // roles cannot both hold
        }
    }
    EXPECT_GT(flagged, 0);
}

// ---------------------------------------------------------------- dataset

TEST(WriteDataset, EmitsPairsLabelsAndManifest) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "v2xsim_test_dataset";
    fs::remove_all(dir);
    const Camera ego = camera_at(Vec3(-15, 0, 1.5), Vec3(0, 0, 1));
    const Camera infra = camera_at(Vec3(5, -15, 8), Vec3(0, 0, 0));
    SceneGraph s = empty_scene(3, ego, infra);
    s.background = ground();
    insert_object(s, box_object("car", Vec3(4, 2, 1.6), std::vector<Vec3>(3, Vec3(0, 0, 0.8))));
    s.ego_masks.assign(3, Image(64, 48, 1, 0.0));
    for (int x = 0; x < 64; ++x) s.ego_masks[1].at(x, 47) = 1;

    const auto frames = render_v2x(s, 0, 2);
    const auto recs = export_annotations(s, 0, 2);
    std::map<int, Image> sources{{1, Image(64, 48, 3, 1.0)}};
    const DatasetFiles files = write_v2x_dataset(dir, s, frames, recs, sources);
    ASSERT_EQ(files.ego_images.size(), 3u);
    ASSERT_EQ(files.infra_labels.size(), 3u);
    for (const auto& p : files.ego_images) EXPECT_TRUE(fs::exists(p));
    EXPECT_TRUE(fs::exists(dir / "infra" / "depth" / "frame_000002.pfm"));
    EXPECT_TRUE(fs::exists(dir / "annotations.json"));
    EXPECT_TRUE(fs::exists(dir / "manifest.json"));

    std::ifstream label(files.ego_labels[0]);
    std::string line;
    int lines = 0;
    while (std::getline(label, line)) ++lines;
    EXPECT_EQ(lines, 1);

    const Json manifest = read_json_file(dir / "manifest.json");
    EXPECT_EQ(manifest["frames"].size(), 3u);
    EXPECT_EQ(manifest["frames"][1]["ego"]["image"], "ego/image/frame_000001.png");
    fs::remove_all(dir);
}
