#include "v2xsim/toy_scene.hpp"

#include "v2xsim/corner_cases.hpp"
#include "v2xsim/errors.hpp"
#include "v2xsim/image_io.hpp"
#include "v2xsim/manifest.hpp"
#include "v2xsim/pointcloud.hpp"
#include "v2xsim/rasterizer.hpp"
#include "v2xsim/sh.hpp"

#include <cmath>
#include <cstdio>
#include <random>

namespace v2xsim {

namespace {

constexpr double kGroundHalf = 20.0;
constexpr double kGroundStep = 0.5;
constexpr double kFocal = 48.0;

Vec3 ground_color(double x, double y) {
    return Vec3(0.40 + 0.20 * std::sin(0.9 * x) * std::cos(0.7 * y), 0.45 + 0.15 * std::sin(0.5 * x + 0.8 * y),
                0.35 + 0.15 * std::cos(1.1 * y - 0.4 * x));
}

void set_dc(Gaussian& g, const Vec3& rgb) {
    for (int c = 0; c < 3; ++c) g.sh[std::size_t(c)] = (rgb[c] - 0.5) / kShC0;
}

struct CarSpec {
    const char* id;
    Vec3 size;
    Vec3 start;  // box center at frame 0
    Vec3 velocity;  // m per frame
    Vec3 body;
};

const CarSpec kCars[] = {
    {"car_a", Vec3(4.4, 1.9, 1.5), Vec3(10, 2, 0.75), Vec3(-0.6, 0, 0), Vec3(0.85, 0.15, 0.1)},
    {"car_b", Vec3(4.0, 1.8, 1.6), Vec3(2, -14, 0.8), Vec3(0, 0.6, 0), Vec3(0.1, 0.3, 0.85)},
};

double car_yaw(const CarSpec& c) { return std::atan2(c.velocity.y(), c.velocity.x()); }

GaussianSet car_gaussians(const CarSpec& c, int sh_degree) {
    GaussianSet set(sh_degree, 0);
    const int nx = 9, ny = 5, nz = 4;
    const Vec3 span = 0.9 * c.size;
    const Vec3 step(span.x() / (nx - 1), span.y() / (ny - 1), span.z() / (nz - 1));
    Gaussian g;
    g.sh.assign(set.sh_stride(), 0.0);
    g.opacity = 0.95;
    g.scale = 0.6 * step;
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            for (int k = 0; k < nz; ++k) {
                g.position = -0.5 * span + Vec3(i * step.x(), j * step.y(), k * step.z());
                // darker sills, lighter roof band
                const double shade = k == 0 ? 0.6 : (k == nz - 1 ? 1.15 : 1.0);
                set_dc(g, (shade * c.body).cwiseMin(Vec3::Ones()));
                set.push_back(g);
            }
        }
    }
    return set;
}

Vec3 ego_eye(int frame) { return Vec3(-16 + 0.2 * frame, -2, 1.6); }

Camera toy_camera(const ToySceneOptions& o, const Vec3& eye, const Vec3& target) {
    Camera cam;
    cam.width = o.width;
    cam.height = o.height;
    cam.fx = cam.fy = kFocal * o.width / 64.0;
    cam.cx = 0.5 * (o.width - 1);
    cam.cy = 0.5 * (o.height - 1);
    cam.near = 1.0;  // keeps ground splats under the ego camera out of the view
    cam.far = 200;
    cam.world_to_camera = look_at(eye, target);
    return cam;
}

Box3 ego_box(int frame) { return Box3{ego_eye(frame) + Vec3(-1.2, 0, -0.85), Vec3(4.5, 1.9, 1.5), 0.0}; }

std::string frame_file(const char* stem, int frame, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%06d.%s", stem, frame, ext);
    return buf;
}

}  // namespace

SceneGraph toy_ground_truth(const ToySceneOptions& o) {
    if (o.width < 16 || o.height < 16 || o.num_frames < 1) {
        throw InvalidInput("toy scene needs at least 16x16 pixels and one frame");
    }
    SceneGraph s;
    s.num_frames = o.num_frames;
    s.background = GaussianSet(1, 0);
    Gaussian g;
    g.sh.assign(s.background.sh_stride(), 0.0);
    g.opacity = 0.95;
    g.scale = Vec3(0.3, 0.3, 0.02);
    const int n = int(std::lround(2 * kGroundHalf / kGroundStep));
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
            const double x = -kGroundHalf + i * kGroundStep, y = -kGroundHalf + j * kGroundStep;
            g.position = Vec3(x, y, 0);
            set_dc(g, ground_color(x, y));
            s.background.push_back(g);
        }
    }
    for (const CarSpec& c : kCars) {
        DynamicObject obj;
        obj.id = c.id;
        obj.size = c.size;
        obj.gaussians = car_gaussians(c, 1);
        std::vector<Pose> poses(std::size_t(o.num_frames));
        for (int f = 0; f < o.num_frames; ++f) {
            poses[std::size_t(f)].translation = c.start + f * c.velocity;
            poses[std::size_t(f)].rotation = Vec4(std::cos(0.5 * car_yaw(c)), 0, 0, std::sin(0.5 * car_yaw(c)));
        }
        obj.track = PoseTrack(0, std::move(poses));
        s.objects.push_back(std::move(obj));
    }
    for (int f = 0; f < o.num_frames; ++f) {
        const Vec3 eye = ego_eye(f);
        s.rig.ego.push_back(toy_camera(o, eye, eye + Vec3(10, 0, -1.6)));
        s.rig.infra.push_back(toy_camera(o, Vec3(-7, -9, 7), Vec3(1, 0, 0)));
    }
    if (o.half_ego_mask) {
        s.ego_masks.assign(std::size_t(o.num_frames), Image(o.width, o.height, 1));
        for (Image& m : s.ego_masks) {
            for (int y = o.height / 2; y < o.height; ++y) {
                for (int x = 0; x < o.width; ++x) m.at(x, y) = 1;
            }
        }
    }
    s.validate();
    return s;
}

LaneGraph toy_lane_graph() {
    auto lane = [](std::string id, Vec3 a, Vec3 b, bool inter, std::vector<std::string> succ,
                   std::vector<std::string> pred, LaneType type = LaneType::kCityDriving) {
        Lane l;
        l.id = std::move(id);
        l.centerline = {a, b};
        l.type = type;
        l.is_intersection = inter;
        l.successors = std::move(succ);
        l.predecessors = std::move(pred);
        return l;
    };
    auto turn = [](std::string id, std::vector<Vec3> pts, std::string from, std::string to) {
        Lane l;
        l.id = std::move(id);
        l.centerline = std::move(pts);
        l.is_intersection = true;
        l.predecessors = {std::move(from)};
        l.successors = {std::move(to)};
        return l;
    };
    std::vector<Lane> lanes{
        lane("east_in", Vec3(-20, -2, 0), Vec3(-4, -2, 0), false, {"east_x", "east_left"}, {}),
        lane("east_x", Vec3(-4, -2, 0), Vec3(4, -2, 0), true, {"east_out"}, {"east_in"}),
        lane("east_out", Vec3(4, -2, 0), Vec3(20, -2, 0), false, {}, {"east_x", "north_right", "south_left"}),
        lane("west_in", Vec3(20, 2, 0), Vec3(4, 2, 0), false, {"west_x", "west_left"}, {}),
        lane("west_x", Vec3(4, 2, 0), Vec3(-4, 2, 0), true, {"west_out"}, {"west_in"}),
        lane("west_out", Vec3(-4, 2, 0), Vec3(-20, 2, 0), false, {}, {"west_x"}),
        lane("north_in", Vec3(2, -20, 0), Vec3(2, -4, 0), false, {"north_x", "north_right"}, {}),
        lane("north_x", Vec3(2, -4, 0), Vec3(2, 4, 0), true, {"north_out"}, {"north_in"}),
        lane("north_out", Vec3(2, 4, 0), Vec3(2, 20, 0), false, {}, {"north_x", "east_left"}),
        lane("south_in", Vec3(-2, 20, 0), Vec3(-2, 4, 0), false, {"south_x", "south_left"}, {}),
        lane("south_x", Vec3(-2, 4, 0), Vec3(-2, -4, 0), true, {"south_out"}, {"south_in"}),
        lane("south_out", Vec3(-2, -4, 0), Vec3(-2, -20, 0), false, {}, {"south_x", "west_left"}),
        turn("east_left", {Vec3(-4, -2, 0), Vec3(1.2, -1.2, 0), Vec3(2, 4, 0)}, "east_in", "north_out"),
        turn("north_right", {Vec3(2, -4, 0), Vec3(2.6, -2.6, 0), Vec3(4, -2, 0)}, "north_in", "east_out"),
        turn("south_left", {Vec3(-2, 4, 0), Vec3(-1.2, -1.2, 0), Vec3(4, -2, 0)}, "south_in", "east_out"),
        turn("west_left", {Vec3(4, 2, 0), Vec3(-1.2, 1.2, 0), Vec3(-2, -4, 0)}, "west_in", "south_out"),
        lane("walk_south", Vec3(-20, -5, 0), Vec3(20, -5, 0), false, {}, {}, LaneType::kSidewalk),
    };
    lanes.back().adjacent = {"east_in"};
    return LaneGraph(std::move(lanes));
}

std::filesystem::path write_toy_dataset(const std::filesystem::path& dir, const ToySceneOptions& o) {
    namespace fs = std::filesystem;
    const SceneGraph gt = toy_ground_truth(o);
    for (const char* sub : {"ego", "infra", "lidar"}) fs::create_directories(dir / sub);
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> u(-kGroundHalf, kGroundHalf);

    SceneManifest m;
    m.root = fs::absolute(dir);
    m.num_frames = o.num_frames;
    m.ego_id = kToyEgoId;
    for (int f = 0; f < o.num_frames; ++f) {
        const GaussianSet flat = compose_frame(gt, f);
        RenderOutput renders[2];
        for (View view : {View::kEgo, View::kInfra}) {
            const Camera& cam = gt.camera(view, f);
            RenderOutput r = rasterize(flat, cam, Vec3::Zero());
            const std::string vname = view_name(view);
            Image depth(cam.width, cam.height, 1), normal(cam.width, cam.height, 3), sky(cam.width, cam.height, 1);
            Image color = r.color;
            for (int y = 0; y < cam.height; ++y) {
                for (int x = 0; x < cam.width; ++x) {
                    const double a = r.alpha.at(x, y);
                    if (a > 0.9) depth.at(x, y) = r.depth.at(x, y) / a;
                    sky.at(x, y) = a < 0.05 ? 1.0 : 0.0;
                    Vec3 nrm(r.normal.at(x, y, 0), r.normal.at(x, y, 1), r.normal.at(x, y, 2));
                    if (a > 0.5 && nrm.norm() > 1e-9) {
                        nrm.normalize();
                        for (int c = 0; c < 3; ++c) normal.at(x, y, c) = nrm[c];
                    }
                    if (view == View::kEgo && !gt.ego_masks.empty() && gt.ego_masks[std::size_t(f)].at(x, y) != 0) {
                        // the ego car's hood
                        color.at(x, y, 0) = 0.92;
                        color.at(x, y, 1) = 0.92;
                        color.at(x, y, 2) = 0.95;
                    }
                }
            }
            ViewInputs in;
            in.camera = cam;
            in.color = m.root / vname / frame_file("color", f, "png");
            in.depth = m.root / vname / frame_file("depth", f, "pfm");
            in.normal = m.root / vname / frame_file("normal", f, "pfm");
            in.sky = m.root / vname / frame_file("sky", f, "png");
            write_png(in.color, color);
            write_pfm(in.depth, depth);
            write_pfm(in.normal, normal);
            write_png(in.sky, sky);
            if (view == View::kEgo && !gt.ego_masks.empty()) {
                in.ego_mask = m.root / vname / frame_file("mask", f, "png");
                write_png(in.ego_mask, gt.ego_masks[std::size_t(f)]);
            }
            (view == View::kEgo ? m.ego : m.infra).push_back(in);
            renders[view == View::kEgo ? 0 : 1] = std::move(r);
        }

        // world-frame returns: ground samples plus the surfaces of both cars
        std::vector<Vec3> world;
        for (int k = 0; k < o.lidar_ground_points; ++k) world.emplace_back(u(rng), u(rng), 0.0);
        for (const DynamicObject& obj : gt.objects) {
            Box3 inner = obj.box(f);
            inner.size *= 0.95;
            for (const Vec3& p : box_surface_samples(inner, 4)) world.push_back(p);
        }
        // color each return from the first image that sees it unobstructed
        PointCloud sweeps[2];
        const Eigen::Isometry3d sensor_to_world[2] = {Eigen::Isometry3d(Eigen::Translation3d(ego_eye(f))),
                                                      Eigen::Isometry3d(Eigen::Translation3d(Vec3(-7, -9, 7)))};
        for (std::size_t k = 0; k < world.size(); ++k) {
            Vec3 rgb = Vec3::Constant(0.5);
            for (int v = 0; v < 2; ++v) {
                const Camera& cam = gt.camera(v == 0 ? View::kEgo : View::kInfra, f);
                const Vec3 pc = cam.to_camera(world[k]);
                if (pc.z() <= cam.near) continue;
                const Vec2 px = cam.project_camera(pc);
                const int x = int(std::lround(px.x())), y = int(std::lround(px.y()));
                if (x < 0 || y < 0 || x >= cam.width || y >= cam.height) continue;
                const double a = renders[v].alpha.at(x, y);
                if (a < 0.5 || std::abs(renders[v].depth.at(x, y) / a - pc.z()) > 0.3) continue;
                if (v == 0 && !gt.ego_masks.empty() && gt.ego_masks[std::size_t(f)].at(x, y) != 0) continue;
                rgb = Vec3(renders[v].color.at(x, y, 0), renders[v].color.at(x, y, 1), renders[v].color.at(x, y, 2));
                break;
            }
            // alternate sensors so both sweeps cover the whole patch
            const int s = int(k % 2);
            sweeps[s].points.push_back(sensor_to_world[s].inverse() * world[k]);
            sweeps[s].colors.push_back(rgb);
        }
        for (int s = 0; s < 2; ++s) {
            LidarInput l;
            l.frame = f;
            l.path = m.root / "lidar" / frame_file(s == 0 ? "ego" : "infra", f, "ply");
            l.sensor_to_world = sensor_to_world[s];
            write_point_cloud(l.path, sweeps[s]);
            m.lidar.push_back(l);
        }

        for (const DynamicObject& obj : gt.objects) {
            m.boxes.push_back(TrackedBox{f, obj.id, obj.label, obj.box(f)});
        }
        m.boxes.push_back(TrackedBox{f, kToyEgoId, "Car", ego_box(f)});
    }
    m.vector_map = m.root / "map.json";
    write_json_file(m.vector_map, to_json(toy_lane_graph()));
    const fs::path manifest = m.root / "manifest.json";
    save_manifest(manifest, m);
    return manifest;
}

}  // namespace v2xsim
