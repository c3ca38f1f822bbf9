#include "v2xsim/ingest.hpp"

#include "v2xsim/errors.hpp"
#include "v2xsim/image_io.hpp"

#include <algorithm>
#include <cmath>

namespace v2xsim {

namespace {

Image binary_mask(const Image& img) {
    Image out(img.width(), img.height(), 1);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            bool on = false;
            for (int c = 0; c < img.channels(); ++c) on |= img.at(x, y, c) != 0;
            out.at(x, y) = on ? 1.0 : 0.0;
        }
    }
    return out;
}

FrameSample load_sample(const ViewInputs& in, View view, int frame) {
    FrameSample s;
    s.view = view;
    s.frame = frame;
    s.color = read_png(in.color);
    if (s.color.channels() != 3) {
        throw InvalidInput(in.color.string() + " is not an RGB image");
    }
    if (!in.depth.empty()) {
        s.depth = read_pfm(in.depth);
        s.depth_valid = Image(s.depth.width(), s.depth.height(), 1);
        for (std::size_t i = 0; i < s.depth.data().size(); ++i) {
            s.depth_valid.data()[i] = s.depth.data()[i] > 0 ? 1.0 : 0.0;
        }
    }
    if (!in.normal.empty()) s.normal = read_pfm(in.normal);
    if (!in.sky.empty()) s.sky = binary_mask(read_png(in.sky));
    if (!in.semantic.empty()) s.semantic = read_png(in.semantic, true);
    if (!in.ego_mask.empty()) s.ego_mask = binary_mask(read_png(in.ego_mask));
    return s;
}

}  // namespace

std::vector<FrameSample> load_samples(const SceneManifest& manifest) {
    std::vector<FrameSample> out;
    out.reserve(std::size_t(2 * manifest.num_frames));
    for (int f = 0; f < manifest.num_frames; ++f) {
        for (View view : {View::kEgo, View::kInfra}) out.push_back(load_sample(manifest.inputs(view, f), view, f));
    }
    return out;
}

std::map<std::string, std::vector<TrackedBox>> group_tracks(const SceneManifest& manifest) {
    std::map<std::string, std::vector<TrackedBox>> tracks;
    for (TrackedBox& b : strip_ego_box(manifest.boxes, manifest.ego_id)) tracks[b.id].push_back(std::move(b));
    for (auto& [id, boxes] : tracks) {
        std::sort(boxes.begin(), boxes.end(), [](const TrackedBox& a, const TrackedBox& b) { return a.frame < b.frame; });
        for (std::size_t k = 1; k < boxes.size(); ++k) {
            if (boxes[k].frame != boxes[k - 1].frame + 1) {
                throw InvalidInput("track '" + id + "' is not contiguous between frames " +
                                   std::to_string(boxes[k - 1].frame) + " and " + std::to_string(boxes[k].frame));
            }
            if ((boxes[k].box.size - boxes[0].box.size).norm() > 1e-6) {
                throw InvalidInput("track '" + id + "' changes size at frame " + std::to_string(boxes[k].frame));
            }
        }
    }
    return tracks;
}

std::vector<PointCloud> load_frame_clouds(const SceneManifest& manifest, double voxel) {
    std::vector<std::vector<SensorCloud>> per_frame(std::size_t(manifest.num_frames));
    for (const LidarInput& l : manifest.lidar) {
        per_frame[std::size_t(l.frame)].push_back(SensorCloud{read_point_cloud(l.path), l.sensor_to_world});
    }
    std::vector<PointCloud> out;
    out.reserve(per_frame.size());
    for (const auto& sensors : per_frame) out.push_back(fuse_lidar(sensors, voxel));
    return out;
}

SceneGraph build_scene(const SceneManifest& manifest, const IngestOptions& options) {
    SceneGraph scene;
    scene.num_frames = manifest.num_frames;
    scene.background = GaussianSet(options.sh_degree, manifest.num_classes);
    bool any_mask = false;
    for (int f = 0; f < manifest.num_frames; ++f) {
        scene.rig.ego.push_back(manifest.ego[std::size_t(f)].camera);
        scene.rig.infra.push_back(manifest.infra[std::size_t(f)].camera);
        any_mask |= !manifest.ego[std::size_t(f)].ego_mask.empty();
    }
    if (any_mask) {
        for (int f = 0; f < manifest.num_frames; ++f) {
            const ViewInputs& in = manifest.ego[std::size_t(f)];
            scene.ego_masks.push_back(in.ego_mask.empty() ? Image(in.camera.width, in.camera.height, 1)
                                                          : binary_mask(read_png(in.ego_mask)));
        }
    }

    const std::vector<PointCloud> clouds = load_frame_clouds(manifest, options.voxel);
    const auto tracks = group_tracks(manifest);

    // per-frame boxes for the background cut
    std::vector<std::vector<Box3>> boxes_at(std::size_t(manifest.num_frames));
    for (const auto& [id, boxes] : tracks) {
        for (const TrackedBox& b : boxes) boxes_at[std::size_t(b.frame)].push_back(b.box);
    }

    for (const auto& [id, boxes] : tracks) {
        std::vector<PointCloud> frames;
        std::vector<Box3> frame_boxes;
        std::vector<Pose> poses;
        for (const TrackedBox& b : boxes) {
            frames.push_back(clouds[std::size_t(b.frame)]);
            frame_boxes.push_back(b.box);
            Pose p;
            p.translation = b.box.center;
            p.rotation = Vec4(std::cos(0.5 * b.box.yaw), 0, 0, std::sin(0.5 * b.box.yaw));
            poses.push_back(p);
        }
        PointCloud canon = voxel_downsample(aggregate_object_points(frames, frame_boxes), options.voxel);
        if (canon.size() < std::size_t(kInitNeighbors + 1)) {
            canon = PointCloud{};
            const Vec3 half = 0.4 * boxes.front().box.size;
            for (int i = 0; i < 4; ++i) {
                for (int j = 0; j < 4; ++j) {
                    for (int k = 0; k < 4; ++k) {
                        canon.points.push_back(half.cwiseProduct(Vec3(i / 1.5 - 1, j / 1.5 - 1, k / 1.5 - 1)));
                    }
                }
            }
        }
        DynamicObject obj;
        obj.id = id;
        obj.label = boxes.front().label;
        obj.size = boxes.front().box.size;
        obj.gaussians = init_gaussians_from_points(canon, options.sh_degree, manifest.num_classes);
        obj.track = PoseTrack(boxes.front().frame, std::move(poses));
        scene.objects.push_back(std::move(obj));
    }

    PointCloud static_points;
    for (int f = 0; f < manifest.num_frames; ++f) {
        const PointCloud& c = clouds[std::size_t(f)];
        PointCloud kept;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const bool inside = std::any_of(boxes_at[std::size_t(f)].begin(), boxes_at[std::size_t(f)].end(),
                                            [&](const Box3& b) { return b.contains(c.points[i]); });
            if (inside) continue;
            kept.points.push_back(c.points[i]);
            if (!c.colors.empty()) kept.colors.push_back(c.colors[i]);
            if (!c.intensity.empty()) kept.intensity.push_back(c.intensity[i]);
        }
        static_points.append(kept);
    }
    static_points = voxel_downsample(static_points, options.voxel);
    if (static_points.size() >= std::size_t(kInitNeighbors + 1)) {
        scene.background = init_gaussians_from_points(static_points, options.sh_degree, manifest.num_classes);
    }
    scene.validate();
    return scene;
}

}  // namespace v2xsim
