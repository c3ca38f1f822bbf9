#include "v2xsim/corner_cases.hpp"

#include "v2xsim/errors.hpp"

#include <limits>

namespace v2xsim {

std::string Visibility::main_occluder() const {
    std::string best;
    int count = 0;
    for (const auto& [id, n] : by_occluder) {
        if (n > count) {
            best = id;
            count = n;
        }
    }
    return best;
}

std::vector<Vec3> box_surface_samples(const Box3& box, int n) {
    if (n < 1) {
        throw InvalidInput("samples_per_edge must be >= 1");
    }
    const Eigen::Isometry3d pose = box.pose();
    const Vec3 half = 0.5 * box.size;
    std::vector<Vec3> out;
    out.reserve(std::size_t(6 * n * n));
    for (int axis = 0; axis < 3; ++axis) {
        const int u = (axis + 1) % 3, v = (axis + 2) % 3;
        for (double side : {-1.0, 1.0}) {
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    Vec3 local;
                    local[axis] = side * half[axis];
                    local[u] = (-1 + (2 * i + 1.0) / n) * half[u];
                    local[v] = (-1 + (2 * j + 1.0) / n) * half[v];
                    out.push_back(pose * local);
                }
            }
        }
    }
    return out;
}

Visibility object_visibility(const SceneGraph& scene, std::size_t index, int frame, const Camera& cam,
                             int samples_per_edge) {
    const DynamicObject& obj = scene.objects.at(index);
    if (!obj.track.has(frame)) {
        throw OutOfRange("object '" + obj.id + "' is not present at frame " + std::to_string(frame));
    }
    std::vector<std::pair<const DynamicObject*, Box3>> others;
    for (std::size_t k = 0; k < scene.objects.size(); ++k) {
        if (k != index && scene.objects[k].track.has(frame)) {
            others.emplace_back(&scene.objects[k], scene.objects[k].box(frame));
        }
    }
    const Vec3 eye = cam.center();
    Visibility vis;
    for (const Vec3& p : box_surface_samples(obj.box(frame), samples_per_edge)) {
        ++vis.samples;
        const Vec3 pc = cam.to_camera(p);
        if (pc.z() <= cam.near) continue;
        const Vec2 px = cam.project_camera(pc);
        if (px.x() < -0.5 || px.y() < -0.5 || px.x() > cam.width - 0.5 || px.y() > cam.height - 0.5) continue;
        ++vis.in_frustum;
        const DynamicObject* blocker = nullptr;
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto& [other, box] : others) {
            const auto hit = ray_box_interval(box, eye, p - eye, 0.0, 1.0 - 1e-9);
            if (hit && hit->first < nearest) {
                nearest = hit->first;
                blocker = other;
            }
        }
        if (blocker) {
            ++vis.occluded;
            ++vis.by_occluder[blocker->id];
        }
    }
    return vis;
}

std::vector<CornerCase> detect_corner_cases(const SceneGraph& scene, int first, int last,
                                            const CornerCaseConfig& config) {
    if (scene.objects.empty()) {
        throw InvalidInput("corner-case detection needs at least one object");
    }
    if (first < 0 || last >= scene.num_frames || first > last) {
        throw OutOfRange("frame range [" + std::to_string(first) + ", " + std::to_string(last) + "] outside the scene");
    }
    std::vector<CornerCase> out;
    for (int f = first; f <= last; ++f) {
        for (std::size_t i = 0; i < scene.objects.size(); ++i) {
            if (!scene.objects[i].track.has(f)) continue;
            const Visibility infra =
                object_visibility(scene, i, f, scene.camera(View::kInfra, f), config.samples_per_edge);
            if (infra.visible_fraction() < config.tau_vis) continue;
            const Visibility ego = object_visibility(scene, i, f, scene.camera(View::kEgo, f), config.samples_per_edge);
            if (ego.visible_fraction() > config.tau_occ) continue;
            out.push_back(CornerCase{f, scene.objects[i].id, infra.visible_fraction(), ego.visible_fraction(),
                                     ego.main_occluder()});
        }
    }
    return out;
}

}  // namespace v2xsim
