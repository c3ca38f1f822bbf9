#include "v2xsim/annotations.hpp"

#include "v2xsim/corner_cases.hpp"
#include "v2xsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace v2xsim {

namespace {

double wrap_angle(double a) {
    while (a > std::numbers::pi) a -= 2 * std::numbers::pi;
    while (a <= -std::numbers::pi) a += 2 * std::numbers::pi;
    return a;
}

double area(const std::array<double, 4>& b) { return std::max(0.0, b[2] - b[0]) * std::max(0.0, b[3] - b[1]); }

}  // namespace

std::optional<std::array<double, 4>> project_box(const Box3& box, const Camera& cam) {
    const auto corners = box.corners();
    std::array<Vec3, 8> pc;
    for (int k = 0; k < 8; ++k) pc[k] = cam.to_camera(corners[k]);
    std::array<double, 4> b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                            -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    bool any = false;
    auto add = [&](const Vec3& p) {
        const Vec2 px = cam.project_camera(p);
        b[0] = std::min(b[0], px.x());
        b[1] = std::min(b[1], px.y());
        b[2] = std::max(b[2], px.x());
        b[3] = std::max(b[3], px.y());
        any = true;
    };
    // edges join corners differing in one bit
    for (int a = 0; a < 8; ++a) {
        for (int bit = 1; bit < 8; bit <<= 1) {
            const int c = a ^ bit;
            if (c < a) continue;
            Vec3 p = pc[a], q = pc[c];
            const bool pin = p.z() >= cam.near, qin = q.z() >= cam.near;
            if (!pin && !qin) continue;
            if (!pin || !qin) {
                const double t = (cam.near - p.z()) / (q.z() - p.z());
                const Vec3 x = p + t * (q - p);
                (pin ? q : p) = x;
            }
            add(p);
            add(q);
        }
    }
    if (!any) return std::nullopt;
    return b;
}

std::vector<AnnotationRecord> export_annotations(const SceneGraph& scene, int first, int last) {
    if (first < 0 || last >= scene.num_frames || first > last) {
        throw OutOfRange("frame range [" + std::to_string(first) + ", " + std::to_string(last) + "] outside the scene");
    }
    std::vector<AnnotationRecord> out;
    for (int f = first; f <= last; ++f) {
        for (View view : {View::kEgo, View::kInfra}) {
            const Camera& cam = scene.camera(view, f);
            for (std::size_t i = 0; i < scene.objects.size(); ++i) {
                const DynamicObject& obj = scene.objects[i];
                if (!obj.track.has(f)) continue;
                const Box3 box = obj.box(f);
                const auto raw = project_box(box, cam);
                if (!raw) continue;
                const std::array<double, 4> clamped{std::clamp((*raw)[0], 0.0, cam.width - 1.0),
                                                    std::clamp((*raw)[1], 0.0, cam.height - 1.0),
                                                    std::clamp((*raw)[2], 0.0, cam.width - 1.0),
                                                    std::clamp((*raw)[3], 0.0, cam.height - 1.0)};
                if (clamped[2] <= clamped[0] || clamped[3] <= clamped[1]) continue;

                AnnotationRecord r;
                r.frame = f;
                r.view = view;
                r.id = obj.id;
                r.label = obj.label;
                r.world_box = box;
                r.center_camera = cam.to_camera(box.center);
                r.size = box.size;
                const Vec3 heading = cam.world_to_camera.linear() * Vec3(std::cos(box.yaw), std::sin(box.yaw), 0);
                r.rotation_y = std::atan2(-heading.z(), heading.x());
                r.box2d = clamped;
                const double full = area(*raw);
                r.truncation = full > 0 ? std::clamp(1.0 - area(clamped) / full, 0.0, 1.0) : 0.0;
                r.occlusion = object_visibility(scene, i, f, cam).occluded_fraction();
                out.push_back(r);
            }
        }
    }
    return out;
}

std::string kitti_line(const AnnotationRecord& r) {
    // bottom center: the box's down direction is camera +y for a level camera
    const Vec3 bottom = r.center_camera + Vec3(0, 0.5 * r.size.z(), 0);
    const double alpha = wrap_angle(r.rotation_y - std::atan2(r.center_camera.x(), r.center_camera.z()));
    const int occluded = r.occlusion < 0.1 ? 0 : (r.occlusion < 0.5 ? 1 : 2);
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s %.2f %d %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f %.2f",
                  r.label.c_str(), r.truncation, occluded, alpha, r.box2d[0], r.box2d[1], r.box2d[2], r.box2d[3],
                  r.size.z(), r.size.y(), r.size.x(), bottom.x(), bottom.y(), bottom.z(), r.rotation_y);
    return buf;
}

Json to_json(const AnnotationRecord& r) {
    return Json{{"frame", r.frame},
                {"view", view_name(r.view)},
                {"id", r.id},
                {"label", r.label},
                {"world_box", to_json(r.world_box)},
                {"center_camera", to_json(r.center_camera)},
                {"size", to_json(r.size)},
                {"rotation_y", r.rotation_y},
                {"box2d", r.box2d},
                {"truncation", r.truncation},
                {"occlusion", r.occlusion}};
}

}  // namespace v2xsim
