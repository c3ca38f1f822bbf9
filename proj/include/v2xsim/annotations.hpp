#pragma once

#include "v2xsim/json_io.hpp"
#include "v2xsim/scene_graph.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace v2xsim {

struct AnnotationRecord {
    int frame = 0;
    View view = View::kEgo;
    std::string id;
    std::string label = "Car";
    Box3 world_box;
    /// Box center in the view's camera frame (x right, y down, z forward).
    Vec3 center_camera = Vec3::Zero();
    Vec3 size = Vec3::Ones();  // l, w, h
    /// Heading about the camera y axis: the length axis points along
    /// (cos r, 0, -sin r) in camera coordinates.
    double rotation_y = 0;
    std::array<double, 4> box2d{};  // x1, y1, x2, y2 in pixels, clamped to the image
    double truncation = 0;          // share of the projected box outside the image
    double occlusion = 0;           // occluded share of the in-view surface samples
};

/// Unclamped 2D bounds of the box's projection, with edges clipped at the
/// near plane; nullopt when the box is entirely behind it.
std::optional<std::array<double, 4>> project_box(const Box3& box, const Camera& cam);

/// One record per live object per view per frame in [first, last], skipping
/// boxes behind a camera or outside its image.
std::vector<AnnotationRecord> export_annotations(const SceneGraph& scene, int first, int last);

/// KITTI detection line: type truncated occluded alpha x1 y1 x2 y2 h w l x y z rotation_y,
/// with (x,y,z) the bottom center in camera coordinates and the occlusion
/// share bucketed into 0 (< 0.1), 1 (< 0.5) and 2.
std::string kitti_line(const AnnotationRecord& r);

Json to_json(const AnnotationRecord& r);

}  // namespace v2xsim
