#pragma once

#include "v2xsim/camera.hpp"
#include "v2xsim/json_io.hpp"
#include "v2xsim/scene_graph.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace v2xsim {

inline constexpr int kManifestVersion = 1;

/// Inputs of one view at one frame. Paths are absolute after loading; an
/// empty path means the input is absent. Only `color` is required.
struct ViewInputs {
    Camera camera;
    std::filesystem::path color;     // PNG, RGB
    std::filesystem::path depth;     // PFM, meters, 0 where LiDAR has no return
    std::filesystem::path normal;    // PFM, 3 channels, camera frame
    std::filesystem::path sky;       // PNG, nonzero on sky
    std::filesystem::path semantic;  // PNG, integer labels, 255 ignored
    std::filesystem::path ego_mask;  // PNG, nonzero on the ego car (ego view only)
};

struct LidarInput {
    int frame = 0;
    std::filesystem::path path;  // PLY
    Eigen::Isometry3d sensor_to_world = Eigen::Isometry3d::Identity();
};

/// Version 1 layout (paths relative to the manifest's directory):
///   {"version": 1, "num_frames": N, "num_classes": K,
///    "frames": [{"frame": i, "ego": {"camera": {...}, "color": "...", ...},
///                "infra": {...}}, ...],
///    "lidar": [{"frame": i, "path": "...", "sensor_to_world": [16 numbers, row-major]}],
///    "boxes": [{"frame": i, "id": "...", "label": "Car", "center": [x,y,z],
///               "size": [l,w,h], "yaw": r}],
///    "ego_id": "...",         optional; that track is the ego car itself
///    "vector_map": "..."}     optional
struct SceneManifest {
    std::filesystem::path root;
    int num_frames = 0;
    int num_classes = 0;
    std::vector<ViewInputs> ego;    // indexed by frame
    std::vector<ViewInputs> infra;  // indexed by frame
    std::vector<LidarInput> lidar;
    std::vector<TrackedBox> boxes;
    std::string ego_id;
    std::filesystem::path vector_map;

    const ViewInputs& inputs(View v, int frame) const;
};

/// Parses and validates a manifest. Schema errors raise ParseError; missing
/// files raise NotFound listing every missing path; image sizes that
/// disagree with their camera raise InvalidInput listing the offenders.
SceneManifest load_manifest(const std::filesystem::path& path);

/// Writes the manifest with paths relative to `path`'s directory.
void save_manifest(const std::filesystem::path& path, const SceneManifest& manifest);

}  // namespace v2xsim
