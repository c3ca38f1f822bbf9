#pragma once

#include "v2xsim/lane_graph.hpp"
#include "v2xsim/scene_graph.hpp"

#include <cstdint>
#include <filesystem>

namespace v2xsim {

/// Synthetic crossing: a textured ground patch, two boxes driving through
/// it, an ego camera creeping east and a fixed infrastructure camera.
struct ToySceneOptions {
    int width = 64;
    int height = 64;
    int num_frames = 20;
    std::uint64_t seed = 0;
    /// Mark the lower half of every ego image as ego car.
    bool half_ego_mask = false;
    int lidar_ground_points = 400;  // per frame
};

inline constexpr const char* kToyEgoId = "ego";

/// Ground-truth Gaussian scene the toy images are rendered from.
SceneGraph toy_ground_truth(const ToySceneOptions& options = {});

/// Four-way crossing around the origin: CITY_DRIVING approach, through,
/// exit and four turn lanes, plus one sidewalk.
LaneGraph toy_lane_graph();

/// Renders the ground truth and writes color/depth/normal/sky images,
/// per-frame ego and infra LiDAR sweeps colored from the images, the
/// annotation boxes (including the ego car), the lane map and manifest.json.
/// Returns the manifest path.
std::filesystem::path write_toy_dataset(const std::filesystem::path& dir, const ToySceneOptions& options = {});

}  // namespace v2xsim
