#pragma once

#include "v2xsim/manifest.hpp"
#include "v2xsim/pointcloud.hpp"
#include "v2xsim/trainer.hpp"

#include <map>
#include <vector>

namespace v2xsim {

struct IngestOptions {
    int sh_degree = 1;
    double voxel = kDefaultVoxel;
};

/// Training samples for every frame and view, ego view first per frame.
/// Depth validity is depth > 0.
std::vector<FrameSample> load_samples(const SceneManifest& manifest);

/// Annotation boxes grouped into per-object tracks with the ego box
/// removed. Throws InvalidInput when an object's frames are not contiguous
/// or its size changes.
std::map<std::string, std::vector<TrackedBox>> group_tracks(const SceneManifest& manifest);

/// World-frame fused LiDAR per frame (empty clouds where none is given).
std::vector<PointCloud> load_frame_clouds(const SceneManifest& manifest, double voxel = kDefaultVoxel);

/// Scene graph with the rig and ego masks from the manifest, one object per
/// track initialized from its aggregated in-box points, and a background
/// initialized from every point outside the boxes. Objects with fewer than
/// four aggregated points are seeded with a 4x4x4 lattice inside the box.
SceneGraph build_scene(const SceneManifest& manifest, const IngestOptions& options = {});

}  // namespace v2xsim
