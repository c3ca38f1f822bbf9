#pragma once

#include "v2xsim/rasterizer.hpp"
#include "v2xsim/scene_graph.hpp"
#include "v2xsim/trajectory.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace v2xsim {

/// Recenters an asset on its bounding-box center, turns it so its longer
/// horizontal extent lies on x, and scales it uniformly by the largest
/// factor that fits (l,w,h). Gaussian scales follow the same factor.
/// Throws InvalidInput on an empty or flat asset.
GaussianSet fit_asset_to_box(const GaussianSet& asset, const Vec3& size, double* factor = nullptr);

/// A scene object driving `track` with the asset fitted to the track's box.
DynamicObject make_vehicle(const std::string& id, const GaussianSet& asset, const TrajectoryTrack& track,
                           const std::string& label = "Car");

struct V2XFrame {
    int frame = 0;
    RenderOutput ego;
    RenderOutput infra;
};

/// Renders both views of frames [first, last] from one composition per
/// frame. Throws OutOfRange outside the scene's frames.
std::vector<V2XFrame> render_v2x(const SceneGraph& scene, int first, int last, const Vec3& background = Vec3::Zero());

/// mask ? source : rendered per pixel. Throws InvalidInput on size mismatch.
Image paste_ego(const Image& rendered, const Image& source, const Image& mask);

struct DatasetFiles {
    std::vector<std::filesystem::path> ego_images, infra_images;
    std::vector<std::filesystem::path> ego_labels, infra_labels;
};

struct AnnotationRecord;

/// Writes {ego,infra}/{image,depth}/frame_%06d.{png,pfm} and manifest.json
/// with the frame pairs, cameras and label paths. When `ego_sources` has an
/// image for a frame and the scene has ego masks, the ego-car region of
/// that frame is pasted back.
DatasetFiles write_v2x_images(const std::filesystem::path& dir, const SceneGraph& scene,
                              const std::vector<V2XFrame>& frames, const std::map<int, Image>& ego_sources = {});

/// Writes {ego,infra}/label/frame_%06d.txt for every listed frame and all
/// records as annotations.json.
DatasetFiles write_v2x_labels(const std::filesystem::path& dir, const std::vector<int>& frames,
                              const std::vector<AnnotationRecord>& records);

/// write_v2x_images followed by write_v2x_labels.
DatasetFiles write_v2x_dataset(const std::filesystem::path& dir, const SceneGraph& scene,
                               const std::vector<V2XFrame>& frames, const std::vector<AnnotationRecord>& records,
                               const std::map<int, Image>& ego_sources = {});

}  // namespace v2xsim
