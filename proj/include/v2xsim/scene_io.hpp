#pragma once

#include "v2xsim/scene_graph.hpp"

#include <filesystem>

namespace v2xsim {

/// Scene directory layout:
///   scene.json            frame count, object order
///   rig.json              per-frame ego and infra cameras
///   background.ply
///   objects/<id>.ply      canonical Gaussians
///   objects/<id>.json     label, size, track, corrections, appearance
///   masks/ego_%06d.png    ego masks (optional)
void save_scene(const std::filesystem::path& dir, const SceneGraph& scene);
SceneGraph load_scene(const std::filesystem::path& dir);

}  // namespace v2xsim
