#pragma once

#include "v2xsim/boxes.hpp"
#include "v2xsim/camera.hpp"
#include "v2xsim/scene_graph.hpp"

#include <json.hpp>

#include <filesystem>

namespace v2xsim {

using Json = nlohmann::json;

Json to_json(const Vec3& v);
Vec3 vec3_from_json(const Json& j);

/// {fx, fy, cx, cy, width, height, near, far, world_to_camera: 4x4 row-major}
Json to_json(const Camera& cam);
Camera camera_from_json(const Json& j);

/// {center, size, yaw}
Json to_json(const Box3& box);
Box3 box_from_json(const Json& j);

/// Parses a file; malformed JSON raises ParseError naming the path.
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace v2xsim
