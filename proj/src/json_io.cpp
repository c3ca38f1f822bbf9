#include "v2xsim/json_io.hpp"

#include "v2xsim/errors.hpp"

#include <fstream>

namespace v2xsim {

Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 3) {
        throw ParseError("expected a 3-vector, got " + j.dump());
    }
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Json to_json(const Camera& cam) {
    Json m = Json::array();
    const Eigen::Matrix4d T = cam.world_to_camera.matrix();
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) m.push_back(T(r, c));
    }
    return Json{{"fx", cam.fx},     {"fy", cam.fy},         {"cx", cam.cx},   {"cy", cam.cy},
                {"width", cam.width}, {"height", cam.height}, {"near", cam.near}, {"far", cam.far},
                {"world_to_camera", m}};
}

Camera camera_from_json(const Json& j) {
    try {
        Camera cam;
        cam.fx = j.at("fx").get<double>();
        cam.fy = j.at("fy").get<double>();
        cam.cx = j.at("cx").get<double>();
        cam.cy = j.at("cy").get<double>();
        cam.width = j.at("width").get<int>();
        cam.height = j.at("height").get<int>();
        cam.near = j.value("near", cam.near);
        cam.far = j.value("far", cam.far);
        const Json& m = j.at("world_to_camera");
        if (!m.is_array() || m.size() != 16) {
            throw ParseError("world_to_camera must hold 16 numbers");
        }
        Eigen::Matrix4d T;
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) T(r, c) = m[r * 4 + c].get<double>();
        }
        cam.world_to_camera.matrix() = T;
        return cam;
    } catch (const Json::exception& e) {
        throw ParseError(std::string("camera: ") + e.what());
    }
}

Json to_json(const Box3& box) { return Json{{"center", to_json(box.center)}, {"size", to_json(box.size)}, {"yaw", box.yaw}}; }

Box3 box_from_json(const Json& j) {
    try {
        return Box3{vec3_from_json(j.at("center")), vec3_from_json(j.at("size")), j.at("yaw").get<double>()};
    } catch (const Json::exception& e) {
        throw ParseError(std::string("box: ") + e.what());
    }
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw NotFound("cannot open " + path.string());
    }
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw InvalidInput("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

}  // namespace v2xsim
