#include "v2xsim/manifest.hpp"

#include "v2xsim/errors.hpp"
#include "v2xsim/image_io.hpp"

#include <algorithm>

namespace v2xsim {

namespace fs = std::filesystem;

const ViewInputs& SceneManifest::inputs(View v, int frame) const {
    const auto& list = v == View::kEgo ? ego : infra;
    if (frame < 0 || std::size_t(frame) >= list.size()) {
        throw OutOfRange("manifest has no frame " + std::to_string(frame));
    }
    return list[std::size_t(frame)];
}

namespace {

const char* const kInputKeys[] = {"color", "depth", "normal", "sky", "semantic", "ego_mask"};

fs::path* input_slot(ViewInputs& v, const std::string& key) {
    if (key == "color") return &v.color;
    if (key == "depth") return &v.depth;
    if (key == "normal") return &v.normal;
    if (key == "sky") return &v.sky;
    if (key == "semantic") return &v.semantic;
    return &v.ego_mask;
}

const fs::path* input_slot(const ViewInputs& v, const std::string& key) {
    return input_slot(const_cast<ViewInputs&>(v), key);
}

ViewInputs parse_view(const Json& j, const fs::path& root, View view, int frame) {
    ViewInputs v;
    v.camera = camera_from_json(j.at("camera"));
    v.camera.validate();
    if (!j.contains("color")) {
        throw ParseError(std::string(view_name(view)) + " frame " + std::to_string(frame) + " has no color image");
    }
    for (const char* key : kInputKeys) {
        if (!j.contains(key) || j.at(key).is_null()) continue;
        if (view == View::kInfra && std::string(key) == "ego_mask") {
            throw ParseError("ego_mask given for the infra view at frame " + std::to_string(frame));
        }
        *input_slot(v, key) = root / j.at(key).get<std::string>();
    }
    return v;
}

Eigen::Isometry3d isometry_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 16) {
        throw ParseError("sensor_to_world must hold 16 numbers");
    }
    Eigen::Matrix4d T;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) T(r, c) = j[std::size_t(4 * r + c)].get<double>();
    }
    Eigen::Isometry3d out;
    out.matrix() = T;
    return out;
}

Json isometry_to_json(const Eigen::Isometry3d& iso) {
    Json m = Json::array();
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) m.push_back(iso.matrix()(r, c));
    }
    return m;
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += "\n  " + s;
    return out;
}

}  // namespace

SceneManifest load_manifest(const fs::path& path) {
    const Json j = read_json_file(path);
    SceneManifest m;
    m.root = fs::absolute(path).parent_path();
    try {
        const int version = j.at("version").get<int>();
        if (version != kManifestVersion) {
            throw ParseError("unsupported manifest version " + std::to_string(version));
        }
        m.num_frames = j.at("num_frames").get<int>();
        m.num_classes = j.value("num_classes", 0);
        if (m.num_frames < 1 || m.num_classes < 0) {
            throw ParseError("num_frames must be >= 1 and num_classes >= 0");
        }
        const Json& frames = j.at("frames");
        if (!frames.is_array() || frames.size() != std::size_t(m.num_frames)) {
            throw ParseError("frames must list every frame 0.." + std::to_string(m.num_frames - 1));
        }
        for (int f = 0; f < m.num_frames; ++f) {
            const Json& fr = frames[std::size_t(f)];
            if (fr.at("frame").get<int>() != f) {
                throw ParseError("frame indices must be dense and ordered; entry " + std::to_string(f) + " is frame " +
                                 std::to_string(fr.at("frame").get<int>()));
            }
            m.ego.push_back(parse_view(fr.at("ego"), m.root, View::kEgo, f));
            m.infra.push_back(parse_view(fr.at("infra"), m.root, View::kInfra, f));
        }
        for (const Json& l : j.value("lidar", Json::array())) {
            LidarInput in;
            in.frame = l.at("frame").get<int>();
            if (in.frame < 0 || in.frame >= m.num_frames) {
                throw ParseError("lidar entry references frame " + std::to_string(in.frame));
            }
            in.path = m.root / l.at("path").get<std::string>();
            if (l.contains("sensor_to_world")) in.sensor_to_world = isometry_from_json(l.at("sensor_to_world"));
            m.lidar.push_back(std::move(in));
        }
        for (const Json& b : j.value("boxes", Json::array())) {
            TrackedBox tb;
            tb.frame = b.at("frame").get<int>();
            tb.id = b.at("id").get<std::string>();
            tb.label = b.value("label", "Car");
            tb.box.center = vec3_from_json(b.at("center"));
            tb.box.size = vec3_from_json(b.at("size"));
            tb.box.yaw = b.value("yaw", 0.0);
            if (tb.frame < 0 || tb.frame >= m.num_frames) {
                throw ParseError("box '" + tb.id + "' references frame " + std::to_string(tb.frame));
            }
            if (!(tb.box.size.array() > 0).all()) {
                throw ParseError("box '" + tb.id + "' has a non-positive size");
            }
            m.boxes.push_back(std::move(tb));
        }
        m.ego_id = j.value("ego_id", "");
        if (j.contains("vector_map") && !j.at("vector_map").is_null()) {
            m.vector_map = m.root / j.at("vector_map").get<std::string>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const InvalidInput& e) {
        throw ParseError(path.string() + ": " + e.what());
    }

    std::vector<std::string> missing;
    std::vector<std::string> mismatched;
    for (View view : {View::kEgo, View::kInfra}) {
        for (int f = 0; f < m.num_frames; ++f) {
            const ViewInputs& v = m.inputs(view, f);
            for (const char* key : kInputKeys) {
                const fs::path& p = *input_slot(v, key);
                if (p.empty()) continue;
                if (!fs::exists(p)) {
                    missing.push_back(p.string());
                    continue;
                }
                const auto [w, h] = image_dimensions(p);
                if (w != v.camera.width || h != v.camera.height) {
                    mismatched.push_back(p.string() + " is " + std::to_string(w) + "x" + std::to_string(h) +
                                         ", camera is " + std::to_string(v.camera.width) + "x" +
                                         std::to_string(v.camera.height));
                }
            }
        }
    }
    for (const LidarInput& l : m.lidar) {
        if (!fs::exists(l.path)) missing.push_back(l.path.string());
    }
    if (!m.vector_map.empty() && !fs::exists(m.vector_map)) missing.push_back(m.vector_map.string());
    if (!missing.empty()) {
        throw NotFound("manifest " + path.string() + " references missing files:" + join(missing));
    }
    if (!mismatched.empty()) {
        throw InvalidInput("manifest " + path.string() + " has images that disagree with their cameras:" +
                           join(mismatched));
    }
    return m;
}

void save_manifest(const fs::path& path, const SceneManifest& m) {
    const fs::path root = fs::absolute(path).parent_path();
    auto rel = [&](const fs::path& p) { return fs::relative(fs::absolute(p), root).generic_string(); };
    Json frames = Json::array();
    for (int f = 0; f < m.num_frames; ++f) {
        Json fr{{"frame", f}};
        for (View view : {View::kEgo, View::kInfra}) {
            const ViewInputs& v = m.inputs(view, f);
            Json jv{{"camera", to_json(v.camera)}};
            for (const char* key : kInputKeys) {
                const fs::path& p = *input_slot(v, key);
                if (!p.empty()) jv[key] = rel(p);
            }
            fr[view_name(view)] = jv;
        }
        frames.push_back(fr);
    }
    Json lidar = Json::array();
    for (const LidarInput& l : m.lidar) {
        lidar.push_back(
            Json{{"frame", l.frame}, {"path", rel(l.path)}, {"sensor_to_world", isometry_to_json(l.sensor_to_world)}});
    }
    Json boxes = Json::array();
    for (const TrackedBox& b : m.boxes) {
        boxes.push_back(Json{{"frame", b.frame},
                             {"id", b.id},
                             {"label", b.label},
                             {"center", to_json(b.box.center)},
                             {"size", to_json(b.box.size)},
                             {"yaw", b.box.yaw}});
    }
    Json j{{"version", kManifestVersion}, {"num_frames", m.num_frames}, {"num_classes", m.num_classes},
           {"frames", frames},           {"lidar", lidar},               {"boxes", boxes}};
    if (!m.ego_id.empty()) j["ego_id"] = m.ego_id;
    if (!m.vector_map.empty()) j["vector_map"] = rel(m.vector_map);
    fs::create_directories(root);
    write_json_file(path, j);
}

}  // namespace v2xsim
