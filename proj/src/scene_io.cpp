#include "v2xsim/scene_io.hpp"

#include "v2xsim/errors.hpp"
#include "v2xsim/image_io.hpp"
#include "v2xsim/json_io.hpp"
#include "v2xsim/ply.hpp"

#include <cstdio>

namespace v2xsim {
namespace fs = std::filesystem;

namespace {

std::string mask_name(int frame) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "ego_%06d.png", frame);
    return buf;
}

Json object_to_json(const DynamicObject& o) {
    Json poses = Json::array(), corrections = Json::array();
    for (const auto& p : o.track.poses()) {
        poses.push_back({{"rotation", {p.rotation[0], p.rotation[1], p.rotation[2], p.rotation[3]}},
                         {"translation", to_json(p.translation)}});
    }
    for (const auto& c : o.track.corrections()) {
        corrections.push_back({{"rotation", to_json(c.rotation)}, {"translation", to_json(c.translation)}});
    }
    return Json{{"id", o.id},
                {"label", o.label},
                {"size", to_json(o.size)},
                {"first_frame", o.track.first_frame()},
                {"poses", poses},
                {"corrections", corrections},
                {"appearance", o.appearance}};
}

DynamicObject object_from_json(const Json& j) {
    DynamicObject o;
    o.id = j.at("id").get<std::string>();
    o.label = j.value("label", o.label);
    o.size = vec3_from_json(j.at("size"));
    std::vector<Pose> poses;
    for (const auto& p : j.at("poses")) {
        const auto& r = p.at("rotation");
        if (r.size() != 4) {
            throw ParseError("object '" + o.id + "': pose rotation must have 4 entries");
        }
        poses.push_back({Vec4(r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>()),
                         vec3_from_json(p.at("translation"))});
    }
    o.track = PoseTrack(j.at("first_frame").get<int>(), std::move(poses));
    if (j.contains("corrections")) {
        const auto& cs = j.at("corrections");
        if (cs.size() != o.track.size()) {
            throw ParseError("object '" + o.id + "': correction count differs from pose count");
        }
        for (std::size_t k = 0; k < cs.size(); ++k) {
            o.track.corrections()[k] = {vec3_from_json(cs[k].at("rotation")), vec3_from_json(cs[k].at("translation"))};
        }
    }
    if (j.contains("appearance")) {
        o.appearance = j.at("appearance").get<std::array<double, 3 * kFourierTerms>>();
    }
    return o;
}

}  // namespace

void save_scene(const fs::path& dir, const SceneGraph& scene) {
    fs::create_directories(dir / "objects");
    Json ids = Json::array();
    for (const auto& o : scene.objects) {
        ids.push_back(o.id);
        write_gaussian_ply(dir / "objects" / (o.id + ".ply"), o.gaussians);
        write_json_file(dir / "objects" / (o.id + ".json"), object_to_json(o));
    }
    write_json_file(dir / "scene.json", Json{{"num_frames", scene.num_frames},
                                             {"objects", ids},
                                             {"ego_masks", !scene.ego_masks.empty()}});
    Json ego = Json::array(), infra = Json::array();
    for (const auto& c : scene.rig.ego) ego.push_back(to_json(c));
    for (const auto& c : scene.rig.infra) infra.push_back(to_json(c));
    write_json_file(dir / "rig.json", Json{{"ego", ego}, {"infra", infra}});
    write_gaussian_ply(dir / "background.ply", scene.background);
    if (!scene.ego_masks.empty()) {
        fs::create_directories(dir / "masks");
        for (std::size_t f = 0; f < scene.ego_masks.size(); ++f) {
            write_png(dir / "masks" / mask_name(int(f)), scene.ego_masks[f]);
        }
    }
}

SceneGraph load_scene(const fs::path& dir) {
    const Json meta = read_json_file(dir / "scene.json");
    const Json rig = read_json_file(dir / "rig.json");
    SceneGraph scene;
    try {
        scene.num_frames = meta.at("num_frames").get<int>();
        scene.background = read_gaussian_ply(dir / "background.ply");
        for (const auto& c : rig.at("ego")) scene.rig.ego.push_back(camera_from_json(c));
        for (const auto& c : rig.at("infra")) scene.rig.infra.push_back(camera_from_json(c));
        for (const auto& id : meta.at("objects")) {
            const std::string name = id.get<std::string>();
            DynamicObject o = object_from_json(read_json_file(dir / "objects" / (name + ".json")));
            o.gaussians = read_gaussian_ply(dir / "objects" / (name + ".ply"));
            scene.objects.push_back(std::move(o));
        }
        if (meta.value("ego_masks", false)) {
            for (int f = 0; f < scene.num_frames; ++f) {
                Image m = read_png(dir / "masks" / mask_name(f));
                for (auto& v : m.data()) v = v >= 0.5 ? 1.0 : 0.0;
                scene.ego_masks.push_back(std::move(m));
            }
        }
    } catch (const Json::exception& e) {
        throw ParseError(dir.string() + ": " + e.what());
    }
    scene.validate();
    return scene;
}

}  // namespace v2xsim
