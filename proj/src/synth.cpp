#include "v2xsim/synth.hpp"

#include "v2xsim/annotations.hpp"
#include "v2xsim/errors.hpp"
#include "v2xsim/image_io.hpp"
#include "v2xsim/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace v2xsim {

GaussianSet fit_asset_to_box(const GaussianSet& asset, const Vec3& size, double* factor) {
    if (asset.empty()) {
        throw InvalidInput("cannot fit an empty asset");
    }
    if (!(size.array() > 0).all()) {
        throw InvalidInput("target box size must be positive");
    }
    Vec3 lo = asset.position(0), hi = asset.position(0);
    for (std::size_t i = 1; i < asset.size(); ++i) {
        lo = lo.cwiseMin(Vec3(asset.position(i)));
        hi = hi.cwiseMax(Vec3(asset.position(i)));
    }
    Vec3 extent = hi - lo;
    if (!(extent.array() > 1e-12).all()) {
        throw InvalidInput("asset is flat along at least one axis");
    }
    const Vec3 mid = 0.5 * (lo + hi);
    const bool turn = extent.y() > extent.x();
    if (turn) std::swap(extent.x(), extent.y());
    const double f = (size.array() / extent.array()).minCoeff();
    if (factor) *factor = f;

    // -90 deg about z maps the asset's y axis onto x
    const Vec4 q_turn = turn ? Vec4(std::cos(-std::numbers::pi / 4), 0, 0, std::sin(-std::numbers::pi / 4))
                             : Vec4(1, 0, 0, 0);
    const Mat3 R = quat_to_matrix(q_turn);

    GaussianSet out = asset;
    const double log_f = std::log(f);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.position(i) = f * (R * (Vec3(asset.position(i)) - mid));
        if (turn) out.rotation(i) = quat_multiply(q_turn, Vec4(asset.rotation(i)));
        out.log_scale(i) = asset.log_scale(i).array() + log_f;
    }
    return out;
}

DynamicObject make_vehicle(const std::string& id, const GaussianSet& asset, const TrajectoryTrack& track,
                           const std::string& label) {
    DynamicObject obj;
    obj.id = id;
    obj.label = label;
    obj.size = track.size;
    obj.gaussians = fit_asset_to_box(asset, track.size);
    obj.track = pose_track_from(track);
    return obj;
}

std::vector<V2XFrame> render_v2x(const SceneGraph& scene, int first, int last, const Vec3& background) {
    if (first < 0 || last >= scene.num_frames || first > last) {
        throw OutOfRange("frame range [" + std::to_string(first) + ", " + std::to_string(last) + "] outside the scene");
    }
    std::vector<V2XFrame> out;
    out.reserve(std::size_t(last - first + 1));
    for (int f = first; f <= last; ++f) {
        const GaussianSet flat = compose_frame(scene, f);
        V2XFrame fr;
        fr.frame = f;
        fr.ego = rasterize(flat, scene.camera(View::kEgo, f), background);
        fr.infra = rasterize(flat, scene.camera(View::kInfra, f), background);
        out.push_back(std::move(fr));
    }
    return out;
}

Image paste_ego(const Image& rendered, const Image& source, const Image& mask) {
    if (!rendered.same_shape(source) || !rendered.same_size(mask) || mask.channels() != 1) {
        throw InvalidInput("paste_ego needs equal image shapes and a 1-channel mask");
    }
    Image out = rendered;
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            if (mask.at(x, y) != 0) {
                for (int c = 0; c < out.channels(); ++c) out.at(x, y, c) = source.at(x, y, c);
            }
        }
    }
    return out;
}

namespace {

std::string frame_name(int frame, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%06d.%s", frame, ext);
    return buf;
}

}  // namespace

DatasetFiles write_v2x_images(const std::filesystem::path& dir, const SceneGraph& scene,
                              const std::vector<V2XFrame>& frames, const std::map<int, Image>& ego_sources) {
    namespace fs = std::filesystem;
    for (const char* view : {"ego", "infra"}) {
        for (const char* kind : {"image", "label", "depth"}) fs::create_directories(dir / view / kind);
    }
    DatasetFiles files;
    Json manifest_frames = Json::array();
    for (const V2XFrame& fr : frames) {
        Json entry{{"frame", fr.frame}};
        for (View view : {View::kEgo, View::kInfra}) {
            const std::string vname = view_name(view);
            const RenderOutput& r = view == View::kEgo ? fr.ego : fr.infra;
            Image color = r.color;
            if (view == View::kEgo && !scene.ego_masks.empty()) {
                if (auto it = ego_sources.find(fr.frame); it != ego_sources.end()) {
                    color = paste_ego(color, it->second, scene.ego_masks.at(std::size_t(fr.frame)));
                }
            }
            const fs::path image = dir / vname / "image" / frame_name(fr.frame, "png");
            const fs::path label = dir / vname / "label" / frame_name(fr.frame, "txt");
            const fs::path depth = dir / vname / "depth" / frame_name(fr.frame, "pfm");
            write_png(image, color);
            write_pfm(depth, r.depth);
            (view == View::kEgo ? files.ego_images : files.infra_images).push_back(image);
            entry[vname] = Json{{"image", fs::relative(image, dir).generic_string()},
                                {"label", fs::relative(label, dir).generic_string()},
                                {"depth", fs::relative(depth, dir).generic_string()},
                                {"camera", to_json(scene.camera(view, fr.frame))}};
        }
        manifest_frames.push_back(entry);
    }
    write_json_file(dir / "manifest.json", Json{{"frames", manifest_frames}});
    return files;
}

DatasetFiles write_v2x_labels(const std::filesystem::path& dir, const std::vector<int>& frames,
                              const std::vector<AnnotationRecord>& records) {
    namespace fs = std::filesystem;
    DatasetFiles files;
    for (int frame : frames) {
        for (View view : {View::kEgo, View::kInfra}) {
            const fs::path label_dir = dir / view_name(view) / "label";
            fs::create_directories(label_dir);
            const fs::path label = label_dir / frame_name(frame, "txt");
            std::ofstream out(label);
            if (!out) throw Error("cannot write " + label.string());
            for (const AnnotationRecord& rec : records) {
                if (rec.frame == frame && rec.view == view) out << kitti_line(rec) << '\n';
            }
            (view == View::kEgo ? files.ego_labels : files.infra_labels).push_back(label);
        }
    }
    Json all_records = Json::array();
    for (const AnnotationRecord& rec : records) all_records.push_back(to_json(rec));
    write_json_file(dir / "annotations.json", all_records);
    return files;
}

DatasetFiles write_v2x_dataset(const std::filesystem::path& dir, const SceneGraph& scene,
                               const std::vector<V2XFrame>& frames, const std::vector<AnnotationRecord>& records,
                               const std::map<int, Image>& ego_sources) {
    DatasetFiles files = write_v2x_images(dir, scene, frames, ego_sources);
    std::vector<int> indices;
    for (const V2XFrame& fr : frames) indices.push_back(fr.frame);
    const DatasetFiles labels = write_v2x_labels(dir, indices, records);
    files.ego_labels = labels.ego_labels;
    files.infra_labels = labels.infra_labels;
    return files;
}

}  // namespace v2xsim
