// v2xsim: runs the reconstruction and generation pipeline one stage per
// subcommand. Every stage reads files and writes an output directory, so
// stages can be rerun independently.

#include "v2xsim/annotations.hpp"
#include "v2xsim/corner_cases.hpp"
#include "v2xsim/errors.hpp"
#include "v2xsim/image_io.hpp"
#include "v2xsim/ingest.hpp"
#include "v2xsim/llm_client.hpp"
#include "v2xsim/metrics.hpp"
#include "v2xsim/ply.hpp"
#include "v2xsim/scene_io.hpp"
#include "v2xsim/synth.hpp"
#include "v2xsim/toy_scene.hpp"
#include "v2xsim/trainer.hpp"
#include "v2xsim/trajectory.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

using namespace v2xsim;
namespace fs = std::filesystem;

namespace {

struct Args {
    std::string config;
    std::string manifest;
    std::string scene;
    std::string out;
    int first = 0;
    int last = -1;
    int frames = 0;
    int iterations = -1;
    int vehicles = -1;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string asset;
    std::vector<std::string> remove;
    std::string llm_endpoint;
    double tau_vis = -1, tau_occ = -1;
    std::string pred, gt;
    bool half_ego_mask = false;
    int width = 64, height = 64;
};

/// One section of the JSON config; empty object when absent.
Json config_section(const std::string& path, const char* name) {
    if (path.empty()) return Json::object();
    const Json j = read_json_file(path);
    if (!j.is_object()) throw ParseError(path + ": config must be a JSON object");
    if (!j.contains(name)) return Json::object();
    if (!j.at(name).is_object()) throw ParseError(path + ": section '" + name + "' must be an object");
    return j.at(name);
}

template <class T>
void read_opt(const Json& j, const char* key, T& value) {
    if (j.contains(key)) value = j.at(key).get<T>();
}

SceneManifest require_manifest(const Args& a) {
    if (a.manifest.empty()) throw InvalidInput("--manifest is required");
    return load_manifest(a.manifest);
}

SceneGraph require_scene(const Args& a) {
    if (a.scene.empty()) throw InvalidInput("--scene is required");
    return load_scene(a.scene);
}

std::pair<int, int> frame_range(const Args& a, const SceneGraph& scene) {
    int last = a.last >= 0 ? a.last : scene.num_frames - 1;
    if (a.frames > 0) last = a.first + a.frames - 1;
    return {a.first, last};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_ingest(const Args& a) {
    const SceneManifest m = require_manifest(a);
    IngestOptions o;
    const Json cfg = config_section(a.config, "ingest");
    read_opt(cfg, "sh_degree", o.sh_degree);
    read_opt(cfg, "voxel", o.voxel);
    const SceneGraph scene = build_scene(m, o);
    save_scene(a.out, scene);
    std::printf("ingest: %d frames, %zu background Gaussians, %zu objects -> %s\n", scene.num_frames,
                scene.background.size(), scene.objects.size(), a.out.c_str());
    return 0;
}

int run_train(const Args& a) {
    const auto t0 = std::chrono::steady_clock::now();
    const SceneManifest m = require_manifest(a);
    SceneGraph scene = a.scene.empty() ? build_scene(m) : load_scene(a.scene);
    TrainConfig cfg = train_config_from_json(config_section(a.config, "train"));
    if (a.iterations >= 0) cfg.iterations = a.iterations;
    if (a.seed_set) cfg.seed = a.seed;
    cfg.validate();
    const std::vector<FrameSample> samples = load_samples(m);
    const TrainResult result = train(scene, samples, cfg);
    save_scene(a.out, scene);
    write_metrics_csv(fs::path(a.out) / "metrics.csv", result.log);
    write_json_file(fs::path(a.out) / "train_config.json", to_json(cfg));
    double train_psnr = NAN, holdout_psnr = NAN;
    for (const MetricsRow& r : result.log) {
        if (!std::isnan(r.train_psnr)) train_psnr = r.train_psnr;
        if (!std::isnan(r.holdout_psnr)) holdout_psnr = r.holdout_psnr;
    }
    std::printf("train: %d iterations, %zu background Gaussians, train PSNR %.2f dB, held-out PSNR %.2f dB, %.1f s -> %s\n",
                cfg.iterations, scene.background.size(), train_psnr, holdout_psnr, seconds_since(t0), a.out.c_str());
    return 0;
}

TrajectoryTrack ego_track(const SceneManifest& m, const SceneGraph& scene) {
    std::vector<TrackedBox> boxes;
    for (const TrackedBox& b : m.boxes) {
        if (!m.ego_id.empty() && b.id == m.ego_id) boxes.push_back(b);
    }
    if (!boxes.empty()) {
        std::sort(boxes.begin(), boxes.end(), [](const TrackedBox& x, const TrackedBox& y) { return x.frame < y.frame; });
        return track_from_boxes(m.ego_id, boxes);
    }
    // no ego box: the camera's ground point with its heading
    TrajectoryTrack t;
    t.id = "ego";
    for (int f = 0; f < scene.num_frames; ++f) {
        const Camera& cam = scene.camera(View::kEgo, f);
        const Vec3 forward = cam.world_to_camera.linear().row(2).transpose();
        Vec3 ground = cam.center();
        ground.z() = 0;
        t.dense.push_back(TrackPose{f, ground, std::atan2(forward.y(), forward.x())});
    }
    return t;
}

std::vector<TrajectoryTrack> object_tracks(const SceneGraph& scene) {
    std::vector<TrajectoryTrack> out;
    for (const DynamicObject& o : scene.objects) {
        if (o.track.size() == 0) continue;
        std::vector<TrackedBox> boxes;
        for (int f = o.track.first_frame(); f <= o.track.last_frame(); ++f) {
            boxes.push_back(TrackedBox{f, o.id, o.label, o.box(f)});
        }
        out.push_back(track_from_boxes(o.id, boxes));
    }
    return out;
}

int run_edit(const Args& a) {
    SceneGraph scene = require_scene(a);
    const SceneManifest m = require_manifest(a);
    const Json cfg = config_section(a.config, "edit");
    int vehicles = 1;
    std::uint64_t seed = 0;
    Vec3 size(4.5, 1.9, 1.6);
    std::string asset_path;
    RuleTrajectoryConfig rule;
    read_opt(cfg, "vehicles", vehicles);
    read_opt(cfg, "seed", seed);
    read_opt(cfg, "asset", asset_path);
    read_opt(cfg, "speed_min", rule.speed_min);
    read_opt(cfg, "speed_max", rule.speed_max);
    if (cfg.contains("size")) size = vec3_from_json(cfg.at("size"));
    if (a.vehicles >= 0) vehicles = a.vehicles;
    if (a.seed_set) seed = a.seed;
    if (!a.asset.empty()) asset_path = a.asset;
    std::optional<LlmConfig> llm;
    if (cfg.contains("llm")) {
        llm.emplace();
        const Json& l = cfg.at("llm");
        read_opt(l, "endpoint", llm->endpoint);
        read_opt(l, "model", llm->model);
        read_opt(l, "api_key", llm->api_key);
        read_opt(l, "timeout_s", llm->timeout_s);
    }
    if (!a.llm_endpoint.empty()) {
        if (!llm) llm.emplace();
        llm->endpoint = a.llm_endpoint;
    }

    Json report{{"removed", a.remove}, {"inserted", Json::array()}};
    for (const std::string& id : a.remove) remove_object(scene, id);

    if (vehicles > 0) {
        if (m.vector_map.empty()) throw InvalidInput("manifest has no vector_map; cannot place vehicles");
        if (scene.rig.infra.empty()) throw InvalidInput("scene has no infrastructure cameras");
        const LaneGraph graph = load_vector_map(m.vector_map);
        const std::vector<std::string> lanes = select_intersection_lanes(graph, scene.rig.infra.front().center());
        GaussianSet asset;
        if (!asset_path.empty()) {
            asset = read_gaussian_ply(asset_path);
        } else if (!scene.objects.empty()) {
            asset = scene.objects.front().gaussians;  // reuse a reconstructed vehicle
        } else {
            throw InvalidInput("no --asset given and the scene has no object to reuse");
        }
        const TrajectoryTrack ego = ego_track(m, scene);
        std::vector<TrajectoryTrack> existing = object_tracks(scene);
        rule.num_frames = scene.num_frames - 1;
        for (int k = 0, n = 0; k < vehicles; ++n) {
            const std::string id = "gen_" + std::to_string(n);
            if (scene.find(id)) continue;
            std::string source;
            const std::vector<Keyframe> kf = plan_trajectory(llm ? &*llm : nullptr, graph, lanes, ego, size, existing,
                                                             seed + std::uint64_t(k), rule, &source);
            const TrajectoryTrack track = make_track(id, kf, size);
            insert_object(scene, make_vehicle(id, asset, track));
            existing.push_back(track);
            report["inserted"].push_back(
                Json{{"id", id}, {"source", source}, {"keyframes", format_keyframes(kf)}});
            ++k;
        }
    }
    scene.validate();
    save_scene(a.out, scene);
    write_json_file(fs::path(a.out) / "edit.json", report);
    std::printf("edit: removed %zu, inserted %zu, %zu objects -> %s\n", a.remove.size(), report["inserted"].size(),
                scene.objects.size(), a.out.c_str());
    return 0;
}

int run_render(const Args& a) {
    const SceneGraph scene = require_scene(a);
    const auto [first, last] = frame_range(a, scene);
    Vec3 background = Vec3::Zero();
    const Json cfg = config_section(a.config, "render");
    if (cfg.contains("background")) background = vec3_from_json(cfg.at("background"));
    const std::vector<V2XFrame> frames = render_v2x(scene, first, last, background);
    std::map<int, Image> sources;
    if (!a.manifest.empty() && !scene.ego_masks.empty()) {
        const SceneManifest m = load_manifest(a.manifest);
        for (int f = first; f <= last && f < m.num_frames; ++f) sources[f] = read_png(m.ego[std::size_t(f)].color);
    }
    const DatasetFiles files = write_v2x_images(a.out, scene, frames, sources);
    std::printf("render: frames %d..%d, %zu ego/infra image pairs -> %s\n", first, last, files.ego_images.size(),
                a.out.c_str());
    return 0;
}

int run_annotate(const Args& a) {
    const SceneGraph scene = require_scene(a);
    std::vector<int> frames;
    const fs::path rendered = fs::path(a.out) / "manifest.json";
    if (a.last < 0 && a.frames == 0 && fs::exists(rendered)) {
        // label exactly the frames that were rendered into this directory
        const Json listing = read_json_file(rendered);
        for (const Json& e : listing.at("frames")) frames.push_back(e.at("frame").get<int>());
    } else {
        const auto [first, last] = frame_range(a, scene);
        for (int f = first; f <= last; ++f) frames.push_back(f);
    }
    if (frames.empty()) throw InvalidInput("no frames to annotate");
    const auto [lo, hi] = std::minmax_element(frames.begin(), frames.end());
    const std::vector<AnnotationRecord> records = export_annotations(scene, *lo, *hi);
    const DatasetFiles files = write_v2x_labels(a.out, frames, records);
    std::printf("annotate: %zu label pairs, %zu records -> %s\n", files.ego_labels.size(), records.size(),
                a.out.c_str());
    return 0;
}

int run_corner_cases(const Args& a) {
    const SceneGraph scene = require_scene(a);
    const auto [first, last] = frame_range(a, scene);
    CornerCaseConfig c;
    const Json cfg = config_section(a.config, "corner_cases");
    read_opt(cfg, "tau_vis", c.tau_vis);
    read_opt(cfg, "tau_occ", c.tau_occ);
    read_opt(cfg, "samples_per_edge", c.samples_per_edge);
    if (a.tau_vis >= 0) c.tau_vis = a.tau_vis;
    if (a.tau_occ >= 0) c.tau_occ = a.tau_occ;
    const std::vector<CornerCase> cases = detect_corner_cases(scene, first, last, c);
    Json out = Json::array();
    for (const CornerCase& cc : cases) {
        out.push_back(Json{{"frame", cc.frame},
                           {"id", cc.id},
                           {"visibility_infra", cc.visibility_infra},
                           {"visibility_ego", cc.visibility_ego},
                           {"occluder", cc.occluder}});
    }
    fs::create_directories(a.out);
    write_json_file(fs::path(a.out) / "corner_cases.json", out);
    std::printf("corner-cases: %zu cases in frames %d..%d -> %s\n", cases.size(), first, last, a.out.c_str());
    return 0;
}

int run_eval(const Args& a) {
    if (a.pred.empty() || a.gt.empty()) throw InvalidInput("--pred and --gt are required");
    for (const std::string& d : {a.pred, a.gt}) {
        if (!fs::is_directory(d)) throw NotFound("not a directory: " + d);
    }
    std::vector<fs::path> rel;
    for (const auto& e : fs::recursive_directory_iterator(a.gt)) {
        if (e.is_regular_file() && e.path().extension() == ".png") rel.push_back(fs::relative(e.path(), a.gt));
    }
    std::sort(rel.begin(), rel.end());
    if (rel.empty()) throw InvalidInput("no PNG images under " + a.gt);
    std::string missing;
    for (const fs::path& r : rel) {
        if (!fs::exists(fs::path(a.pred) / r)) missing += "\n  " + (fs::path(a.pred) / r).string();
    }
    if (!missing.empty()) throw NotFound("missing predicted images:" + missing);

    Json per_image = Json::array();
    double sum_psnr = 0, sum_ssim = 0;
    for (const fs::path& r : rel) {
        const Image g = read_png(fs::path(a.gt) / r);
        const Image p = read_png(fs::path(a.pred) / r);
        if (g.width() != p.width() || g.height() != p.height() || g.channels() != p.channels()) {
            throw InvalidInput("image size differs: " + r.string());
        }
        const double ps = psnr(p, g), ss = ssim(p, g);
        sum_psnr += ps;
        sum_ssim += ss;
        per_image.push_back(Json{{"image", r.generic_string()}, {"psnr", ps}, {"ssim", ss}});
    }
    const double n = double(rel.size());
    std::printf("eval: %zu images, PSNR %.2f dB, SSIM %.4f\n", rel.size(), sum_psnr / n, sum_ssim / n);
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        write_json_file(fs::path(a.out) / "eval.json",
                        Json{{"images", rel.size()}, {"psnr", sum_psnr / n}, {"ssim", sum_ssim / n}, {"per_image", per_image}});
    }
    return 0;
}

int run_make_toy(const Args& a) {
    ToySceneOptions o;
    o.width = a.width;
    o.height = a.height;
    o.half_ego_mask = a.half_ego_mask;
    if (a.frames > 0) o.num_frames = a.frames;
    if (a.seed_set) o.seed = a.seed;
    const fs::path manifest = write_toy_dataset(a.out, o);
    std::printf("make-toy: %d frames -> %s\n", o.num_frames, manifest.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decomposed Gaussian-splatting reconstruction and V2X data generation"};
    app.require_subcommand(1);
    Args a;

    auto add_config = [&](CLI::App* s) { s->add_option("-c,--config", a.config, "JSON config")->check(CLI::ExistingFile); };
    auto add_seed = [&](CLI::App* s) {
        s->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& v) { a.seed = v, a.seed_set = true; },
                                               "Random seed");
    };
    auto add_range = [&](CLI::App* s) {
        s->add_option("--first", a.first, "First frame")->check(CLI::NonNegativeNumber);
        s->add_option("--last", a.last, "Last frame (default: last scene frame)");
        s->add_option("--frames", a.frames, "Frame count starting at --first")->check(CLI::PositiveNumber);
    };

    CLI::App* ingest = app.add_subcommand("ingest", "Build a scene graph from a manifest");
    add_config(ingest);
    ingest->add_option("-m,--manifest", a.manifest, "Scene manifest")->required();
    ingest->add_option("-o,--out", a.out, "Scene directory")->required();

    CLI::App* train = app.add_subcommand("train", "Optimize a scene against the manifest's images");
    add_config(train);
    add_seed(train);
    train->add_option("-m,--manifest", a.manifest, "Scene manifest")->required();
    train->add_option("-s,--scene", a.scene, "Scene directory (default: ingest the manifest)");
    train->add_option("-o,--out", a.out, "Trained scene directory")->required();
    train->add_option("--iterations", a.iterations, "Override the configured iteration count")
        ->check(CLI::NonNegativeNumber);

    CLI::App* edit = app.add_subcommand("edit", "Remove objects and insert vehicles on the intersection lanes");
    add_config(edit);
    add_seed(edit);
    edit->add_option("-m,--manifest", a.manifest, "Scene manifest (vector map, ego track)")->required();
    edit->add_option("-s,--scene", a.scene, "Scene directory")->required();
    edit->add_option("-o,--out", a.out, "Edited scene directory")->required();
    edit->add_option("--vehicles", a.vehicles, "Vehicles to insert")->check(CLI::NonNegativeNumber);
    edit->add_option("--asset", a.asset, "Gaussian PLY asset (default: the scene's first object)")
        ->check(CLI::ExistingFile);
    edit->add_option("--remove", a.remove, "Object id to remove (repeatable)");
    edit->add_option("--llm-endpoint", a.llm_endpoint, "Chat-completion URL for trajectory planning");

    CLI::App* render = app.add_subcommand("render", "Render synchronized ego/infra frames");
    add_config(render);
    add_range(render);
    render->add_option("-s,--scene", a.scene, "Scene directory")->required();
    render->add_option("-m,--manifest", a.manifest, "Manifest whose ego images fill the ego-mask region");
    render->add_option("-o,--out", a.out, "Dataset directory")->required();

    CLI::App* annotate = app.add_subcommand("annotate", "Write KITTI-style labels for rendered frames");
    add_config(annotate);
    add_range(annotate);
    annotate->add_option("-s,--scene", a.scene, "Scene directory")->required();
    annotate->add_option("-o,--out", a.out, "Dataset directory")->required();

    CLI::App* corner = app.add_subcommand("corner-cases", "List objects seen by infra but hidden from ego");
    add_config(corner);
    add_range(corner);
    corner->add_option("-s,--scene", a.scene, "Scene directory")->required();
    corner->add_option("-o,--out", a.out, "Output directory")->required();
    corner->add_option("--tau-vis", a.tau_vis, "Minimum infra visibility")->check(CLI::Range(0.0, 1.0));
    corner->add_option("--tau-occ", a.tau_occ, "Maximum ego visibility")->check(CLI::Range(0.0, 1.0));

    CLI::App* eval = app.add_subcommand("eval", "Mean PSNR/SSIM over matching PNGs of two directories");
    add_config(eval);
    eval->add_option("--pred", a.pred, "Predicted image directory")->required();
    eval->add_option("--gt", a.gt, "Ground-truth image directory")->required();
    eval->add_option("-o,--out", a.out, "Directory for eval.json");

    CLI::App* toy = app.add_subcommand("make-toy", "Write the synthetic crossing dataset");
    add_seed(toy);
    toy->add_option("-o,--out", a.out, "Dataset directory")->required();
    toy->add_option("--frames", a.frames, "Frame count")->check(CLI::PositiveNumber);
    toy->add_option("--width", a.width, "Image width")->check(CLI::PositiveNumber);
    toy->add_option("--height", a.height, "Image height")->check(CLI::PositiveNumber);
    toy->add_flag("--half-ego-mask", a.half_ego_mask, "Mask the lower half of every ego image");

    CLI11_PARSE(app, argc, argv);

    const std::map<CLI::App*, int (*)(const Args&)> handlers{
        {ingest, run_ingest}, {train, run_train},   {edit, run_edit},         {render, run_render},
        {annotate, run_annotate}, {corner, run_corner_cases}, {eval, run_eval}, {toy, run_make_toy}};
    try {
        for (const auto& [sub, fn] : handlers) {
            if (sub->parsed()) return fn(a);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const Json::exception& e) {
        std::fprintf(stderr, "error: config: %s\n", e.what());
        return 1;
    }
    return 1;
}
