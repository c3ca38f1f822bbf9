#include "v2xsim/trainer.hpp"

#include "v2xsim/errors.hpp"
#include "v2xsim/losses.hpp"
#include "v2xsim/metrics.hpp"
#include "v2xsim/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace v2xsim {

void TrainConfig::validate() const {
    const double w[] = {weights.depth, weights.normal, weights.sky, weights.semantic,
                        weights.scale, weights.ratio,  weights.reg, ssim_weight};
    for (double v : w) {
        if (!(v >= 0) || !std::isfinite(v)) {
            throw InvalidInput("loss weights must be finite and nonnegative");
        }
    }
    if (ssim_weight > 1) {
        throw InvalidInput("ssim_weight must lie in [0, 1]");
    }
    if (iterations < 0) {
        throw InvalidInput("iterations must be nonnegative");
    }
    if (appearance_grid < 0) {
        throw InvalidInput("appearance_grid must be nonnegative");
    }
    if (!(min_alpha > 0 && min_alpha < 1)) {
        throw InvalidInput("min_alpha must lie in (0, 1)");
    }
    if (densify_interval <= 0 || eval_interval <= 0) {
        throw InvalidInput("densify_interval and eval_interval must be positive");
    }
}

namespace {

template <class T>
void read(const Json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void add_scaled(GaussianSet& dst, const GaussianSet& src, double w) {
    for (int g = 0; g < GaussianSet::kNumGroups; ++g) {
        auto d = dst.group(GaussianSet::Group(g));
        const auto s = src.group(GaussianSet::Group(g));
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += w * s[i];
    }
}

void check_finite(const char* term, double v) {
    if (!std::isfinite(v)) {
        throw NonFiniteLoss(term, v);
    }
}

Image scaled(Image img, double w) {
    for (auto& v : img.data()) v *= w;
    return img;
}

}  // namespace

TrainConfig train_config_from_json(const Json& j) {
    TrainConfig c;
    try {
        if (j.contains("weights")) {
            const Json& w = j.at("weights");
            read(w, "depth", c.weights.depth);
            read(w, "normal", c.weights.normal);
            read(w, "sky", c.weights.sky);
            read(w, "semantic", c.weights.semantic);
            read(w, "scale", c.weights.scale);
            read(w, "ratio", c.weights.ratio);
            read(w, "reg", c.weights.reg);
        }
        if (j.contains("lr")) {
            const Json& l = j.at("lr");
            read(l, "position", c.lr.position);
            read(l, "position_final", c.lr.position_final);
            read(l, "rotation", c.lr.rotation);
            read(l, "log_scale", c.lr.log_scale);
            read(l, "opacity", c.lr.opacity);
            read(l, "sh", c.lr.sh);
            read(l, "sh_rest_factor", c.lr.sh_rest_factor);
            read(l, "semantic", c.lr.semantic);
            read(l, "pose_rotation", c.lr.pose_rotation);
            read(l, "pose_translation", c.lr.pose_translation);
            read(l, "object_appearance", c.lr.object_appearance);
            read(l, "appearance_grid", c.lr.appearance_grid);
        }
        if (j.contains("densify")) {
            const Json& d = j.at("densify");
            read(d, "grad_threshold", c.densify.grad_threshold);
            read(d, "clone_max_scale", c.densify.clone_max_scale);
            read(d, "split_scale_divisor", c.densify.split_scale_divisor);
            read(d, "prune_opacity", c.densify.prune_opacity);
            read(d, "max_gaussians", c.densify.max_gaussians);
            read(d, "from", c.densify_from);
            read(d, "until", c.densify_until);
            read(d, "interval", c.densify_interval);
        }
        read(j, "iterations", c.iterations);
        read(j, "use_ssim", c.use_ssim);
        read(j, "ssim_weight", c.ssim_weight);
        read(j, "appearance_grid", c.appearance_grid);
        read(j, "sh_degree_interval", c.sh_degree_interval);
        read(j, "holdout_frames", c.holdout_frames);
        read(j, "eval_interval", c.eval_interval);
        read(j, "min_alpha", c.min_alpha);
        read(j, "optimize_poses", c.optimize_poses);
        read(j, "seed", c.seed);
        if (j.contains("background")) c.background = vec3_from_json(j.at("background"));
    } catch (const Json::exception& e) {
        throw ParseError(std::string("train config: ") + e.what());
    }
    c.validate();
    return c;
}

Json to_json(const TrainConfig& c) {
    return Json{
        {"weights",
         {{"depth", c.weights.depth},
          {"normal", c.weights.normal},
          {"sky", c.weights.sky},
          {"semantic", c.weights.semantic},
          {"scale", c.weights.scale},
          {"ratio", c.weights.ratio},
          {"reg", c.weights.reg}}},
        {"lr",
         {{"position", c.lr.position},
          {"position_final", c.lr.position_final},
          {"rotation", c.lr.rotation},
          {"log_scale", c.lr.log_scale},
          {"opacity", c.lr.opacity},
          {"sh", c.lr.sh},
          {"sh_rest_factor", c.lr.sh_rest_factor},
          {"semantic", c.lr.semantic},
          {"pose_rotation", c.lr.pose_rotation},
          {"pose_translation", c.lr.pose_translation},
          {"object_appearance", c.lr.object_appearance},
          {"appearance_grid", c.lr.appearance_grid}}},
        {"densify",
         {{"grad_threshold", c.densify.grad_threshold},
          {"clone_max_scale", c.densify.clone_max_scale},
          {"split_scale_divisor", c.densify.split_scale_divisor},
          {"prune_opacity", c.densify.prune_opacity},
          {"max_gaussians", c.densify.max_gaussians},
          {"from", c.densify_from},
          {"until", c.densify_until},
          {"interval", c.densify_interval}}},
        {"iterations", c.iterations},
        {"use_ssim", c.use_ssim},
        {"ssim_weight", c.ssim_weight},
        {"appearance_grid", c.appearance_grid},
        {"sh_degree_interval", c.sh_degree_interval},
        {"holdout_frames", c.holdout_frames},
        {"eval_interval", c.eval_interval},
        {"min_alpha", c.min_alpha},
        {"optimize_poses", c.optimize_poses},
        {"seed", c.seed},
        {"background", to_json(c.background)},
    };
}

TotalLoss total_loss(const FrameSample& sample, const SceneGraph& scene, const TrainConfig& config,
                     const AppearanceGrid& grid) {
    const Camera& cam = scene.camera(sample.view, sample.frame);
    if (sample.color.width() != cam.width || sample.color.height() != cam.height) {
        throw InvalidInput("sample image size differs from its camera");
    }
    const Image no_mask;
    const Image& mask = sample.view == View::kEgo ? sample.ego_mask : no_mask;
    const LossWeights& w = config.weights;

    TotalLoss out;
    out.composition = compose_frame_detailed(scene, sample.frame);
    RasterSettings rs;
    rs.background = config.background;
    rs.min_alpha = config.min_alpha;
    RenderState state;
    out.render = rasterize(out.composition.flat, cam, rs, &state);

    const ColorLoss color =
        loss_color(out.render.color, sample.color, grid, mask, config.use_ssim ? config.ssim_weight : 0.0);
    out.terms.color = color.value;
    out.render_grad.color = color.d_rendered;
    out.appearance_grad = color.d_grid;

    if (w.depth > 0 && !sample.depth.empty()) {
        const PixelLoss d = loss_depth(out.render.depth, sample.depth, sample.depth_valid, out.render.alpha, mask);
        out.terms.depth = d.value;
        out.render_grad.depth = scaled(d.grad, w.depth);
    }
    if (w.normal > 0 && !sample.normal.empty()) {
        const PixelLoss n = loss_normal(out.render.normal, sample.normal, out.render.alpha, mask);
        out.terms.normal = n.value;
        out.render_grad.normal = scaled(n.grad, w.normal);
    }
    if (w.sky > 0 && !sample.sky.empty()) {
        const PixelLoss s = loss_sky(out.render.alpha, sample.sky, mask);
        out.terms.sky = s.value;
        out.render_grad.alpha = scaled(s.grad, w.sky);
    }
    if (w.semantic > 0 && !sample.semantic.empty() && scene.background.num_classes() > 0) {
        const PixelLoss s = loss_semantic(out.render.semantic, sample.semantic, mask);
        out.terms.semantic = s.value;
        out.render_grad.semantic = scaled(s.grad, w.semantic);
    }

    out.raster = rasterize_backward(out.composition.flat, state, out.render_grad);
    GaussianSet& flat_grad = out.raster.grad;
    const GaussianSet& flat = out.composition.flat;
    if (!flat.empty()) {
        if (w.scale > 0) {
            const GeometricLoss ls = loss_scale_set(flat);
            out.terms.scale = ls.value;
            add_scaled(flat_grad, ls.grad, w.scale);
        }
        if (w.ratio > 0) {
            const GeometricLoss lr = loss_ratio_set(flat);
            out.terms.ratio = lr.value;
            add_scaled(flat_grad, lr.grad, w.ratio);
        }
        if (w.reg > 0) {
            const SetLoss reg = loss_reg(flat);
            out.terms.reg = reg.value;
            add_scaled(flat_grad, reg.grad, w.reg);
        }
    }
    const LossTerms& t = out.terms;
    check_finite("color", t.color);
    check_finite("depth", t.depth);
    check_finite("normal", t.normal);
    check_finite("sky", t.sky);
    check_finite("semantic", t.semantic);
    check_finite("scale", t.scale);
    check_finite("ratio", t.ratio);
    check_finite("reg", t.reg);
    out.terms.total = t.color + w.depth * t.depth + w.normal * t.normal + w.sky * t.sky + w.semantic * t.semantic +
                      w.scale * t.scale + w.ratio * t.ratio + w.reg * t.reg;
    out.scene_grad = compose_frame_backward(scene, sample.frame, out.composition, flat_grad);
    return out;
}

double evaluate_psnr(const SceneGraph& scene, const std::vector<const FrameSample*>& samples, const Vec3& background) {
    if (samples.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double sum = 0;
    for (const FrameSample* s : samples) {
        const RenderOutput r = rasterize(compose_frame(scene, s->frame), scene.camera(s->view, s->frame), background);
        sum += psnr(r.color, s->color, s->view == View::kEgo ? s->ego_mask : Image{});
    }
    return sum / double(samples.size());
}

namespace {

std::size_t row_size(const GaussianSet& set, int group) {
    switch (group) {
        case GaussianSet::kPosition:
        case GaussianSet::kLogScale:
            return 3;
        case GaussianSet::kRotation:
            return 4;
        case GaussianSet::kOpacity:
            return 1;
        case GaussianSet::kSh:
            return set.sh_stride();
        default:
            return std::size_t(set.num_classes());
    }
}

// Adam moments and densification statistics for one GaussianSet.
struct SetOptimizer {
    std::array<AdamState, GaussianSet::kNumGroups> adam;
    DensifyStats stats;
    std::vector<double> sh_scale;

    SetOptimizer(const GaussianSet& set, double sh_rest_factor) {
        stats.reset(set.size());
        sh_scale.assign(set.sh_stride(), sh_rest_factor);
        std::fill_n(sh_scale.begin(), 3, 1.0);
    }

    void step(GaussianSet& set, const GaussianSet& grad, const LearningRates& lr, double position_lr) {
        const double rates[] = {position_lr, lr.rotation, lr.log_scale, lr.opacity, lr.sh, lr.semantic};
        for (int g = 0; g < GaussianSet::kNumGroups; ++g) {
            auto p = set.group(GaussianSet::Group(g));
            if (p.empty()) continue;
            adam_step(p, grad.group(GaussianSet::Group(g)), adam[g], rates[g], {},
                      g == GaussianSet::kSh ? std::span<const double>(sh_scale) : std::span<const double>{});
        }
    }

    void remap(const GaussianSet& set, const std::vector<std::ptrdiff_t>& origin) {
        for (int g = 0; g < GaussianSet::kNumGroups; ++g) {
            AdamState& s = adam[g];
            if (s.m.empty()) continue;
            const std::size_t rs = row_size(set, g);
            s.m = remap_rows(s.m, rs, origin);
            s.v = remap_rows(s.v, rs, origin);
        }
        stats.reset(set.size());
    }
};

void zero_inactive_sh(GaussianSet& grad, int active_degree) {
    const std::size_t first = std::size_t(3 * sh_coeff_count(active_degree));
    for (std::size_t i = 0; i < grad.size(); ++i) {
        auto sh = grad.sh(i);
        std::fill(sh.begin() + std::min(first, sh.size()), sh.end(), 0.0);
    }
}

}  // namespace

TrainResult train(SceneGraph& scene, const std::vector<FrameSample>& data, const TrainConfig& config) {
    config.validate();
    if (data.empty()) {
        throw InvalidInput("training dataset is empty");
    }
    scene.validate();
    TrainResult result;
    std::vector<std::size_t> ego, infra;
    std::vector<const FrameSample*> train_samples, holdout;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const FrameSample& s = data[i];
        scene.camera(s.view, s.frame);
        const bool held = std::find(config.holdout_frames.begin(), config.holdout_frames.end(), s.frame) !=
                          config.holdout_frames.end();
        if (held) {
            holdout.push_back(&s);
            continue;
        }
        train_samples.push_back(&s);
        (s.view == View::kEgo ? ego : infra).push_back(i);
    }
    if (ego.empty() && infra.empty()) {
        throw InvalidInput("every sample is held out");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        result.grids.push_back(config.appearance_grid > 0 ? AppearanceGrid(config.appearance_grid, config.appearance_grid)
                                                          : AppearanceGrid{});
    }
    if (config.iterations == 0) {
        return result;
    }

    std::mt19937_64 rng(config.seed);
    SetOptimizer background_opt(scene.background, config.lr.sh_rest_factor);
    std::vector<SetOptimizer> object_opt;
    std::vector<std::vector<AdamState>> pose_opt;
    std::vector<AdamState> fourier_opt(scene.objects.size());
    for (const auto& o : scene.objects) {
        object_opt.emplace_back(o.gaussians, config.lr.sh_rest_factor);
        pose_opt.emplace_back(o.track.size());
    }
    std::vector<AdamState> grid_opt(data.size(), AdamState{});

    std::array<std::vector<std::size_t>, 2> order{ego, infra};
    std::array<std::size_t, 2> cursor{0, 0};
    for (auto& o : order) std::shuffle(o.begin(), o.end(), rng);
    auto next_sample = [&](int it) {
        int v = it % 2;
        if (order[v].empty()) v = 1 - v;
        if (cursor[v] == order[v].size()) {
            std::shuffle(order[v].begin(), order[v].end(), rng);
            cursor[v] = 0;
        }
        return order[v][cursor[v]++];
    };

    const int max_degree = scene.background.sh_degree();
    for (int it = 1; it <= config.iterations; ++it) {
        const std::size_t si = next_sample(it);
        const FrameSample& sample = data[si];
        const int active_degree =
            config.sh_degree_interval > 0 ? std::min(max_degree, (it - 1) / config.sh_degree_interval) : max_degree;

        TotalLoss L = total_loss(sample, scene, config, result.grids[si]);
        SceneGradient& g = L.scene_grad;
        zero_inactive_sh(g.background, active_degree);
        for (auto& og : g.objects) zero_inactive_sh(og.gaussians, active_degree);

        const FrameComposition& comp = L.composition;
        for (std::size_t i = 0; i < comp.background_count; ++i) {
            if (L.raster.visible[i]) background_opt.stats.add(i, L.raster.mean2d_grad_norm[i]);
        }
        for (const auto& seg : comp.segments) {
            for (std::size_t k = 0; k < seg.count; ++k) {
                if (L.raster.visible[seg.offset + k]) {
                    object_opt[seg.object].stats.add(k, L.raster.mean2d_grad_norm[seg.offset + k]);
                }
            }
        }

        const double s = config.iterations > 1 ? double(it - 1) / double(config.iterations - 1) : 0.0;
        const double position_lr =
            std::exp((1 - s) * std::log(config.lr.position) + s * std::log(config.lr.position_final));
        background_opt.step(scene.background, g.background, config.lr, position_lr);
        for (std::size_t k = 0; k < comp.segments.size(); ++k) {
            const std::size_t oi = comp.segments[k].object;
            DynamicObject& obj = scene.objects[oi];
            const SceneGradient::Object& og = g.objects[k];
            object_opt[oi].step(obj.gaussians, og.gaussians, config.lr, position_lr);
            adam_step(obj.appearance, og.appearance, fourier_opt[oi], config.lr.object_appearance);
            if (config.optimize_poses) {
                PoseCorrection& c = obj.track.correction(sample.frame);
                AdamState& ps = pose_opt[oi][sample.frame - obj.track.first_frame()];
                std::array<double, 6> p{c.rotation[0], c.rotation[1], c.rotation[2],
                                        c.translation[0], c.translation[1], c.translation[2]};
                const std::array<double, 6> dp{og.correction.rotation[0],    og.correction.rotation[1],
                                               og.correction.rotation[2],    og.correction.translation[0],
                                               og.correction.translation[1], og.correction.translation[2]};
                const double rr = config.lr.pose_rotation, rt = config.lr.pose_translation;
                const std::array<double, 6> rate{rr, rr, rr, rt, rt, rt};
                adam_step(p, dp, ps, 1.0, {}, rate);
                c.rotation = Vec3(p[0], p[1], p[2]);
                c.translation = Vec3(p[3], p[4], p[5]);
            }
            obj.clamp_to_box();
        }
        if (result.grids[si].grid_width() > 0) {
            AppearanceGrid& grid = result.grids[si];
            std::vector<double> params(grid.gain());
            params.insert(params.end(), grid.offset().begin(), grid.offset().end());
            std::vector<double> grads(L.appearance_grad.gain());
            grads.insert(grads.end(), L.appearance_grad.offset().begin(), L.appearance_grad.offset().end());
            adam_step(params, grads, grid_opt[si], config.lr.appearance_grid);
            const std::size_t n = grid.gain().size();
            std::copy_n(params.begin(), n, grid.gain().begin());
            std::copy_n(params.begin() + n, n, grid.offset().begin());
        }

        if (it >= config.densify_from && it <= config.densify_until && it % config.densify_interval == 0) {
            const DensifyResult r = densify_and_prune(scene.background, background_opt.stats, config.densify, rng);
            background_opt.remap(scene.background, r.origin);
            for (std::size_t oi = 0; oi < scene.objects.size(); ++oi) {
                const DensifyResult ro =
                    densify_and_prune(scene.objects[oi].gaussians, object_opt[oi].stats, config.densify, rng);
                object_opt[oi].remap(scene.objects[oi].gaussians, ro.origin);
            }
        }

        MetricsRow row;
        row.iteration = it;
        row.view = sample.view;
        row.frame = sample.frame;
        row.loss = L.terms;
        row.gaussians = scene.background.size();
        for (const auto& o : scene.objects) row.gaussians += o.gaussians.size();
        if (it % config.eval_interval == 0 || it == config.iterations) {
            row.train_psnr = evaluate_psnr(scene, train_samples, config.background);
            row.holdout_psnr = evaluate_psnr(scene, holdout, config.background);
        }
        result.log.push_back(row);
    }
    return result;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& log) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw InvalidInput("cannot write " + path.string());
    }
    out.precision(10);
    out << "iteration,view,frame,total,color,depth,normal,sky,semantic,scale,ratio,reg,gaussians,train_psnr,"
           "holdout_psnr\n";
    auto opt = [&](double v) {
        if (std::isfinite(v)) out << v;
    };
    for (const auto& r : log) {
        const LossTerms& t = r.loss;
        out << r.iteration << ',' << view_name(r.view) << ',' << r.frame << ',' << t.total << ',' << t.color << ','
            << t.depth << ',' << t.normal << ',' << t.sky << ',' << t.semantic << ',' << t.scale << ',' << t.ratio
            << ',' << t.reg << ',' << r.gaussians << ',';
        opt(r.train_psnr);
        out << ',';
        opt(r.holdout_psnr);
        out << '\n';
    }
}

}  // namespace v2xsim
