#include "v2xsim/rasterizer.hpp"

#include "v2xsim/errors.hpp"
#include "v2xsim/sh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace v2xsim {

namespace {

using Mat23 = Eigen::Matrix<double, 2, 3>;
using Splat = RenderState::Splat;

// Feature layout: color(3) depth(1) normal(3) semantic(K).
constexpr int kDepth = 3;
constexpr int kNormal = 4;
constexpr int kSemantic = 7;

Mat23 projection_jacobian(const Camera& cam, const Vec3& t) {
    const double iz = 1.0 / t.z();
    const double iz2 = iz * iz;
    Mat23 J;
    J << cam.fx * iz, 0, -cam.fx * t.x() * iz2,
         0, cam.fy * iz, -cam.fy * t.y() * iz2;
    return J;
}

void check_inputs(const GaussianSet& flat, const Camera& cam, const RasterSettings& s) {
    if (cam.width <= 0 || cam.height <= 0) {
        throw InvalidInput("rasterize: zero-area image");
    }
    cam.validate();
    if (s.tile_size <= 0) {
        throw InvalidInput("rasterize: tile size must be positive");
    }
    if (!(s.min_alpha > 0 && s.min_alpha < s.max_alpha && s.max_alpha < 1)) {
        throw InvalidInput("rasterize: require 0 < min_alpha < max_alpha < 1");
    }
    (void)flat;
}

// Projects Gaussian i and writes its features. Returns false when culled.
bool preprocess(const GaussianSet& set, std::size_t i, const Camera& cam, const RasterSettings& s,
                const Vec3& cam_center, Splat& sp, double* feat) {
    sp = Splat{};
    const Vec3 p = set.position(i);
    const Mat3& Wr = cam.world_to_camera.linear();
    const Vec3 t = cam.world_to_camera * p;
    sp.t_cam = t;
    sp.depth = t.z();
    if (!(t.z() >= cam.near && t.z() <= cam.far)) {
        return false;
    }
    const Vec4 q = set.rotation(i);
    const double qn = q.norm();
    if (!(qn > 0)) {
        return false;
    }
    const Mat3 R = quat_to_matrix(q / qn);
    const Vec3 scale = set.scale(i);
    const Mat3 A = R * scale.asDiagonal();
    const Mat3 cov_cam = Wr * (A * A.transpose()) * Wr.transpose();
    const Mat23 J = projection_jacobian(cam, t);
    Mat2 cov2d = J * cov_cam * J.transpose();
    cov2d(0, 0) += s.blur;
    cov2d(1, 1) += s.blur;
    cov2d(0, 1) = cov2d(1, 0) = 0.5 * (cov2d(0, 1) + cov2d(1, 0));
    const double det = cov2d.determinant();
    if (!(det > 0) || !std::isfinite(det)) {
        return false;
    }
    const double opacity = set.opacity(i);
    if (!(opacity > s.min_alpha)) {
        return false;
    }
    const Mat2 conic = cov2d.inverse();
    const double k = 2.0 * std::log(opacity / s.min_alpha);
    Vec2 extent(std::sqrt(k * cov2d(0, 0)), std::sqrt(k * cov2d(1, 1)));
    extent = extent * (1 + 1e-6) + Vec2::Constant(1e-6);
    const Vec2 mean(cam.fx * t.x() / t.z() + cam.cx, cam.fy * t.y() / t.z() + cam.cy);
    if (!mean.allFinite() || !extent.allFinite()) {
        return false;
    }
    if (mean.x() + extent.x() < 0 || mean.x() - extent.x() > cam.width - 1 || mean.y() + extent.y() < 0 ||
        mean.y() - extent.y() > cam.height - 1) {
        return false;
    }
    sp.mean = mean;
    sp.conic[0] = conic(0, 0);
    sp.conic[1] = 0.5 * (conic(0, 1) + conic(1, 0));
    sp.conic[2] = conic(1, 1);
    sp.opacity = opacity;
    sp.log_alpha_floor = std::log(s.min_alpha / opacity);
    sp.extent = extent;
    sp.cov2d = cov2d;
    sp.cov_cam = cov_cam;

    Vec3 dir = p - cam_center;
    sp.view_dist = dir.norm();
    dir = sp.view_dist > 0 ? Vec3(dir / sp.view_dist) : Vec3(0, 0, 1);
    sp.view_dir = dir;
    const Vec3 color = eval_sh(set.sh(i), set.sh_degree(), dir);

    int axis = 0;
    scale.minCoeff(&axis);
    Vec3 n = Wr * R.col(axis);
    sp.normal_axis = axis;
    sp.normal_sign = n.dot(t) > 0 ? -1.0 : 1.0;
    n *= sp.normal_sign;

    feat[0] = color[0];
    feat[1] = color[1];
    feat[2] = color[2];
    feat[kDepth] = t.z();
    feat[kNormal + 0] = n[0];
    feat[kNormal + 1] = n[1];
    feat[kNormal + 2] = n[2];
    const auto sem = set.semantic(i);
    std::copy(sem.begin(), sem.end(), feat + kSemantic);
    sp.culled = false;
    return true;
}

void preprocess_all(const GaussianSet& flat, const Camera& cam, const RasterSettings& s, RenderState& st) {
    st.camera = cam;
    st.settings = s;
    st.num_classes = flat.num_classes();
    st.feature_dim = kSemantic + flat.num_classes();
    const std::size_t n = flat.size();
    st.splats.assign(n, Splat{});
    st.features.assign(n * st.feature_dim, 0.0);
    const Vec3 cam_center = cam.center();
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)n; ++i) {
        preprocess(flat, std::size_t(i), cam, s, cam_center, st.splats[i], &st.features[std::size_t(i) * st.feature_dim]);
    }
}

struct SplatSample {
    double alpha = 0;
    double raw = 0;  // opacity * G before clipping
    double dx = 0, dy = 0;
};

inline bool sample_splat(const Splat& sp, double px, double py, const RasterSettings& s, SplatSample& out) {
    out.dx = px - sp.mean.x();
    out.dy = py - sp.mean.y();
    const double power =
        -0.5 * (sp.conic[0] * out.dx * out.dx + sp.conic[2] * out.dy * out.dy) - sp.conic[1] * out.dx * out.dy;
    if (power < sp.log_alpha_floor) {
        return false;
    }
    out.raw = sp.opacity * std::exp(power);
    if (out.raw < s.min_alpha) {
        return false;
    }
    out.alpha = std::min(s.max_alpha, out.raw);
    return true;
}

// Front-to-back compositing of one pixel over `order`. Writes the feature
// sum into acc (feature_dim entries) and returns final transmittance.
template <class Order>
double composite_pixel(const RenderState& st, const Order& order, double px, double py, bool early_stop,
                       double* acc, int& processed, int& contributors) {
    const int D = st.feature_dim;
    std::fill(acc, acc + D, 0.0);
    double T = 1.0;
    processed = 0;
    contributors = 0;
    SplatSample smp;
    int idx = 0;
    for (const auto gi : order) {
        ++idx;
        const Splat& sp = st.splats[gi];
        if (!sample_splat(sp, px, py, st.settings, smp)) {
            continue;
        }
        const double w = smp.alpha * T;
        const double* f = &st.features[std::size_t(gi) * D];
        for (int c = 0; c < D; ++c) {
            acc[c] += w * f[c];
        }
        T *= 1.0 - smp.alpha;
        processed = idx;
        ++contributors;
        if (early_stop && T < st.settings.min_transmittance) {
            break;
        }
    }
    return T;
}

RenderOutput allocate_output(const Camera& cam, int num_classes) {
    RenderOutput out;
    out.color = Image(cam.width, cam.height, 3);
    out.depth = Image(cam.width, cam.height, 1);
    out.alpha = Image(cam.width, cam.height, 1);
    out.normal = Image(cam.width, cam.height, 3);
    if (num_classes > 0) {
        out.semantic = Image(cam.width, cam.height, num_classes);
    }
    out.contributors.assign(std::size_t(cam.width) * cam.height, 0);
    return out;
}

void write_pixel(RenderOutput& out, const RenderState& st, int x, int y, const double* acc, double T, int contributors) {
    const Vec3& bg = st.settings.background;
    for (int c = 0; c < 3; ++c) {
        out.color.at(x, y, c) = acc[c] + T * bg[c];
        out.normal.at(x, y, c) = acc[kNormal + c];
    }
    out.depth.at(x, y) = acc[kDepth];
    out.alpha.at(x, y) = 1.0 - T;
    for (int k = 0; k < st.num_classes; ++k) {
        out.semantic.at(x, y, k) = acc[kSemantic + k];
    }
    out.contributors[std::size_t(y) * out.color.width() + x] = contributors;
}

}  // namespace

Projection project_gaussian(const Gaussian& g, const Camera& cam, const RasterSettings& settings) {
    cam.validate();
    GaussianSet one(0, 0);
    Gaussian copy = g;
    copy.sh.clear();
    copy.semantic.clear();
    one.push_back(copy);
    Splat sp;
    std::vector<double> feat(kSemantic);
    Projection out;
    out.depth = (cam.world_to_camera * g.position).z();
    const bool visible = preprocess(one, 0, cam, settings, cam.center(), sp, feat.data());
    out.culled = !visible;
    if (visible) {
        out.mean = sp.mean;
        out.cov = sp.cov2d;
        out.conic << sp.conic[0], sp.conic[1], sp.conic[1], sp.conic[2];
        out.extent = sp.extent;
    } else if (out.depth > 0) {
        // still report the projected mean for diagnostics
        const Vec3 t = cam.world_to_camera * g.position;
        out.mean = cam.project_camera(t);
    }
    return out;
}

RenderOutput rasterize(const GaussianSet& flat, const Camera& cam, const RasterSettings& settings,
                       RenderState* state) {
    check_inputs(flat, cam, settings);
    RenderState local;
    RenderState& st = state ? *state : local;
    preprocess_all(flat, cam, settings, st);

    const int ts = settings.tile_size;
    st.tiles_x = (cam.width + ts - 1) / ts;
    st.tiles_y = (cam.height + ts - 1) / ts;
    const int num_tiles = st.tiles_x * st.tiles_y;
    st.tile_lists.assign(num_tiles, {});
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const Splat& sp = st.splats[i];
        if (sp.culled) {
            continue;
        }
        const int x0 = std::clamp(int(std::floor((sp.mean.x() - sp.extent.x()) / ts)), 0, st.tiles_x - 1);
        const int x1 = std::clamp(int(std::floor((sp.mean.x() + sp.extent.x()) / ts)), 0, st.tiles_x - 1);
        const int y0 = std::clamp(int(std::floor((sp.mean.y() - sp.extent.y()) / ts)), 0, st.tiles_y - 1);
        const int y1 = std::clamp(int(std::floor((sp.mean.y() + sp.extent.y()) / ts)), 0, st.tiles_y - 1);
        for (int ty = y0; ty <= y1; ++ty) {
            for (int tx = x0; tx <= x1; ++tx) {
                st.tile_lists[ty * st.tiles_x + tx].push_back(std::uint32_t(i));
            }
        }
    }

    RenderOutput out = allocate_output(cam, flat.num_classes());
    st.final_transmittance.assign(std::size_t(cam.width) * cam.height, 1.0);
    st.processed.assign(std::size_t(cam.width) * cam.height, 0);

#pragma omp parallel for schedule(dynamic)
    for (int tile = 0; tile < num_tiles; ++tile) {
        auto& list = st.tile_lists[tile];
        // insertion order is index order, so stable_sort breaks depth ties by index
        std::stable_sort(list.begin(), list.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return st.splats[a].depth < st.splats[b].depth; });
        const int tx = tile % st.tiles_x;
        const int ty = tile / st.tiles_x;
        std::vector<double> acc(st.feature_dim);
        for (int y = ty * ts; y < std::min(cam.height, (ty + 1) * ts); ++y) {
            for (int x = tx * ts; x < std::min(cam.width, (tx + 1) * ts); ++x) {
                int processed = 0, contributors = 0;
                const double T = composite_pixel(st, list, double(x), double(y), true, acc.data(), processed,
                                                 contributors);
                const std::size_t pix = std::size_t(y) * cam.width + x;
                st.final_transmittance[pix] = T;
                st.processed[pix] = processed;
                write_pixel(out, st, x, y, acc.data(), T, contributors);
            }
        }
    }
    return out;
}

RenderOutput rasterize(const GaussianSet& flat, const Camera& cam, const Vec3& background) {
    RasterSettings s;
    s.background = background;
    return rasterize(flat, cam, s);
}

RenderOutput rasterize_reference(const GaussianSet& flat, const Camera& cam, const RasterSettings& settings) {
    check_inputs(flat, cam, settings);
    RenderState st;
    preprocess_all(flat, cam, settings, st);
    std::vector<std::uint32_t> order;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        if (!st.splats[i].culled) {
            order.push_back(std::uint32_t(i));
        }
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return st.splats[a].depth < st.splats[b].depth; });
    RenderOutput out = allocate_output(cam, flat.num_classes());
    std::vector<double> acc(st.feature_dim);
    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            int processed = 0, contributors = 0;
            const double T = composite_pixel(st, order, double(x), double(y), false, acc.data(), processed,
                                             contributors);
            write_pixel(out, st, x, y, acc.data(), T, contributors);
        }
    }
    return out;
}

namespace {

void check_grad_image(const Image& g, const Camera& cam, int channels, const char* name) {
    if (g.empty()) {
        return;
    }
    if (g.width() != cam.width || g.height() != cam.height || g.channels() != channels) {
        throw InvalidInput(std::string("rasterize_backward: adjoint '") + name + "' has mismatched shape");
    }
}

// Screen-space adjoints of one splat.
struct SplatGrad {
    Vec2 mean = Vec2::Zero();
    double conic[3] = {0, 0, 0};
    double opacity = 0;
};

}  // namespace

BackwardResult rasterize_backward(const GaussianSet& flat, const RenderState& st, const RenderGrad& grad) {
    const Camera& cam = st.camera;
    if (st.splats.size() != flat.size()) {
        throw InvalidInput("rasterize_backward: GaussianSet does not match the forward state");
    }
    if (flat.num_classes() != st.num_classes) {
        throw InvalidInput("rasterize_backward: class count does not match the forward state");
    }
    check_grad_image(grad.color, cam, 3, "color");
    check_grad_image(grad.depth, cam, 1, "depth");
    check_grad_image(grad.alpha, cam, 1, "alpha");
    check_grad_image(grad.normal, cam, 3, "normal");
    check_grad_image(grad.semantic, cam, st.num_classes, "semantic");

    const int D = st.feature_dim;
    const int ts = st.settings.tile_size;
    const int num_tiles = st.tiles_x * st.tiles_y;
    const RasterSettings& s = st.settings;
    const Vec3& bg = s.background;

    // Per-tile accumulators aligned with each tile list, merged in tile order
    // afterwards so the result does not depend on thread scheduling.
    std::vector<std::vector<SplatGrad>> tile_splat(num_tiles);
    std::vector<std::vector<double>> tile_feat(num_tiles);

#pragma omp parallel for schedule(dynamic)
    for (int tile = 0; tile < num_tiles; ++tile) {
        const auto& list = st.tile_lists[tile];
        auto& sg = tile_splat[tile];
        auto& fg = tile_feat[tile];
        sg.assign(list.size(), SplatGrad{});
        fg.assign(list.size() * D, 0.0);
        if (list.empty()) {
            continue;
        }
        const int tx = tile % st.tiles_x;
        const int ty = tile / st.tiles_x;
        std::vector<double> dC(D), acc(D), last_f(D);
        for (int y = ty * ts; y < std::min(cam.height, (ty + 1) * ts); ++y) {
            for (int x = tx * ts; x < std::min(cam.width, (tx + 1) * ts); ++x) {
                const std::size_t pix = std::size_t(y) * cam.width + x;
                const int processed = st.processed[pix];
                std::fill(dC.begin(), dC.end(), 0.0);
                for (int c = 0; c < 3; ++c) {
                    if (!grad.color.empty()) dC[c] = grad.color.at(x, y, c);
                    if (!grad.normal.empty()) dC[kNormal + c] = grad.normal.at(x, y, c);
                }
                if (!grad.depth.empty()) dC[kDepth] = grad.depth.at(x, y);
                for (int k = 0; k < st.num_classes && !grad.semantic.empty(); ++k) {
                    dC[kSemantic + k] = grad.semantic.at(x, y, k);
                }
                const double dA = grad.alpha.empty() ? 0.0 : grad.alpha.at(x, y);
                const double bg_dot = bg[0] * dC[0] + bg[1] * dC[1] + bg[2] * dC[2];
                const double T_final = st.final_transmittance[pix];
                double T = T_final;
                double last_alpha = 0;
                std::fill(acc.begin(), acc.end(), 0.0);
                std::fill(last_f.begin(), last_f.end(), 0.0);
                SplatSample smp;
                for (int j = processed - 1; j >= 0; --j) {
                    const std::uint32_t gi = list[j];
                    const Splat& sp = st.splats[gi];
                    if (!sample_splat(sp, double(x), double(y), s, smp)) {
                        continue;
                    }
                    const double a = smp.alpha;
                    T /= (1.0 - a);
                    const double* f = &st.features[std::size_t(gi) * D];
                    double* df = &fg[std::size_t(j) * D];
                    double d_alpha = 0;
                    for (int c = 0; c < D; ++c) {
                        df[c] += a * T * dC[c];
                        acc[c] = last_alpha * last_f[c] + (1.0 - last_alpha) * acc[c];
                        d_alpha += (f[c] - acc[c]) * dC[c];
                    }
                    d_alpha *= T;
                    d_alpha += T_final / (1.0 - a) * (dA - bg_dot);
                    last_alpha = a;
                    std::copy(f, f + D, last_f.begin());
                    if (smp.raw > s.max_alpha) {
                        continue;
                    }
                    const double G = smp.raw / sp.opacity;
                    SplatGrad& g = sg[j];
                    g.opacity += G * d_alpha;
                    const double d_power = smp.raw * d_alpha;
                    g.mean.x() += d_power * (sp.conic[0] * smp.dx + sp.conic[1] * smp.dy);
                    g.mean.y() += d_power * (sp.conic[1] * smp.dx + sp.conic[2] * smp.dy);
                    g.conic[0] += -0.5 * d_power * smp.dx * smp.dx;
                    g.conic[1] += -d_power * smp.dx * smp.dy;
                    g.conic[2] += -0.5 * d_power * smp.dy * smp.dy;
                }
            }
        }
    }

    const std::size_t n = flat.size();
    std::vector<SplatGrad> splat_grad(n);
    std::vector<double> feat_grad(n * D, 0.0);
    for (int tile = 0; tile < num_tiles; ++tile) {
        const auto& list = st.tile_lists[tile];
        for (std::size_t j = 0; j < list.size(); ++j) {
            const std::uint32_t gi = list[j];
            const SplatGrad& src = tile_splat[tile][j];
            SplatGrad& dst = splat_grad[gi];
            dst.mean += src.mean;
            dst.opacity += src.opacity;
            for (int k = 0; k < 3; ++k) {
                dst.conic[k] += src.conic[k];
            }
            const double* fs = &tile_feat[tile][j * D];
            double* fd = &feat_grad[std::size_t(gi) * D];
            for (int c = 0; c < D; ++c) {
                fd[c] += fs[c];
            }
        }
    }

    BackwardResult result{GaussianSet::zeros_like(flat), std::vector<double>(n, 0.0), std::vector<char>(n, 0)};
    const Mat3& Wr = cam.world_to_camera.linear();

#pragma omp parallel for schedule(static)
    for (long long ii = 0; ii < (long long)n; ++ii) {
        const std::size_t i = std::size_t(ii);
        const Splat& sp = st.splats[i];
        if (sp.culled) {
            continue;
        }
        result.visible[i] = 1;
        const SplatGrad& sg = splat_grad[i];
        const double* df = &feat_grad[i * D];
        result.mean2d_grad_norm[i] = Vec2(sg.mean.x() * 0.5 * cam.width, sg.mean.y() * 0.5 * cam.height).norm();

        // appearance
        const Vec3 d_color(df[0], df[1], df[2]);
        const ShBackward shb = eval_sh_backward(flat.sh(i), flat.sh_degree(), sp.view_dir, d_color);
        auto dsh = result.grad.sh(i);
        std::copy_n(shb.d_sh.begin(), dsh.size(), dsh.begin());
        Vec3 dp = Vec3::Zero();
        if (sp.view_dist > 0) {
            dp += (shb.d_dir - sp.view_dir * sp.view_dir.dot(shb.d_dir)) / sp.view_dist;
        }
        auto dsem = result.grad.semantic(i);
        for (int k = 0; k < st.num_classes; ++k) {
            dsem[k] = df[kSemantic + k];
        }

        // projection
        const Vec3& t = sp.t_cam;
        const double iz = 1.0 / t.z();
        const double iz2 = iz * iz;
        const double iz3 = iz2 * iz;
        Vec3 dt = Vec3::Zero();
        dt.z() += df[kDepth];
        dt.x() += sg.mean.x() * cam.fx * iz;
        dt.y() += sg.mean.y() * cam.fy * iz;
        dt.z() += -sg.mean.x() * cam.fx * t.x() * iz2 - sg.mean.y() * cam.fy * t.y() * iz2;

        Mat2 dQ;
        dQ << sg.conic[0], 0.5 * sg.conic[1], 0.5 * sg.conic[1], sg.conic[2];
        Mat2 Q;
        Q << sp.conic[0], sp.conic[1], sp.conic[1], sp.conic[2];
        const Mat2 dcov2d = -Q * dQ * Q;
        const Mat23 J = projection_jacobian(cam, t);
        const Mat23 dJ = 2.0 * dcov2d * J * sp.cov_cam;
        const Mat3 dcov_cam = J.transpose() * dcov2d * J;
        dt.x() += dJ(0, 2) * (-cam.fx * iz2);
        dt.y() += dJ(1, 2) * (-cam.fy * iz2);
        dt.z() += dJ(0, 0) * (-cam.fx * iz2) + dJ(0, 2) * (2.0 * cam.fx * t.x() * iz3) +
                  dJ(1, 1) * (-cam.fy * iz2) + dJ(1, 2) * (2.0 * cam.fy * t.y() * iz3);

        const Mat3 dcov3 = Wr.transpose() * dcov_cam * Wr;
        const Vec4 q = flat.rotation(i);
        const double qn = q.norm();
        const Vec4 qh = q / qn;
        const Mat3 R = quat_to_matrix(qh);
        const Vec3 scale = flat.scale(i);
        const Mat3 A = R * scale.asDiagonal();
        const Mat3 dA = (dcov3 + dcov3.transpose()) * A;
        Mat3 dR = dA * scale.asDiagonal();
        Vec3 ds;
        for (int k = 0; k < 3; ++k) {
            ds[k] = dA.col(k).dot(R.col(k));
        }
        const Vec3 dn(df[kNormal], df[kNormal + 1], df[kNormal + 2]);
        dR.col(sp.normal_axis) += sp.normal_sign * (Wr.transpose() * dn);

        result.grad.rotation(i) = normalize_backward(q, quat_to_matrix_backward(qh, dR));
        result.grad.log_scale(i) = ds.cwiseProduct(scale);
        result.grad.position(i) = dp + Wr.transpose() * dt;
        result.grad.opacity_logit(i) = sg.opacity * sp.opacity * (1.0 - sp.opacity);
    }
    return result;
}

}  // namespace v2xsim
