#pragma once

#include "v2xsim/camera.hpp"
#include "v2xsim/gaussian.hpp"
#include "v2xsim/image.hpp"

#include <cstdint>
#include <vector>

namespace v2xsim {

struct RasterSettings {
    Vec3 background = Vec3::Zero();
    int tile_size = 16;
    /// Contributions with alpha below this are skipped; it also bounds each
    /// splat's screen extent, so tiling never drops a contribution.
    double min_alpha = 1.0 / 255.0;
    double max_alpha = 0.99;
    /// Front-to-back compositing stops once transmittance would drop below this.
    double min_transmittance = 1e-4;
    /// Low-pass added to the diagonal of every 2D covariance, in px^2.
    double blur = 0.3;
};

/// Per-pixel render targets. Depth is the alpha-weighted expected depth
/// sum(w_i z_i), not normalized by alpha. Normals are in the camera frame.
struct RenderOutput {
    Image color;     // 3 channels
    Image depth;     // 1 channel
    Image alpha;     // 1 channel
    Image normal;    // 3 channels
    Image semantic;  // K channels, empty when K == 0
    std::vector<int> contributors;
};

/// Adjoints of the render targets. An empty image means a zero adjoint.
struct RenderGrad {
    Image color;
    Image depth;
    Image alpha;
    Image normal;
    Image semantic;
};

struct Projection {
    Vec2 mean = Vec2::Zero();
    Mat2 cov = Mat2::Identity();
    Mat2 conic = Mat2::Identity();
    double depth = 0;
    Vec2 extent = Vec2::Zero();  // half-size of the contributing footprint bbox
    bool culled = true;
};

/// First-order (EWA) projection of a single Gaussian.
Projection project_gaussian(const Gaussian& g, const Camera& cam, const RasterSettings& settings = {});

/// Everything the backward pass needs from a forward pass.
struct RenderState {
    struct Splat {
        Vec2 mean = Vec2::Zero();
        double conic[3] = {0, 0, 0};  // Qxx, Qxy, Qyy
        double opacity = 0;
        double log_alpha_floor = 0;   // ln(min_alpha / opacity)
        double depth = 0;
        Vec2 extent = Vec2::Zero();
        Vec3 t_cam = Vec3::Zero();
        Vec3 view_dir = Vec3::Zero();
        double view_dist = 0;
        Mat2 cov2d = Mat2::Identity();
        Mat3 cov_cam = Mat3::Zero();
        int normal_axis = 0;
        double normal_sign = 1;
        bool culled = true;
    };

    Camera camera;
    RasterSettings settings;
    int num_classes = 0;
    int feature_dim = 0;
    int tiles_x = 0;
    int tiles_y = 0;
    std::vector<Splat> splats;
    std::vector<double> features;  // N x feature_dim: color(3) depth(1) normal(3) semantic(K)
    std::vector<std::vector<std::uint32_t>> tile_lists;
    std::vector<double> final_transmittance;
    std::vector<int> processed;  // per pixel: list entries up to the last contributor
};

/// Tile-based forward rasterizer. Fills `state` when non-null.
RenderOutput rasterize(const GaussianSet& flat, const Camera& cam, const RasterSettings& settings,
                       RenderState* state = nullptr);
RenderOutput rasterize(const GaussianSet& flat, const Camera& cam, const Vec3& background);

/// Brute-force oracle: one global depth order, every splat tested at every
/// pixel, no tiling and no early termination.
RenderOutput rasterize_reference(const GaussianSet& flat, const Camera& cam, const RasterSettings& settings);

struct BackwardResult {
    GaussianSet grad;
    /// |dL/d(mean2d)| in normalized device units (pixel gradient times half
    /// the image extent per axis), per Gaussian, for adaptive density control.
    std::vector<double> mean2d_grad_norm;
    std::vector<char> visible;
};

/// Analytic adjoint of rasterize. Culled Gaussians receive zero gradient.
BackwardResult rasterize_backward(const GaussianSet& flat, const RenderState& state, const RenderGrad& grad);

}  // namespace v2xsim
