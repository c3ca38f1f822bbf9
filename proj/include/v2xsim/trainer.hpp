#pragma once

#include "v2xsim/appearance.hpp"
#include "v2xsim/densify.hpp"
#include "v2xsim/json_io.hpp"
#include "v2xsim/rasterizer.hpp"
#include "v2xsim/scene_graph.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

namespace v2xsim {

/// Weights of the auxiliary terms; the color term has weight 1.
struct LossWeights {
    double depth = 0.1;
    double normal = 0.05;
    double sky = 0.05;
    double semantic = 0.1;
    double scale = 100.0;
    double ratio = 0.1;
    double reg = 0.01;
};

struct LearningRates {
    double position = 1.6e-3;
    double position_final = 1.6e-5;  // exponential decay target at the last iteration
    double rotation = 1e-3;
    double log_scale = 5e-3;
    double opacity = 5e-2;
    double sh = 2.5e-3;
    double sh_rest_factor = 0.05;  // higher-order SH use sh * factor
    double semantic = 1e-2;
    double pose_rotation = 1e-4;
    double pose_translation = 1e-3;
    double object_appearance = 2.5e-3;
    double appearance_grid = 1e-3;
};

struct TrainConfig {
    LossWeights weights;
    LearningRates lr;
    int iterations = 50000;
    bool use_ssim = true;
    double ssim_weight = 0.2;
    int appearance_grid = 8;

    DensifyConfig densify;
    int densify_from = 500;
    int densify_until = 15000;
    int densify_interval = 100;

    /// The active SH degree grows by one every this many iterations, up to
    /// the degree the scene stores. 0 activates all coefficients at once.
    int sh_degree_interval = 1000;

    std::vector<int> holdout_frames;
    int eval_interval = 500;
    Vec3 background = Vec3::Zero();
    /// Rasterizer alpha cutoff used during training.
    double min_alpha = 1.0 / 255.0;
    bool optimize_poses = true;
    std::uint64_t seed = 0;

    /// Throws InvalidInput on negative weights or non-positive iterations
    /// (zero iterations is allowed and trains nothing).
    void validate() const;
};

TrainConfig train_config_from_json(const Json& j);
Json to_json(const TrainConfig& c);

/// Supervision for one image. Optional inputs are empty images.
struct FrameSample {
    View view = View::kEgo;
    int frame = 0;
    Image color;        // 3 channels
    Image depth;        // meters, 1 channel
    Image depth_valid;  // nonzero where depth holds a LiDAR return
    Image normal;       // unit normals in the camera frame
    Image sky;          // nonzero on sky
    Image semantic;     // integer labels, 255 ignored
    Image ego_mask;     // nonzero on the ego-car body (ego view only)
};

struct LossTerms {
    double color = 0, depth = 0, normal = 0, sky = 0, semantic = 0, scale = 0, ratio = 0, reg = 0;
    double total = 0;
};

struct TotalLoss {
    LossTerms terms;
    FrameComposition composition;
    RenderOutput render;
    RenderGrad render_grad;  // adjoints handed to the rasterizer backward pass
    BackwardResult raster;
    SceneGradient scene_grad;
    AppearanceGrid appearance_grad;
};

/// Full weighted loss of one sample plus every gradient. Raises
/// NonFiniteLoss naming the first non-finite term.
TotalLoss total_loss(const FrameSample& sample, const SceneGraph& scene, const TrainConfig& config,
                     const AppearanceGrid& grid);

struct MetricsRow {
    int iteration = 0;
    View view = View::kEgo;
    int frame = 0;
    LossTerms loss;
    std::size_t gaussians = 0;
    double train_psnr = std::numeric_limits<double>::quiet_NaN();
    double holdout_psnr = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
    std::vector<MetricsRow> log;
    std::vector<AppearanceGrid> grids;  // parallel to the training samples
};

/// Optimizes the scene in place. Ego and infra samples alternate; frames in
/// config.holdout_frames are only evaluated. PSNR is measured on unmasked
/// pixels without appearance correction.
TrainResult train(SceneGraph& scene, const std::vector<FrameSample>& data, const TrainConfig& config);

/// Mean PSNR of plain renders against the given samples (ego mask excluded).
double evaluate_psnr(const SceneGraph& scene, const std::vector<const FrameSample*>& samples, const Vec3& background);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& log);

}  // namespace v2xsim
