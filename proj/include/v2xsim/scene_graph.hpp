#pragma once

#include "v2xsim/boxes.hpp"
#include "v2xsim/camera.hpp"
#include "v2xsim/gaussian.hpp"
#include "v2xsim/image.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace v2xsim {

struct Pose {
    Vec4 rotation = Vec4(1, 0, 0, 0);  // unit (w,x,y,z)
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& p) const { return quat_to_matrix(rotation) * p + translation; }
};

/// Learnable right-composed correction: world = tracked * correction.
struct PoseCorrection {
    Vec3 rotation = Vec3::Zero();  // axis-angle
    Vec3 translation = Vec3::Zero();
};

/// Unit quaternion exp of an axis-angle vector.
Vec4 axis_angle_to_quat(const Vec3& omega);
/// d q / d omega (4x3).
Eigen::Matrix<double, 4, 3> axis_angle_to_quat_jacobian(const Vec3& omega);

Pose compose(const Pose& a, const Pose& b);

/// Poses over a contiguous frame range [first_frame, first_frame + size).
class PoseTrack {
public:
    PoseTrack() = default;
    PoseTrack(int first_frame, std::vector<Pose> poses);

    int first_frame() const { return first_; }
    int last_frame() const { return first_ + int(poses_.size()) - 1; }
    std::size_t size() const { return poses_.size(); }
    bool has(int frame) const { return frame >= first_ && frame < first_ + int(poses_.size()); }

    const Pose& tracked(int frame) const;
    PoseCorrection& correction(int frame);
    const PoseCorrection& correction(int frame) const;
    /// tracked(frame) composed with its correction.
    Pose world(int frame) const;

    std::span<const Pose> poses() const { return poses_; }
    std::span<PoseCorrection> corrections() { return corrections_; }
    std::span<const PoseCorrection> corrections() const { return corrections_; }

private:
    int first_ = 0;
    std::vector<Pose> poses_;
    std::vector<PoseCorrection> corrections_;
};

inline constexpr int kFourierTerms = 5;

/// [1, cos(2 pi t/N), sin(2 pi t/N), cos(4 pi t/N), sin(4 pi t/N)]
std::array<double, kFourierTerms> fourier_basis(int frame, int num_frames);

struct DynamicObject {
    std::string id;
    std::string label = "Car";
    GaussianSet gaussians;  // canonical frame, centered at the box center
    Vec3 size = Vec3::Ones();
    PoseTrack track;
    /// DC offsets per channel: appearance[c * kFourierTerms + j].
    std::array<double, 3 * kFourierTerms> appearance{};

    Box3 box(int frame) const;
    /// Clamps canonical positions into 1.2x the box half extents.
    void clamp_to_box();
};

/// Per-frame cameras for the ego and infrastructure views.
struct CameraRig {
    std::vector<Camera> ego;
    std::vector<Camera> infra;
};

enum class View { kEgo, kInfra };
const char* view_name(View v);

struct SceneGraph {
    GaussianSet background;
    std::vector<DynamicObject> objects;
    int num_frames = 0;
    CameraRig rig;
    std::vector<Image> ego_masks;  // 1 channel, 1 marks ego-car body; empty when unused

    const Camera& camera(View v, int frame) const;
    const DynamicObject* find(const std::string& id) const;
    DynamicObject* find(const std::string& id);
    /// Throws InvalidInput when frame counts of rig, masks and tracks disagree.
    void validate() const;
};

/// Where each object's Gaussians landed in a composed frame.
struct FrameComposition {
    GaussianSet flat;
    std::size_t background_count = 0;
    struct Segment {
        std::size_t object = 0;  // index into SceneGraph::objects
        std::size_t offset = 0;
        std::size_t count = 0;
    };
    std::vector<Segment> segments;
};

FrameComposition compose_frame_detailed(const SceneGraph& scene, int frame);
GaussianSet compose_frame(const SceneGraph& scene, int frame);
/// Process-wide number of compositions so far (instrumentation).
std::uint64_t compose_frame_count();

/// Gradients of the composed-frame parameters mapped back onto the scene.
struct SceneGradient {
    GaussianSet background;
    struct Object {
        GaussianSet gaussians;
        int frame = 0;
        PoseCorrection correction;
        std::array<double, 3 * kFourierTerms> appearance{};
    };
    std::vector<Object> objects;  // parallel to FrameComposition::segments
};

SceneGradient compose_frame_backward(const SceneGraph& scene, int frame, const FrameComposition& composition,
                                     const GaussianSet& flat_grad);

/// One annotation box of one track at one frame.
struct TrackedBox {
    int frame = 0;
    std::string id;
    std::string label = "Car";
    Box3 box;
};

std::vector<TrackedBox> strip_ego_box(std::vector<TrackedBox> tracks, const std::string& ego_id);

/// Masked reduction of a per-pixel loss.
struct MaskedLoss {
    Image loss;               // zero at masked pixels
    double mean = 0;          // sum over unmasked / unmasked pixel count
    std::size_t unmasked = 0;
};

/// `mask` is 1 channel; nonzero marks excluded pixels. The loss image may
/// have several channels; the mean divides by unmasked pixels * channels.
MaskedLoss apply_loss_mask(const Image& per_pixel_loss, const Image& mask);
/// Adjoint of MaskedLoss::mean w.r.t. the per-pixel loss image.
Image masked_mean_gradient(const Image& mask, int width, int height, int channels);

void insert_object(SceneGraph& scene, DynamicObject obj);
void remove_object(SceneGraph& scene, const std::string& id);

}  // namespace v2xsim
