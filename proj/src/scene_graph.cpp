#include "v2xsim/scene_graph.hpp"

#include "v2xsim/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>

namespace v2xsim {

Vec4 axis_angle_to_quat(const Vec3& omega) {
    const double theta = omega.norm();
    double w, a;
    if (theta < 1e-3) {
        const double t2 = theta * theta;
        w = 1.0 - t2 / 8.0 + t2 * t2 / 384.0;
        a = 0.5 - t2 / 48.0 + t2 * t2 / 3840.0;
    } else {
        w = std::cos(0.5 * theta);
        a = std::sin(0.5 * theta) / theta;
    }
    return Vec4(w, a * omega.x(), a * omega.y(), a * omega.z());
}

Eigen::Matrix<double, 4, 3> axis_angle_to_quat_jacobian(const Vec3& omega) {
    const double theta = omega.norm();
    double a, da_over_theta;
    if (theta < 1e-3) {
        const double t2 = theta * theta;
        a = 0.5 - t2 / 48.0 + t2 * t2 / 3840.0;
        da_over_theta = -1.0 / 24.0 + t2 / 960.0;
    } else {
        const double s = std::sin(0.5 * theta), c = std::cos(0.5 * theta);
        a = s / theta;
        da_over_theta = (0.5 * c * theta - s) / (theta * theta * theta);
    }
    Eigen::Matrix<double, 4, 3> J;
    J.row(0) = -0.5 * a * omega.transpose();
    J.bottomRows<3>() = a * Mat3::Identity() + da_over_theta * omega * omega.transpose();
    return J;
}

Pose compose(const Pose& a, const Pose& b) {
    Pose out;
    out.rotation = quat_multiply(a.rotation, b.rotation).normalized();
    out.translation = quat_to_matrix(a.rotation) * b.translation + a.translation;
    return out;
}

PoseTrack::PoseTrack(int first_frame, std::vector<Pose> poses)
    : first_(first_frame), poses_(std::move(poses)), corrections_(poses_.size()) {
    if (first_frame < 0) {
        throw InvalidInput("pose track starts at negative frame");
    }
    for (auto& p : poses_) {
        const double n = p.rotation.norm();
        if (!std::isfinite(n) || n == 0 || !p.translation.allFinite()) {
            throw InvalidInput("pose track has a non-finite pose");
        }
        p.rotation /= n;
    }
}

const Pose& PoseTrack::tracked(int frame) const {
    if (!has(frame)) {
        throw OutOfRange("no pose at frame " + std::to_string(frame));
    }
    return poses_[frame - first_];
}

PoseCorrection& PoseTrack::correction(int frame) {
    if (!has(frame)) {
        throw OutOfRange("no pose at frame " + std::to_string(frame));
    }
    return corrections_[frame - first_];
}

const PoseCorrection& PoseTrack::correction(int frame) const {
    return const_cast<PoseTrack*>(this)->correction(frame);
}

Pose PoseTrack::world(int frame) const {
    const PoseCorrection& c = correction(frame);
    return compose(tracked(frame), Pose{axis_angle_to_quat(c.rotation), c.translation});
}

std::array<double, kFourierTerms> fourier_basis(int frame, int num_frames) {
    const double w = 2.0 * std::numbers::pi * double(frame) / double(std::max(num_frames, 1));
    return {1.0, std::cos(w), std::sin(w), std::cos(2 * w), std::sin(2 * w)};
}

Box3 DynamicObject::box(int frame) const {
    const Pose p = track.world(frame);
    const Mat3 R = quat_to_matrix(p.rotation);
    return Box3{p.translation, size, std::atan2(R(1, 0), R(0, 0))};
}

void DynamicObject::clamp_to_box() {
    const Vec3 limit = 0.6 * size;
    for (std::size_t i = 0; i < gaussians.size(); ++i) {
        auto p = gaussians.position(i);
        p = p.cwiseMax(-limit).cwiseMin(limit);
    }
}

const char* view_name(View v) { return v == View::kEgo ? "ego" : "infra"; }

const Camera& SceneGraph::camera(View v, int frame) const {
    const auto& cams = v == View::kEgo ? rig.ego : rig.infra;
    if (frame < 0 || frame >= int(cams.size())) {
        throw OutOfRange(std::string("no ") + view_name(v) + " camera for frame " + std::to_string(frame));
    }
    return cams[frame];
}

const DynamicObject* SceneGraph::find(const std::string& id) const {
    for (const auto& o : objects) {
        if (o.id == id) return &o;
    }
    return nullptr;
}

DynamicObject* SceneGraph::find(const std::string& id) {
    return const_cast<DynamicObject*>(std::as_const(*this).find(id));
}

void SceneGraph::validate() const {
    if (num_frames <= 0) {
        throw InvalidInput("scene has no frames");
    }
    if ((!rig.ego.empty() && int(rig.ego.size()) != num_frames) ||
        (!rig.infra.empty() && int(rig.infra.size()) != num_frames)) {
        throw InvalidInput("camera rig frame count differs from scene frame count");
    }
    if (!ego_masks.empty()) {
        if (int(ego_masks.size()) != num_frames) {
            throw InvalidInput("ego mask count differs from scene frame count");
        }
        for (int f = 0; f < num_frames && !rig.ego.empty(); ++f) {
            if (ego_masks[f].width() != rig.ego[f].width || ego_masks[f].height() != rig.ego[f].height) {
                throw InvalidInput("ego mask " + std::to_string(f) + " does not match the ego image size");
            }
        }
    }
    for (const auto& o : objects) {
        if (o.track.size() > 0 && o.track.last_frame() >= num_frames) {
            throw InvalidInput("track of object '" + o.id + "' extends past the last frame");
        }
        if ((o.size.array() <= 0).any()) {
            throw InvalidInput("object '" + o.id + "' has a non-positive box size");
        }
    }
}

namespace {
std::atomic<std::uint64_t> g_compose_count{0};
}  // namespace

std::uint64_t compose_frame_count() { return g_compose_count.load(); }

FrameComposition compose_frame_detailed(const SceneGraph& scene, int frame) {
    ++g_compose_count;
    if (frame < 0 || frame >= scene.num_frames) {
        throw OutOfRange("frame " + std::to_string(frame) + " outside [0, " + std::to_string(scene.num_frames) + ")");
    }
    FrameComposition out;
    out.flat = scene.background;
    out.background_count = scene.background.size();
    const auto basis = fourier_basis(frame, scene.num_frames);
    for (std::size_t oi = 0; oi < scene.objects.size(); ++oi) {
        const DynamicObject& obj = scene.objects[oi];
        if (!obj.track.has(frame)) {
            continue;
        }
        const Pose world = obj.track.world(frame);
        const Mat3 R = quat_to_matrix(world.rotation);
        GaussianSet moved = obj.gaussians;
        double dc[3] = {0, 0, 0};
        for (int c = 0; c < 3; ++c) {
            for (int j = 0; j < kFourierTerms; ++j) {
                dc[c] += obj.appearance[c * kFourierTerms + j] * basis[j];
            }
        }
        for (std::size_t i = 0; i < moved.size(); ++i) {
            moved.position(i) = R * moved.position(i) + world.translation;
            moved.rotation(i) = quat_multiply(world.rotation, moved.rotation(i));
            auto sh = moved.sh(i);
            for (int c = 0; c < 3; ++c) sh[c] += dc[c];
        }
        out.segments.push_back({oi, out.flat.size(), moved.size()});
        out.flat.append(moved);
    }
    return out;
}

GaussianSet compose_frame(const SceneGraph& scene, int frame) { return compose_frame_detailed(scene, frame).flat; }

SceneGradient compose_frame_backward(const SceneGraph& scene, int frame, const FrameComposition& composition,
                                     const GaussianSet& flat_grad) {
    if (flat_grad.size() != composition.flat.size()) {
        throw InvalidInput("flat gradient size differs from the composed frame");
    }
    SceneGradient out;
    out.background = GaussianSet::zeros_like(scene.background);
    for (int g = 0; g < GaussianSet::kNumGroups; ++g) {
        const auto src = flat_grad.group(GaussianSet::Group(g));
        auto dst = out.background.group(GaussianSet::Group(g));
        const std::size_t per = composition.background_count == 0 ? 0 : dst.size() / composition.background_count;
        std::copy(src.begin(), src.begin() + per * composition.background_count, dst.begin());
    }
    const auto basis = fourier_basis(frame, scene.num_frames);
    for (const auto& seg : composition.segments) {
        const DynamicObject& obj = scene.objects[seg.object];
        const Pose& tracked = obj.track.tracked(frame);
        const PoseCorrection& corr = obj.track.correction(frame);
        const Vec4 q_c = axis_angle_to_quat(corr.rotation);
        const Mat3 R_t = quat_to_matrix(tracked.rotation);
        const Mat3 R_c = quat_to_matrix(q_c);
        const Mat3 R_w = R_t * R_c;
        const Eigen::Matrix4d L_tc = quat_left_matrix(quat_multiply(tracked.rotation, q_c));
        const Eigen::Matrix4d L_t = quat_left_matrix(tracked.rotation);

        SceneGradient::Object og;
        og.frame = frame;
        og.gaussians = GaussianSet::zeros_like(obj.gaussians);
        Vec3 d_tc = Vec3::Zero();
        Mat3 d_Rc = Mat3::Zero();
        Vec4 d_qc = Vec4::Zero();
        for (std::size_t i = 0; i < seg.count; ++i) {
            const std::size_t fi = seg.offset + i;
            const Vec3 dp_w = flat_grad.position(fi);
            const Vec3 dp_local = R_t.transpose() * dp_w;
            og.gaussians.position(i) = R_w.transpose() * dp_w;
            d_tc += dp_local;
            d_Rc += dp_local * obj.gaussians.position(i).transpose();

            const Vec4 dq_w = flat_grad.rotation(fi);
            og.gaussians.rotation(i) = L_tc.transpose() * dq_w;
            d_qc += quat_right_matrix(obj.gaussians.rotation(i)).transpose() * (L_t.transpose() * dq_w);

            og.gaussians.log_scale(i) = flat_grad.log_scale(fi);
            og.gaussians.opacity_logit(i) = flat_grad.opacity_logit(fi);
            const auto dsh = flat_grad.sh(fi);
            std::copy(dsh.begin(), dsh.end(), og.gaussians.sh(i).begin());
            const auto dsem = flat_grad.semantic(fi);
            std::copy(dsem.begin(), dsem.end(), og.gaussians.semantic(i).begin());
            for (int c = 0; c < 3; ++c) {
                for (int j = 0; j < kFourierTerms; ++j) {
                    og.appearance[c * kFourierTerms + j] += dsh[c] * basis[j];
                }
            }
        }
        d_qc += quat_to_matrix_backward(q_c, d_Rc);
        og.correction.rotation = axis_angle_to_quat_jacobian(corr.rotation).transpose() * d_qc;
        og.correction.translation = d_tc;
        out.objects.push_back(std::move(og));
    }
    return out;
}

std::vector<TrackedBox> strip_ego_box(std::vector<TrackedBox> tracks, const std::string& ego_id) {
    std::erase_if(tracks, [&](const TrackedBox& b) { return b.id == ego_id; });
    return tracks;
}

MaskedLoss apply_loss_mask(const Image& per_pixel_loss, const Image& mask) {
    if (!per_pixel_loss.same_size(mask) || mask.channels() != 1) {
        throw InvalidInput("loss mask must be single-channel with the loss image size");
    }
    MaskedLoss out;
    out.loss = per_pixel_loss;
    double sum = 0;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            auto px = out.loss.pixel(x, y);
            if (mask.at(x, y) != 0) {
                std::fill(px.begin(), px.end(), 0.0);
                continue;
            }
            ++out.unmasked;
            for (double v : px) sum += v;
        }
    }
    if (out.unmasked > 0) {
        out.mean = sum / (double(out.unmasked) * per_pixel_loss.channels());
    }
    return out;
}

Image masked_mean_gradient(const Image& mask, int width, int height, int channels) {
    Image g(width, height, channels);
    std::size_t unmasked = 0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            if (mask.empty() || mask.at(x, y) == 0) ++unmasked;
        }
    }
    if (unmasked == 0) {
        return g;
    }
    const double w = 1.0 / (double(unmasked) * channels);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            if (mask.empty() || mask.at(x, y) == 0) {
                for (int c = 0; c < channels; ++c) g.at(x, y, c) = w;
            }
        }
    }
    return g;
}

void insert_object(SceneGraph& scene, DynamicObject obj) {
    if (scene.find(obj.id)) {
        throw Conflict("object '" + obj.id + "' already exists");
    }
    if ((obj.size.array() <= 0).any()) {
        throw InvalidInput("object '" + obj.id + "' has a non-positive box size");
    }
    if (obj.track.size() > 0 && obj.track.last_frame() >= scene.num_frames) {
        throw InvalidInput("track of object '" + obj.id + "' extends past the last frame");
    }
    if (obj.gaussians.sh_degree() != scene.background.sh_degree() ||
        obj.gaussians.num_classes() != scene.background.num_classes()) {
        throw InvalidInput("object '" + obj.id + "' Gaussian layout differs from the background");
    }
    scene.objects.push_back(std::move(obj));
}

void remove_object(SceneGraph& scene, const std::string& id) {
    const auto it = std::find_if(scene.objects.begin(), scene.objects.end(),
                                 [&](const DynamicObject& o) { return o.id == id; });
    if (it == scene.objects.end()) {
        throw Conflict("no object '" + id + "' to remove");
    }
    scene.objects.erase(it);
}

}  // namespace v2xsim
