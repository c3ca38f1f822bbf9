#pragma once

#include "v2xsim/boxes.hpp"
#include "v2xsim/lane_graph.hpp"
#include "v2xsim/scene_graph.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace v2xsim {

/// Recording rate of every sequence.
inline constexpr double kFrameRate = 10.0;
/// Keyframes are emitted every this many frames.
inline constexpr int kKeyframeInterval = 10;

struct Keyframe {
    int t = 0;  // frame index
    Vec3 p = Vec3::Zero();
};

struct TrackPose {
    int frame = 0;
    Vec3 position = Vec3::Zero();  // ground contact point
    double yaw = 0;
};

struct TrajectoryTrack {
    std::string id;
    std::vector<Keyframe> keyframes;
    std::vector<TrackPose> dense;
    Vec3 size = Vec3(4.5, 1.9, 1.6);  // l, w, h
};

/// Piecewise-linear positions at every frame_step frames from the first to
/// the last keyframe. Yaw follows the ground-plane velocity; segments slower
/// than 0.1 m/s keep the previous heading (leading slow segments take the
/// first valid one, 0 if none). Throws InvalidInput on an empty list,
/// non-increasing t or frame_step < 1.
std::vector<TrackPose> interpolate_track(const std::vector<Keyframe>& keyframes, int frame_step = 1);

/// Interpolates and fills `dense`.
TrajectoryTrack make_track(std::string id, std::vector<Keyframe> keyframes, const Vec3& size);

/// One box per pose, lifted by h/2 above the ground point.
std::vector<Box3> build_tracking_boxes(const std::vector<TrackPose>& dense, const Vec3& size);
std::vector<TrackedBox> tracked_boxes(const TrajectoryTrack& track, const std::string& label = "Car");

/// Dense track of an annotated box sequence (ground point below each center,
/// box yaw, size of the first box). No keyframes. Throws InvalidInput on an
/// empty list.
TrajectoryTrack track_from_boxes(std::string id, const std::vector<TrackedBox>& boxes);

/// Object poses with the box center as origin and yaw about +z.
PoseTrack pose_track_from(const TrajectoryTrack& track);

/// True when the two tracks' boxes overlap at any shared frame.
bool tracks_collide(const TrajectoryTrack& a, const TrajectoryTrack& b);

struct RuleTrajectoryConfig {
    /// Last frame index; 0 takes the ego track's last frame.
    int num_frames = 0;
    double speed_min = 3.0;  // m/s
    double speed_max = 10.0;
    int max_attempts = 20;
};

/// Seeded rule-based traffic: a random entry lane among `lanes`, followed
/// through successors inside `lanes` at a constant random speed, keyframes
/// every 10 frames. Attempts whose boxes hit the ego or an existing track
/// are resampled; throws GenerationFailed after max_attempts.
std::vector<Keyframe> generate_trajectory_rule(const LaneGraph& graph, const std::vector<std::string>& lanes,
                                               const TrajectoryTrack& ego, const Vec3& size,
                                               const std::vector<TrajectoryTrack>& existing, std::uint64_t seed,
                                               const RuleTrajectoryConfig& config = {});

/// "t, (x, y, z); t, (x, y, z); ..." with 3 decimals.
std::string format_keyframes(const std::vector<Keyframe>& keyframes);

}  // namespace v2xsim
