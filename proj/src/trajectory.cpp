#include "v2xsim/trajectory.hpp"

#include "v2xsim/errors.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <set>

namespace v2xsim {

std::vector<TrackPose> interpolate_track(const std::vector<Keyframe>& keyframes, int frame_step) {
    if (keyframes.empty()) {
        throw InvalidInput("interpolate_track: no keyframes");
    }
    if (frame_step < 1) {
        throw InvalidInput("interpolate_track: frame_step must be >= 1");
    }
    for (std::size_t i = 1; i < keyframes.size(); ++i) {
        if (keyframes[i].t <= keyframes[i - 1].t) {
            throw InvalidInput("interpolate_track: keyframe frames must strictly increase");
        }
    }
    if (keyframes.size() == 1) {
        return {TrackPose{keyframes[0].t, keyframes[0].p, 0.0}};
    }

    // heading per segment, NaN when slower than 0.1 m/s
    const std::size_t segments = keyframes.size() - 1;
    std::vector<double> yaw(segments, std::nan(""));
    for (std::size_t i = 0; i < segments; ++i) {
        const Vec3 d = keyframes[i + 1].p - keyframes[i].p;
        const double dt = double(keyframes[i + 1].t - keyframes[i].t) / kFrameRate;
        if (d.head<2>().norm() / dt >= 0.1) yaw[i] = std::atan2(d.y(), d.x());
    }
    double held = 0;
    for (double y : yaw) {
        if (!std::isnan(y)) {
            held = y;
            break;
        }
    }
    for (double& y : yaw) {
        if (std::isnan(y)) {
            y = held;
        } else {
            held = y;
        }
    }

    std::vector<TrackPose> out;
    std::size_t seg = 0;
    for (int f = keyframes.front().t; f <= keyframes.back().t; f += frame_step) {
        while (seg + 1 < segments && f >= keyframes[seg + 1].t) ++seg;
        const Keyframe& a = keyframes[seg];
        const Keyframe& b = keyframes[seg + 1];
        TrackPose p;
        p.frame = f;
        if (f == a.t) {
            p.position = a.p;
        } else if (f == b.t) {
            p.position = b.p;
        } else {
            const double s = double(f - a.t) / double(b.t - a.t);
            p.position = a.p + s * (b.p - a.p);
        }
        p.yaw = yaw[seg];
        out.push_back(p);
    }
    return out;
}

TrajectoryTrack make_track(std::string id, std::vector<Keyframe> keyframes, const Vec3& size) {
    TrajectoryTrack t;
    t.id = std::move(id);
    t.dense = interpolate_track(keyframes);
    t.keyframes = std::move(keyframes);
    t.size = size;
    return t;
}

std::vector<Box3> build_tracking_boxes(const std::vector<TrackPose>& dense, const Vec3& size) {
    if (!(size.minCoeff() > 0)) {
        throw InvalidInput("box size must be positive");
    }
    std::vector<Box3> boxes;
    boxes.reserve(dense.size());
    for (const TrackPose& p : dense) {
        boxes.push_back(Box3{p.position + Vec3(0, 0, 0.5 * size.z()), size, p.yaw});
    }
    return boxes;
}

std::vector<TrackedBox> tracked_boxes(const TrajectoryTrack& track, const std::string& label) {
    const std::vector<Box3> boxes = build_tracking_boxes(track.dense, track.size);
    std::vector<TrackedBox> out;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        out.push_back(TrackedBox{track.dense[i].frame, track.id, label, boxes[i]});
    }
    return out;
}

TrajectoryTrack track_from_boxes(std::string id, const std::vector<TrackedBox>& boxes) {
    if (boxes.empty()) {
        throw InvalidInput("track '" + id + "' has no boxes");
    }
    TrajectoryTrack t;
    t.id = std::move(id);
    t.size = boxes.front().box.size;
    for (const TrackedBox& b : boxes) {
        t.dense.push_back(TrackPose{b.frame, b.box.center - Vec3(0, 0, 0.5 * b.box.size.z()), b.box.yaw});
    }
    return t;
}

PoseTrack pose_track_from(const TrajectoryTrack& track) {
    if (track.dense.empty()) {
        throw InvalidInput("track '" + track.id + "' has no poses");
    }
    std::vector<Pose> poses;
    const int expected = track.dense.front().frame;
    for (std::size_t i = 0; i < track.dense.size(); ++i) {
        if (track.dense[i].frame != expected + int(i)) {
            throw InvalidInput("track '" + track.id + "' is not dense");
        }
        const TrackPose& p = track.dense[i];
        Pose pose;
        pose.rotation = Vec4(std::cos(0.5 * p.yaw), 0, 0, std::sin(0.5 * p.yaw));
        pose.translation = p.position + Vec3(0, 0, 0.5 * track.size.z());
        poses.push_back(pose);
    }
    return PoseTrack(track.dense.front().frame, std::move(poses));
}

bool tracks_collide(const TrajectoryTrack& a, const TrajectoryTrack& b) {
    if (a.dense.empty() || b.dense.empty()) return false;
    const std::vector<Box3> ba = build_tracking_boxes(a.dense, a.size);
    const std::vector<Box3> bb = build_tracking_boxes(b.dense, b.size);
    std::size_t j = 0;
    for (std::size_t i = 0; i < ba.size(); ++i) {
        const int f = a.dense[i].frame;
        while (j < bb.size() && b.dense[j].frame < f) ++j;
        if (j == bb.size()) break;
        if (b.dense[j].frame == f && boxes_overlap(ba[i], bb[j])) return true;
    }
    return false;
}

namespace {

// Concatenated centerline of the chosen lane sequence.
Lane concatenate(const LaneGraph& graph, const std::vector<std::string>& path) {
    Lane out;
    for (const std::string& id : path) {
        for (const Vec3& p : graph.lane(id).centerline) {
            if (out.centerline.empty() || (p - out.centerline.back()).norm() > 1e-9) out.centerline.push_back(p);
        }
    }
    return out;
}

}  // namespace

std::vector<Keyframe> generate_trajectory_rule(const LaneGraph& graph, const std::vector<std::string>& lanes,
                                               const TrajectoryTrack& ego, const Vec3& size,
                                               const std::vector<TrajectoryTrack>& existing, std::uint64_t seed,
                                               const RuleTrajectoryConfig& config) {
    if (lanes.empty()) {
        throw InvalidInput("generate_trajectory_rule: no lanes");
    }
    if (!(config.speed_min > 0) || config.speed_max < config.speed_min) {
        throw InvalidInput("generate_trajectory_rule: bad speed range");
    }
    const int num_frames = config.num_frames > 0 ? config.num_frames
                                                 : (ego.dense.empty() ? 0 : ego.dense.back().frame);
    if (num_frames <= 0) {
        throw InvalidInput("generate_trajectory_rule: unknown sequence length");
    }
    const std::set<std::string> allowed(lanes.begin(), lanes.end());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> speed_dist(config.speed_min, config.speed_max);

    for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
        const double speed = speed_dist(rng);
        const double needed = speed * num_frames / kFrameRate;
        std::vector<std::string> path{lanes[std::uniform_int_distribution<std::size_t>(0, lanes.size() - 1)(rng)]};
        std::set<std::string> visited{path.front()};
        double length = graph.lane(path.front()).length();
        while (length < needed) {
            std::vector<std::string> next;
            for (const std::string& s : graph.lane(path.back()).successors) {
                if (allowed.count(s) && !visited.count(s)) next.push_back(s);
            }
            if (next.empty()) break;
            path.push_back(next[std::uniform_int_distribution<std::size_t>(0, next.size() - 1)(rng)]);
            visited.insert(path.back());
            length += graph.lane(path.back()).length();
        }
        const Lane route = concatenate(graph, path);

        std::vector<Keyframe> keyframes;
        for (int t = 0; t <= num_frames; t += kKeyframeInterval) {
            const double s = speed * t / kFrameRate;
            if (s > length + 1e-9) break;
            keyframes.push_back(Keyframe{t, route.point_at(s)});
        }
        const TrajectoryTrack candidate = make_track("candidate", keyframes, size);
        bool clear = !tracks_collide(candidate, ego);
        for (std::size_t k = 0; clear && k < existing.size(); ++k) clear = !tracks_collide(candidate, existing[k]);
        if (clear) return keyframes;
    }
    throw GenerationFailed("no collision-free trajectory after " + std::to_string(config.max_attempts) +
                           " attempts");
}

std::string format_keyframes(const std::vector<Keyframe>& keyframes) {
    std::string out;
    char buf[128];
    for (std::size_t i = 0; i < keyframes.size(); ++i) {
        const Keyframe& k = keyframes[i];
        std::snprintf(buf, sizeof buf, "%s%d, (%.3f, %.3f, %.3f)", i ? "; " : "", k.t, k.p.x(), k.p.y(), k.p.z());
        out += buf;
    }
    return out;
}

}  // namespace v2xsim
