#include "v2xsim/boxes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace v2xsim {

Eigen::Isometry3d Box3::pose() const {
    Eigen::Isometry3d T = Eigen::Isometry3d::Identity();
    T.linear() = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
    T.translation() = center;
    return T;
}

std::array<Vec3, 8> Box3::corners() const {
    const Eigen::Isometry3d T = pose();
    std::array<Vec3, 8> out;
    for (int k = 0; k < 8; ++k) {
        const Vec3 local((k & 1 ? 0.5 : -0.5) * size.x(), (k & 2 ? 0.5 : -0.5) * size.y(),
                         (k & 4 ? 0.5 : -0.5) * size.z());
        out[k] = T * local;
    }
    return out;
}

bool Box3::contains(const Vec3& p, double margin) const {
    const Vec3 local = pose().inverse() * p;
    const Vec3 half = 0.5 * size;
    return std::abs(local.x()) <= half.x() + margin && std::abs(local.y()) <= half.y() + margin &&
           std::abs(local.z()) <= half.z() + margin;
}

std::array<Vec2, 4> Box3::footprint() const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    const Vec2 ax(c, s), ay(-s, c);
    const Vec2 ctr = center.head<2>();
    const double hl = 0.5 * size.x(), hw = 0.5 * size.y();
    return {ctr - hl * ax - hw * ay, ctr + hl * ax - hw * ay, ctr + hl * ax + hw * ay, ctr - hl * ax + hw * ay};
}

bool footprints_overlap(const Box3& a, const Box3& b) {
    const auto pa = a.footprint();
    const auto pb = b.footprint();
    auto separated = [&](const std::array<Vec2, 4>& poly) {
        for (int i = 0; i < 4; ++i) {
            const Vec2 edge = poly[(i + 1) % 4] - poly[i];
            const Vec2 axis(-edge.y(), edge.x());
            double amin = std::numeric_limits<double>::infinity(), amax = -amin;
            double bmin = amin, bmax = -amin;
            for (const auto& p : pa) {
                const double d = axis.dot(p);
                amin = std::min(amin, d);
                amax = std::max(amax, d);
            }
            for (const auto& p : pb) {
                const double d = axis.dot(p);
                bmin = std::min(bmin, d);
                bmax = std::max(bmax, d);
            }
            if (amax < bmin || bmax < amin) {
                return true;
            }
        }
        return false;
    };
    return !separated(pa) && !separated(pb);
}

bool boxes_overlap(const Box3& a, const Box3& b) {
    const double az0 = a.center.z() - 0.5 * a.size.z(), az1 = a.center.z() + 0.5 * a.size.z();
    const double bz0 = b.center.z() - 0.5 * b.size.z(), bz1 = b.center.z() + 0.5 * b.size.z();
    if (az1 < bz0 || bz1 < az0) {
        return false;
    }
    return footprints_overlap(a, b);
}

std::optional<std::pair<double, double>> ray_box_interval(const Box3& box, const Vec3& origin, const Vec3& dir,
                                                          double t_min, double t_max) {
    const Eigen::Isometry3d inv = box.pose().inverse();
    const Vec3 o = inv * origin;
    const Vec3 d = inv.linear() * dir;
    const Vec3 half = 0.5 * box.size;
    double lo = t_min, hi = t_max;
    for (int k = 0; k < 3; ++k) {
        if (std::abs(d[k]) < 1e-300) {
            if (std::abs(o[k]) > half[k]) {
                return std::nullopt;
            }
            continue;
        }
        double t0 = (-half[k] - o[k]) / d[k];
        double t1 = (half[k] - o[k]) / d[k];
        if (t0 > t1) std::swap(t0, t1);
        lo = std::max(lo, t0);
        hi = std::min(hi, t1);
        if (lo > hi) {
            return std::nullopt;
        }
    }
    return std::make_pair(lo, hi);
}

}  // namespace v2xsim
