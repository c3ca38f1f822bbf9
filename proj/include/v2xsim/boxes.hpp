#pragma once

#include "v2xsim/gaussian.hpp"

#include <array>
#include <optional>

namespace v2xsim {

/// Oriented box with yaw about +z. size = (length along heading, width, height).
struct Box3 {
    Vec3 center = Vec3::Zero();
    Vec3 size = Vec3::Ones();
    double yaw = 0;

    Eigen::Isometry3d pose() const;
    /// Corner k has local coordinates (±l/2, ±w/2, ±h/2) with bit 0 -> x sign,
    /// bit 1 -> y sign, bit 2 -> z sign (set bit = positive).
    std::array<Vec3, 8> corners() const;
    bool contains(const Vec3& p, double margin = 0) const;
    /// Ground-plane rectangle corners, counter-clockwise.
    std::array<Vec2, 4> footprint() const;
};

/// Separating-axis test on the two ground-plane rectangles.
bool footprints_overlap(const Box3& a, const Box3& b);
/// Footprint overlap and overlapping vertical extents.
bool boxes_overlap(const Box3& a, const Box3& b);

/// Entry/exit ray parameters of origin + t*dir through the box, if it is hit
/// for some t in [t_min, t_max].
std::optional<std::pair<double, double>> ray_box_interval(const Box3& box, const Vec3& origin, const Vec3& dir,
                                                          double t_min, double t_max);

}  // namespace v2xsim
