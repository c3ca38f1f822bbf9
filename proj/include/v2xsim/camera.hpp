#pragma once

#include "v2xsim/gaussian.hpp"

#include <Eigen/Geometry>

namespace v2xsim {

/// Pinhole camera. Pixel (i,j) is centered at coordinates (i,j); the camera
/// frame is x right, y down, z forward.
struct Camera {
    double fx = 1, fy = 1, cx = 0, cy = 0;
    int width = 0, height = 0;
    Eigen::Isometry3d world_to_camera = Eigen::Isometry3d::Identity();
    double near = 0.01;
    double far = 1000.0;

    void validate() const;
    Vec3 center() const { return world_to_camera.inverse().translation(); }
    Vec3 to_camera(const Vec3& world) const { return world_to_camera * world; }
    /// Pixel coordinates of a camera-frame point (z must be positive).
    Vec2 project_camera(const Vec3& p_cam) const {
        return Vec2(fx * p_cam.x() / p_cam.z() + cx, fy * p_cam.y() / p_cam.z() + cy);
    }
};

/// World-to-camera transform for a camera at `eye` looking at `target`,
/// with `up` giving the image-up direction (z-up worlds: (0,0,1)).
Eigen::Isometry3d look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3(0, 0, 1));

}  // namespace v2xsim
