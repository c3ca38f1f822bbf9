#include "v2xsim/camera.hpp"

#include "v2xsim/errors.hpp"

#include <cmath>

namespace v2xsim {

void Camera::validate() const {
    if (!(fx > 0 && fy > 0)) {
        throw InvalidInput("camera focal lengths must be positive");
    }
    if (!(near > 0 && near < far)) {
        throw InvalidInput("camera clip range must satisfy 0 < near < far");
    }
    if (width <= 0 || height <= 0) {
        throw InvalidInput("camera image has zero area");
    }
    if (!world_to_camera.matrix().allFinite()) {
        throw InvalidInput("camera extrinsics not finite");
    }
}

Eigen::Isometry3d look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
    const Vec3 forward = (target - eye).normalized();
    Vec3 right = forward.cross(up);
    if (right.norm() < 1e-9) {
        throw InvalidInput("look_at: up vector parallel to viewing direction");
    }
    right.normalize();
    const Vec3 down = forward.cross(right);
    Mat3 R;  // rows are camera axes in world coordinates
    R.row(0) = right.transpose();
    R.row(1) = down.transpose();
    R.row(2) = forward.transpose();
    Eigen::Isometry3d T = Eigen::Isometry3d::Identity();
    T.linear() = R;
    T.translation() = -R * eye;
    return T;
}

}  // namespace v2xsim
