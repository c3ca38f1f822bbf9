#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <span>
#include <vector>

namespace v2xsim {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

inline constexpr int kMaxShDegree = 3;

/// Number of SH coefficients per color channel for a degree: (degree+1)^2.
constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// One Gaussian in activated form. The rotation is a (w,x,y,z) quaternion,
/// scale is linear, opacity is in (0,1). `sh` holds coefficient-major
/// blocks: sh[k*3 + c] is coefficient k of channel c.
struct Gaussian {
    Vec3 position = Vec3::Zero();
    Vec4 rotation = Vec4(1, 0, 0, 0);
    Vec3 scale = Vec3::Ones();
    double opacity = 0.5;
    std::vector<double> sh;
    std::vector<double> semantic;
};

/// Structure-of-arrays Gaussian storage in optimizer space:
///   rotation       raw quaternion (w,x,y,z), normalized at use
///   log_scale      natural log of the scale
///   opacity_logit  pre-sigmoid opacity
/// The same layout doubles as the gradient container (see zeros_like).
class GaussianSet {
public:
    explicit GaussianSet(int sh_degree = 1, int num_classes = 0);

    static GaussianSet zeros_like(const GaussianSet& other);

    std::size_t size() const { return opacity_logit_.size(); }
    bool empty() const { return size() == 0; }
    int sh_degree() const { return sh_degree_; }
    int sh_coeffs() const { return sh_coeff_count(sh_degree_); }
    int num_classes() const { return num_classes_; }

    void push_back(const Gaussian& g);
    Gaussian get(std::size_t i) const;
    void set(std::size_t i, const Gaussian& g);
    void append(const GaussianSet& other);
    void resize(std::size_t n);
    void clear() { resize(0); }
    /// Keeps entries whose mask is nonzero, preserving order.
    void keep(std::span<const char> mask);

    Eigen::Map<Vec3> position(std::size_t i) { return Eigen::Map<Vec3>(&position_[3 * i]); }
    Eigen::Map<const Vec3> position(std::size_t i) const { return Eigen::Map<const Vec3>(&position_[3 * i]); }
    Eigen::Map<Vec4> rotation(std::size_t i) { return Eigen::Map<Vec4>(&rotation_[4 * i]); }
    Eigen::Map<const Vec4> rotation(std::size_t i) const { return Eigen::Map<const Vec4>(&rotation_[4 * i]); }
    Eigen::Map<Vec3> log_scale(std::size_t i) { return Eigen::Map<Vec3>(&log_scale_[3 * i]); }
    Eigen::Map<const Vec3> log_scale(std::size_t i) const { return Eigen::Map<const Vec3>(&log_scale_[3 * i]); }
    double& opacity_logit(std::size_t i) { return opacity_logit_[i]; }
    double opacity_logit(std::size_t i) const { return opacity_logit_[i]; }
    std::span<double> sh(std::size_t i) { return {sh_.data() + i * sh_stride(), sh_stride()}; }
    std::span<const double> sh(std::size_t i) const { return {sh_.data() + i * sh_stride(), sh_stride()}; }
    std::span<double> semantic(std::size_t i) { return {semantic_.data() + i * num_classes_, std::size_t(num_classes_)}; }
    std::span<const double> semantic(std::size_t i) const {
        return {semantic_.data() + i * num_classes_, std::size_t(num_classes_)};
    }

    Vec3 scale(std::size_t i) const { return log_scale(i).array().exp(); }
    double opacity(std::size_t i) const;

    std::size_t sh_stride() const { return std::size_t(3 * sh_coeffs()); }

    /// Parameter groups in a fixed order, for optimizers that treat every
    /// scalar uniformly.
    enum Group { kPosition, kRotation, kLogScale, kOpacity, kSh, kSemantic, kNumGroups };
    std::span<double> group(Group g);
    std::span<const double> group(Group g) const;

    /// Elementwise this += other (same shape required).
    void add(const GaussianSet& other);
    bool all_finite() const;

private:
    int sh_degree_;
    int num_classes_;
    std::vector<double> position_;
    std::vector<double> rotation_;
    std::vector<double> log_scale_;
    std::vector<double> opacity_logit_;
    std::vector<double> sh_;
    std::vector<double> semantic_;
};

double sigmoid(double x);
double logit(double p);

/// Rotation matrix of a unit (w,x,y,z) quaternion.
Mat3 quat_to_matrix(const Vec4& q);
/// Adjoint of quat_to_matrix treated as the polynomial map q -> R(q).
Vec4 quat_to_matrix_backward(const Vec4& q, const Mat3& dR);
/// Gradient through q / |q|: maps d(q_hat) to d(q).
Vec4 normalize_backward(const Vec4& q, const Vec4& d_qhat);
/// Hamilton product a*b in (w,x,y,z) order.
Vec4 quat_multiply(const Vec4& a, const Vec4& b);
/// Left-multiplication matrix L(a) with a*b = L(a) b.
Eigen::Matrix4d quat_left_matrix(const Vec4& a);
/// Right-multiplication matrix Rm(b) with a*b = Rm(b) a.
Eigen::Matrix4d quat_right_matrix(const Vec4& b);
Vec4 matrix_to_quat(const Mat3& R);

/// Covariance R S S^T R^T. Throws InvalidInput on non-finite input or
/// non-positive scale.
Mat3 build_covariance(const Vec4& rotation, const Vec3& scale);

/// Sorts scales descending (ties keep original index order) and permutes
/// the rotation columns to match, negating one column when the permutation
/// is odd so the rotation stays proper. The covariance is unchanged.
Gaussian canonicalize_scales(const Gaussian& g);

/// |min(s1,s2,s3)|.
double loss_scale(const Vec3& scale);
/// max(1, s1/s2) - 1 with s1 >= s2 the two largest scales. Throws
/// InvalidInput when s2 == 0.
double loss_ratio(const Vec3& canonical_scale);

/// Subgradients w.r.t. the (linear) scale vector. At ties between the
/// components that decide the value the subgradient 0 is returned.
Vec3 loss_scale_grad(const Vec3& scale);
Vec3 loss_ratio_grad(const Vec3& scale);

struct GeometricLoss {
    double value = 0;
    GaussianSet grad;  // only log_scale entries are populated
};

/// Mean-reduced scale and ratio losses over a set; the ratio loss is taken
/// on the sorted scales, so callers need not canonicalize first.
GeometricLoss loss_scale_set(const GaussianSet& set);
GeometricLoss loss_ratio_set(const GaussianSet& set);

}  // namespace v2xsim
