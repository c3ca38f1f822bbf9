#include "v2xsim/gaussian.hpp"

#include "v2xsim/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace v2xsim {

GaussianSet::GaussianSet(int sh_degree, int num_classes) : sh_degree_(sh_degree), num_classes_(num_classes) {
    if (sh_degree < 0 || sh_degree > kMaxShDegree) {
        throw InvalidInput("SH degree must be in 0..3, got " + std::to_string(sh_degree));
    }
    if (num_classes < 0) {
        throw InvalidInput("negative semantic class count");
    }
}

GaussianSet GaussianSet::zeros_like(const GaussianSet& other) {
    GaussianSet out(other.sh_degree_, other.num_classes_);
    out.resize(other.size());
    std::fill(out.rotation_.begin(), out.rotation_.end(), 0.0);
    return out;
}

void GaussianSet::resize(std::size_t n) {
    const std::size_t old = size();
    position_.resize(3 * n, 0.0);
    rotation_.resize(4 * n, 0.0);
    for (std::size_t i = old; i < n; ++i) {
        rotation_[4 * i] = 1.0;
    }
    log_scale_.resize(3 * n, 0.0);
    opacity_logit_.resize(n, 0.0);
    sh_.resize(n * sh_stride(), 0.0);
    semantic_.resize(n * num_classes_, 0.0);
}

void GaussianSet::push_back(const Gaussian& g) {
    resize(size() + 1);
    set(size() - 1, g);
}

Gaussian GaussianSet::get(std::size_t i) const {
    Gaussian g;
    g.position = position(i);
    g.rotation = rotation(i);
    g.scale = scale(i);
    g.opacity = opacity(i);
    g.sh.assign(sh(i).begin(), sh(i).end());
    g.semantic.assign(semantic(i).begin(), semantic(i).end());
    return g;
}

void GaussianSet::set(std::size_t i, const Gaussian& g) {
    if (!(g.scale.array() > 0).all()) {
        throw InvalidInput("Gaussian scale entries must be positive");
    }
    if (!(g.opacity > 0.0 && g.opacity < 1.0)) {
        throw InvalidInput("Gaussian opacity must lie in (0,1)");
    }
    position(i) = g.position;
    rotation(i) = g.rotation;
    log_scale(i) = g.scale.array().log();
    opacity_logit(i) = logit(g.opacity);
    auto dst_sh = sh(i);
    std::fill(dst_sh.begin(), dst_sh.end(), 0.0);
    std::copy_n(g.sh.begin(), std::min(g.sh.size(), dst_sh.size()), dst_sh.begin());
    auto dst_sem = semantic(i);
    std::fill(dst_sem.begin(), dst_sem.end(), 0.0);
    std::copy_n(g.semantic.begin(), std::min(g.semantic.size(), dst_sem.size()), dst_sem.begin());
}

void GaussianSet::append(const GaussianSet& other) {
    if (other.sh_degree_ != sh_degree_ || other.num_classes_ != num_classes_) {
        throw InvalidInput("cannot append GaussianSet with different SH degree or class count");
    }
    position_.insert(position_.end(), other.position_.begin(), other.position_.end());
    rotation_.insert(rotation_.end(), other.rotation_.begin(), other.rotation_.end());
    log_scale_.insert(log_scale_.end(), other.log_scale_.begin(), other.log_scale_.end());
    opacity_logit_.insert(opacity_logit_.end(), other.opacity_logit_.begin(), other.opacity_logit_.end());
    sh_.insert(sh_.end(), other.sh_.begin(), other.sh_.end());
    semantic_.insert(semantic_.end(), other.semantic_.begin(), other.semantic_.end());
}

namespace {

void keep_strided(std::vector<double>& v, std::size_t stride, std::span<const char> mask) {
    std::size_t w = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) {
            if (w != i) {
                std::copy_n(v.begin() + i * stride, stride, v.begin() + w * stride);
            }
            ++w;
        }
    }
    v.resize(w * stride);
}

}  // namespace

void GaussianSet::keep(std::span<const char> mask) {
    if (mask.size() != size()) {
        throw InvalidInput("keep mask length does not match GaussianSet size");
    }
    keep_strided(position_, 3, mask);
    keep_strided(rotation_, 4, mask);
    keep_strided(log_scale_, 3, mask);
    keep_strided(opacity_logit_, 1, mask);
    keep_strided(sh_, sh_stride(), mask);
    keep_strided(semantic_, num_classes_, mask);
}

double GaussianSet::opacity(std::size_t i) const { return sigmoid(opacity_logit_[i]); }

std::span<double> GaussianSet::group(Group g) {
    switch (g) {
        case kPosition: return position_;
        case kRotation: return rotation_;
        case kLogScale: return log_scale_;
        case kOpacity: return opacity_logit_;
        case kSh: return sh_;
        case kSemantic: return semantic_;
        default: throw InvalidInput("unknown parameter group");
    }
}

std::span<const double> GaussianSet::group(Group g) const { return const_cast<GaussianSet*>(this)->group(g); }

void GaussianSet::add(const GaussianSet& other) {
    if (other.size() != size() || other.sh_degree_ != sh_degree_ || other.num_classes_ != num_classes_) {
        throw InvalidInput("GaussianSet::add shape mismatch");
    }
    for (int g = 0; g < kNumGroups; ++g) {
        auto dst = group(Group(g));
        auto src = other.group(Group(g));
        for (std::size_t k = 0; k < dst.size(); ++k) {
            dst[k] += src[k];
        }
    }
}

bool GaussianSet::all_finite() const {
    for (int g = 0; g < kNumGroups; ++g) {
        for (double v : group(Group(g))) {
            if (!std::isfinite(v)) {
                return false;
            }
        }
    }
    return true;
}

double sigmoid(double x) {
    if (x >= 0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

Mat3 quat_to_matrix(const Vec4& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 R;
    R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
         2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return R;
}

Vec4 quat_to_matrix_backward(const Vec4& q, const Mat3& d) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Vec4 g;
    g[0] = 2 * (-z * d(0, 1) + y * d(0, 2) + z * d(1, 0) - x * d(1, 2) - y * d(2, 0) + x * d(2, 1));
    g[1] = 2 * (y * d(0, 1) + z * d(0, 2) + y * d(1, 0) - 2 * x * d(1, 1) - w * d(1, 2) + z * d(2, 0) +
                w * d(2, 1) - 2 * x * d(2, 2));
    g[2] = 2 * (-2 * y * d(0, 0) + x * d(0, 1) + w * d(0, 2) + x * d(1, 0) + z * d(1, 2) - w * d(2, 0) +
                z * d(2, 1) - 2 * y * d(2, 2));
    g[3] = 2 * (-2 * z * d(0, 0) - w * d(0, 1) + x * d(0, 2) + w * d(1, 0) - 2 * z * d(1, 1) + y * d(1, 2) +
                x * d(2, 0) + y * d(2, 1));
    return g;
}

Vec4 normalize_backward(const Vec4& q, const Vec4& d_qhat) {
    const double n = q.norm();
    const Vec4 qh = q / n;
    return (d_qhat - qh * qh.dot(d_qhat)) / n;
}

Vec4 quat_multiply(const Vec4& a, const Vec4& b) { return quat_left_matrix(a) * b; }

Eigen::Matrix4d quat_left_matrix(const Vec4& a) {
    const double w = a[0], x = a[1], y = a[2], z = a[3];
    Eigen::Matrix4d L;
    L << w, -x, -y, -z,
         x, w, -z, y,
         y, z, w, -x,
         z, -y, x, w;
    return L;
}

Eigen::Matrix4d quat_right_matrix(const Vec4& b) {
    const double w = b[0], x = b[1], y = b[2], z = b[3];
    Eigen::Matrix4d Rm;
    Rm << w, -x, -y, -z,
          x, w, z, -y,
          y, -z, w, x,
          z, y, -x, w;
    return Rm;
}

Vec4 matrix_to_quat(const Mat3& R) {
    const Eigen::Quaterniond q(R);
    Vec4 out(q.w(), q.x(), q.y(), q.z());
    if (out[0] < 0) {
        out = -out;
    }
    return out.normalized();
}

Mat3 build_covariance(const Vec4& rotation, const Vec3& scale) {
    if (!rotation.allFinite() || !scale.allFinite()) {
        throw InvalidInput("build_covariance: non-finite input");
    }
    if (!(scale.array() > 0).all()) {
        throw InvalidInput("build_covariance: scale entries must be positive");
    }
    const double n = rotation.norm();
    if (n == 0.0) {
        throw InvalidInput("build_covariance: zero quaternion");
    }
    const Mat3 A = quat_to_matrix(rotation / n) * scale.asDiagonal();
    Mat3 cov = A * A.transpose();
    // exact symmetry
    return 0.5 * (cov + cov.transpose());
}

Gaussian canonicalize_scales(const Gaussian& g) {
    std::array<int, 3> perm{0, 1, 2};
    std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) { return g.scale[a] > g.scale[b]; });
    const Mat3 R = quat_to_matrix(g.rotation.normalized());
    Mat3 Rp;
    Vec3 sp;
    for (int k = 0; k < 3; ++k) {
        Rp.col(k) = R.col(perm[k]);
        sp[k] = g.scale[perm[k]];
    }
    if (Rp.determinant() < 0) {
        Rp.col(2) = -Rp.col(2);
    }
    Gaussian out = g;
    out.scale = sp;
    out.rotation = matrix_to_quat(Rp);
    return out;
}

double loss_scale(const Vec3& scale) { return std::abs(scale.minCoeff()); }

namespace {

// Indices of the largest and second-largest entries, ties by index order.
std::array<int, 3> descending_order(const Vec3& s) {
    std::array<int, 3> perm{0, 1, 2};
    std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) { return s[a] > s[b]; });
    return perm;
}

}  // namespace

double loss_ratio(const Vec3& scale) {
    const auto order = descending_order(scale);
    const double s1 = scale[order[0]];
    const double s2 = scale[order[1]];
    if (s2 == 0.0) {
        throw InvalidInput("loss_ratio: second scale is zero");
    }
    return std::max(1.0, s1 / s2) - 1.0;
}

Vec3 loss_scale_grad(const Vec3& scale) {
    Vec3 g = Vec3::Zero();
    int arg = 0;
    scale.minCoeff(&arg);
    int ties = 0;
    for (int k = 0; k < 3; ++k) {
        ties += scale[k] == scale[arg];
    }
    if (ties == 1) {
        g[arg] = scale[arg] >= 0 ? 1.0 : -1.0;
    }
    return g;
}

Vec3 loss_ratio_grad(const Vec3& scale) {
    Vec3 g = Vec3::Zero();
    const auto order = descending_order(scale);
    const double s1 = scale[order[0]];
    const double s2 = scale[order[1]];
    if (s1 > s2 && s2 > 0) {
        g[order[0]] = 1.0 / s2;
        g[order[1]] = -s1 / (s2 * s2);
    }
    return g;
}

GeometricLoss loss_scale_set(const GaussianSet& set) {
    GeometricLoss out{0.0, GaussianSet::zeros_like(set)};
    if (set.empty()) {
        return out;
    }
    const double inv_n = 1.0 / double(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        const Vec3 s = set.scale(i);
        out.value += loss_scale(s) * inv_n;
        out.grad.log_scale(i) = loss_scale_grad(s).cwiseProduct(s) * inv_n;
    }
    return out;
}

GeometricLoss loss_ratio_set(const GaussianSet& set) {
    GeometricLoss out{0.0, GaussianSet::zeros_like(set)};
    if (set.empty()) {
        return out;
    }
    const double inv_n = 1.0 / double(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        const Vec3 s = set.scale(i);
        out.value += loss_ratio(s) * inv_n;
        out.grad.log_scale(i) = loss_ratio_grad(s).cwiseProduct(s) * inv_n;
    }
    return out;
}

}  // namespace v2xsim
