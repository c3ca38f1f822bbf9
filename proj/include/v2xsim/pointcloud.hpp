#pragma once

#include "v2xsim/boxes.hpp"
#include "v2xsim/gaussian.hpp"

#include <filesystem>
#include <vector>

namespace v2xsim {

/// Points in meters. `colors` and `intensity` are either empty or parallel
/// to `points`.
struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> colors;  // linear RGB in [0,1]
    std::vector<double> intensity;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    /// Throws InvalidInput on non-finite coordinates or ragged attributes.
    void validate() const;
    void append(const PointCloud& other);
};

/// x,y,z plus optional red,green,blue (0..255 or 0..1) and intensity.
PointCloud read_point_cloud(const std::filesystem::path& path);
void write_point_cloud(const std::filesystem::path& path, const PointCloud& cloud);

PointCloud transform_cloud(const PointCloud& cloud, const Eigen::Isometry3d& transform);

/// Keeps the first point of every occupied voxel, in input order.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel);

struct SensorCloud {
    PointCloud cloud;
    Eigen::Isometry3d sensor_to_world = Eigen::Isometry3d::Identity();
};

inline constexpr double kDefaultVoxel = 0.1;

/// World-frame concatenation in sensor order, then voxel_downsample.
PointCloud fuse_lidar(const std::vector<SensorCloud>& clouds, double voxel = kDefaultVoxel);

/// Points of frames[k] inside boxes[k], mapped into the box frame and
/// accumulated. The two lists are parallel.
PointCloud aggregate_object_points(const std::vector<PointCloud>& frames, const std::vector<Box3>& boxes);

/// Mean distance from each point to its k nearest other points.
std::vector<double> mean_knn_distance(const std::vector<Vec3>& points, int k);

inline constexpr int kInitNeighbors = 3;
inline constexpr double kInitOpacity = 0.1;

/// One isotropic Gaussian per point: scale is the mean distance to the 3
/// nearest neighbors, opacity 0.1, SH DC from the point color (gray 0.5
/// without colors), higher bands and semantic logits zero. Throws
/// InvalidInput with fewer than 4 points.
GaussianSet init_gaussians_from_points(const PointCloud& cloud, int sh_degree, int num_classes);

}  // namespace v2xsim
