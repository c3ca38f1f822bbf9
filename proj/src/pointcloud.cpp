#include "v2xsim/pointcloud.hpp"

#include "v2xsim/errors.hpp"
#include "v2xsim/ply.hpp"
#include "v2xsim/sh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <unordered_set>

namespace v2xsim {

void PointCloud::validate() const {
    if (!colors.empty() && colors.size() != points.size()) {
        throw InvalidInput("point colors do not match the point count");
    }
    if (!intensity.empty() && intensity.size() != points.size()) {
        throw InvalidInput("point intensities do not match the point count");
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!points[i].allFinite()) {
            throw InvalidInput("non-finite point at index " + std::to_string(i));
        }
    }
}

void PointCloud::append(const PointCloud& other) {
    const bool colored = (empty() || !colors.empty()) && (other.empty() || !other.colors.empty());
    const bool lit = (empty() || !intensity.empty()) && (other.empty() || !other.intensity.empty());
    if (!colored) colors.clear();
    if (!lit) intensity.clear();
    points.insert(points.end(), other.points.begin(), other.points.end());
    if (colored) colors.insert(colors.end(), other.colors.begin(), other.colors.end());
    if (lit) intensity.insert(intensity.end(), other.intensity.begin(), other.intensity.end());
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
    const PlyTable t = read_ply_vertices(path);
    PointCloud c;
    const auto& x = t.column("x");
    const auto& y = t.column("y");
    const auto& z = t.column("z");
    c.points.resize(t.rows());
    for (std::size_t i = 0; i < t.rows(); ++i) c.points[i] = Vec3(x[i], y[i], z[i]);
    if (t.has("red") && t.has("green") && t.has("blue")) {
        const auto& r = t.column("red");
        const auto& g = t.column("green");
        const auto& b = t.column("blue");
        double peak = 0;
        for (std::size_t i = 0; i < t.rows(); ++i) peak = std::max({peak, r[i], g[i], b[i]});
        const double norm = peak > 1.0 ? 1.0 / 255.0 : 1.0;
        c.colors.resize(t.rows());
        for (std::size_t i = 0; i < t.rows(); ++i) c.colors[i] = norm * Vec3(r[i], g[i], b[i]);
    }
    if (t.has("intensity")) c.intensity = t.column("intensity");
    try {
        c.validate();
    } catch (const InvalidInput& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return c;
}

void write_point_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
    cloud.validate();
    PlyTable t;
    for (int a = 0; a < 3; ++a) {
        std::vector<double> col(cloud.size());
        for (std::size_t i = 0; i < cloud.size(); ++i) col[i] = cloud.points[i][a];
        t.add_column(std::string(1, "xyz"[a]), std::move(col));
    }
    if (!cloud.colors.empty()) {
        const char* names[] = {"red", "green", "blue"};
        for (int a = 0; a < 3; ++a) {
            std::vector<double> col(cloud.size());
            for (std::size_t i = 0; i < cloud.size(); ++i) col[i] = cloud.colors[i][a];
            t.add_column(names[a], std::move(col));
        }
    }
    if (!cloud.intensity.empty()) t.add_column("intensity", cloud.intensity);
    write_ply_vertices(path, t);
}

PointCloud transform_cloud(const PointCloud& cloud, const Eigen::Isometry3d& transform) {
    PointCloud out = cloud;
    for (Vec3& p : out.points) p = transform * p;
    return out;
}

namespace {

struct CellKey {
    std::int64_t x, y, z;
    bool operator==(const CellKey&) const = default;
};

struct CellHash {
    std::size_t operator()(const CellKey& k) const {
        std::uint64_t h = std::uint64_t(k.x) * 0x9E3779B97F4A7C15ull;
        h ^= std::uint64_t(k.y) * 0xC2B2AE3D27D4EB4Full + (h << 6) + (h >> 2);
        h ^= std::uint64_t(k.z) * 0x165667B19E3779F9ull + (h << 6) + (h >> 2);
        return std::size_t(h);
    }
};

CellKey cell_of(const Vec3& p, double size) {
    return {std::int64_t(std::floor(p.x() / size)), std::int64_t(std::floor(p.y() / size)),
            std::int64_t(std::floor(p.z() / size))};
}

}  // namespace

PointCloud voxel_downsample(const PointCloud& cloud, double voxel) {
    if (!(voxel > 0)) {
        throw InvalidInput("voxel size must be positive");
    }
    cloud.validate();
    std::unordered_set<CellKey, CellHash> seen;
    PointCloud out;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (!seen.insert(cell_of(cloud.points[i], voxel)).second) continue;
        out.points.push_back(cloud.points[i]);
        if (!cloud.colors.empty()) out.colors.push_back(cloud.colors[i]);
        if (!cloud.intensity.empty()) out.intensity.push_back(cloud.intensity[i]);
    }
    return out;
}

PointCloud fuse_lidar(const std::vector<SensorCloud>& clouds, double voxel) {
    PointCloud all;
    for (const SensorCloud& s : clouds) all.append(transform_cloud(s.cloud, s.sensor_to_world));
    return voxel_downsample(all, voxel);
}

PointCloud aggregate_object_points(const std::vector<PointCloud>& frames, const std::vector<Box3>& boxes) {
    if (frames.size() != boxes.size()) {
        throw InvalidInput("aggregate_object_points needs one box per frame");
    }
    // attributes survive only when every frame carries them
    bool colored = true, lit = true;
    for (const PointCloud& c : frames) {
        colored &= c.empty() || !c.colors.empty();
        lit &= c.empty() || !c.intensity.empty();
    }
    PointCloud out;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const Eigen::Isometry3d to_box = boxes[f].pose().inverse();
        const PointCloud& c = frames[f];
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (!boxes[f].contains(c.points[i])) continue;
            out.points.push_back(to_box * c.points[i]);
            if (colored) out.colors.push_back(c.colors[i]);
            if (lit) out.intensity.push_back(c.intensity[i]);
        }
    }
    return out;
}

std::vector<double> mean_knn_distance(const std::vector<Vec3>& points, int k) {
    const std::size_t n = points.size();
    if (k < 1 || n <= std::size_t(k)) {
        throw InvalidInput("need more than " + std::to_string(k) + " points for a " + std::to_string(k) +
                           "-neighbor search");
    }
    Vec3 lo = points[0], hi = points[0];
    for (const Vec3& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    // cell edge from the occupied dimensions, aiming at a few points per cell
    const Vec3 ext = hi - lo;
    double volume = 1;
    int dims = 0;
    for (int a = 0; a < 3; ++a) {
        if (ext[a] > 1e-9 * std::max(1.0, ext.maxCoeff())) {
            volume *= ext[a];
            ++dims;
        }
    }
    double cell = dims == 0 ? 1.0 : 2.0 * std::pow(volume / double(n), 1.0 / dims);
    if (!(cell > 0) || !std::isfinite(cell)) cell = 1.0;
    const double reach = ext.norm() + cell;

    std::unordered_map<CellKey, std::vector<std::uint32_t>, CellHash> grid;
    for (std::size_t i = 0; i < n; ++i) grid[cell_of(points[i], cell)].push_back(std::uint32_t(i));

    std::vector<double> out(n);
    std::vector<double> best;
#pragma omp parallel for schedule(dynamic, 64) private(best)
    for (std::size_t i = 0; i < n; ++i) {
        const CellKey c = cell_of(points[i], cell);
        best.assign(std::size_t(k), std::numeric_limits<double>::infinity());  // sorted squared distances
        for (std::int64_t r = 0;; ++r) {
            for (std::int64_t dx = -r; dx <= r; ++dx) {
                for (std::int64_t dy = -r; dy <= r; ++dy) {
                    for (std::int64_t dz = -r; dz <= r; ++dz) {
                        if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;
                        const auto it = grid.find({c.x + dx, c.y + dy, c.z + dz});
                        if (it == grid.end()) continue;
                        for (std::uint32_t j : it->second) {
                            if (j == i) continue;
                            const double d2 = (points[j] - points[i]).squaredNorm();
                            if (d2 < best.back()) {
                                best.back() = d2;
                                std::sort(best.begin(), best.end());
                            }
                        }
                    }
                }
            }
            // every unvisited cell lies at least r*cell away
            const double covered = double(r) * cell;
            if (best.back() <= covered * covered || covered > reach) break;
        }
        double sum = 0;
        for (double d2 : best) sum += std::sqrt(d2);
        out[i] = sum / k;
    }
    return out;
}

GaussianSet init_gaussians_from_points(const PointCloud& cloud, int sh_degree, int num_classes) {
    if (cloud.size() < std::size_t(kInitNeighbors + 1)) {
        throw InvalidInput("Gaussian initialization needs at least " + std::to_string(kInitNeighbors + 1) +
                           " points, got " + std::to_string(cloud.size()));
    }
    cloud.validate();
    const std::vector<double> dist = mean_knn_distance(cloud.points, kInitNeighbors);
    GaussianSet set(sh_degree, num_classes);
    Gaussian g;
    g.opacity = kInitOpacity;
    g.sh.assign(set.sh_stride(), 0.0);
    g.semantic.assign(std::size_t(num_classes), 0.0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        g.position = cloud.points[i];
        g.scale = Vec3::Constant(std::max(dist[i], 1e-7));
        const Vec3 rgb = cloud.colors.empty() ? Vec3::Constant(0.5) : cloud.colors[i];
        for (int c = 0; c < 3; ++c) g.sh[std::size_t(c)] = (rgb[c] - 0.5) / kShC0;
        set.push_back(g);
    }
    return set;
}

}  // namespace v2xsim
