#pragma once

#include "v2xsim/gaussian.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace v2xsim {

/// Column store of a PLY "vertex" element. Every property is widened to double.
struct PlyTable {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
    bool has(const std::string& name) const;
    const std::vector<double>& column(const std::string& name) const;
    void add_column(std::string name, std::vector<double> values);
};

/// Reads the vertex element of an ascii or binary_little_endian PLY file.
PlyTable read_ply_vertices(const std::filesystem::path& path);
/// Writes a binary_little_endian PLY with float properties.
void write_ply_vertices(const std::filesystem::path& path, const PlyTable& table);

/// Splatting layout: x,y,z, nx,ny,nz, f_dc_*, f_rest_*, opacity, scale_*, rot_*
/// (+ sem_* when the set carries semantic logits). Scales are stored as logs
/// and opacity pre-sigmoid; f_rest is channel-major.
GaussianSet read_gaussian_ply(const std::filesystem::path& path);
void write_gaussian_ply(const std::filesystem::path& path, const GaussianSet& set);

}  // namespace v2xsim
