#pragma once

#include "v2xsim/gaussian.hpp"
#include "v2xsim/json_io.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace v2xsim {

enum class LaneType { kCityDriving, kBiking, kParking, kSidewalk, kNone };

const char* lane_type_name(LaneType t);
/// Throws ParseError on an unknown name.
LaneType lane_type_from_name(const std::string& name);

struct Lane {
    std::string id;
    std::vector<Vec3> centerline;  // meters, >= 2 distinct consecutive points
    LaneType type = LaneType::kCityDriving;
    bool is_intersection = false;
    std::vector<std::string> successors;
    std::vector<std::string> predecessors;
    std::vector<std::string> adjacent;

    double length() const;
    /// Point at arc length s, clamped to the ends.
    Vec3 point_at(double s) const;
    /// Unit tangent of the segment containing arc length s.
    Vec3 direction_at(double s) const;
    /// Ground-plane (xy) distance from p to the polyline.
    double ground_distance(const Vec3& p) const;
};

class LaneGraph {
public:
    /// Validates the lane and every reference; throws ParseError listing
    /// dangling ids, InvalidInput on a malformed centerline or duplicate id.
    explicit LaneGraph(std::vector<Lane> lanes = {});

    std::size_t size() const { return lanes_.size(); }
    bool empty() const { return lanes_.empty(); }
    const std::vector<Lane>& lanes() const { return lanes_; }
    /// Throws NotFound.
    const Lane& lane(const std::string& id) const;
    bool contains(const std::string& id) const { return index_.count(id) != 0; }

    /// Lanes connected to `id` by successor, predecessor or adjacency links
    /// in either direction, sorted.
    const std::vector<std::string>& neighbors(const std::string& id) const;

private:
    std::vector<Lane> lanes_;
    std::map<std::string, std::size_t> index_;
    std::vector<std::vector<std::string>> neighbors_;
};

/// {lanes: [{id, lane_type, is_intersection, centerline: [[x,y,z], ...],
///   successors: [], predecessors: [], adjacent: []}]}
LaneGraph lane_graph_from_json(const Json& j);
Json to_json(const LaneGraph& graph);
LaneGraph load_vector_map(const std::filesystem::path& path);

/// Seed: the CITY_DRIVING intersection lane nearest (ground plane) to the
/// infrastructure position. Result: seed plus everything reachable from it
/// through CITY_DRIVING lanes only, sorted. Throws NotFound without a seed.
std::vector<std::string> select_intersection_lanes(const LaneGraph& graph, const Vec3& infra_position);

}  // namespace v2xsim
