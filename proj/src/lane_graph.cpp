#include "v2xsim/lane_graph.hpp"

#include "v2xsim/errors.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <set>

namespace v2xsim {

namespace {

constexpr std::pair<LaneType, const char*> kLaneTypeNames[] = {
    {LaneType::kCityDriving, "CITY_DRIVING"},
    {LaneType::kBiking, "BIKING"},
    {LaneType::kParking, "PARKING"},
    {LaneType::kSidewalk, "SIDEWALK"},
    {LaneType::kNone, "NONE"},
};

double segment_distance_2d(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (a + t * ab - p).norm();
}

}  // namespace

const char* lane_type_name(LaneType t) {
    for (const auto& [type, name] : kLaneTypeNames) {
        if (type == t) return name;
    }
    return "NONE";
}

LaneType lane_type_from_name(const std::string& name) {
    for (const auto& [type, n] : kLaneTypeNames) {
        if (name == n) return type;
    }
    throw ParseError("unknown lane_type '" + name + "'");
}

double Lane::length() const {
    double s = 0;
    for (std::size_t i = 1; i < centerline.size(); ++i) s += (centerline[i] - centerline[i - 1]).norm();
    return s;
}

Vec3 Lane::point_at(double s) const {
    if (s <= 0) return centerline.front();
    for (std::size_t i = 1; i < centerline.size(); ++i) {
        const double seg = (centerline[i] - centerline[i - 1]).norm();
        if (s <= seg) return centerline[i - 1] + (s / seg) * (centerline[i] - centerline[i - 1]);
        s -= seg;
    }
    return centerline.back();
}

Vec3 Lane::direction_at(double s) const {
    for (std::size_t i = 1; i < centerline.size(); ++i) {
        const double seg = (centerline[i] - centerline[i - 1]).norm();
        if (s <= seg || i + 1 == centerline.size()) return (centerline[i] - centerline[i - 1]) / seg;
        s -= seg;
    }
    return Vec3::UnitX();
}

double Lane::ground_distance(const Vec3& p) const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < centerline.size(); ++i) {
        best = std::min(best, segment_distance_2d(p.head<2>(), centerline[i - 1].head<2>(), centerline[i].head<2>()));
    }
    return best;
}

LaneGraph::LaneGraph(std::vector<Lane> lanes) : lanes_(std::move(lanes)) {
    for (std::size_t i = 0; i < lanes_.size(); ++i) {
        const Lane& l = lanes_[i];
        if (!index_.emplace(l.id, i).second) {
            throw InvalidInput("duplicate lane id '" + l.id + "'");
        }
        if (l.centerline.size() < 2) {
            throw InvalidInput("lane '" + l.id + "' has fewer than 2 centerline points");
        }
        for (std::size_t k = 1; k < l.centerline.size(); ++k) {
            if (l.centerline[k] == l.centerline[k - 1]) {
                throw InvalidInput("lane '" + l.id + "' repeats a centerline point");
            }
        }
    }
    std::set<std::string> dangling;
    std::vector<std::set<std::string>> links(lanes_.size());
    for (std::size_t i = 0; i < lanes_.size(); ++i) {
        for (const auto* refs : {&lanes_[i].successors, &lanes_[i].predecessors, &lanes_[i].adjacent}) {
            for (const std::string& r : *refs) {
                const auto it = index_.find(r);
                if (it == index_.end()) {
                    dangling.insert(r);
                    continue;
                }
                if (it->second == i) continue;
                links[i].insert(r);
                links[it->second].insert(lanes_[i].id);
            }
        }
    }
    if (!dangling.empty()) {
        std::string msg = "vector map references unknown lane ids:";
        for (const auto& d : dangling) msg += " " + d;
        throw ParseError(msg);
    }
    for (const auto& s : links) neighbors_.emplace_back(s.begin(), s.end());
}

const Lane& LaneGraph::lane(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) {
        throw NotFound("no lane '" + id + "'");
    }
    return lanes_[it->second];
}

const std::vector<std::string>& LaneGraph::neighbors(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) {
        throw NotFound("no lane '" + id + "'");
    }
    return neighbors_[it->second];
}

LaneGraph lane_graph_from_json(const Json& j) {
    std::vector<Lane> lanes;
    try {
        for (const Json& jl : j.at("lanes")) {
            Lane l;
            l.id = jl.at("id").get<std::string>();
            l.type = lane_type_from_name(jl.at("lane_type").get<std::string>());
            l.is_intersection = jl.value("is_intersection", false);
            for (const Json& p : jl.at("centerline")) l.centerline.push_back(vec3_from_json(p));
            l.successors = jl.value("successors", std::vector<std::string>{});
            l.predecessors = jl.value("predecessors", std::vector<std::string>{});
            l.adjacent = jl.value("adjacent", std::vector<std::string>{});
            lanes.push_back(std::move(l));
        }
    } catch (const Json::exception& e) {
        throw ParseError(std::string("vector map: ") + e.what());
    }
    return LaneGraph(std::move(lanes));
}

Json to_json(const LaneGraph& graph) {
    Json lanes = Json::array();
    for (const Lane& l : graph.lanes()) {
        Json cl = Json::array();
        for (const Vec3& p : l.centerline) cl.push_back(to_json(p));
        lanes.push_back({{"id", l.id},
                         {"lane_type", lane_type_name(l.type)},
                         {"is_intersection", l.is_intersection},
                         {"centerline", cl},
                         {"successors", l.successors},
                         {"predecessors", l.predecessors},
                         {"adjacent", l.adjacent}});
    }
    return Json{{"lanes", lanes}};
}

LaneGraph load_vector_map(const std::filesystem::path& path) { return lane_graph_from_json(read_json_file(path)); }

std::vector<std::string> select_intersection_lanes(const LaneGraph& graph, const Vec3& infra_position) {
    if (graph.empty()) {
        throw InvalidInput("lane graph is empty");
    }
    const Lane* seed = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const Lane& l : graph.lanes()) {
        if (l.type != LaneType::kCityDriving || !l.is_intersection) continue;
        const double d = l.ground_distance(infra_position);
        if (d < best) {
            best = d;
            seed = &l;
        }
    }
    if (!seed) {
        throw NotFound("no CITY_DRIVING intersection lane in the vector map");
    }
    std::set<std::string> seen{seed->id};
    std::deque<std::string> queue{seed->id};
    while (!queue.empty()) {
        const std::string id = queue.front();
        queue.pop_front();
        for (const std::string& n : graph.neighbors(id)) {
            if (graph.lane(n).type != LaneType::kCityDriving || seen.count(n)) continue;
            seen.insert(n);
            queue.push_back(n);
        }
    }
    return {seen.begin(), seen.end()};
}

}  // namespace v2xsim
