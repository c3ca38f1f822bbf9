#pragma once

#include "v2xsim/scene_graph.hpp"

#include <map>
#include <string>
#include <vector>

namespace v2xsim {

/// Box-surface samples of one object seen from one camera. A sample is
/// visible when it projects inside the image in front of the near plane and
/// the ray to it crosses no other object's box first.
struct Visibility {
    int samples = 0;
    int in_frustum = 0;
    int occluded = 0;  // in frustum but behind another box
    std::map<std::string, int> by_occluder;

    double visible_fraction() const { return samples ? double(in_frustum - occluded) / samples : 0.0; }
    /// Occluded share of the in-frustum samples, 0 when none are in view.
    double occluded_fraction() const { return in_frustum ? double(occluded) / in_frustum : 0.0; }
    /// Object hiding the most samples, empty when nothing occludes.
    std::string main_occluder() const;
};

/// Samples an n x n grid of cell centers on each of the six box faces.
std::vector<Vec3> box_surface_samples(const Box3& box, int n);

/// Visibility of object `index` at `frame` from `cam`; the object must be live.
Visibility object_visibility(const SceneGraph& scene, std::size_t index, int frame, const Camera& cam,
                             int samples_per_edge = 6);

struct CornerCaseConfig {
    double tau_vis = 0.5;  // minimum infra visibility
    double tau_occ = 0.1;  // maximum ego visibility
    int samples_per_edge = 6;
};

struct CornerCase {
    int frame = 0;
    std::string id;
    double visibility_infra = 0;
    double visibility_ego = 0;
    std::string occluder;  // empty when the object is simply outside the ego view
};

/// Objects clearly visible to the infrastructure camera but hidden from the
/// ego camera, per live frame in [first, last]. Out-of-view samples count as
/// invisible. Throws InvalidInput for a scene without objects.
std::vector<CornerCase> detect_corner_cases(const SceneGraph& scene, int first, int last,
                                            const CornerCaseConfig& config = {});

}  // namespace v2xsim
