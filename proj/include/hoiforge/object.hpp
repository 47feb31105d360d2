// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hoiforge/sdf.hpp"
#include "hoiforge/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace hoiforge {

// Rigid object: analytic SDF assembly plus a labeled surface point sample.
// Geometry lives in a canonical object frame; per-frame poses are applied by
// the callers that own a trajectory.
struct ObjectModel {
    std::string name;
    std::vector<SdfPrimitive> primitives;
    std::vector<Vec3> points;      // surface samples, object frame
    std::vector<int> point_part;   // part label per point
    std::map<int, std::string> part_catalog;

    int num_points() const { return static_cast<int>(points.size()); }
    bool has_part(const std::string& semantic_name) const;
    int part_label_of(const std::string& semantic_name) const;  // throws
};

// Assembly SDF: min over primitives, ties broken by lowest primitive index.
SdfResult sdf_query(const ObjectModel& obj, const Vec3& p);
IndexedSdfResult sdf_query_indexed(const ObjectModel& obj, const Vec3& p);

// Nearest point of `region` (indices into obj.points) to p; ties broken by
// lowest index. Throws on an empty region.
std::pair<int, Vec3> closest_affordance_point(const ObjectModel& obj,
                                              const std::vector<int>& region,
                                              const Vec3& p);

// Convenience overload dispatching on hand side.
std::pair<int, Vec3> closest_affordance_point(const ObjectModel& obj,
                                              const AffordanceMap& aff,
                                              Hands side, const Vec3& p);

// Fixed-width geometric summary: centroid (3) + bounding extents (3) + up to
// 14 per-part centroids in ascending part-label order, zero padded.
VecX object_features(const ObjectModel& obj);

// Checks the surface-sample contract: >= 256 points, every point within 1e-3
// of the zero level set, every label present in the catalog. Throws HoiError.
void validate_object(const ObjectModel& obj);

// Object pose helpers shared by losses, metrics, and the data generator.
Eigen::Matrix3d rotation_matrix(const Vec4& quat_wxyz);  // normalizes; near-zero quat -> identity
inline Vec3 object_to_world(const ObjectPose& pose, const Vec3& p_obj) {
    return rotation_matrix(pose.orientation) * p_obj + pose.position;
}
inline Vec3 world_to_object(const ObjectPose& pose, const Vec3& p_world) {
    return rotation_matrix(pose.orientation).transpose() * (p_world - pose.position);
}

// SDF of the posed object at a world point; gradient is returned in world
// coordinates (rotation applied to the object-frame gradient).
SdfResult sdf_query_posed(const ObjectModel& obj, const ObjectPose& pose, const Vec3& p_world);

}  // namespace hoiforge
