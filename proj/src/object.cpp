// SPDX-License-Identifier: Apache-2.0
#include "hoiforge/object.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace hoiforge {

bool ObjectModel::has_part(const std::string& semantic_name) const {
    for (const auto& [label, name] : part_catalog)
        if (name == semantic_name) return true;
    return false;
}

int ObjectModel::part_label_of(const std::string& semantic_name) const {
    for (const auto& [label, name] : part_catalog)
        if (name == semantic_name) return label;
    throw HoiError("object '" + name + "' has no part named '" + semantic_name + "'");
}

SdfResult sdf_query(const ObjectModel& obj, const Vec3& p) {
    IndexedSdfResult r = sdf_query_indexed(obj, p);
    return {r.distance, r.gradient};
}

IndexedSdfResult sdf_query_indexed(const ObjectModel& obj, const Vec3& p) {
    if (obj.primitives.empty()) throw HoiError("sdf_query: object has no primitives");
    IndexedSdfResult best;
    best.distance = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(obj.primitives.size()); ++i) {
        SdfResult r = sdf_primitive_query(obj.primitives[static_cast<size_t>(i)], p);
        if (r.distance < best.distance) {
            best.distance = r.distance;
            best.gradient = r.gradient;
            best.primitive = i;
        }
    }
    return best;
}

std::pair<int, Vec3> closest_affordance_point(const ObjectModel& obj,
                                              const std::vector<int>& region,
                                              const Vec3& p) {
    if (region.empty()) throw HoiError("closest_affordance_point: empty region");
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int idx : region) {
        if (idx < 0 || idx >= obj.num_points())
            throw HoiError("closest_affordance_point: index out of range");
        const double d2 = (obj.points[static_cast<size_t>(idx)] - p).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = idx;
        }
    }
    return {best, obj.points[static_cast<size_t>(best)]};
}

std::pair<int, Vec3> closest_affordance_point(const ObjectModel& obj,
                                              const AffordanceMap& aff,
                                              Hands side, const Vec3& p) {
    if (side == Hands::Both)
        throw HoiError("closest_affordance_point: pick one side");
    return closest_affordance_point(
        obj, side == Hands::Left ? aff.active_left : aff.active_right, p);
}

VecX object_features(const ObjectModel& obj) {
    VecX f = VecX::Zero(kObjectFeatureDim);
    if (obj.points.empty()) return f;

    Vec3 centroid = Vec3::Zero();
    Vec3 lo = obj.points[0], hi = obj.points[0];
    for (const Vec3& p : obj.points) {
        centroid += p;
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    centroid /= static_cast<double>(obj.points.size());
    f.segment<3>(0) = centroid;
    f.segment<3>(3) = hi - lo;

    std::set<int> labels(obj.point_part.begin(), obj.point_part.end());
    int slot = 0;
    for (int label : labels) {
        if (slot >= 14) break;
        Vec3 c = Vec3::Zero();
        int n = 0;
        for (size_t i = 0; i < obj.points.size(); ++i) {
            if (obj.point_part[i] == label) {
                c += obj.points[i];
                ++n;
            }
        }
        if (n > 0) f.segment<3>(6 + 3 * slot) = c / static_cast<double>(n);
        ++slot;
    }
    return f;
}

void validate_object(const ObjectModel& obj) {
    if (obj.primitives.empty()) throw HoiError("object '" + obj.name + "': no primitives");
    if (obj.num_points() < 256)
        throw HoiError("object '" + obj.name + "': needs >= 256 surface points, has " +
                       std::to_string(obj.num_points()));
    if (obj.point_part.size() != obj.points.size())
        throw HoiError("object '" + obj.name + "': point/label count mismatch");
    for (size_t i = 0; i < obj.points.size(); ++i) {
        if (!obj.part_catalog.count(obj.point_part[i]))
            throw HoiError("object '" + obj.name + "': point label not in catalog");
        const double d = sdf_query(obj, obj.points[i]).distance;
        if (std::abs(d) > 1e-3)
            throw HoiError("object '" + obj.name + "': point " + std::to_string(i) +
                           " is off-surface (sdf " + std::to_string(d) + ")");
    }
}

Eigen::Matrix3d rotation_matrix(const Vec4& quat_wxyz) {
    Vec4 q = quat_wxyz;
    const double n = q.norm();
    if (n < 1e-8) return Eigen::Matrix3d::Identity();
    q /= n;
    return Quat(q[0], q[1], q[2], q[3]).toRotationMatrix();
}

SdfResult sdf_query_posed(const ObjectModel& obj, const ObjectPose& pose,
                          const Vec3& p_world) {
    const Eigen::Matrix3d rot = rotation_matrix(pose.orientation);
    SdfResult r = sdf_query(obj, rot.transpose() * (p_world - pose.position));
    r.gradient = rot * r.gradient;
    return r;
}

}  // namespace hoiforge
