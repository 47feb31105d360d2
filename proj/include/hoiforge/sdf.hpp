// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hoiforge/geometry.hpp"

#include <vector>

namespace hoiforge {

enum class PrimitiveKind : int { Sphere = 0, Box = 1, Cylinder = 2, Capsule = 3 };

std::string primitive_kind_name(PrimitiveKind k);
PrimitiveKind primitive_kind_from_name(const std::string& name);

// One rigid-transformed analytic solid. Shape parameters by kind:
//   Sphere:   params[0] = radius
//   Box:      params = half extents
//   Cylinder: params[0] = radius, params[1] = half height (axis = local z)
//   Capsule:  params[0] = radius, params[1] = half segment length (axis = local z)
struct SdfPrimitive {
    PrimitiveKind kind = PrimitiveKind::Sphere;
    Vec4 rotation{1, 0, 0, 0};  // local-to-object rotation, (w,x,y,z), unit
    Vec3 translation{0, 0, 0};
    Vec3 params{0, 0, 0};
    int part_label = 0;
};

struct SdfResult {
    double distance = 0.0;
    Vec3 gradient{1, 0, 0};
};

struct IndexedSdfResult {
    double distance = 0.0;
    Vec3 gradient{1, 0, 0};
    int primitive = 0;
};

// Signed distance and outward unit gradient of one primitive at point p
// (object frame). Gradient tie-breaks at singular points are fixed:
//   - sphere center / capsule axis: (1,0,0) in the local frame
//   - box interior: nearest-face axis, ties resolved to the lowest axis
//   - cylinder interior: radial wins a radial/cap tie
SdfResult sdf_primitive_query(const SdfPrimitive& prim, const Vec3& p);

}  // namespace hoiforge
