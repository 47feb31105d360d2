// SPDX-License-Identifier: Apache-2.0
#include "hoiforge/sdf.hpp"

#include <cmath>

namespace hoiforge {

std::string primitive_kind_name(PrimitiveKind k) {
    switch (k) {
        case PrimitiveKind::Sphere: return "sphere";
        case PrimitiveKind::Box: return "box";
        case PrimitiveKind::Cylinder: return "cylinder";
        case PrimitiveKind::Capsule: return "capsule";
    }
    throw HoiError("unknown primitive kind");
}

PrimitiveKind primitive_kind_from_name(const std::string& name) {
    if (name == "sphere") return PrimitiveKind::Sphere;
    if (name == "box") return PrimitiveKind::Box;
    if (name == "cylinder") return PrimitiveKind::Cylinder;
    if (name == "capsule") return PrimitiveKind::Capsule;
    throw HoiError("unknown primitive kind: " + name);
}

namespace {

constexpr double kSingularEps = 1e-12;

inline double sgn(double x) { return x >= 0.0 ? 1.0 : -1.0; }

SdfResult sphere_sdf(double radius, const Vec3& p) {
    const double n = p.norm();
    if (n < kSingularEps) return {-radius, Vec3(1, 0, 0)};
    return {n - radius, p / n};
}

SdfResult box_sdf(const Vec3& half, const Vec3& p) {
    const Vec3 q = p.cwiseAbs() - half;
    const Vec3 q_pos = q.cwiseMax(0.0);
    const double outside = q_pos.norm();
    if (outside > 0.0) {
        Vec3 g = q_pos / outside;
        for (int i = 0; i < 3; ++i) g[i] *= sgn(p[i]);
        return {outside, g};
    }
    // Inside (or on a face): push through the nearest face, ties to lowest axis.
    int axis = 0;
    for (int i = 1; i < 3; ++i)
        if (q[i] > q[axis]) axis = i;
    Vec3 g = Vec3::Zero();
    g[axis] = sgn(p[axis]);
    return {q[axis], g};
}

SdfResult cylinder_sdf(double radius, double half_height, const Vec3& p) {
    const double rho = std::hypot(p.x(), p.y());
    Eigen::Vector2d u(1, 0);
    if (rho >= kSingularEps) u = Eigen::Vector2d(p.x(), p.y()) / rho;
    const double d_rad = rho - radius;
    const double d_cap = std::abs(p.z()) - half_height;
    if (d_rad > 0.0 && d_cap > 0.0) {
        const double d = std::hypot(d_rad, d_cap);
        Vec3 g(u.x() * d_rad, u.y() * d_rad, sgn(p.z()) * d_cap);
        return {d, g / d};
    }
    if (d_rad >= d_cap)  // radial face nearest; radial wins the tie
        return {d_rad, Vec3(u.x(), u.y(), 0)};
    return {d_cap, Vec3(0, 0, sgn(p.z()))};
}

SdfResult capsule_sdf(double radius, double half_len, const Vec3& p) {
    const double a = std::min(std::max(p.z(), -half_len), half_len);
    const Vec3 d = p - Vec3(0, 0, a);
    const double n = d.norm();
    if (n < kSingularEps) return {-radius, Vec3(1, 0, 0)};
    return {n - radius, d / n};
}

}  // namespace

SdfResult sdf_primitive_query(const SdfPrimitive& prim, const Vec3& p) {
    Vec4 q = prim.rotation;
    const double qn = q.norm();
    if (qn < 1e-8)
        q = Vec4(1, 0, 0, 0);
    else
        q /= qn;
    const Eigen::Matrix3d rot =
        Quat(q[0], q[1], q[2], q[3]).toRotationMatrix();
    const Vec3 local = rot.transpose() * (p - prim.translation);

    SdfResult r;
    switch (prim.kind) {
        case PrimitiveKind::Sphere: r = sphere_sdf(prim.params[0], local); break;
        case PrimitiveKind::Box: r = box_sdf(prim.params, local); break;
        case PrimitiveKind::Cylinder:
            r = cylinder_sdf(prim.params[0], prim.params[1], local);
            break;
        case PrimitiveKind::Capsule:
            r = capsule_sdf(prim.params[0], prim.params[1], local);
            break;
        default: throw HoiError("unknown primitive kind");
    }
    r.gradient = rot * r.gradient;
    return r;
}

}  // namespace hoiforge
