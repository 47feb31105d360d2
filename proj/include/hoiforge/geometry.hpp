// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>

namespace hoiforge {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Quat = Eigen::Quaterniond;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

struct HoiError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Quaternions are stored (w, x, y, z) in all flat vectors and files.
inline Vec4 quat_to_vec4(const Quat& q) { return Vec4(q.w(), q.x(), q.y(), q.z()); }
inline Quat vec4_to_quat(const Vec4& v) { return Quat(v[0], v[1], v[2], v[3]); }

inline Vec4 quat_conjugate(const Vec4& q) { return Vec4(q[0], -q[1], -q[2], -q[3]); }

// Left multiplication matrix: quat_mul(q, p) = L(q) * p, with (w,x,y,z) layout.
inline Eigen::Matrix4d quat_left_matrix(const Vec4& q) {
    Eigen::Matrix4d m;
    m << q[0], -q[1], -q[2], -q[3],
         q[1],  q[0], -q[3],  q[2],
         q[2],  q[3],  q[0], -q[1],
         q[3], -q[2],  q[1],  q[0];
    return m;
}

// Right multiplication matrix: quat_mul(q, p) = R(p) * q.
inline Eigen::Matrix4d quat_right_matrix(const Vec4& p) {
    Eigen::Matrix4d m;
    m << p[0], -p[1], -p[2], -p[3],
         p[1],  p[0],  p[3], -p[2],
         p[2], -p[3],  p[0],  p[1],
         p[3],  p[2], -p[1],  p[0];
    return m;
}

inline Vec4 quat_mul(const Vec4& q, const Vec4& p) { return quat_left_matrix(q) * p; }

// Squared geodesic angle between unit quaternions given c = |<q1,q2>|,
// theta = 2*acos(c). d(theta^2)/dc stays finite as c -> 1 (limit -8).
inline double geodesic_angle_sq(double c) {
    c = std::min(std::max(c, -1.0), 1.0);
    const double theta = 2.0 * std::acos(c);
    return theta * theta;
}

inline double geodesic_angle_sq_dc(double c) {
    c = std::min(std::max(c, -1.0), 1.0);
    const double one_minus = 1.0 - c * c;
    if (one_minus < 1e-12) return c >= 0.0 ? -8.0 : 8.0;
    return -8.0 * std::acos(c) / std::sqrt(one_minus);
}

// Jacobian of v -> v/|v| for 4-vectors.
inline Eigen::Matrix4d normalize_jacobian(const Vec4& v) {
    const double n = v.norm();
    const Vec4 u = v / n;
    return (Eigen::Matrix4d::Identity() - u * u.transpose()) / n;
}

inline bool is_unit_quat(const Quat& q, double tol = 1e-6) {
    return std::abs(q.norm() - 1.0) <= tol;
}

}  // namespace hoiforge
