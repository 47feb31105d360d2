// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "hoiforge/object.hpp"

#include <cmath>
#include <random>

using namespace hoiforge;

TEST_SUITE_BEGIN("sdf");

namespace {

SdfPrimitive make(PrimitiveKind kind, Vec3 params, Vec3 t = Vec3::Zero(),
                  Vec4 rot = Vec4(1, 0, 0, 0), int label = 0) {
    SdfPrimitive p;
    p.kind = kind;
    p.params = params;
    p.translation = t;
    p.rotation = rot;
    p.part_label = label;
    return p;
}

Vec4 random_unit_quat(std::mt19937_64& rng) {
    std::normal_distribution<double> g(0, 1);
    Vec4 q(g(rng), g(rng), g(rng), g(rng));
    return q / q.norm();
}

Vec3 fd_gradient(const SdfPrimitive& prim, const Vec3& p, double h = 1e-6) {
    Vec3 g;
    for (int i = 0; i < 3; ++i) {
        Vec3 pp = p, pm = p;
        pp[i] += h;
        pm[i] -= h;
        g[i] = (sdf_primitive_query(prim, pp).distance -
                sdf_primitive_query(prim, pm).distance) / (2 * h);
    }
    return g;
}

}  // namespace

TEST_CASE("sphere basics") {
    auto s = make(PrimitiveKind::Sphere, Vec3(1, 0, 0));
    auto r = sdf_primitive_query(s, Vec3(0, 0, 2));
    CHECK(r.distance == doctest::Approx(1.0));
    CHECK((r.gradient - Vec3(0, 0, 1)).norm() < 1e-12);
    auto c = sdf_primitive_query(s, Vec3(0, 0, 0));
    CHECK(c.distance == doctest::Approx(-1.0));
    CHECK((c.gradient - Vec3(1, 0, 0)).norm() < 1e-12);  // center tie-break
}

TEST_CASE("box basics") {
    auto b = make(PrimitiveKind::Box, Vec3(1, 1, 1));
    auto r = sdf_primitive_query(b, Vec3(2, 0, 0));
    CHECK(r.distance == doctest::Approx(1.0));
    CHECK((r.gradient - Vec3(1, 0, 0)).norm() < 1e-12);
    // Corner region.
    auto corner = sdf_primitive_query(b, Vec3(2, 2, 2));
    CHECK(corner.distance == doctest::Approx(std::sqrt(3.0)));
    CHECK((corner.gradient - Vec3(1, 1, 1).normalized()).norm() < 1e-12);
    // Interior: nearest face decides; tie at the center goes to axis 0.
    auto inside = sdf_primitive_query(b, Vec3(0.5, 0.1, -0.2));
    CHECK(inside.distance == doctest::Approx(-0.5));
    CHECK((inside.gradient - Vec3(1, 0, 0)).norm() < 1e-12);
    auto center = sdf_primitive_query(b, Vec3(0, 0, 0));
    CHECK(center.distance == doctest::Approx(-1.0));
    CHECK((center.gradient - Vec3(1, 0, 0)).norm() < 1e-12);
    // Asymmetric half extents.
    auto flat = make(PrimitiveKind::Box, Vec3(2, 1, 0.5));
    auto in2 = sdf_primitive_query(flat, Vec3(0, 0, -0.4));
    CHECK(in2.distance == doctest::Approx(-0.1));
    CHECK((in2.gradient - Vec3(0, 0, -1)).norm() < 1e-12);
}

TEST_CASE("cylinder basics") {
    auto c = make(PrimitiveKind::Cylinder, Vec3(1, 1, 0));
    auto side = sdf_primitive_query(c, Vec3(2, 0, 0));
    CHECK(side.distance == doctest::Approx(1.0));
    CHECK((side.gradient - Vec3(1, 0, 0)).norm() < 1e-12);
    auto cap = sdf_primitive_query(c, Vec3(0, 0, 2));
    CHECK(cap.distance == doctest::Approx(1.0));
    CHECK((cap.gradient - Vec3(0, 0, 1)).norm() < 1e-12);
    auto corner = sdf_primitive_query(c, Vec3(2, 0, 2));
    CHECK(corner.distance == doctest::Approx(std::sqrt(2.0)));
    CHECK((corner.gradient - Vec3(1, 0, 1).normalized()).norm() < 1e-12);
    auto inside = sdf_primitive_query(c, Vec3(0.9, 0, 0));
    CHECK(inside.distance == doctest::Approx(-0.1));
    CHECK((inside.gradient - Vec3(1, 0, 0)).norm() < 1e-12);
    auto near_cap = sdf_primitive_query(c, Vec3(0.1, 0, 0.95));
    CHECK(near_cap.distance == doctest::Approx(-0.05));
    CHECK((near_cap.gradient - Vec3(0, 0, 1)).norm() < 1e-12);
}

TEST_CASE("capsule basics") {
    auto c = make(PrimitiveKind::Capsule, Vec3(0.5, 1, 0));
    auto tip = sdf_primitive_query(c, Vec3(0, 0, 2));
    CHECK(tip.distance == doctest::Approx(0.5));
    CHECK((tip.gradient - Vec3(0, 0, 1)).norm() < 1e-12);
    auto side = sdf_primitive_query(c, Vec3(1, 0, 0.5));
    CHECK(side.distance == doctest::Approx(0.5));
    CHECK((side.gradient - Vec3(1, 0, 0)).norm() < 1e-12);
    auto axis = sdf_primitive_query(c, Vec3(0, 0, 0.3));
    CHECK(axis.distance == doctest::Approx(-0.5));
    CHECK((axis.gradient - Vec3(1, 0, 0)).norm() < 1e-12);  // axis tie-break
}

TEST_CASE("rigid transform moves the field") {
    std::mt19937_64 rng(11);
    Vec4 q = random_unit_quat(rng);
    Vec3 t(0.3, -0.2, 0.5);
    auto s = make(PrimitiveKind::Sphere, Vec3(0.25, 0, 0), t, q);
    // A sphere is rotation-invariant: distance depends only on |p - t|.
    Vec3 p(0.5, 0.1, 0.9);
    auto r = sdf_primitive_query(s, p);
    CHECK(r.distance == doctest::Approx((p - t).norm() - 0.25));
    CHECK((r.gradient - (p - t).normalized()).norm() < 1e-9);
    // A rotated box: query at the transformed face center.
    auto b = make(PrimitiveKind::Box, Vec3(0.1, 0.2, 0.3), t, q);
    Eigen::Matrix3d rot = rotation_matrix(q);
    Vec3 face_out = rot * Vec3(0.1 + 0.05, 0, 0) + t;
    auto rb = sdf_primitive_query(b, face_out);
    CHECK(rb.distance == doctest::Approx(0.05));
    CHECK((rb.gradient - rot * Vec3(1, 0, 0)).norm() < 1e-9);
}

TEST_CASE("analytic gradients match finite differences") {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    auto check_prim = [&](const SdfPrimitive& prim, auto&& accept) {
        int tested = 0;
        while (tested < 60) {
            Vec3 p(u(rng), u(rng), u(rng));
            if (!accept(p)) continue;
            Vec3 g = sdf_primitive_query(prim, p).gradient;
            Vec3 fd = fd_gradient(prim, p);
            REQUIRE((g - fd).norm() < 2e-5);
            ++tested;
        }
    };

    std::mt19937_64 trng(5);
    Vec4 q = random_unit_quat(trng);
    Vec3 t(0.1, 0.2, -0.1);
    Eigen::Matrix3d rot = rotation_matrix(q);
    auto to_local = [&](const Vec3& p) { return (rot.transpose() * (p - t)).eval(); };

    auto sph = make(PrimitiveKind::Sphere, Vec3(0.7, 0, 0), t, q);
    check_prim(sph, [&](const Vec3& p) { return to_local(p).norm() > 0.05; });

    auto cap = make(PrimitiveKind::Capsule, Vec3(0.4, 0.8, 0), t, q);
    check_prim(cap, [&](const Vec3& p) {
        Vec3 l = to_local(p);
        double a = std::min(std::max(l.z(), -0.8), 0.8);
        return (l - Vec3(0, 0, a)).norm() > 0.05;
    });

    auto box = make(PrimitiveKind::Box, Vec3(0.8, 0.6, 0.4), t, q);
    check_prim(box, [&](const Vec3& p) {
        Vec3 l = to_local(p);
        for (int i = 0; i < 3; ++i)
            if (std::abs(l[i]) < 1e-2) return false;  // sign-flip planes
        Vec3 qv = l.cwiseAbs() - Vec3(0.8, 0.6, 0.4);
        // Reject face/edge grazing and interior near-ties between faces.
        int pos = 0;
        for (int i = 0; i < 3; ++i) {
            if (std::abs(qv[i]) < 1e-2) return false;
            if (qv[i] > 0) ++pos;
        }
        if (pos == 0) {
            double a = std::max({qv[0], qv[1], qv[2]});
            int near = 0;
            for (int i = 0; i < 3; ++i)
                if (a - qv[i] < 1e-2) ++near;
            if (near > 1) return false;
        }
        return true;
    });

    auto cyl = make(PrimitiveKind::Cylinder, Vec3(0.6, 0.5, 0), t, q);
    check_prim(cyl, [&](const Vec3& p) {
        Vec3 l = to_local(p);
        double rho = std::hypot(l.x(), l.y());
        if (rho < 0.05 || std::abs(l.z()) < 1e-2) return false;
        double d_rad = rho - 0.6, d_cap = std::abs(l.z()) - 0.5;
        return std::abs(d_rad - d_cap) > 1e-2 &&
               std::abs(d_rad) > 1e-3 && std::abs(d_cap) > 1e-3;
    });
}

TEST_CASE("assembly min-combination and tie-break") {
    ObjectModel obj;
    obj.name = "twin";
    obj.primitives.push_back(make(PrimitiveKind::Sphere, Vec3(0.5, 0, 0), Vec3(-1, 0, 0)));
    obj.primitives.push_back(make(PrimitiveKind::Sphere, Vec3(0.5, 0, 0), Vec3(1, 0, 0)));
    auto near_left = sdf_query_indexed(obj, Vec3(-1.2, 0, 0));
    CHECK(near_left.primitive == 0);
    CHECK(near_left.distance == doctest::Approx(-0.3));
    auto near_right = sdf_query_indexed(obj, Vec3(0.8, 0, 0));
    CHECK(near_right.primitive == 1);
    // Equidistant midpoint: lowest index wins.
    auto mid = sdf_query_indexed(obj, Vec3(0, 0, 0));
    CHECK(mid.primitive == 0);
    CHECK(mid.distance == doctest::Approx(0.5));
    CHECK((mid.gradient - Vec3(1, 0, 0)).norm() < 1e-12);

    ObjectModel empty;
    CHECK_THROWS_AS(sdf_query(empty, Vec3(0, 0, 0)), HoiError);
}

TEST_CASE("closest affordance point") {
    ObjectModel obj;
    obj.name = "pts";
    obj.primitives.push_back(make(PrimitiveKind::Sphere, Vec3(1, 0, 0)));
    obj.points = {Vec3(0, 0, 0), Vec3(0, 0, 1), Vec3(1, 0, 0)};
    obj.point_part = {0, 0, 0};

    auto [idx, pos] = closest_affordance_point(obj, {0, 1}, Vec3(0, 0, 0.9));
    CHECK(idx == 1);
    CHECK((pos - Vec3(0, 0, 1)).norm() < 1e-12);

    auto [sidx, spos] = closest_affordance_point(obj, {2}, Vec3(5, 5, 5));
    CHECK(sidx == 2);

    // Equidistant pair: lower index wins.
    auto [tidx, tpos] = closest_affordance_point(obj, {1, 2}, Vec3(0.5, 0, 0.5));
    CHECK(tidx == 1);

    CHECK_THROWS_AS(closest_affordance_point(obj, {}, Vec3(0, 0, 0)), HoiError);

    // Returned distance is a lower bound over the region (exhaustive check).
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2, 2);
    std::vector<int> region = {0, 1, 2};
    for (int k = 0; k < 50; ++k) {
        Vec3 p(u(rng), u(rng), u(rng));
        auto [bi, bp] = closest_affordance_point(obj, region, p);
        for (int idx2 : region)
            CHECK((bp - p).norm() <= (obj.points[static_cast<size_t>(idx2)] - p).norm() + 1e-15);
    }
}

TEST_CASE("object features layout") {
    ObjectModel obj;
    obj.name = "feat";
    obj.primitives.push_back(make(PrimitiveKind::Sphere, Vec3(1, 0, 0)));
    obj.points = {Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(0, 4, 0), Vec3(2, 4, 6)};
    obj.point_part = {0, 0, 3, 3};
    obj.part_catalog = {{0, "body"}, {3, "cap"}};

    VecX f = object_features(obj);
    REQUIRE(f.size() == kObjectFeatureDim);
    CHECK((f.segment<3>(0) - Vec3(1, 2, 1.5)).norm() < 1e-12);   // centroid
    CHECK((f.segment<3>(3) - Vec3(2, 4, 6)).norm() < 1e-12);     // extents
    CHECK((f.segment<3>(6) - Vec3(1, 0, 0)).norm() < 1e-12);     // part 0 centroid
    CHECK((f.segment<3>(9) - Vec3(1, 4, 3)).norm() < 1e-12);     // part 3 centroid
    CHECK(f.tail(kObjectFeatureDim - 12).norm() == 0.0);         // zero padding
}

TEST_CASE("posed queries rotate the gradient") {
    ObjectModel obj;
    obj.name = "posed";
    obj.primitives.push_back(make(PrimitiveKind::Box, Vec3(0.1, 0.2, 0.3)));
    ObjectPose pose;
    pose.position = Vec3(1, 2, 3);
    std::mt19937_64 rng(17);
    pose.orientation = random_unit_quat(rng);
    Eigen::Matrix3d rot = rotation_matrix(pose.orientation);

    Vec3 p_obj(0.1 + 0.07, 0, 0);
    Vec3 p_world = rot * p_obj + pose.position;
    auto r = sdf_query_posed(obj, pose, p_world);
    CHECK(r.distance == doctest::Approx(0.07));
    CHECK((r.gradient - rot * Vec3(1, 0, 0)).norm() < 1e-9);

    CHECK((world_to_object(pose, object_to_world(pose, p_obj)) - p_obj).norm() < 1e-12);
}

TEST_CASE("primitive kind names round trip") {
    for (int i = 0; i < 4; ++i) {
        auto k = static_cast<PrimitiveKind>(i);
        CHECK(primitive_kind_from_name(primitive_kind_name(k)) == k);
    }
    CHECK_THROWS_AS(primitive_kind_from_name("torus"), HoiError);
}

TEST_SUITE_END();
