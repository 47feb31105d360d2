// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "hoiforge/types.hpp"

#include <random>

using namespace hoiforge;

TEST_SUITE_BEGIN("types");

namespace {

HoiSequence random_sequence(int frames, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    HoiSequence seq;
    seq.fps = 30.0;
    seq.frames.resize(static_cast<size_t>(frames));
    for (auto& fr : seq.frames) {
        for (int j = 0; j < kNumJoints; ++j) {
            fr.left.joints[j] = Vec3(gauss(rng), gauss(rng), gauss(rng));
            fr.right.joints[j] = Vec3(gauss(rng), gauss(rng), gauss(rng));
        }
        for (int c = 0; c < 4; ++c) {
            fr.left.wrist_orientation[c] = gauss(rng);
            fr.right.wrist_orientation[c] = gauss(rng);
            fr.object.orientation[c] = gauss(rng);
        }
        fr.object.position = Vec3(gauss(rng), gauss(rng), gauss(rng));
    }
    return seq;
}

}  // namespace

TEST_CASE("frame layout constants") {
    CHECK(kFrameDim == 141);
    CHECK(kAgentDim == 67);
    CHECK(kLeftOffset == 0);
    CHECK(kRightOffset == 67);
    CHECK(kObjectOffset == 134);
    // A 2-frame sequence flattens to 282 scalars.
    HoiSequence seq = random_sequence(2, 7);
    CHECK(flatten(seq).size() == 282);
}

TEST_CASE("flatten/unflatten round trip is exact") {
    HoiSequence seq = random_sequence(5, 42);
    VecX flat = flatten(seq);
    HoiSequence back = unflatten(flat, 5, seq.fps);
    REQUIRE(back.num_frames() == 5);
    VecX flat2 = flatten(back);
    REQUIRE(flat2.size() == flat.size());
    for (Eigen::Index i = 0; i < flat.size(); ++i) CHECK(flat[i] == flat2[i]);
}

TEST_CASE("flat index helpers agree with flatten") {
    HoiSequence seq = random_sequence(3, 9);
    VecX flat = flatten(seq);
    const HoiFrame& fr = seq.frames[1];
    CHECK(flat[flat_joint_index(1, Hands::Left, 0, 0)] == fr.left.joints[0].x());
    CHECK(flat[flat_joint_index(1, Hands::Left, 20, 2)] == fr.left.joints[20].z());
    CHECK(flat[flat_joint_index(1, Hands::Right, 4, 1)] == fr.right.joints[4].y());
    CHECK(flat[flat_wrist_quat_index(1, Hands::Left, 0)] == fr.left.wrist_orientation[0]);
    CHECK(flat[flat_wrist_quat_index(1, Hands::Right, 3)] == fr.right.wrist_orientation[3]);
    CHECK(flat[flat_object_pos_index(1, 2)] == fr.object.position.z());
    CHECK(flat[flat_object_quat_index(1, 0)] == fr.object.orientation[0]);
}

TEST_CASE("unflatten rejects size mismatch") {
    VecX flat = VecX::Zero(10);
    CHECK_THROWS_AS(unflatten(flat, 1), HoiError);
}

TEST_CASE("joint radii and groups") {
    CHECK(joint_radius(0) == doctest::Approx(0.008));
    for (int tip : kFingertipJoints) CHECK(joint_radius(tip) == doctest::Approx(0.006));
    CHECK(is_fingertip(4));
    CHECK(!is_fingertip(3));
    CHECK(kContactJoints[0] == 0);
}

TEST_CASE("action and hands name round trip") {
    for (int i = 0; i < kNumActions; ++i) {
        auto a = static_cast<ActionType>(i);
        CHECK(action_from_name(action_name(a)) == a);
    }
    for (int i = 0; i < kNumHandModes; ++i) {
        auto h = static_cast<Hands>(i);
        CHECK(hands_from_name(hands_name(h)) == h);
    }
    CHECK_THROWS_AS(action_from_name("warp"), HoiError);
    CHECK(task_embedding_id(ActionType::Grasp, Hands::Both) == 5);
    CHECK(task_embedding_id(ActionType::Push, Hands::Both) == 23);
}

TEST_CASE("quaternion helpers") {
    Vec4 q(0.2, -0.4, 0.7, 0.5);
    Vec4 p(1.0, 0.3, -0.2, 0.9);
    Vec4 prod = quat_mul(q, p);
    // Against Eigen's Hamilton product.
    Quat eq = vec4_to_quat(q) * vec4_to_quat(p);
    CHECK(prod[0] == doctest::Approx(eq.w()).epsilon(1e-12));
    CHECK(prod[1] == doctest::Approx(eq.x()).epsilon(1e-12));
    CHECK(prod[2] == doctest::Approx(eq.y()).epsilon(1e-12));
    CHECK(prod[3] == doctest::Approx(eq.z()).epsilon(1e-12));
    // Right-matrix form matches.
    Vec4 prod2 = quat_right_matrix(p) * q;
    CHECK((prod - prod2).norm() < 1e-14);
}

TEST_CASE("geodesic angle derivative near c=1 stays finite") {
    CHECK(geodesic_angle_sq(1.0) == doctest::Approx(0.0));
    CHECK(geodesic_angle_sq_dc(1.0) == doctest::Approx(-8.0));
    // Finite difference check away from the pole.
    const double c = 0.6, h = 1e-7;
    const double fd = (geodesic_angle_sq(c + h) - geodesic_angle_sq(c - h)) / (2 * h);
    CHECK(geodesic_angle_sq_dc(c) == doctest::Approx(fd).epsilon(1e-5));
    // Approaching the pole from below converges to the limit.
    CHECK(geodesic_angle_sq_dc(1.0 - 1e-9) == doctest::Approx(-8.0).epsilon(1e-3));
}

TEST_CASE("normalize jacobian matches finite differences") {
    Vec4 v(0.8, -1.2, 0.5, 2.0);
    Eigen::Matrix4d jac = normalize_jacobian(v);
    const double h = 1e-7;
    for (int i = 0; i < 4; ++i) {
        Vec4 vp = v, vm = v;
        vp[i] += h;
        vm[i] -= h;
        Vec4 col = (vp.normalized() - vm.normalized()) / (2 * h);
        for (int r = 0; r < 4; ++r)
            CHECK(jac(r, i) == doctest::Approx(col[r]).epsilon(1e-5));
    }
}

TEST_SUITE_END();
