// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "hoiforge/json_io.hpp"

#include <random>

using namespace hoiforge;

TEST_SUITE_BEGIN("json");

namespace {

HoiSequence random_sequence(int frames, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    HoiSequence seq;
    seq.fps = 30.0;
    seq.frames.resize(static_cast<size_t>(frames));
    for (auto& fr : seq.frames) {
        for (int j = 0; j < kNumJoints; ++j) {
            fr.left.joints[j] = Vec3(g(rng), g(rng), g(rng));
            fr.right.joints[j] = Vec3(g(rng), g(rng), g(rng));
        }
        for (int c = 0; c < 4; ++c) {
            fr.left.wrist_orientation[c] = g(rng);
            fr.right.wrist_orientation[c] = g(rng);
            fr.object.orientation[c] = g(rng);
        }
        fr.object.position = Vec3(g(rng), g(rng), g(rng));
    }
    return seq;
}

}  // namespace

TEST_CASE("sequence round trip is bit exact through text") {
    HoiSequence seq = random_sequence(4, 21);
    Json j = sequence_to_json(seq);
    // Force a serialize/parse cycle so double formatting is exercised.
    Json j2 = Json::parse(j.dump());
    HoiSequence back = sequence_from_json(j2);
    VecX a = flatten(seq), b = flatten(back);
    REQUIRE(a.size() == b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    CHECK(back.fps == seq.fps);
}

TEST_CASE("schema envelope is enforced") {
    HoiSequence seq = random_sequence(1, 3);
    Json j = sequence_to_json(seq);
    CHECK(j.at("schema") == 1);
    Json wrong_type = j;
    wrong_type["type"] = "object_model";
    CHECK_THROWS_AS(sequence_from_json(wrong_type), HoiError);
    Json wrong_version = j;
    wrong_version["schema"] = 2;
    CHECK_THROWS_AS(sequence_from_json(wrong_version), HoiError);
    Json missing = j;
    missing.erase("schema");
    CHECK_THROWS_AS(sequence_from_json(missing), HoiError);
}

TEST_CASE("object model round trip") {
    ObjectModel obj;
    obj.name = "bottle";
    SdfPrimitive body;
    body.kind = PrimitiveKind::Cylinder;
    body.params = Vec3(0.035, 0.1, 0);
    body.part_label = 0;
    SdfPrimitive cap;
    cap.kind = PrimitiveKind::Cylinder;
    cap.params = Vec3(0.015, 0.012, 0);
    cap.translation = Vec3(0, 0, 0.112);
    cap.rotation = Vec4(0.96, 0.28, 0, 0);
    cap.part_label = 1;
    obj.primitives = {body, cap};
    obj.points = {Vec3(0.035, 0, 0), Vec3(0, 0.035, 0.05)};
    obj.point_part = {0, 0};
    obj.part_catalog = {{0, "body"}, {1, "cap"}};

    ObjectModel back = object_from_json(Json::parse(object_to_json(obj).dump()));
    CHECK(back.name == obj.name);
    REQUIRE(back.primitives.size() == 2);
    CHECK(back.primitives[1].kind == PrimitiveKind::Cylinder);
    CHECK((back.primitives[1].rotation - cap.rotation).norm() == 0.0);
    CHECK((back.primitives[1].translation - cap.translation).norm() == 0.0);
    CHECK((back.primitives[1].params - cap.params).norm() == 0.0);
    CHECK(back.primitives[1].part_label == 1);
    REQUIRE(back.points.size() == 2);
    CHECK((back.points[1] - obj.points[1]).norm() == 0.0);
    CHECK(back.point_part == obj.point_part);
    CHECK(back.part_catalog == obj.part_catalog);
}

TEST_CASE("affordance and subtask round trip") {
    AffordanceMap aff;
    aff.scores = VecX::LinSpaced(8, 0.0, 1.0);
    aff.active_left = {5, 6};
    aff.active_right = {7};
    AffordanceMap aback = affordance_from_json(Json::parse(affordance_to_json(aff).dump()));
    CHECK((aback.scores - aff.scores).norm() == 0.0);
    CHECK(aback.active_left == aff.active_left);
    CHECK(aback.active_right == aff.active_right);

    SubTask st;
    st.action = ActionType::Twist;
    st.target_part = "cap";
    st.hands = Hands::Right;
    st.embedding_id = task_embedding_id(st.action, st.hands);
    st.duration_frames = 150;
    SubTask sback = subtask_from_json(subtask_to_json(st));
    CHECK(sback.action == st.action);
    CHECK(sback.target_part == st.target_part);
    CHECK(sback.hands == st.hands);
    CHECK(sback.embedding_id == st.embedding_id);
    CHECK(sback.duration_frames == st.duration_frames);

    Json bad = subtask_to_json(st);
    bad["duration_frames"] = 0;
    CHECK_THROWS_AS(subtask_from_json(bad), HoiError);
}

TEST_CASE("noise schedule round trip is bit exact") {
    NoiseSchedule s = cosine_schedule(250, 0.008);
    NoiseSchedule back = schedule_from_json(Json::parse(schedule_to_json(s).dump()));
    CHECK(back.T == s.T);
    CHECK(back.offset == s.offset);
    for (int t = 1; t <= s.T; ++t) {
        CHECK(back.alpha_t(t) == s.alpha_t(t));
        CHECK(back.alpha_bar_t(t) == s.alpha_bar_t(t));
        CHECK(back.beta_t(t) == s.beta_t(t));
        CHECK(back.sigma_t(t) == s.sigma_t(t));
    }
    Json trunc = schedule_to_json(s);
    trunc["alpha"].erase(0);
    CHECK_THROWS_AS(schedule_from_json(trunc), HoiError);
}

TEST_CASE("file helpers") {
    Json j{{"schema", 1}, {"type", "noise_schedule"}};
    const std::string path = "/tmp/hoiforge_json_test.json";
    write_json_file(path, j);
    Json back = read_json_file(path);
    CHECK(back == j);
    CHECK_THROWS_AS(read_json_file("/nonexistent/nope.json"), HoiError);
}

TEST_SUITE_END();
