// SPDX-License-Identifier: Apache-2.0
#include "hoiforge/json_io.hpp"

#include <fstream>

namespace hoiforge {

namespace {

Json vec3_to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }
Vec3 vec3_from_json(const Json& j) { return Vec3(j.at(0), j.at(1), j.at(2)); }
Json vec4_to_json(const Vec4& v) { return Json::array({v[0], v[1], v[2], v[3]}); }
Vec4 vec4_from_json(const Json& j) { return Vec4(j.at(0), j.at(1), j.at(2), j.at(3)); }

Json hand_to_json(const HandPose& h) {
    Json joints = Json::array();
    for (const Vec3& p : h.joints) joints.push_back(vec3_to_json(p));
    return Json{{"joints", joints}, {"wrist_quat", vec4_to_json(h.wrist_orientation)}};
}

HandPose hand_from_json(const Json& j) {
    HandPose h;
    const Json& joints = j.at("joints");
    if (joints.size() != kNumJoints)
        throw HoiError("hand pose needs " + std::to_string(kNumJoints) + " joints");
    for (int i = 0; i < kNumJoints; ++i)
        h.joints[static_cast<size_t>(i)] = vec3_from_json(joints.at(static_cast<size_t>(i)));
    h.wrist_orientation = vec4_from_json(j.at("wrist_quat"));
    return h;
}

}  // namespace

void require_schema(const Json& j, const std::string& expected_type) {
    if (!j.is_object()) throw HoiError("expected a JSON object for " + expected_type);
    if (!j.contains("schema") || j.at("schema").get<int>() != kSchemaVersion)
        throw HoiError("missing or unsupported schema version for " + expected_type);
    if (!j.contains("type") || j.at("type").get<std::string>() != expected_type)
        throw HoiError("expected type '" + expected_type + "'");
}

Json sequence_to_json(const HoiSequence& seq) {
    Json frames = Json::array();
    for (const HoiFrame& fr : seq.frames) {
        frames.push_back(Json{{"left", hand_to_json(fr.left)},
                              {"right", hand_to_json(fr.right)},
                              {"object",
                               Json{{"position", vec3_to_json(fr.object.position)},
                                    {"quat", vec4_to_json(fr.object.orientation)}}}});
    }
    return Json{{"schema", kSchemaVersion},
                {"type", "hoi_sequence"},
                {"fps", seq.fps},
                {"frames", frames}};
}

HoiSequence sequence_from_json(const Json& j) {
    require_schema(j, "hoi_sequence");
    HoiSequence seq;
    seq.fps = j.at("fps").get<double>();
    for (const Json& fj : j.at("frames")) {
        HoiFrame fr;
        fr.left = hand_from_json(fj.at("left"));
        fr.right = hand_from_json(fj.at("right"));
        fr.object.position = vec3_from_json(fj.at("object").at("position"));
        fr.object.orientation = vec4_from_json(fj.at("object").at("quat"));
        seq.frames.push_back(fr);
    }
    return seq;
}

Json object_to_json(const ObjectModel& obj) {
    Json prims = Json::array();
    for (const SdfPrimitive& p : obj.primitives) {
        prims.push_back(Json{{"kind", primitive_kind_name(p.kind)},
                             {"rotation", vec4_to_json(p.rotation)},
                             {"translation", vec3_to_json(p.translation)},
                             {"params", vec3_to_json(p.params)},
                             {"part_label", p.part_label}});
    }
    Json points = Json::array();
    for (const Vec3& p : obj.points) points.push_back(vec3_to_json(p));
    Json catalog = Json::object();
    for (const auto& [label, name] : obj.part_catalog)
        catalog[std::to_string(label)] = name;
    return Json{{"schema", kSchemaVersion}, {"type", "object_model"},
                {"name", obj.name},         {"primitives", prims},
                {"points", points},         {"point_part", obj.point_part},
                {"part_catalog", catalog}};
}

ObjectModel object_from_json(const Json& j) {
    require_schema(j, "object_model");
    ObjectModel obj;
    obj.name = j.at("name").get<std::string>();
    for (const Json& pj : j.at("primitives")) {
        SdfPrimitive p;
        p.kind = primitive_kind_from_name(pj.at("kind").get<std::string>());
        p.rotation = vec4_from_json(pj.at("rotation"));
        p.translation = vec3_from_json(pj.at("translation"));
        p.params = vec3_from_json(pj.at("params"));
        p.part_label = pj.at("part_label").get<int>();
        obj.primitives.push_back(p);
    }
    for (const Json& pj : j.at("points")) obj.points.push_back(vec3_from_json(pj));
    obj.point_part = j.at("point_part").get<std::vector<int>>();
    for (const auto& [key, val] : j.at("part_catalog").items())
        obj.part_catalog[std::stoi(key)] = val.get<std::string>();
    return obj;
}

Json affordance_to_json(const AffordanceMap& aff) {
    return Json{{"schema", kSchemaVersion},
                {"type", "affordance_map"},
                {"scores", vecx_to_json(aff.scores)},
                {"active_left", aff.active_left},
                {"active_right", aff.active_right}};
}

AffordanceMap affordance_from_json(const Json& j) {
    require_schema(j, "affordance_map");
    AffordanceMap aff;
    aff.scores = vecx_from_json(j.at("scores"));
    aff.active_left = j.at("active_left").get<std::vector<int>>();
    aff.active_right = j.at("active_right").get<std::vector<int>>();
    return aff;
}

Json subtask_to_json(const SubTask& st) {
    return Json{{"action", action_name(st.action)},
                {"target_part", st.target_part},
                {"hands", hands_name(st.hands)},
                {"embedding_id", st.embedding_id},
                {"duration_frames", st.duration_frames}};
}

SubTask subtask_from_json(const Json& j) {
    SubTask st;
    st.action = action_from_name(j.at("action").get<std::string>());
    st.target_part = j.at("target_part").get<std::string>();
    st.hands = hands_from_name(j.at("hands").get<std::string>());
    st.embedding_id = j.at("embedding_id").get<int>();
    st.duration_frames = j.at("duration_frames").get<int>();
    if (st.duration_frames <= 0) throw HoiError("subtask duration must be positive");
    return st;
}

Json schedule_to_json(const NoiseSchedule& s) {
    return Json{{"schema", kSchemaVersion}, {"type", "noise_schedule"},
                {"T", s.T},                 {"offset", s.offset},
                {"alpha", vecx_to_json(s.alpha)},
                {"alpha_bar", vecx_to_json(s.alpha_bar)},
                {"beta", vecx_to_json(s.beta)},
                {"sigma", vecx_to_json(s.sigma)}};
}

NoiseSchedule schedule_from_json(const Json& j) {
    require_schema(j, "noise_schedule");
    NoiseSchedule s;
    s.T = j.at("T").get<int>();
    s.offset = j.at("offset").get<double>();
    s.alpha = vecx_from_json(j.at("alpha"));
    s.alpha_bar = vecx_from_json(j.at("alpha_bar"));
    s.beta = vecx_from_json(j.at("beta"));
    s.sigma = vecx_from_json(j.at("sigma"));
    if (s.alpha.size() != s.T || s.alpha_bar.size() != s.T || s.beta.size() != s.T ||
        s.sigma.size() != s.T)
        throw HoiError("noise_schedule: array lengths disagree with T");
    return s;
}

Json vecx_to_json(const VecX& v) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

VecX vecx_from_json(const Json& j) {
    VecX v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j.at(i).get<double>();
    return v;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw HoiError("cannot open " + path);
    Json j;
    in >> j;
    return j;
}

void write_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw HoiError("cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace hoiforge
