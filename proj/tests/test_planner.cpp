// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "hoiforge/planner.hpp"

#include <fstream>
#include <set>

using namespace hoiforge;

TEST_SUITE_BEGIN("planner");

namespace {

std::string asset_path(const std::string& name) {
    return std::string(HOIFORGE_ASSET_DIR) + "/" + name;
}

const InstructionGrammar& default_grammar() {
    static const InstructionGrammar g = load_grammar(asset_path("default_grammar.json"));
    return g;
}

// Four points per part in a small cross around each center; centers are far
// enough apart (>= 4 cm) that the 2 cm score decay never activates a
// neighboring part.
ObjectModel corpus_object(const std::string& kind) {
    std::vector<std::pair<std::string, Vec3>> parts;
    if (kind == "bottle")
        parts = {{"cap", {0, 0, 0.10}}, {"body", {0, 0, 0.02}}};
    else if (kind == "box")
        parts = {{"lid", {0, 0, 0.06}}, {"body", {0, 0, 0.0}}};
    else if (kind == "mug")
        parts = {{"handle", {0.06, 0, 0.03}}, {"body", {0, 0, 0.03}}};
    else if (kind == "kettle")
        parts = {{"lid", {0, 0, 0.09}},
                 {"handle", {0.07, 0, 0.04}},
                 {"spout", {-0.07, 0, 0.04}},
                 {"body", {0, 0, 0.02}}};
    else
        throw HoiError("unknown corpus object kind: " + kind);

    ObjectModel obj;
    obj.name = kind;
    SdfPrimitive s;
    s.kind = PrimitiveKind::Sphere;
    s.params = Vec3(0.04, 0, 0);
    obj.primitives = {s};
    const Vec3 arms[4] = {{0.01, 0, 0}, {-0.01, 0, 0}, {0, 0.01, 0}, {0, -0.01, 0}};
    for (int label = 0; label < static_cast<int>(parts.size()); ++label) {
        obj.part_catalog[label] = parts[static_cast<size_t>(label)].first;
        for (const Vec3& arm : arms) {
            obj.points.push_back(parts[static_cast<size_t>(label)].second + arm);
            obj.point_part.push_back(label);
        }
    }
    return obj;
}

SubTask task_of(ActionType action, const std::string& part, Hands hands) {
    SubTask st;
    st.action = action;
    st.target_part = part;
    st.hands = hands;
    return st;
}

}  // namespace

TEST_CASE("ground_affordance scores and active sets") {
    ObjectModel obj;
    obj.name = "probe";
    SdfPrimitive s;
    s.kind = PrimitiveKind::Sphere;
    s.params = Vec3(0.05, 0, 0);
    obj.primitives = {s};
    obj.points = {Vec3(0, 0, 0), Vec3(0.01, 0, 0), Vec3(0.013, 0, 0), Vec3(0.015, 0, 0),
                  Vec3(0.2, 0, 0)};
    obj.point_part = {0, 1, 1, 1, 1};
    obj.part_catalog = {{0, "cap"}, {1, "body"}};

    AffordanceMap aff = ground_affordance(obj, task_of(ActionType::Grasp, "cap", Hands::Right));
    REQUIRE(aff.scores.size() == 5);
    CHECK(aff.scores[0] == 1.0);  // part point
    CHECK(aff.scores[1] == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    CHECK(aff.scores[2] == doctest::Approx(std::exp(-0.65)).epsilon(1e-12));
    CHECK(aff.scores[4] == doctest::Approx(std::exp(-10.0)).epsilon(1e-9));
    for (int i = 0; i < 5; ++i) {
        CHECK(aff.scores[i] >= 0.0);
        CHECK(aff.scores[i] <= 1.0);
    }
    // Active set: scores >= 0.5 are the part point, the 1.0 cm and 1.3 cm
    // neighbors; the 1.5 cm neighbor decays to 0.47 and stays out.
    CHECK(aff.active_right == std::vector<int>{0, 1, 2});
    CHECK(aff.active_left.empty());

    AffordanceMap left = ground_affordance(obj, task_of(ActionType::Grasp, "cap", Hands::Left));
    CHECK(left.active_left == std::vector<int>{0, 1, 2});
    CHECK(left.active_right.empty());
    CHECK((left.scores - aff.scores).norm() == 0.0);

    CHECK_THROWS_AS(ground_affordance(obj, task_of(ActionType::Grasp, "spout", Hands::Right)),
                    UngroundablePart);
    ObjectModel empty_part = obj;
    empty_part.part_catalog[2] = "ghost";  // declared but has no points
    CHECK_THROWS_AS(
        ground_affordance(empty_part, task_of(ActionType::Grasp, "ghost", Hands::Right)),
        UngroundablePart);
}

TEST_CASE("ground_affordance both-hand split") {
    ObjectModel obj;
    obj.name = "bar";
    SdfPrimitive s;
    s.kind = PrimitiveKind::Sphere;
    s.params = Vec3(0.05, 0, 0);
    obj.primitives = {s};
    // A 4 cm bar along x: the first principal axis is x, canonicalized to +x.
    obj.points = {Vec3(-0.02, 0, 0), Vec3(-0.01, 0, 0), Vec3(0.01, 0, 0), Vec3(0.02, 0, 0)};
    obj.point_part = {0, 0, 0, 0};
    obj.part_catalog = {{0, "body"}};

    AffordanceMap both = ground_affordance(obj, task_of(ActionType::Grasp, "body", Hands::Both));
    // Positive side of the axis goes left; the sides partition the active set.
    CHECK(both.active_left == std::vector<int>{2, 3});
    CHECK(both.active_right == std::vector<int>{0, 1});

    // Degenerate geometry (all active points coincide): index-parity fallback.
    ObjectModel dup = obj;
    dup.points = {Vec3(0, 0, 0), Vec3(0, 0, 0)};
    dup.point_part = {0, 0};
    AffordanceMap parity = ground_affordance(dup, task_of(ActionType::Grasp, "body", Hands::Both));
    CHECK(parity.active_left == std::vector<int>{0});
    CHECK(parity.active_right == std::vector<int>{1});

    // Determinism: repeated grounding gives identical maps.
    AffordanceMap again = ground_affordance(obj, task_of(ActionType::Grasp, "body", Hands::Both));
    CHECK((again.scores - both.scores).norm() == 0.0);
    CHECK(again.active_left == both.active_left);
    CHECK(again.active_right == both.active_right);
}

TEST_CASE("conditioning_scores stride resample") {
    VecX exact = VecX::LinSpaced(kCondScoreDim, 0.0, 1.0);
    CHECK((conditioning_scores(exact) - exact).norm() == 0.0);

    VecX four(4);
    four << 0.1, 0.4, 0.7, 1.0;
    const VecX wide = conditioning_scores(four);
    REQUIRE(wide.size() == kCondScoreDim);
    CHECK(wide[0] == 0.1);
    CHECK(wide[kCondScoreDim / 4] == 0.4);       // i*4/512 crosses to index 1
    CHECK(wide[kCondScoreDim / 4 - 1] == 0.1);   // last entry still on index 0
    CHECK(wide[kCondScoreDim - 1] == 1.0);

    CHECK_THROWS_AS(conditioning_scores(VecX()), HoiError);
}

TEST_CASE("paper bottle example parses to the three-step plan") {
    const ObjectModel bottle = corpus_object("bottle");
    const Plan plan = parse_instruction(
        default_grammar(), "I'm feeling thirsty, could you find a water bottle and take a sip",
        bottle);
    REQUIRE(plan.subtasks.size() == 3);
    REQUIRE(plan.aff_markers.size() == 3);
    CHECK(plan.subtasks[0].action == ActionType::Grasp);
    CHECK(plan.subtasks[0].target_part == "cap");
    CHECK(plan.subtasks[0].hands == Hands::Both);
    CHECK(plan.subtasks[1].action == ActionType::Twist);
    CHECK(plan.subtasks[1].target_part == "cap");
    CHECK(plan.subtasks[1].hands == Hands::Right);
    CHECK(plan.subtasks[2].action == ActionType::Lift);
    CHECK(plan.subtasks[2].target_part == "body");
    CHECK(plan.subtasks[2].hands == Hands::Right);
    CHECK(plan.source_instruction.substr(0, 3) == "I'm");
    for (const SubTask& st : plan.subtasks)
        CHECK(st.embedding_id == task_embedding_id(st.action, st.hands));
    // Every marker grounds on the object's own cloud.
    for (const AffordanceMap& m : plan.aff_markers)
        CHECK(m.scores.size() == bottle.num_points());
}

TEST_CASE("verb path, longest match, and hand cues") {
    const ObjectModel bottle = corpus_object("bottle");

    Plan twist = parse_instruction(default_grammar(), "unscrew the bottle cap", bottle);
    REQUIRE(twist.subtasks.size() == 1);
    CHECK(twist.subtasks[0].action == ActionType::Twist);
    CHECK(twist.subtasks[0].target_part == "cap");  // "bottle cap" beats "bottle"

    Plan lift = parse_instruction(default_grammar(), "lift the bottle with both hands", bottle);
    REQUIRE(lift.subtasks.size() == 1);
    CHECK(lift.subtasks[0].hands == Hands::Both);

    Plan two = parse_instruction(default_grammar(), "place the bottle, then release it", bottle);
    REQUIRE(two.subtasks.size() == 2);
    CHECK(two.subtasks[0].action == ActionType::Place);
    CHECK(two.subtasks[1].action == ActionType::Release);
    CHECK(two.subtasks[1].target_part == "body");  // binds backward to "bottle"

    CHECK_THROWS_AS(parse_instruction(default_grammar(), "grasp firmly", bottle),
                    UnparsableInstruction);
    CHECK_THROWS_AS(parse_instruction(default_grammar(), "calculate my taxes", bottle),
                    UnparsableInstruction);
    CHECK_THROWS_AS(parse_instruction(default_grammar(), "", bottle), UnparsableInstruction);
    // Goal template fires, but the bottle has no lid to ground on.
    CHECK_THROWS_AS(parse_instruction(default_grammar(), "open the bottle", bottle),
                    UngroundablePart);
}

TEST_CASE("parse determinism") {
    const ObjectModel mug = corpus_object("mug");
    const Plan a = parse_instruction(default_grammar(), "Pass me the mug", mug);
    const Plan b = parse_instruction(default_grammar(), "Pass me the mug", mug);
    CHECK(plan_to_json(a) == plan_to_json(b));
}

TEST_CASE("grammar json round trip and validation") {
    const InstructionGrammar& g = default_grammar();
    const Json j = grammar_to_json(g);
    const InstructionGrammar back = grammar_from_json(j);
    CHECK(grammar_to_json(back) == j);
    CHECK(back.default_hands == Hands::Right);
    CHECK(back.verbs.at("grab") == ActionType::Grasp);
    CHECK(back.part_lexicon.at("cover") == "lid");

    Json bad = j;
    bad["goals"][0]["steps"][0]["part"] = "wing";  // not in the part vocabulary
    CHECK_THROWS_AS(grammar_from_json(bad), HoiError);
    Json bad_verb = j;
    bad_verb["verbs"]["fly"] = "soar";  // unknown action name
    CHECK_THROWS_AS(grammar_from_json(bad_verb), HoiError);
    Json blank = j;
    blank["verbs"]["  "] = "grasp";
    CHECK_THROWS_AS(grammar_from_json(blank), HoiError);

    CHECK_THROWS_AS(load_grammar("/nonexistent/grammar.json"), HoiError);
}

TEST_CASE("plan json round trip") {
    const ObjectModel box = corpus_object("box");
    const Plan plan = parse_instruction(default_grammar(), "open the box", box);
    const Json j = plan_to_json(plan);
    const Plan back = plan_from_json(j);
    CHECK(plan_to_json(back) == j);
    CHECK(back.subtasks.size() == 2);
    CHECK(back.subtasks[0].target_part == "lid");
    CHECK(back.aff_markers.size() == 2);

    Json mismatched = j;
    mismatched["aff_markers"].erase(1);
    CHECK_THROWS_AS(plan_from_json(mismatched), HoiError);
    Json empty = j;
    empty["subtasks"] = Json::array();
    empty["aff_markers"] = Json::array();
    CHECK_THROWS_AS(plan_from_json(empty), HoiError);
}

TEST_CASE("instruction corpus parses to golden plans") {
    std::ifstream in(asset_path("instruction_corpus.json"));
    REQUIRE(in);
    Json corpus;
    in >> corpus;

    const Json& rows = corpus.at("rows");
    CHECK(rows.size() >= 30);

    std::set<std::string> kinds;
    int checked = 0;
    for (const Json& row : rows) {
        const std::string kind = row.at("object").get<std::string>();
        kinds.insert(kind);
        const ObjectModel obj = corpus_object(kind);
        const std::string instruction = row.at("instruction").get<std::string>();
        INFO("instruction: ", instruction);

        if (row.contains("error")) {
            const std::string want = row.at("error").get<std::string>();
            if (want == "unparsable")
                CHECK_THROWS_AS(parse_instruction(default_grammar(), instruction, obj),
                                UnparsableInstruction);
            else
                CHECK_THROWS_AS(parse_instruction(default_grammar(), instruction, obj),
                                UngroundablePart);
            ++checked;
            continue;
        }

        const Plan plan = parse_instruction(default_grammar(), instruction, obj);
        const Json& expect = row.at("expect");
        REQUIRE(plan.subtasks.size() == expect.size());
        REQUIRE(plan.aff_markers.size() == expect.size());
        for (size_t i = 0; i < plan.subtasks.size(); ++i) {
            const SubTask& st = plan.subtasks[static_cast<size_t>(i)];
            CHECK(action_name(st.action) == expect[i].at("action").get<std::string>());
            CHECK(st.target_part == expect[i].at("part").get<std::string>());
            CHECK(hands_name(st.hands) == expect[i].at("hands").get<std::string>());
            CHECK(st.embedding_id == task_embedding_id(st.action, st.hands));
        }
        ++checked;
    }
    CHECK(checked == static_cast<int>(rows.size()));
    CHECK(kinds.size() >= 4);
}

TEST_SUITE_END();
