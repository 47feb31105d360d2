// SPDX-License-Identifier: Apache-2.0
#include "hoiforge/planner.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

namespace hoiforge {

namespace {

constexpr double kDecayLength = 0.02;  // affordance score falloff, meters

// Sign convention: flip so the largest-magnitude component is positive,
// making the eigenvector choice deterministic.
Vec3 canonical_axis(const Vec3& v) {
    int arg = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
    return v[arg] < 0.0 ? Vec3(-v) : v;
}

}  // namespace

AffordanceMap ground_affordance(const ObjectModel& obj, const SubTask& subtask) {
    if (!obj.has_part(subtask.target_part))
        throw UngroundablePart("object '" + obj.name + "' has no part '" + subtask.target_part +
                               "'");
    const int label = obj.part_label_of(subtask.target_part);
    std::vector<int> part_points;
    for (int i = 0; i < obj.num_points(); ++i)
        if (obj.point_part[static_cast<size_t>(i)] == label) part_points.push_back(i);
    if (part_points.empty())
        throw UngroundablePart("part '" + subtask.target_part + "' has no surface points");

    AffordanceMap aff;
    aff.scores.resize(obj.num_points());
    std::vector<int> active;
    for (int i = 0; i < obj.num_points(); ++i) {
        double score = 1.0;
        if (obj.point_part[static_cast<size_t>(i)] != label) {
            double dist = std::numeric_limits<double>::infinity();
            for (int k : part_points)
                dist = std::min(dist, (obj.points[static_cast<size_t>(i)] -
                                       obj.points[static_cast<size_t>(k)])
                                          .norm());
            score = std::exp(-dist / kDecayLength);
        }
        aff.scores[i] = score;
        if (score >= AffordanceMap::kActiveThreshold) active.push_back(i);
    }

    if (subtask.hands == Hands::Left) {
        aff.active_left = active;
        return aff;
    }
    if (subtask.hands == Hands::Right) {
        aff.active_right = active;
        return aff;
    }

    // Both hands: bisect the active set by the part's first principal axis,
    // ties to the left; degenerate geometry falls back to index parity.
    Vec3 centroid = Vec3::Zero();
    for (int k : part_points) centroid += obj.points[static_cast<size_t>(k)];
    centroid /= static_cast<double>(part_points.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (int k : part_points) {
        const Vec3 q = obj.points[static_cast<size_t>(k)] - centroid;
        cov += q * q.transpose();
    }
    cov /= static_cast<double>(part_points.size());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    bool degenerate = es.eigenvalues()(2) < 1e-12;
    if (!degenerate) {
        const Vec3 axis = canonical_axis(es.eigenvectors().col(2));
        for (int i : active) {
            const double side = (obj.points[static_cast<size_t>(i)] - centroid).dot(axis);
            (side >= 0.0 ? aff.active_left : aff.active_right).push_back(i);
        }
        if (aff.active_left.empty() || aff.active_right.empty()) {
            aff.active_left.clear();
            aff.active_right.clear();
            degenerate = true;
        }
    }
    if (degenerate)
        for (size_t pos = 0; pos < active.size(); ++pos)
            (pos % 2 == 0 ? aff.active_left : aff.active_right).push_back(active[pos]);
    return aff;
}

VecX conditioning_scores(const VecX& scores) {
    const int n = static_cast<int>(scores.size());
    if (n <= 0) throw HoiError("conditioning_scores: empty score vector");
    if (n == kCondScoreDim) return scores;
    VecX out(kCondScoreDim);
    for (int i = 0; i < kCondScoreDim; ++i)
        out[i] = scores[static_cast<int>(static_cast<long long>(i) * n / kCondScoreDim)];
    return out;
}

namespace {

// Lowercased alphanumeric runs; punctuation and apostrophes split tokens.
std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// Number of tokens of `phrase` (itself tokenized) matching at `pos`, else 0.
int phrase_len_at(const std::vector<std::string>& tokens, size_t pos, const std::string& phrase) {
    const std::vector<std::string> words = tokenize(phrase);
    if (words.empty() || pos + words.size() > tokens.size()) return 0;
    for (size_t k = 0; k < words.size(); ++k)
        if (tokens[pos + k] != words[k]) return 0;
    return static_cast<int>(words.size());
}

struct LexiconHit {
    size_t pos = 0;
    int len = 0;
    bool is_verb = false;
    ActionType action = ActionType::Approach;
    std::string part;
};

// Longest lexicon phrase starting at pos; same-length verb beats part.
bool match_lexicon(const InstructionGrammar& g, const std::vector<std::string>& tokens,
                   size_t pos, LexiconHit& hit) {
    hit = LexiconHit{};
    hit.pos = pos;
    for (const auto& [phrase, action] : g.verbs) {
        const int len = phrase_len_at(tokens, pos, phrase);
        if (len > hit.len || (len == hit.len && len > 0 && !hit.is_verb)) {
            hit.len = len;
            hit.is_verb = true;
            hit.action = action;
        }
    }
    for (const auto& [phrase, canonical] : g.part_lexicon) {
        const int len = phrase_len_at(tokens, pos, phrase);
        if (len > hit.len) {
            hit.len = len;
            hit.is_verb = false;
            hit.part = canonical;
        }
    }
    return hit.len > 0;
}

// First "both/left/right hand(s)" phrase, if any, overrides the default for
// single-verb parses; goal templates carry their own hand assignments.
bool hands_cue(const std::vector<std::string>& tokens, Hands& out) {
    for (size_t i = 0; i + 1 < tokens.size(); ++i) {
        if (tokens[i + 1] != "hand" && tokens[i + 1] != "hands") continue;
        if (tokens[i] == "both") {
            out = Hands::Both;
            return true;
        }
        if (tokens[i] == "left") {
            out = Hands::Left;
            return true;
        }
        if (tokens[i] == "right") {
            out = Hands::Right;
            return true;
        }
    }
    return false;
}

SubTask make_subtask(ActionType action, const std::string& part, Hands hands) {
    SubTask st;
    st.action = action;
    st.target_part = part;
    st.hands = hands;
    st.embedding_id = task_embedding_id(action, hands);
    return st;
}

// Earliest keyword hit in token order wins; ties go to grammar order, then to
// the longer keyword phrase.
const GoalTemplate* match_goal(const InstructionGrammar& g,
                               const std::vector<std::string>& tokens) {
    const GoalTemplate* best = nullptr;
    size_t best_pos = 0;
    int best_len = 0;
    for (const GoalTemplate& goal : g.goals) {
        for (const std::string& keyword : goal.keywords) {
            for (size_t pos = 0; pos < tokens.size(); ++pos) {
                const int len = phrase_len_at(tokens, pos, keyword);
                if (len == 0) continue;
                if (best == nullptr || pos < best_pos ||
                    (pos == best_pos && &goal == best && len > best_len)) {
                    best = &goal;
                    best_pos = pos;
                    best_len = len;
                }
                break;  // first occurrence of this keyword is enough
            }
        }
    }
    return best;
}

}  // namespace

Plan parse_instruction(const InstructionGrammar& grammar, const std::string& instruction,
                       const ObjectModel& obj) {
    const std::vector<std::string> tokens = tokenize(instruction);
    if (tokens.empty()) throw UnparsableInstruction("empty instruction");

    Plan plan;
    plan.source_instruction = instruction;

    if (const GoalTemplate* goal = match_goal(grammar, tokens)) {
        for (const TemplateStep& step : goal->steps)
            plan.subtasks.push_back(make_subtask(step.action, step.part, step.hands));
    } else {
        Hands hands = grammar.default_hands;
        hands_cue(tokens, hands);

        // One left-to-right scan collecting verb and part mentions.
        std::vector<LexiconHit> hits;
        for (size_t pos = 0; pos < tokens.size();) {
            LexiconHit hit;
            if (match_lexicon(grammar, tokens, pos, hit)) {
                hits.push_back(hit);
                pos += static_cast<size_t>(hit.len);
            } else {
                ++pos;
            }
        }
        for (size_t i = 0; i < hits.size(); ++i) {
            if (!hits[i].is_verb) continue;
            // Bind the nearest part mention after the verb, else before it.
            const std::string* part = nullptr;
            for (size_t k = i + 1; k < hits.size() && !part; ++k)
                if (!hits[k].is_verb) part = &hits[k].part;
            for (size_t k = i; k-- > 0 && !part;)
                if (!hits[k].is_verb) part = &hits[k].part;
            if (!part)
                throw UnparsableInstruction("action '" + action_name(hits[i].action) +
                                            "' names no object part: " + instruction);
            plan.subtasks.push_back(make_subtask(hits[i].action, *part, hands));
        }
        if (plan.subtasks.empty())
            throw UnparsableInstruction("no verb or goal keyword recognized: " + instruction);
    }

    for (const SubTask& st : plan.subtasks) plan.aff_markers.push_back(ground_affordance(obj, st));
    return plan;
}

Json grammar_to_json(const InstructionGrammar& g) {
    Json verbs = Json::object();
    for (const auto& [phrase, action] : g.verbs) verbs[phrase] = action_name(action);
    Json parts = Json::object();
    for (const auto& [phrase, canonical] : g.part_lexicon) parts[phrase] = canonical;
    Json goals = Json::array();
    for (const GoalTemplate& goal : g.goals) {
        Json steps = Json::array();
        for (const TemplateStep& s : goal.steps)
            steps.push_back(Json{{"action", action_name(s.action)},
                                 {"part", s.part},
                                 {"hands", hands_name(s.hands)}});
        goals.push_back(
            Json{{"name", goal.name}, {"keywords", goal.keywords}, {"steps", steps}});
    }
    return Json{{"schema", kSchemaVersion},
                {"type", "instruction_grammar"},
                {"default_hands", hands_name(g.default_hands)},
                {"verbs", verbs},
                {"parts", parts},
                {"goals", goals}};
}

InstructionGrammar grammar_from_json(const Json& j) {
    InstructionGrammar g;
    g.default_hands = hands_from_name(j.value("default_hands", "right"));
    for (const auto& [phrase, name] : j.at("verbs").items()) {
        if (tokenize(phrase).empty()) throw HoiError("grammar: blank verb phrase");
        g.verbs[phrase] = action_from_name(name.get<std::string>());
    }
    std::set<std::string> vocabulary;
    for (const auto& [phrase, canonical] : j.at("parts").items()) {
        if (tokenize(phrase).empty()) throw HoiError("grammar: blank part phrase");
        g.part_lexicon[phrase] = canonical.get<std::string>();
        vocabulary.insert(canonical.get<std::string>());
    }
    for (const Json& goal_json : j.at("goals")) {
        GoalTemplate goal;
        goal.name = goal_json.at("name").get<std::string>();
        goal.keywords = goal_json.at("keywords").get<std::vector<std::string>>();
        if (goal.keywords.empty()) throw HoiError("grammar: goal '" + goal.name + "' has no keywords");
        for (const Json& step_json : goal_json.at("steps")) {
            TemplateStep step;
            step.action = action_from_name(step_json.at("action").get<std::string>());
            step.part = step_json.at("part").get<std::string>();
            step.hands = hands_from_name(step_json.at("hands").get<std::string>());
            if (!vocabulary.count(step.part))
                throw HoiError("grammar: goal '" + goal.name + "' step part '" + step.part +
                               "' is not in the part vocabulary");
            goal.steps.push_back(step);
        }
        if (goal.steps.empty()) throw HoiError("grammar: goal '" + goal.name + "' has no steps");
        g.goals.push_back(goal);
    }
    return g;
}

InstructionGrammar load_grammar(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw HoiError("cannot open grammar file " + path);
    Json j;
    in >> j;
    return grammar_from_json(j);
}

Json plan_to_json(const Plan& p) {
    Json subtasks = Json::array();
    for (const SubTask& st : p.subtasks) subtasks.push_back(subtask_to_json(st));
    Json markers = Json::array();
    for (const AffordanceMap& aff : p.aff_markers) markers.push_back(affordance_to_json(aff));
    return Json{{"schema", kSchemaVersion},
                {"type", "plan"},
                {"source_instruction", p.source_instruction},
                {"subtasks", subtasks},
                {"aff_markers", markers}};
}

Plan plan_from_json(const Json& j) {
    Plan p;
    p.source_instruction = j.at("source_instruction").get<std::string>();
    for (const Json& st : j.at("subtasks")) p.subtasks.push_back(subtask_from_json(st));
    for (const Json& aff : j.at("aff_markers")) p.aff_markers.push_back(affordance_from_json(aff));
    if (p.subtasks.empty()) throw HoiError("plan: no subtasks");
    if (p.subtasks.size() != p.aff_markers.size())
        throw HoiError("plan: need exactly one affordance marker per subtask");
    return p;
}

}  // namespace hoiforge
