// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hoiforge/json_io.hpp"
#include "hoiforge/object.hpp"

#include <map>
#include <string>
#include <vector>

namespace hoiforge {

// Instruction text matched no verb or goal template; the planner refuses
// rather than guesses.
struct UnparsableInstruction : HoiError {
    using HoiError::HoiError;
};

// A sub-task names a part the object does not carry (or the part has no
// points to ground on).
struct UngroundablePart : HoiError {
    using HoiError::HoiError;
};

// One step of a goal template: an action applied to a named part slot.
struct TemplateStep {
    ActionType action = ActionType::Grasp;
    std::string part;
    Hands hands = Hands::Right;
};

// Fires when any of its keywords appears in the instruction.
struct GoalTemplate {
    std::string name;
    std::vector<std::string> keywords;
    std::vector<TemplateStep> steps;
};

// Rule lexicons: verb synonyms, part-name synonyms, and multi-step goals.
struct InstructionGrammar {
    std::map<std::string, ActionType> verbs;
    std::map<std::string, std::string> part_lexicon;  // synonym -> canonical label
    std::vector<GoalTemplate> goals;
    Hands default_hands = Hands::Right;
};

Json grammar_to_json(const InstructionGrammar& g);
InstructionGrammar grammar_from_json(const Json& j);
InstructionGrammar load_grammar(const std::string& path);

// Ordered sub-tasks plus one grounded affordance map per sub-task.
struct Plan {
    std::vector<SubTask> subtasks;
    std::string source_instruction;
    std::vector<AffordanceMap> aff_markers;
};

Json plan_to_json(const Plan& p);
Plan plan_from_json(const Json& j);

// Case-insensitive, longest-match rule parse. Goal templates win over single
// verbs; unmatched input throws UnparsableInstruction; parts are grounded
// against obj immediately so every returned plan is usable as-is.
Plan parse_instruction(const InstructionGrammar& grammar, const std::string& instruction,
                       const ObjectModel& obj);

// Scores: 1 on the target part's points, exp(-dist / 0.02 m) decay elsewhere;
// active set = score >= 0.5, assigned to hands. Both hands split the active
// set by the sign of the coordinate along the part's first principal axis
// (ties to the left hand); degenerate geometry falls back to index parity.
AffordanceMap ground_affordance(const ObjectModel& obj, const SubTask& subtask);

// Fixed-width view of per-point scores for the denoiser conditioning input:
// stride-resampled to kCondScoreDim entries (identity when the cloud already
// has that many points). Throws on an empty score vector.
VecX conditioning_scores(const VecX& scores);

}  // namespace hoiforge
