// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hoiforge/object.hpp"
#include "hoiforge/schedule.hpp"
#include "hoiforge/types.hpp"

#include <json.hpp>

#include <string>

namespace hoiforge {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Validates the envelope {"schema": 1, "type": <expected>}; throws HoiError.
void require_schema(const Json& j, const std::string& expected_type);

Json sequence_to_json(const HoiSequence& seq);
HoiSequence sequence_from_json(const Json& j);

Json object_to_json(const ObjectModel& obj);
ObjectModel object_from_json(const Json& j);

Json affordance_to_json(const AffordanceMap& aff);
AffordanceMap affordance_from_json(const Json& j);

Json subtask_to_json(const SubTask& st);
SubTask subtask_from_json(const Json& j);

struct Plan;  // full definition in planner.hpp
Json schedule_to_json(const NoiseSchedule& s);
NoiseSchedule schedule_from_json(const Json& j);

Json vecx_to_json(const VecX& v);
VecX vecx_from_json(const Json& j);

// File helpers; write is deterministic (2-space indent, trailing newline).
Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace hoiforge
