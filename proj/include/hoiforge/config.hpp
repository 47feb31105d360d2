// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hoiforge/denoiser.hpp"
#include "hoiforge/guidance.hpp"
#include "hoiforge/json_io.hpp"
#include "hoiforge/schedule.hpp"
#include "hoiforge/synth.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hoiforge {

// Stamped into every artifact next to the resolved configuration.
inline constexpr const char* kVersionString = "hoiforge 0.1.0";

// Noise schedule knobs; build() materializes the cosine schedule.
struct ScheduleConfig {
    int steps = 100;
    double s0 = 0.008;

    void check() const;  // steps >= 1, s0 > 0
    NoiseSchedule build() const { return cosine_schedule(steps, s0); }
};

// Scene list plus corpus size and split for dataset generation.
struct DataConfig {
    DataConfig();                  // seeds specs with one bottle and one box lift scene
    std::vector<SceneSpec> specs;
    int count = 16;                // records to generate per scene spec
    double split_ratio = 0.8;      // fraction of records in the training split

    void check() const;  // non-empty specs, count >= 1, ratio in (0, 1)
};

// Evaluation loop sizing.
struct EvalConfig {
    int repeats = 3;  // independent sampling repetitions
    int pairs = 10;   // disjoint pairs drawn for the diversity statistic
    int window = 30;  // transition-smoothness window, frames
    int stride = 10;  // transition-smoothness hop, frames
    int limit = 4;    // validation prompts evaluated per repetition

    void check() const;
};

// The full resolved run configuration. Defaults make every field total, so a
// partial (or absent) config file still resolves to a complete, serializable
// configuration; what was actually used is echoed into every artifact.
struct RunConfig {
    RunConfig();             // shortens the transition window to 30 frames
    ScheduleConfig schedule;
    ModelConfig model;       // main segment denoiser
    ModelConfig transition;  // bridge-clip denoiser (shorter window)
    TrainConfig train;
    GuidanceConfig guidance;
    DataConfig data;
    EvalConfig eval;

    void check() const;  // validates all sections and cross-field constraints
};

Json run_config_to_json(const RunConfig& c);

// Accepts a full or partial config object: missing sections and missing
// fields inside sections keep their defaults. An optional "type" field, when
// present, must say "run_config".
RunConfig run_config_from_json(const Json& j);

// Pulls the run configuration out of j: the "config" sub-object when j is an
// artifact that embeds one, otherwise j itself.
RunConfig extract_run_config(const Json& j);

// Common artifact preamble: schema tag, artifact type, version string, seed,
// and the resolved configuration.
Json artifact_header(const std::string& type, const RunConfig& cfg, std::uint64_t seed);

// Throws HoiError when any entry is non-finite; `what` names the offender.
void ensure_finite(const VecX& v, const std::string& what);

}  // namespace hoiforge
