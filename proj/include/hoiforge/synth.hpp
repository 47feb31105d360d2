// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hoiforge/denoiser.hpp"
#include "hoiforge/json_io.hpp"
#include "hoiforge/planner.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace hoiforge {

// Procedural desk-scale training data: part-labeled rigid objects plus
// kinematically plausible grasp/twist/lift choreography with ground-truth
// plans. Stands in for motion-capture corpora.

enum class ObjectTemplate : int { Bottle = 0, Box = 1, Mug = 2 };

std::string object_template_name(ObjectTemplate t);
ObjectTemplate object_template_from_name(const std::string& name);

// Scripted action sequences; the grasped part resolves per object template.
enum class TaskTemplate : int {
    Grasp = 0,      // grasp the primary part
    Lift = 1,       // grasp, then lift
    Open = 2,       // grasp the cap/lid, then twist
    Push = 3,       // one-handed push on the body
    Place = 4,      // grasp, lift, place back down
    BothGrasp = 5,  // two-handed grasp, then lift
};

std::string task_template_name(TaskTemplate t);
TaskTemplate task_template_from_name(const std::string& name);

struct SceneSpec {
    ObjectTemplate object_template = ObjectTemplate::Bottle;
    TaskTemplate task_template = TaskTemplate::Lift;
    double scale_min = 0.9;        // uniform scale factor range on the template
    double scale_max = 1.1;
    double pose_range = 0.05;      // initial object xy offset range, meters
    double noise_amplitude = 0.0;  // per-joint Gaussian jitter, meters
    int instances = 5;             // distinct object identities for this spec
    int frames_per_subtask = 150;
    std::uint64_t seed = 0;        // folded into every per-record stream

    // Throws HoiError: requires 0 < scale_min <= scale_max, pose_range >= 0,
    // noise_amplitude >= 0, instances >= 1, frames_per_subtask >= 12 (the
    // approach/close/act phase split needs room).
    void check() const;
};

Json scene_spec_to_json(const SceneSpec& spec);
SceneSpec scene_spec_from_json(const Json& j);

struct DatasetRecord {
    HoiSequence sequence;
    std::string object_name;  // key into Dataset::objects
    Plan plan;                // grounded; one subtask per choreography segment
};

struct Dataset {
    std::vector<DatasetRecord> records;
    std::map<std::string, ObjectModel> objects;  // deduplicated by name
};

// Builds one part-labeled instance of a template at the given scale with
// exactly kAffordancePoints area-weighted surface samples. Every sample lies
// on the assembly zero level set, so validate_object passes. Throws HoiError
// on a non-positive scale.
ObjectModel make_template_object(ObjectTemplate t, double scale,
                                 std::uint64_t seed, const std::string& name);

// Scripted subtask list for a template pair; durations are uniform. Embedding
// ids are derived from (action, hands).
std::vector<SubTask> task_template_steps(TaskTemplate task, ObjectTemplate obj,
                                         int duration_frames);

// Generates count records per spec. Each record picks one of the spec's
// object instances round-robin, draws an initial pose, and choreographs the
// task: straight-line eased approach, fingers closing onto the affordance
// region, and rigid hand-object attachment while the object moves. Hand
// paths use cubic ease-in/ease-out (zero end velocities). Per-joint Gaussian
// jitter of noise_amplitude is applied afterwards, then every joint sphere is
// projected out of the object so penetration is zero by construction.
// Records use independent derived seeds, so output order is deterministic.
// Throws HoiError when count < 1, a spec fails check(), or a grasped part is
// smaller than finger spacing (median bounding-box extent < 4 mm).
Dataset generate_dataset(const std::vector<SceneSpec>& specs, int count,
                         std::uint64_t seed);

// Splits by object identity so test objects are unseen at train time. The
// unique names are shuffled under the seed; ceil/floor rounding keeps the
// train share at the given ratio with both sides non-empty. Requires >= 5
// instances and ratio in (0, 1); throws HoiError otherwise.
std::pair<Dataset, Dataset> split_dataset(const Dataset& data,
                                          double train_ratio,
                                          std::uint64_t seed);

// JSON-lines records file (one {object, plan, sequence} per line) plus a
// deduplicated objects sidecar. Writing is deterministic; loading validates
// that every record's object name resolves.
void save_dataset_jsonl(const Dataset& data, const std::string& records_path,
                        const std::string& objects_path);
Dataset load_dataset_jsonl(const std::string& records_path,
                           const std::string& objects_path);

// Slices each record into per-subtask training segments. Every subtask
// duration must equal `frames` (throws HoiError otherwise). Conditioning
// carries the grounded affordance map (resampled to the fixed conditioning
// width), the derived task embedding id, and object features. The returned
// examples point into dataset.objects, which must outlive them.
std::vector<TrainExample> dataset_to_examples(const Dataset& data, int frames);

// Boundary-straddling windows centered on each subtask seam, for the
// unconditional transition model. Records with fewer than two subtasks or
// fewer than `frames` total frames contribute nothing; throws HoiError if no
// window exists at all.
std::vector<TrainExample> dataset_to_transition_examples(const Dataset& data,
                                                         int frames);

}  // namespace hoiforge
