// SPDX-License-Identifier: Apache-2.0
#include "hoiforge/config.hpp"

#include <cmath>

namespace hoiforge {

namespace {

// Tolerant section readers: start from the current value and overwrite only
// the keys that are present, so partial config files merge onto defaults.

ScheduleConfig merge_schedule(ScheduleConfig c, const Json& j) {
    c.steps = j.value("steps", c.steps);
    c.s0 = j.value("s0", c.s0);
    return c;
}

ModelConfig merge_model(ModelConfig c, const Json& j) {
    c.frames = j.value("frames", c.frames);
    c.hidden_width = j.value("hidden_width", c.hidden_width);
    c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
    c.time_dim = j.value("time_dim", c.time_dim);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.cond_dim = j.value("cond_dim", c.cond_dim);
    c.table_rows = j.value("table_rows", c.table_rows);
    c.data_scale = j.value("data_scale", c.data_scale);
    c.activation = j.value("activation", c.activation);
    return c;
}

TrainConfig merge_train(TrainConfig c, const Json& j) {
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.steps = j.value("steps", c.steps);
    c.cond_mask_prob = j.value("cond_mask_prob", c.cond_mask_prob);
    c.w_diff = j.value("w_diff", c.w_diff);
    c.w_dist = j.value("w_dist", c.w_dist);
    c.w_orient = j.value("w_orient", c.w_orient);
    c.seed = j.value("seed", c.seed);
    return c;
}

SceneSpec merge_scene_spec(const Json& j) {
    if (j.contains("type")) return scene_spec_from_json(j);  // full serialized form
    SceneSpec s;
    if (j.contains("object_template"))
        s.object_template = object_template_from_name(j.at("object_template").get<std::string>());
    if (j.contains("task_template"))
        s.task_template = task_template_from_name(j.at("task_template").get<std::string>());
    s.scale_min = j.value("scale_min", s.scale_min);
    s.scale_max = j.value("scale_max", s.scale_max);
    s.pose_range = j.value("pose_range", s.pose_range);
    s.noise_amplitude = j.value("noise_amplitude", s.noise_amplitude);
    s.instances = j.value("instances", s.instances);
    s.frames_per_subtask = j.value("frames_per_subtask", s.frames_per_subtask);
    s.seed = j.value("seed", s.seed);
    return s;
}

DataConfig merge_data(DataConfig c, const Json& j) {
    if (j.contains("specs")) {
        c.specs.clear();
        for (const Json& e : j.at("specs")) c.specs.push_back(merge_scene_spec(e));
    }
    c.count = j.value("count", c.count);
    c.split_ratio = j.value("split_ratio", c.split_ratio);
    return c;
}

EvalConfig merge_eval(EvalConfig c, const Json& j) {
    c.repeats = j.value("repeats", c.repeats);
    c.pairs = j.value("pairs", c.pairs);
    c.window = j.value("window", c.window);
    c.stride = j.value("stride", c.stride);
    c.limit = j.value("limit", c.limit);
    return c;
}

}  // namespace

DataConfig::DataConfig() {
    SceneSpec bottle;
    bottle.object_template = ObjectTemplate::Bottle;
    bottle.task_template = TaskTemplate::Lift;
    SceneSpec box = bottle;
    box.object_template = ObjectTemplate::Box;
    box.seed = 1;
    specs = {bottle, box};
}

void ScheduleConfig::check() const {
    if (steps < 1) throw HoiError("schedule config: steps must be >= 1");
    if (!(s0 > 0.0)) throw HoiError("schedule config: s0 must be positive");
}

void DataConfig::check() const {
    if (specs.empty()) throw HoiError("data config: needs at least one scene spec");
    for (const SceneSpec& s : specs) s.check();
    if (count < 1) throw HoiError("data config: count must be >= 1");
    if (!(split_ratio > 0.0 && split_ratio < 1.0))
        throw HoiError("data config: split_ratio must lie in (0, 1)");
}

void EvalConfig::check() const {
    if (repeats < 1) throw HoiError("eval config: repeats must be >= 1");
    if (pairs < 1) throw HoiError("eval config: pairs must be >= 1");
    if (window < 2) throw HoiError("eval config: window must be >= 2");
    if (stride < 1) throw HoiError("eval config: stride must be >= 1");
    if (limit < 1) throw HoiError("eval config: limit must be >= 1");
}

void RunConfig::check() const {
    schedule.check();
    guidance.check();
    data.check();
    eval.check();
    // Model and train sections are validated by their own constructors and
    // parsers; re-run the parser checks on the merged values.
    model_config_from_json(model_config_to_json(model));
    model_config_from_json(model_config_to_json(transition));
    train_config_from_json(train_config_to_json(train));
}

RunConfig::RunConfig() { transition.frames = 30; }

Json run_config_to_json(const RunConfig& c) {
    Json j;
    j["schema"] = kSchemaVersion;
    j["type"] = "run_config";
    j["schedule"] = Json{{"steps", c.schedule.steps}, {"s0", c.schedule.s0}};
    j["model"] = model_config_to_json(c.model);
    j["transition"] = model_config_to_json(c.transition);
    j["train"] = train_config_to_json(c.train);
    j["guidance"] = guidance_config_to_json(c.guidance);
    Json specs = Json::array();
    for (const SceneSpec& s : c.data.specs) specs.push_back(scene_spec_to_json(s));
    j["data"] = Json{{"specs", specs}, {"count", c.data.count}, {"split_ratio", c.data.split_ratio}};
    j["eval"] = Json{{"repeats", c.eval.repeats}, {"pairs", c.eval.pairs},
                     {"window", c.eval.window},   {"stride", c.eval.stride},
                     {"limit", c.eval.limit}};
    return j;
}

RunConfig run_config_from_json(const Json& j) {
    if (!j.is_object()) throw HoiError("run config: expected a JSON object");
    if (j.contains("type") && j.at("type").get<std::string>() != "run_config")
        throw HoiError("run config: unexpected type tag '" + j.at("type").get<std::string>() + "'");
    RunConfig c;
    if (j.contains("schedule")) c.schedule = merge_schedule(c.schedule, j.at("schedule"));
    if (j.contains("model")) c.model = merge_model(c.model, j.at("model"));
    if (j.contains("transition")) c.transition = merge_model(c.transition, j.at("transition"));
    if (j.contains("train")) c.train = merge_train(c.train, j.at("train"));
    if (j.contains("guidance")) c.guidance = guidance_config_from_json(j.at("guidance"));
    if (j.contains("data")) c.data = merge_data(c.data, j.at("data"));
    if (j.contains("eval")) c.eval = merge_eval(c.eval, j.at("eval"));
    c.check();
    return c;
}

RunConfig extract_run_config(const Json& j) {
    if (j.is_object() && j.contains("config")) return run_config_from_json(j.at("config"));
    return run_config_from_json(j);
}

Json artifact_header(const std::string& type, const RunConfig& cfg, std::uint64_t seed) {
    Json j;
    j["schema"] = kSchemaVersion;
    j["type"] = type;
    j["version"] = kVersionString;
    j["seed"] = seed;
    j["config"] = run_config_to_json(cfg);
    return j;
}

void ensure_finite(const VecX& v, const std::string& what) {
    for (int i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i]))
            throw HoiError("non-finite value in " + what + " at index " + std::to_string(i));
}

}  // namespace hoiforge
