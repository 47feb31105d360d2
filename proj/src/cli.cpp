// SPDX-License-Identifier: Apache-2.0
#include "hoiforge/cli.hpp"

#include "hoiforge/config.hpp"
#include "hoiforge/metrics.hpp"
#include "hoiforge/planner.hpp"
#include "hoiforge/stats.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace hoiforge {

namespace {

namespace fs = std::filesystem;

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Independent RNG stream per (purpose, index) pair under one master seed.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index) {
    return mix64(mix64(mix64(seed) ^ purpose) ^ index);
}

void apply_thread_cap() {
    const char* env = std::getenv("HOI_FORGE_THREADS");
    if (!env || !*env) return;
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1)
        throw HoiError("HOI_FORGE_THREADS must be a positive integer");
    Eigen::setNbThreads(static_cast<int>(n));
}

// Config-override plumbing: every flag records where it lands in RunConfig;
// after parsing, only the flags the user actually passed are applied on top
// of the config file (or the checkpoint's embedded config).
struct ConfigFlags {
    std::string config_path;
    CLI::Option* config_opt = nullptr;
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
    std::vector<std::string> scenes;
    std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;

    // Flag storage; a field is only read when its option was passed.
    int schedule_steps = 0;
    double schedule_s0 = 0;
    int frames = 0, hidden_width = 0, hidden_layers = 0, time_dim = 0, embed_dim = 0,
        cond_dim = 0, table_rows = 0;
    double data_scale = 0;
    std::string activation;
    int t_frames = 0, t_hidden_width = 0, t_hidden_layers = 0, t_time_dim = 0, t_embed_dim = 0,
        t_cond_dim = 0;
    double t_data_scale = 0;
    std::string t_activation;
    int batch_size = 0;
    double learning_rate = 0;
    int train_steps = 0;
    double cond_mask_prob = 0, w_diff = 0, w_dist = 0, w_orient = 0;
    double cfg_scale = 0, guidance_rate = 0, lambda_aff = 0, lambda_pen = 0, lambda_trans = 0;
    int guide_t_min = 0, guide_t_max = 0, window_size = 0;
    int count = 0;
    double split_ratio = 0;
    int repeats = 0, pairs = 0, eval_window = 0, eval_stride = 0, eval_limit = 0;
};

std::vector<SceneSpec> parse_scene_flags(const std::vector<std::string>& flags) {
    std::vector<SceneSpec> specs;
    for (const std::string& text : flags) {
        std::vector<std::string> parts;
        size_t start = 0;
        while (true) {
            const size_t colon = text.find(':', start);
            parts.push_back(text.substr(start, colon - start));
            if (colon == std::string::npos) break;
            start = colon + 1;
        }
        if (parts.size() < 2 || parts.size() > 4)
            throw HoiError("scene flag '" + text + "' wants template:task[:instances[:frames]]");
        SceneSpec sp;
        sp.object_template = object_template_from_name(parts[0]);
        sp.task_template = task_template_from_name(parts[1]);
        if (parts.size() > 2) sp.instances = std::stoi(parts[2]);
        if (parts.size() > 3) sp.frames_per_subtask = std::stoi(parts[3]);
        sp.seed = specs.size();  // distinct stream per scene, like the defaults
        specs.push_back(sp);
    }
    return specs;
}

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
    f.config_opt = cmd->add_option("--config", f.config_path,
                                   "JSON run config, or any artifact that embeds one");
    f.seed_opt = cmd->add_option("--seed", f.seed, "master RNG seed (default: embedded seed, else 0)");

    auto ov = [cmd, &f](const std::string& flag, auto& store, const std::string& help, auto set) {
        CLI::Option* opt = cmd->add_option(flag, store, help);
        f.overrides.emplace_back(opt, [&store, set](RunConfig& c) { set(c, store); });
    };
    ov("--schedule-steps", f.schedule_steps, "diffusion steps T",
       [](RunConfig& c, int v) { c.schedule.steps = v; });
    ov("--schedule-s0", f.schedule_s0, "cosine schedule offset",
       [](RunConfig& c, double v) { c.schedule.s0 = v; });

    ov("--frames", f.frames, "main net segment length, frames",
       [](RunConfig& c, int v) { c.model.frames = v; });
    ov("--hidden-width", f.hidden_width, "main net hidden width",
       [](RunConfig& c, int v) { c.model.hidden_width = v; });
    ov("--hidden-layers", f.hidden_layers, "main net hidden layers",
       [](RunConfig& c, int v) { c.model.hidden_layers = v; });
    ov("--time-dim", f.time_dim, "diffusion-step embedding width",
       [](RunConfig& c, int v) { c.model.time_dim = v; });
    ov("--embed-dim", f.embed_dim, "task embedding width",
       [](RunConfig& c, int v) { c.model.embed_dim = v; });
    ov("--cond-dim", f.cond_dim, "condition projection width",
       [](RunConfig& c, int v) { c.model.cond_dim = v; });
    ov("--table-rows", f.table_rows, "task embedding table rows",
       [](RunConfig& c, int v) { c.model.table_rows = v; });
    ov("--data-scale", f.data_scale, "physical-to-model unit scale",
       [](RunConfig& c, double v) { c.model.data_scale = v; });
    ov("--activation", f.activation, "main net activation (silu|identity)",
       [](RunConfig& c, const std::string& v) { c.model.activation = v; });

    ov("--transition-frames", f.t_frames, "transition net clip length, frames",
       [](RunConfig& c, int v) { c.transition.frames = v; });
    ov("--transition-width", f.t_hidden_width, "transition net hidden width",
       [](RunConfig& c, int v) { c.transition.hidden_width = v; });
    ov("--transition-layers", f.t_hidden_layers, "transition net hidden layers",
       [](RunConfig& c, int v) { c.transition.hidden_layers = v; });
    ov("--transition-time-dim", f.t_time_dim, "transition net step embedding width",
       [](RunConfig& c, int v) { c.transition.time_dim = v; });
    ov("--transition-embed-dim", f.t_embed_dim, "transition net task embedding width",
       [](RunConfig& c, int v) { c.transition.embed_dim = v; });
    ov("--transition-cond-dim", f.t_cond_dim, "transition net condition width",
       [](RunConfig& c, int v) { c.transition.cond_dim = v; });
    ov("--transition-data-scale", f.t_data_scale, "transition net unit scale",
       [](RunConfig& c, double v) { c.transition.data_scale = v; });
    ov("--transition-activation", f.t_activation, "transition net activation",
       [](RunConfig& c, const std::string& v) { c.transition.activation = v; });

    ov("--batch-size", f.batch_size, "training batch size",
       [](RunConfig& c, int v) { c.train.batch_size = v; });
    ov("--learning-rate", f.learning_rate, "training step size",
       [](RunConfig& c, double v) { c.train.learning_rate = v; });
    ov("--train-steps", f.train_steps, "training steps",
       [](RunConfig& c, int v) { c.train.steps = v; });
    ov("--cond-mask-prob", f.cond_mask_prob, "condition dropout probability",
       [](RunConfig& c, double v) { c.train.cond_mask_prob = v; });
    ov("--w-diff", f.w_diff, "denoising loss weight",
       [](RunConfig& c, double v) { c.train.w_diff = v; });
    ov("--w-dist", f.w_dist, "distance-map loss weight",
       [](RunConfig& c, double v) { c.train.w_dist = v; });
    ov("--w-orient", f.w_orient, "orientation loss weight",
       [](RunConfig& c, double v) { c.train.w_orient = v; });

    ov("--cfg-scale", f.cfg_scale, "conditional extrapolation scale s",
       [](RunConfig& c, double v) { c.guidance.cfg_scale = v; });
    ov("--guidance-rate", f.guidance_rate, "loss-gradient mixing rate w",
       [](RunConfig& c, double v) { c.guidance.guidance_rate = v; });
    ov("--lambda-aff", f.lambda_aff, "affordance loss weight",
       [](RunConfig& c, double v) { c.guidance.lambda_aff = v; });
    ov("--lambda-pen", f.lambda_pen, "penetration loss weight",
       [](RunConfig& c, double v) { c.guidance.lambda_pen = v; });
    ov("--lambda-trans", f.lambda_trans, "transition loss weight",
       [](RunConfig& c, double v) { c.guidance.lambda_trans = v; });
    ov("--guide-t-min", f.guide_t_min, "first guided step",
       [](RunConfig& c, int v) { c.guidance.guide_t_min = v; });
    ov("--guide-t-max", f.guide_t_max, "last guided step",
       [](RunConfig& c, int v) { c.guidance.guide_t_max = v; });
    ov("--window-size", f.window_size, "transition-loss taper width, frames",
       [](RunConfig& c, int v) { c.guidance.window_size = v; });

    ov("--count", f.count, "records to generate per scene spec",
       [](RunConfig& c, int v) { c.data.count = v; });
    ov("--split-ratio", f.split_ratio, "training split fraction",
       [](RunConfig& c, double v) { c.data.split_ratio = v; });
    CLI::Option* scene_opt =
        cmd->add_option("--scene", f.scenes,
                        "scene spec template:task[:instances[:frames]]; repeatable, "
                        "replaces the configured scene list");
    f.overrides.emplace_back(scene_opt,
                             [&f](RunConfig& c) { c.data.specs = parse_scene_flags(f.scenes); });

    ov("--repeats", f.repeats, "evaluation repetitions",
       [](RunConfig& c, int v) { c.eval.repeats = v; });
    ov("--pairs", f.pairs, "diversity pair draws",
       [](RunConfig& c, int v) { c.eval.pairs = v; });
    ov("--eval-window", f.eval_window, "smoothness window, frames",
       [](RunConfig& c, int v) { c.eval.window = v; });
    ov("--eval-stride", f.eval_stride, "smoothness hop, frames",
       [](RunConfig& c, int v) { c.eval.stride = v; });
    ov("--eval-limit", f.eval_limit, "validation prompts per repetition",
       [](RunConfig& c, int v) { c.eval.limit = v; });
}

struct Resolved {
    RunConfig cfg;
    std::uint64_t seed = 0;
};

// Precedence: flags > --config file > base (a checkpoint's embedded config)
// > built-in defaults. The seed follows the same order.
Resolved resolve(const ConfigFlags& f, const Json* base = nullptr) {
    Resolved r;
    Json file;
    const bool have_file = f.config_opt->count() > 0;
    if (have_file) {
        file = read_json_file(f.config_path);
        r.cfg = extract_run_config(file);
    } else if (base) {
        r.cfg = extract_run_config(*base);
    }
    for (const auto& [opt, apply] : f.overrides)
        if (opt->count() > 0) apply(r.cfg);
    r.cfg.check();
    if (f.seed_opt->count() > 0)
        r.seed = f.seed;
    else if (have_file && file.is_object() && file.contains("seed"))
        r.seed = file.at("seed").get<std::uint64_t>();
    else if (base && base->is_object() && base->contains("seed"))
        r.seed = base->at("seed").get<std::uint64_t>();
    return r;
}

ObjectModel load_object_file(const std::string& path, const std::string& name) {
    const Json j = read_json_file(path);
    if (j.is_object() && j.value("type", "") == "object_set") {
        const Json& objs = j.at("objects");
        if (!name.empty()) {
            if (!objs.contains(name)) throw HoiError("object '" + name + "' not found in " + path);
            return object_from_json(objs.at(name));
        }
        if (objs.size() == 1) return object_from_json(objs.begin().value());
        std::string names;
        for (auto it = objs.begin(); it != objs.end(); ++it) {
            if (!names.empty()) names += ", ";
            names += it.key();
        }
        throw HoiError(path + " holds several objects (" + names + "); pick one with --object-name");
    }
    return object_from_json(j);
}

Plan load_plan_file(const std::string& path) {
    const Json j = read_json_file(path);
    if (j.is_object() && j.contains("plan")) return plan_from_json(j.at("plan"));
    return plan_from_json(j);
}

HoiSequence prefix(const HoiSequence& seq, int n) {
    HoiSequence out;
    out.fps = seq.fps;
    out.frames.assign(seq.frames.begin(), seq.frames.begin() + n);
    return out;
}

// Flat scores with the original hand assignment: the conditioning carries no
// spatial preference, but the hands stay engaged.
AffordanceMap uniform_marker(const ObjectModel& obj, const AffordanceMap& like) {
    AffordanceMap u;
    u.scores = VecX::Ones(obj.num_points());
    std::vector<int> all(obj.num_points());
    std::iota(all.begin(), all.end(), 0);
    if (!like.active_left.empty()) u.active_left = all;
    if (!like.active_right.empty()) u.active_right = all;
    return u;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
    const double m = mean_of(v);
    if (v.size() < 2) return {m, 0.0};
    double acc = 0;
    for (double x : v) acc += (x - m) * (x - m);
    return {m, std::sqrt(acc / static_cast<double>(v.size() - 1))};
}

std::string fmt_num(double x) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4g", x);
    return buf;
}

void check_sequence_finite(const HoiSequence& seq) { ensure_finite(flatten(seq), "sampled sequence"); }

// ---------------------------------------------------------------- commands

void run_gen(const ConfigFlags& f, const std::string& out_dir) {
    const Resolved r = resolve(f);
    const Dataset data = generate_dataset(r.cfg.data.specs, r.cfg.data.count, r.seed);
    const auto split = split_dataset(data, r.cfg.data.split_ratio, r.seed);
    fs::create_directories(out_dir);
    save_dataset_jsonl(split.first, out_dir + "/train_records.jsonl", out_dir + "/train_objects.json");
    save_dataset_jsonl(split.second, out_dir + "/val_records.jsonl", out_dir + "/val_objects.json");
    Json man = artifact_header("dataset_manifest", r.cfg, r.seed);
    man["counts"] = Json{{"total", data.records.size()},
                         {"train", split.first.records.size()},
                         {"val", split.second.records.size()}};
    man["files"] = Json::array({"train_records.jsonl", "train_objects.json", "val_records.jsonl",
                                "val_objects.json"});
    write_json_file(out_dir + "/manifest.json", man);
    std::cout << "wrote " << data.records.size() << " records (" << split.first.records.size()
              << " train, " << split.second.records.size() << " val) to " << out_dir << "\n";
}

void run_train(const ConfigFlags& f, const std::string& data_dir, const std::string& out_path) {
    const Resolved r = resolve(f);
    const Dataset data =
        load_dataset_jsonl(data_dir + "/train_records.jsonl", data_dir + "/train_objects.json");
    const NoiseSchedule schedule = r.cfg.schedule.build();
    const std::vector<TrainExample> main_ex = dataset_to_examples(data, r.cfg.model.frames);
    const std::vector<TrainExample> trans_ex =
        dataset_to_transition_examples(data, r.cfg.transition.frames);

    CheckpointBundle bundle;
    bundle.main = DenoiserModel::create(r.cfg.model, stream_seed(r.seed, 1, 0));
    bundle.transition = DenoiserModel::create(r.cfg.transition, stream_seed(r.seed, 2, 0));
    TrainConfig main_tc = r.cfg.train;
    main_tc.seed = stream_seed(r.seed, 3, 0);
    TrainConfig trans_tc = r.cfg.train;
    trans_tc.cond_mask_prob = 1.0;  // the bridge net is an unconditional prior
    trans_tc.seed = stream_seed(r.seed, 4, 0);

    const TrainStats main_stats = train(bundle.main, main_ex, main_tc, schedule);
    const TrainStats trans_stats = train(bundle.transition, trans_ex, trans_tc, schedule);
    ensure_finite(bundle.main.params, "main net parameters");
    ensure_finite(bundle.transition.params, "transition net parameters");
    const double main_final = main_stats.curve.empty() ? 0.0 : main_stats.curve.back()[1];
    const double trans_final = trans_stats.curve.empty() ? 0.0 : trans_stats.curve.back()[1];

    bundle.meta = artifact_header("checkpoint", r.cfg, r.seed);
    bundle.meta["final_loss"] = Json{{"main", main_final}, {"transition", trans_final}};
    if (const fs::path parent = fs::path(out_path).parent_path(); !parent.empty())
        fs::create_directories(parent);
    save_checkpoint(out_path, bundle);
    save_loss_curve_csv(out_path + ".loss.csv", main_stats);
    save_loss_curve_csv(out_path + ".transition_loss.csv", trans_stats);
    std::cout << "trained on " << main_ex.size() << " segments + " << trans_ex.size()
              << " transition windows; final loss " << fmt_num(main_final) << " / "
              << fmt_num(trans_final) << "; wrote " << out_path << "\n";
}

void run_plan(const ConfigFlags& f, const std::string& grammar_path, const std::string& object_path,
              const std::string& object_name, const std::string& instruction,
              const std::string& out_path) {
    const Resolved r = resolve(f);
    const InstructionGrammar grammar = load_grammar(grammar_path);
    const ObjectModel obj = load_object_file(object_path, object_name);
    const Plan plan = parse_instruction(grammar, instruction, obj);
    Json art = artifact_header("plan", r.cfg, r.seed);
    art["instruction"] = instruction;
    art["object"] = obj.name;
    art["plan"] = plan_to_json(plan);
    write_json_file(out_path, art);
    std::cout << "plan:";
    for (const SubTask& st : plan.subtasks)
        std::cout << " [" << action_name(st.action) << " " << st.target_part << " "
                  << hands_name(st.hands) << "]";
    std::cout << " -> " << out_path << "\n";
}

void run_sample(const ConfigFlags& f, const std::string& ckpt_path, const std::string& object_path,
                const std::string& object_name, const std::string& plan_path,
                const std::string& out_path, const std::string& log_path, bool no_transitions) {
    const CheckpointBundle bundle = load_checkpoint(ckpt_path);
    const Resolved r = resolve(f, &bundle.meta);
    const NoiseSchedule schedule = r.cfg.schedule.build();
    const ObjectModel obj = load_object_file(object_path, object_name);
    const Plan plan = load_plan_file(plan_path);
    if (plan.subtasks.empty()) throw HoiError("plan has no sub-tasks: " + plan_path);

    std::mt19937_64 rng(r.seed);
    std::vector<GuidanceLogRow> log;
    const HoiSequence seq = synthesize_long_horizon(bundle, schedule, plan.subtasks, obj,
                                                    r.cfg.guidance, rng, !no_transitions, &log);
    check_sequence_finite(seq);

    Json art = artifact_header("sample", r.cfg, r.seed);
    art["instruction"] = plan.source_instruction;
    art["object"] = obj.name;
    art["with_transitions"] = !no_transitions;
    art["sequence"] = sequence_to_json(seq);
    write_json_file(out_path, art);
    if (!log_path.empty()) save_guidance_log_csv(log_path, log);
    std::cout << "sampled " << seq.num_frames() << " frames (" << plan.subtasks.size()
              << " sub-tasks) -> " << out_path << "\n";
}

void run_eval(const ConfigFlags& f, const std::string& ckpt_path, const std::string& data_dir,
              const std::string& out_path) {
    const CheckpointBundle bundle = load_checkpoint(ckpt_path);
    const Resolved r = resolve(f, &bundle.meta);
    const NoiseSchedule schedule = r.cfg.schedule.build();
    const Dataset val =
        load_dataset_jsonl(data_dir + "/val_records.jsonl", data_dir + "/val_objects.json");
    if (val.records.empty()) throw HoiError("eval: empty validation split in " + data_dir);
    std::vector<HoiSequence> reference;
    reference.reserve(val.records.size());
    for (const DatasetRecord& rec : val.records) reference.push_back(rec.sequence);
    const int limit = std::min<int>(r.cfg.eval.limit, static_cast<int>(val.records.size()));

    std::map<std::string, std::vector<double>> series;
    for (int rep = 0; rep < r.cfg.eval.repeats; ++rep) {
        std::vector<HoiSequence> generated;
        std::vector<double> iv, pen, realism, mp, fols, smooth;
        for (int i = 0; i < limit; ++i) {
            const DatasetRecord& rec = val.records[i];
            const ObjectModel& obj = val.objects.at(rec.object_name);
            std::mt19937_64 rng(stream_seed(r.seed, 100 + rep, i));
            HoiSequence seq = synthesize_long_horizon(bundle, schedule, rec.plan.subtasks, obj,
                                                      r.cfg.guidance, rng, true, nullptr);
            check_sequence_finite(seq);
            iv.push_back(intersection_volume(seq, obj));
            pen.push_back(max_penetration_depth(seq, obj));
            if (!rec.plan.aff_markers.empty())
                realism.push_back(physical_realism(seq, obj, rec.plan.aff_markers.front()));
            const int n = std::min(seq.num_frames(), rec.sequence.num_frames());
            mp.push_back(mpjpe(prefix(seq, n), prefix(rec.sequence, n)));
            fols.push_back(fol(seq, rec.sequence));
            if (reference.size() >= 2 &&
                seq.num_frames() >= r.cfg.eval.window + r.cfg.eval.stride)
                smooth.push_back(smooth_rate(seq, reference, r.cfg.eval.window, r.cfg.eval.stride));
            generated.push_back(std::move(seq));
        }
        series["iv_cm3"].push_back(mean_of(iv));
        series["penetration_mm"].push_back(mean_of(pen));
        if (!realism.empty()) series["physical_realism"].push_back(mean_of(realism));
        series["mpjpe_mm"].push_back(mean_of(mp));
        series["fol_m"].push_back(mean_of(fols));
        if (!smooth.empty()) series["smooth_rate"].push_back(mean_of(smooth));
        if (generated.size() >= 2 && reference.size() >= 2)
            series["fid"].push_back(fid_corpus(generated, reference));
        const int pairs_eff = std::min<int>(r.cfg.eval.pairs, static_cast<int>(generated.size()) / 2);
        if (pairs_eff >= 1) {
            std::mt19937_64 drng(stream_seed(r.seed, 200 + rep, 0));
            series["diversity"].push_back(diversity(generated, drng, pairs_eff));
        }
    }

    Json metrics = Json::object();
    std::cout << "metric              mean       std\n";
    for (const auto& [name, vals] : series) {
        const auto [m, s] = mean_std(vals);
        metrics[name] = Json{{"mean", m}, {"std", s}, {"values", vals}};
        std::printf("%-18s %10s %9s\n", name.c_str(), fmt_num(m).c_str(), fmt_num(s).c_str());
    }
    Json art = artifact_header("metrics", r.cfg, r.seed);
    art["metrics"] = metrics;
    art["prompts"] = limit;
    art["reference_size"] = reference.size();
    write_json_file(out_path, art);
    std::cout << "wrote " << out_path << "\n";
}

void run_ablate(const ConfigFlags& f, const std::string& ckpt_path, const std::string& data_dir,
                const std::string& out_path, int seeds) {
    if (seeds < 1) throw HoiError("ablate: --seeds must be >= 1");
    const CheckpointBundle bundle = load_checkpoint(ckpt_path);
    const Resolved r = resolve(f, &bundle.meta);
    const NoiseSchedule schedule = r.cfg.schedule.build();
    const Dataset val =
        load_dataset_jsonl(data_dir + "/val_records.jsonl", data_dir + "/val_objects.json");
    if (val.records.empty()) throw HoiError("ablate: empty validation split in " + data_dir);
    const DatasetRecord& prompt = val.records.front();
    const ObjectModel& obj = val.objects.at(prompt.object_name);
    std::vector<HoiSequence> reference;
    for (const DatasetRecord& rec : val.records) reference.push_back(rec.sequence);

    std::vector<AffordanceMap> grounded;
    for (const SubTask& st : prompt.plan.subtasks) grounded.push_back(ground_affordance(obj, st));
    std::vector<AffordanceMap> uniform;
    for (const AffordanceMap& g : grounded) uniform.push_back(uniform_marker(obj, g));

    struct Variant {
        std::string name;
        GuidanceConfig g;
        bool uniform = false;
    };
    std::vector<Variant> variants;
    variants.push_back({"full", r.cfg.guidance, false});
    {
        GuidanceConfig g = r.cfg.guidance;
        g.lambda_aff = 0;
        variants.push_back({"no_affordance_loss", g, false});
    }
    {
        GuidanceConfig g = r.cfg.guidance;
        g.cfg_scale = 1.0;  // conditional-only prediction
        variants.push_back({"no_cfg", g, false});
    }
    {
        GuidanceConfig g = r.cfg.guidance;
        g.lambda_pen = 0;
        variants.push_back({"no_penetration_loss", g, false});
    }
    variants.push_back({"uniform_affordance", r.cfg.guidance, true});
    for (double s : {0.5, 2.0, 2.5, 3.0, 5.0}) {
        GuidanceConfig g = r.cfg.guidance;
        g.cfg_scale = s;
        variants.push_back({"cfg_scale_" + fmt_num(s), g, false});
    }
    for (int w : {1, 3, 5, 10, 20}) {
        GuidanceConfig g = r.cfg.guidance;
        g.window_size = w;
        variants.push_back({"window_" + std::to_string(w), g, false});
    }

    const int n_seg = static_cast<int>(prompt.plan.subtasks.size());
    const int total_frames =
        n_seg * bundle.main.config.frames + (n_seg - 1) * bundle.transition.config.frames;
    const bool do_smooth = reference.size() >= 2 &&
                           total_frames >= r.cfg.eval.window + r.cfg.eval.stride;
    const AffordanceMap& m0 = grounded.front();
    const bool do_aff = !m0.active_left.empty() || !m0.active_right.empty();

    std::vector<std::map<std::string, std::vector<double>>> cells(variants.size());
    for (size_t vi = 0; vi < variants.size(); ++vi) {
        const Variant& v = variants[vi];
        for (int si = 0; si < seeds; ++si) {
            // One stream per seed index, shared across variants: comparisons
            // are paired on identical starting noise.
            std::mt19937_64 rng(stream_seed(r.seed, 300, si));
            const HoiSequence seq =
                synthesize_long_horizon(bundle, schedule, prompt.plan.subtasks, obj, v.g, rng,
                                        true, nullptr, v.uniform ? &uniform : nullptr);
            check_sequence_finite(seq);
            if (do_aff) {
                const int seg = std::min(bundle.main.config.frames, seq.num_frames());
                cells[vi]["l_aff"].push_back(loss_affordance(flatten(prefix(seq, seg)), seg, obj,
                                                             m0, m0.left_active(),
                                                             m0.right_active()));
            }
            cells[vi]["penetration_mm"].push_back(max_penetration_depth(seq, obj));
            cells[vi]["iv_cm3"].push_back(intersection_volume(seq, obj));
            if (do_smooth)
                cells[vi]["smooth_rate"].push_back(
                    smooth_rate(seq, reference, r.cfg.eval.window, r.cfg.eval.stride));
        }
    }

    Json rows = Json::array();
    std::cout << "variant                 ";
    for (const auto& [name, vals] : cells[0]) std::printf(" %22s", name.c_str());
    std::cout << "\n";
    for (size_t vi = 0; vi < variants.size(); ++vi) {
        Json row;
        row["name"] = variants[vi].name;
        Json jc = Json::object();
        std::printf("%-24s", variants[vi].name.c_str());
        for (const auto& [name, vals] : cells[vi]) {
            const auto [m, s] = mean_std(vals);
            Json cell{{"mean", m}, {"std", s}};
            if (vi > 0 && seeds >= 2)
                cell["p_vs_full"] = paired_t_test(vals, cells[0].at(name)).p_two_sided;
            else
                cell["p_vs_full"] = nullptr;
            jc[name] = cell;
            std::printf(" %11s +- %-8s", fmt_num(m).c_str(), fmt_num(s).c_str());
        }
        std::cout << "\n";
        row["cells"] = jc;
        rows.push_back(row);
    }

    Json art = artifact_header("ablation_report", r.cfg, r.seed);
    art["seeds"] = seeds;
    art["prompt_instruction"] = prompt.plan.source_instruction;
    art["prompt_object"] = prompt.object_name;
    art["rows"] = rows;
    write_json_file(out_path, art);
    std::cout << "wrote " << out_path << "\n";
}

void run_schedule_dump(const ConfigFlags& f, const std::string& out_path) {
    const Resolved r = resolve(f);
    const NoiseSchedule s = r.cfg.schedule.build();
    Json art = artifact_header("schedule_dump", r.cfg, r.seed);
    art["schedule"] = schedule_to_json(s);
    if (out_path.empty()) {
        std::cout << art.dump(2) << "\n";
    } else {
        write_json_file(out_path, art);
        std::cout << "wrote " << out_path << "\n";
    }
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"long-horizon hand-object interaction synthesis toolkit", "hoiforge"};
    app.require_subcommand(1);

    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset with train/val splits");
    ConfigFlags gen_f;
    std::string gen_out;
    add_config_flags(gen, gen_f);
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->callback([&] { run_gen(gen_f, gen_out); });

    CLI::App* tr = app.add_subcommand("train", "train the segment and transition denoisers");
    ConfigFlags tr_f;
    std::string tr_data, tr_out;
    add_config_flags(tr, tr_f);
    tr->add_option("--data", tr_data, "dataset directory from gen")->required();
    tr->add_option("--out", tr_out, "checkpoint output path")->required();
    tr->callback([&] { run_train(tr_f, tr_data, tr_out); });

    CLI::App* pl = app.add_subcommand("plan", "parse an instruction into a grounded task plan");
    ConfigFlags pl_f;
    std::string pl_grammar, pl_object, pl_object_name, pl_instruction, pl_out;
    add_config_flags(pl, pl_f);
    pl->add_option("--grammar", pl_grammar, "instruction grammar JSON")->required();
    pl->add_option("--object", pl_object, "object JSON (single object or object set)")->required();
    pl->add_option("--object-name", pl_object_name, "object name inside an object set");
    pl->add_option("--instruction", pl_instruction, "natural-language instruction")->required();
    pl->add_option("--out", pl_out, "plan output path")->required();
    pl->callback(
        [&] { run_plan(pl_f, pl_grammar, pl_object, pl_object_name, pl_instruction, pl_out); });

    CLI::App* sa = app.add_subcommand("sample", "synthesize a sequence for a plan");
    ConfigFlags sa_f;
    std::string sa_ckpt, sa_object, sa_object_name, sa_plan, sa_out, sa_log;
    bool sa_no_transitions = false;
    add_config_flags(sa, sa_f);
    sa->add_option("--checkpoint", sa_ckpt, "trained checkpoint")->required();
    sa->add_option("--object", sa_object, "object JSON (single object or object set)")->required();
    sa->add_option("--object-name", sa_object_name, "object name inside an object set");
    sa->add_option("--plan", sa_plan, "plan JSON from the plan command")->required();
    sa->add_option("--out", sa_out, "sample output path")->required();
    sa->add_option("--log", sa_log, "per-step guidance log CSV path");
    sa->add_flag("--no-transitions", sa_no_transitions, "butt-join segments without bridge clips");
    sa->callback([&] {
        run_sample(sa_f, sa_ckpt, sa_object, sa_object_name, sa_plan, sa_out, sa_log,
                   sa_no_transitions);
    });

    CLI::App* ev = app.add_subcommand("eval", "sample against the validation split and score");
    ConfigFlags ev_f;
    std::string ev_ckpt, ev_data, ev_out;
    add_config_flags(ev, ev_f);
    ev->add_option("--checkpoint", ev_ckpt, "trained checkpoint")->required();
    ev->add_option("--data", ev_data, "dataset directory from gen")->required();
    ev->add_option("--out", ev_out, "metrics output path")->required();
    ev->callback([&] { run_eval(ev_f, ev_ckpt, ev_data, ev_out); });

    CLI::App* ab = app.add_subcommand("ablate", "run the guidance ablation grid");
    ConfigFlags ab_f;
    std::string ab_ckpt, ab_data, ab_out;
    int ab_seeds = 10;
    add_config_flags(ab, ab_f);
    ab->add_option("--checkpoint", ab_ckpt, "trained checkpoint")->required();
    ab->add_option("--data", ab_data, "dataset directory from gen")->required();
    ab->add_option("--out", ab_out, "report output path")->required();
    ab->add_option("--seeds", ab_seeds, "seeds per variant (default 10)");
    ab->callback([&] { run_ablate(ab_f, ab_ckpt, ab_data, ab_out, ab_seeds); });

    CLI::App* sd = app.add_subcommand("schedule-dump", "write the resolved noise schedule");
    ConfigFlags sd_f;
    std::string sd_out;
    add_config_flags(sd, sd_f);
    sd->add_option("--out", sd_out, "output path (default: stdout)");
    sd->callback([&] { run_schedule_dump(sd_f, sd_out); });

    try {
        apply_thread_cap();
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace hoiforge
