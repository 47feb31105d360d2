// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "hoiforge/cli.hpp"
#include "hoiforge/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace hoiforge;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "hoiforge");
    std::vector<char*> argv;
    argv.reserve(args.size());
    for (std::string& s : args) argv.push_back(s.data());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool same_bytes(const std::string& a, const std::string& b) { return slurp(a) == slurp(b); }

std::string root() {
    static const std::string dir = [] {
        const fs::path p = fs::temp_directory_path() / "hoiforge_cli_test";
        fs::remove_all(p);
        fs::create_directories(p);
        return p.string();
    }();
    return dir;
}

// Tiny everything: 24-frame clips, 8-step schedule, 32-wide net.
std::vector<std::string> tiny_gen_args(const std::string& out, const std::string& seed) {
    return {"gen",  "--out",  out,        "--count", "4",         "--scene", "bottle:lift:3:24",
            "--scene", "box:lift:3:24", "--seed", seed};
}

std::vector<std::string> tiny_model_args() {
    return {"--frames", "24", "--hidden-width", "32", "--hidden-layers", "1",
            "--time-dim", "8", "--embed-dim", "8", "--cond-dim", "16",
            "--transition-frames", "8", "--transition-width", "16", "--transition-layers", "1",
            "--transition-time-dim", "8", "--transition-embed-dim", "8",
            "--transition-cond-dim", "16", "--schedule-steps", "8"};
}

void append(std::vector<std::string>& args, const std::vector<std::string>& extra) {
    args.insert(args.end(), extra.begin(), extra.end());
}

std::string first_val_object(const std::string& data_dir) {
    const Json j = read_json_file(data_dir + "/val_objects.json");
    REQUIRE(j.at("objects").size() > 0);
    return j.at("objects").begin().key();
}

}  // namespace

TEST_SUITE_BEGIN("config_cli");

TEST_CASE("run config round trips and merges partial files") {
    RunConfig def;
    const Json j = run_config_to_json(def);
    CHECK(j.at("type") == "run_config");
    const RunConfig back = run_config_from_json(j);
    CHECK(run_config_to_json(back).dump() == j.dump());
    CHECK(back.transition.frames == 30);
    CHECK(back.data.specs.size() == 2);

    // Partial files keep every unmentioned field at its default.
    const RunConfig part = run_config_from_json(Json{
        {"guidance", {{"cfg_scale", 3.5}}},
        {"schedule", {{"steps", 12}}},
        {"data", {{"count", 9}}},
    });
    CHECK(part.guidance.cfg_scale == 3.5);
    CHECK(part.guidance.lambda_pen == def.guidance.lambda_pen);
    CHECK(part.schedule.steps == 12);
    CHECK(part.schedule.s0 == def.schedule.s0);
    CHECK(part.data.count == 9);
    CHECK(part.data.specs.size() == def.data.specs.size());

    // Scene specs accept the terse config-file form.
    const RunConfig scene = run_config_from_json(Json{
        {"data", {{"specs", Json::array({Json{{"object_template", "mug"}, {"instances", 2}}})}}}});
    CHECK(scene.data.specs.size() == 1);
    CHECK(scene.data.specs[0].object_template == ObjectTemplate::Mug);
    CHECK(scene.data.specs[0].instances == 2);
}

TEST_CASE("run config validation rejects bad fields") {
    CHECK_THROWS_AS(run_config_from_json(Json{{"schedule", {{"steps", 0}}}}), HoiError);
    CHECK_THROWS_AS(run_config_from_json(Json{{"data", {{"count", 0}}}}), HoiError);
    CHECK_THROWS_AS(run_config_from_json(Json{{"data", {{"split_ratio", 1.0}}}}), HoiError);
    CHECK_THROWS_AS(run_config_from_json(Json{{"eval", {{"repeats", 0}}}}), HoiError);
    CHECK_THROWS_AS(run_config_from_json(Json{{"model", {{"activation", "tanh"}}}}), HoiError);
    CHECK_THROWS_AS(run_config_from_json(Json{{"type", "sample"}}), HoiError);
    CHECK_THROWS_AS(run_config_from_json(Json::array()), HoiError);
}

TEST_CASE("extract run config prefers the embedded config") {
    RunConfig cfg;
    cfg.schedule.steps = 17;
    const Json art = artifact_header("sample", cfg, 42);
    CHECK(art.at("version") == kVersionString);
    CHECK(art.at("seed") == 42);
    const RunConfig out = extract_run_config(art);
    CHECK(out.schedule.steps == 17);
    // A bare config object also works.
    CHECK(extract_run_config(run_config_to_json(cfg)).schedule.steps == 17);
}

TEST_CASE("ensure_finite flags NaN and infinity") {
    VecX v = VecX::Zero(4);
    CHECK_NOTHROW(ensure_finite(v, "vector"));
    v[2] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(ensure_finite(v, "vector"), HoiError);
    v[2] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(ensure_finite(v, "vector"), HoiError);
}

TEST_CASE("gen is deterministic and reproducible from its manifest") {
    const std::string a = root() + "/gen_a", b = root() + "/gen_b", c = root() + "/gen_c";
    REQUIRE(run_cli(tiny_gen_args(a, "9")) == 0);
    REQUIRE(run_cli(tiny_gen_args(b, "9")) == 0);
    for (const char* f : {"/manifest.json", "/train_records.jsonl", "/train_objects.json",
                          "/val_records.jsonl", "/val_objects.json"}) {
        const bool same = same_bytes(a + f, b + f);
        CHECK_MESSAGE(same, f);
    }
    // Re-running from the embedded config (and embedded seed) reproduces it.
    REQUIRE(run_cli({"gen", "--config", a + "/manifest.json", "--out", c}) == 0);
    for (const char* f : {"/train_records.jsonl", "/val_records.jsonl"}) {
        const bool same = same_bytes(a + f, c + f);
        CHECK_MESSAGE(same, f);
    }
    const Json man = read_json_file(a + "/manifest.json");
    CHECK(man.at("type") == "dataset_manifest");
    CHECK(man.at("seed") == 9);
    CHECK(man.at("counts").at("total") == 8);
    // A different seed changes the records.
    const std::string d = root() + "/gen_d";
    REQUIRE(run_cli(tiny_gen_args(d, "10")) == 0);
    CHECK(!same_bytes(a + "/train_records.jsonl", d + "/train_records.jsonl"));
}

TEST_CASE("cli end-to-end pipeline") {
    const std::string data = root() + "/data";
    const std::string ckpt = root() + "/ckpt.bin";
    REQUIRE(run_cli(tiny_gen_args(data, "7")) == 0);

    std::vector<std::string> train_args{"train", "--data", data, "--out", ckpt,
                                        "--train-steps", "30", "--batch-size", "4",
                                        "--seed", "7"};
    append(train_args, tiny_model_args());
    REQUIRE(run_cli(train_args) == 0);
    CHECK(fs::exists(ckpt + ".loss.csv"));
    CHECK(fs::exists(ckpt + ".transition_loss.csv"));
    const CheckpointBundle bundle = load_checkpoint(ckpt);
    CHECK(bundle.meta.at("type") == "checkpoint");
    CHECK(bundle.meta.at("seed") == 7);
    CHECK(bundle.meta.at("config").at("schedule").at("steps") == 8);
    CHECK(bundle.main.config.frames == 24);
    CHECK(bundle.transition.config.frames == 8);

    // Plan an instruction against a generated object.
    const std::string obj_name = first_val_object(data);
    const std::string plan_path = root() + "/plan.json";
    REQUIRE(run_cli({"plan", "--grammar", std::string(HOIFORGE_ASSET_DIR) + "/default_grammar.json",
                     "--object", data + "/val_objects.json", "--object-name", obj_name,
                     "--instruction", "lift the bottle", "--out", plan_path}) == 0);
    const Json plan_art = read_json_file(plan_path);
    CHECK(plan_art.at("type") == "plan");
    CHECK(plan_art.at("plan").at("subtasks").size() >= 1);

    // Sample: checkpoint config drives the model shape, flags stay on top.
    const std::string sample_path = root() + "/sample.json";
    const std::string log_path = root() + "/guidance_log.csv";
    REQUIRE(run_cli({"sample", "--checkpoint", ckpt, "--object", data + "/val_objects.json",
                     "--object-name", obj_name, "--plan", plan_path, "--out", sample_path,
                     "--log", log_path, "--seed", "3"}) == 0);
    const Json sample_art = read_json_file(sample_path);
    CHECK(sample_art.at("type") == "sample");
    CHECK(sample_art.at("version") == kVersionString);
    CHECK(sample_art.at("seed") == 3);
    CHECK(sample_art.at("config").at("model").at("frames") == 24);
    CHECK(sample_art.at("sequence").at("frames").size() == 24);
    const std::string log = slurp(log_path);
    CHECK(log.rfind("t,l_aff,l_pen,grad_norm", 0) == 0);

    // Re-running from the sample's own embedded config reproduces it.
    const std::string sample2 = root() + "/sample2.json";
    REQUIRE(run_cli({"sample", "--checkpoint", ckpt, "--object", data + "/val_objects.json",
                     "--object-name", obj_name, "--plan", plan_path, "--out", sample2,
                     "--config", sample_path}) == 0);
    const bool sample_same = slurp(sample_path) == slurp(sample2);
    CHECK(sample_same);

    // Eval writes mean and std for every reported metric.
    const std::string metrics_path = root() + "/metrics.json";
    REQUIRE(run_cli({"eval", "--checkpoint", ckpt, "--data", data, "--out", metrics_path,
                     "--repeats", "3", "--eval-limit", "2", "--eval-window", "10",
                     "--eval-stride", "5", "--seed", "11"}) == 0);
    const Json metrics = read_json_file(metrics_path);
    CHECK(metrics.at("type") == "metrics");
    CHECK(metrics.at("metrics").size() >= 5);
    for (const auto& [name, cell] : metrics.at("metrics").items()) {
        INFO(name);
        CHECK(cell.contains("mean"));
        CHECK(cell.contains("std"));
        CHECK(cell.at("values").size() == 3);
    }

    // Ablation grid: 1 full + 4 ablations + 5 scale values + 5 window sizes.
    const std::string report_path = root() + "/report.json";
    std::vector<std::string> ablate_args{"ablate", "--checkpoint", ckpt, "--data", data,
                                         "--out", report_path, "--seeds", "2",
                                         "--eval-window", "10", "--eval-stride", "5",
                                         "--seed", "5"};
    REQUIRE(run_cli(ablate_args) == 0);
    const Json report = read_json_file(report_path);
    CHECK(report.at("type") == "ablation_report");
    REQUIRE(report.at("rows").size() == 15);
    const std::vector<std::string> expected{
        "full",          "no_affordance_loss", "no_cfg",      "no_penetration_loss",
        "uniform_affordance", "cfg_scale_0.5", "cfg_scale_2", "cfg_scale_2.5",
        "cfg_scale_3",   "cfg_scale_5",        "window_1",    "window_3",
        "window_5",      "window_10",          "window_20"};
    for (size_t i = 0; i < expected.size(); ++i)
        CHECK(report.at("rows")[i].at("name") == expected[i]);
    // The duplicated setting pairs with full on identical streams: p = 1.
    const Json& dup = report.at("rows")[7].at("cells");
    CHECK(dup.at("iv_cm3").at("p_vs_full") == 1.0);
    CHECK(report.at("rows")[0].at("cells").at("iv_cm3").at("p_vs_full").is_null());
    for (const auto& row : report.at("rows")) {
        for (const auto& [name, cell] : row.at("cells").items()) {
            INFO(row.at("name").get<std::string>() << " " << name);
            CHECK(cell.contains("mean"));
            CHECK(cell.contains("std"));
        }
    }

    // Same seed set: identical report bytes.
    const std::string report2 = root() + "/report2.json";
    ablate_args[6] = report2;
    REQUIRE(run_cli(ablate_args) == 0);
    const Json r2 = read_json_file(report2);
    CHECK(report.at("rows").dump() == r2.at("rows").dump());
}

TEST_CASE("schedule dump writes the resolved schedule") {
    const std::string out = root() + "/schedule.json";
    REQUIRE(run_cli({"schedule-dump", "--schedule-steps", "6", "--out", out}) == 0);
    const Json j = read_json_file(out);
    CHECK(j.at("type") == "schedule_dump");
    CHECK(j.at("config").at("schedule").at("steps") == 6);
    CHECK(j.at("schedule").at("alpha_bar").size() == 6);
}

TEST_CASE("usage errors exit nonzero") {
    CHECK(run_cli({"sample", "--plan", "x.json"}) != 0);  // --checkpoint missing
    CHECK(run_cli({"definitely-not-a-command"}) != 0);
    CHECK(run_cli({}) != 0);  // a subcommand is required
    CHECK(run_cli({"gen", "--out", root() + "/bad", "--count", "0"}) != 0);
    CHECK(run_cli({"train", "--data", root() + "/missing", "--out", root() + "/x.bin"}) != 0);
    CHECK(run_cli({"gen", "--out", root() + "/bad2", "--scene", "bottle"}) != 0);
}

TEST_CASE("flags override config files") {
    const std::string cfg_path = root() + "/cfg.json";
    write_json_file(cfg_path, Json{{"schedule", {{"steps", 6}}}});
    const std::string out1 = root() + "/sched1.json", out2 = root() + "/sched2.json";
    REQUIRE(run_cli({"schedule-dump", "--config", cfg_path, "--out", out1}) == 0);
    REQUIRE(run_cli({"schedule-dump", "--config", cfg_path, "--schedule-steps", "4", "--out",
                     out2}) == 0);
    CHECK(read_json_file(out1).at("schedule").at("alpha_bar").size() == 6);
    CHECK(read_json_file(out2).at("schedule").at("alpha_bar").size() == 4);
}

TEST_SUITE_END();
