// SPDX-License-Identifier: Apache-2.0
#include "hoiforge/synth.hpp"

#include "hoiforge/object.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace hoiforge {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMinGraspWidth = 0.004;   // finger spacing, meters
constexpr double kMaxJointStep = 0.05;     // 1.5 m/s at 30 fps, meters/frame
constexpr int kPatchSize = 12;             // contact points drawn per grasp

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                          std::uint64_t d) {
    return mix64(mix64(mix64(mix64(a) ^ b) ^ c) ^ d);
}

double ease(double u) { return u * u * (3.0 - 2.0 * u); }

Vec4 axis_angle_quat(const Vec3& axis, double angle) {
    const double n = axis.norm();
    if (n < 1e-12) return Vec4(1, 0, 0, 0);
    const Vec3 a = axis / n;
    const double h = 0.5 * angle;
    const double s = std::sin(h);
    return Vec4(std::cos(h), a.x() * s, a.y() * s, a.z() * s);
}

// Unit quaternion rotating local +z onto the given unit direction.
Vec4 quat_z_to(const Vec3& d) {
    const Vec3 z(0, 0, 1);
    const double w = 1.0 + z.dot(d);
    if (w < 1e-12) return Vec4(0, 1, 0, 0);  // antiparallel: pi about x
    const Vec3 xyz = z.cross(d);
    Vec4 q(w, xyz.x(), xyz.y(), xyz.z());
    return q / q.norm();
}

// ---------------------------------------------------------------------------
// Surface sampling

double primitive_area(const SdfPrimitive& p) {
    switch (p.kind) {
        case PrimitiveKind::Sphere:
            return 4.0 * kPi * p.params[0] * p.params[0];
        case PrimitiveKind::Box: {
            const double a = p.params[0], b = p.params[1], c = p.params[2];
            return 8.0 * (a * b + b * c + c * a);
        }
        case PrimitiveKind::Cylinder: {
            const double r = p.params[0], h = p.params[1];
            return 4.0 * kPi * r * h + 2.0 * kPi * r * r;
        }
        case PrimitiveKind::Capsule: {
            const double r = p.params[0], h = p.params[1];
            return 4.0 * kPi * r * h + 4.0 * kPi * r * r;
        }
    }
    throw HoiError("primitive_area: unknown primitive kind");
}

Vec3 sample_unit_sphere(std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (;;) {
        Vec3 v(gauss(rng), gauss(rng), gauss(rng));
        const double n = v.norm();
        if (n > 1e-9) return v / n;
    }
}

// Uniform area-weighted point on the primitive surface, local frame.
Vec3 sample_on_primitive(const SdfPrimitive& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    switch (p.kind) {
        case PrimitiveKind::Sphere:
            return p.params[0] * sample_unit_sphere(rng);
        case PrimitiveKind::Box: {
            const Vec3 e(p.params[0], p.params[1], p.params[2]);
            const std::array<double, 3> face = {e.y() * e.z(), e.z() * e.x(),
                                                e.x() * e.y()};
            const double total = face[0] + face[1] + face[2];
            double pick = uni(rng) * total;
            int axis = 0;
            while (axis < 2 && pick > face[axis]) pick -= face[axis], ++axis;
            Vec3 q;
            q[axis] = (uni(rng) < 0.5 ? -1.0 : 1.0) * e[axis];
            const int u = (axis + 1) % 3, v = (axis + 2) % 3;
            q[u] = (2.0 * uni(rng) - 1.0) * e[u];
            q[v] = (2.0 * uni(rng) - 1.0) * e[v];
            return q;
        }
        case PrimitiveKind::Cylinder: {
            const double r = p.params[0], h = p.params[1];
            const double side = 4.0 * kPi * r * h, caps = 2.0 * kPi * r * r;
            if (uni(rng) * (side + caps) < side) {
                const double th = 2.0 * kPi * uni(rng);
                return Vec3(r * std::cos(th), r * std::sin(th),
                            (2.0 * uni(rng) - 1.0) * h);
            }
            const double z = uni(rng) < 0.5 ? -h : h;
            const double rho = r * std::sqrt(uni(rng));
            const double th = 2.0 * kPi * uni(rng);
            return Vec3(rho * std::cos(th), rho * std::sin(th), z);
        }
        case PrimitiveKind::Capsule: {
            const double r = p.params[0], h = p.params[1];
            const double side = 4.0 * kPi * r * h, caps = 4.0 * kPi * r * r;
            if (uni(rng) * (side + caps) < side) {
                const double th = 2.0 * kPi * uni(rng);
                return Vec3(r * std::cos(th), r * std::sin(th),
                            (2.0 * uni(rng) - 1.0) * h);
            }
            Vec3 d = r * sample_unit_sphere(rng);
            const double end = uni(rng) < 0.5 ? -h : h;
            d.z() = end + (end < 0.0 ? -std::abs(d.z()) : std::abs(d.z()));
            return d;
        }
    }
    throw HoiError("sample_on_primitive: unknown primitive kind");
}

SdfPrimitive make_cylinder(double r, double half_h, const Vec3& at, int part) {
    SdfPrimitive p;
    p.kind = PrimitiveKind::Cylinder;
    p.translation = at;
    p.params = Vec3(r, half_h, 0.0);
    p.part_label = part;
    return p;
}

SdfPrimitive make_box(const Vec3& half, const Vec3& at, int part) {
    SdfPrimitive p;
    p.kind = PrimitiveKind::Box;
    p.translation = at;
    p.params = half;
    p.part_label = part;
    return p;
}

SdfPrimitive make_capsule(const Vec3& a, const Vec3& b, double r, int part) {
    SdfPrimitive p;
    p.kind = PrimitiveKind::Capsule;
    p.translation = 0.5 * (a + b);
    const Vec3 d = b - a;
    p.rotation = quat_z_to(d / d.norm());
    p.params = Vec3(r, 0.5 * d.norm(), 0.0);
    p.part_label = part;
    return p;
}

// ---------------------------------------------------------------------------
// Task templates

// The part a one-handed grasp naturally lands on.
std::string primary_part(ObjectTemplate t) {
    return t == ObjectTemplate::Mug ? "handle" : "body";
}

// The removable part targeted by Open.
std::string secondary_part(ObjectTemplate t) {
    switch (t) {
        case ObjectTemplate::Bottle: return "cap";
        case ObjectTemplate::Box: return "lid";
        case ObjectTemplate::Mug: return "handle";
    }
    throw HoiError("secondary_part: unknown object template");
}

SubTask make_step(ActionType a, const std::string& part, Hands h, int frames) {
    SubTask st;
    st.action = a;
    st.target_part = part;
    st.hands = h;
    st.embedding_id = task_embedding_id(a, h);
    st.duration_frames = frames;
    return st;
}

// ---------------------------------------------------------------------------
// Choreography

struct HandState {
    std::array<Vec3, kNumJoints> joints{};
    Vec4 wrist{1, 0, 0, 0};
};

// Open-hand layout: palm root at `root`, fingers fanned toward `forward`
// (horizontalized), spread sideways. Joint j = 1 + 4*finger + link, tips at
// link 3, matching the flat layout's contact-joint indices.
std::array<Vec3, kNumJoints> open_layout(const Vec3& root, const Vec3& forward) {
    Vec3 f = forward;
    f.z() = 0.0;
    if (f.norm() < 1e-9) f = Vec3(1, 0, 0);
    f.normalize();
    const Vec3 up(0, 0, 1);
    const Vec3 s = up.cross(f);
    std::array<Vec3, kNumJoints> out{};
    out[0] = root;
    for (int fg = 0; fg < 5; ++fg) {
        const Vec3 base = root + 0.025 * f + (fg - 2) * 0.012 * s;
        for (int k = 0; k < 4; ++k)
            out[1 + 4 * fg + k] = base + (k + 1) * 0.012 * f;
    }
    return out;
}

struct ContactPatch {
    std::vector<int> ids;  // point indices into the object cloud
    Vec3 anchor;           // world mean of the patch points
    Vec3 normal;           // world mean outward normal
};

// A compact cluster of affordance points for one hand: seeded at the region
// point most toward the hand's side, grown to the nearest neighbours so the
// fingers land close together instead of wrapping the whole part.
ContactPatch pick_patch(const ObjectModel& obj, const ObjectPose& pose,
                        const std::vector<int>& region, Hands side) {
    if (region.empty()) throw HoiError("pick_patch: empty affordance region");
    const double dir = side == Hands::Left ? -1.0 : 1.0;
    std::vector<Vec3> world(region.size());
    for (size_t i = 0; i < region.size(); ++i)
        world[i] = object_to_world(pose, obj.points[region[i]]);
    size_t seed = 0;
    for (size_t i = 1; i < region.size(); ++i)
        if (dir * world[i].x() > dir * world[seed].x()) seed = i;
    std::vector<size_t> order(region.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    const Vec3 seed_pt = world[seed];
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return (world[a] - seed_pt).squaredNorm() <
               (world[b] - seed_pt).squaredNorm();
    });
    const size_t take = std::min<size_t>(kPatchSize, order.size());
    ContactPatch patch;
    patch.anchor = Vec3::Zero();
    patch.normal = Vec3::Zero();
    for (size_t i = 0; i < take; ++i) {
        patch.ids.push_back(region[order[i]]);
        const Vec3 p = world[order[i]];
        patch.anchor += p;
        patch.normal += sdf_query_posed(obj, pose, p).gradient;
    }
    std::sort(patch.ids.begin(), patch.ids.end());
    patch.anchor /= static_cast<double>(take);
    if (patch.normal.norm() > 1e-9) {
        patch.normal.normalize();
    } else {
        Vec3 away = patch.anchor - pose.position;
        away.z() = 0.0;
        patch.normal = away.norm() > 1e-9 ? Vec3(away.normalized()) : Vec3(1, 0, 0);
    }
    return patch;
}

// Grasp targets: contact joints cycle over the patch points, offset outward
// by their sphere radius; intermediate links blend root-to-tip with a small
// outward lift so chords do not cut into convex surfaces.
std::array<Vec3, kNumJoints> grasp_targets(const ObjectModel& obj,
                                           const ObjectPose& pose,
                                           const ContactPatch& patch) {
    std::array<Vec3, kNumJoints> t{};
    const int m = static_cast<int>(patch.ids.size());
    for (size_t ci = 0; ci < kContactJoints.size(); ++ci) {
        const int j = kContactJoints[ci];
        const Vec3 p =
            object_to_world(pose, obj.points[patch.ids[ci % m]]);
        const Vec3 n = sdf_query_posed(obj, pose, p).gradient;
        t[j] = p + joint_radius(j) * n;
    }
    for (int fg = 0; fg < 5; ++fg) {
        const Vec3 tip = t[4 * (fg + 1)];
        for (int k = 0; k < 3; ++k) {
            const double frac = (k + 1) / 4.0;
            t[1 + 4 * fg + k] = t[0] + frac * (tip - t[0]) +
                                (0.004 * (3 - k) / 3.0) * patch.normal;
        }
    }
    return t;
}

struct ActMotion {
    Vec3 lin = Vec3::Zero();   // translation at u = 1
    Vec3 axis = Vec3::Zero();  // rotation axis (zero = none)
    double angle = 0.0;        // rotation at u = 1, about pivot
    Vec3 pivot = Vec3::Zero();
};

// Eased rigid motion applied to the object and the attached hand(s) during
// the act phase. Amplitudes are capped so peak speed stays below v_max.
ActMotion act_motion(ActionType a, const ObjectPose& pose, int act_frames) {
    const double n = static_cast<double>(act_frames);
    ActMotion m;
    m.pivot = pose.position;
    switch (a) {
        case ActionType::Lift:
            m.lin = Vec3(0, 0, std::min(0.08, 0.03 * n));
            break;
        case ActionType::Twist:
            m.axis = Vec3(0, 0, 1);
            m.angle = std::min(0.5 * kPi, 0.2 * n);
            break;
        case ActionType::Place:
            m.lin = Vec3(std::min(0.05, 0.02 * n), 0.0,
                         -std::min(0.04, 0.015 * n));
            break;
        case ActionType::Push:
            m.lin = Vec3(std::min(0.06, 0.03 * n), 0, 0);
            break;
        case ActionType::Pour:
            m.axis = Vec3(0, 1, 0);
            m.angle = std::min(1.0, 0.25 * n);
            break;
        default:
            break;  // Approach/Grasp/Release hold the object still
    }
    return m;
}

Vec3 apply_motion(const ActMotion& m, double h, const Vec3& p) {
    Vec3 out = p;
    if (m.angle != 0.0) {
        const Eigen::Matrix3d rot =
            Eigen::AngleAxisd(m.angle * h, m.axis).toRotationMatrix();
        out = rot * (out - m.pivot) + m.pivot;
    }
    return out + h * m.lin;
}

struct PhaseSplit {
    int approach, close, act;
};

PhaseSplit split_phases(int frames) {
    PhaseSplit s;
    s.approach = std::max(2, static_cast<int>(std::lround(0.4 * frames)));
    s.close = std::max(1, static_cast<int>(std::lround(0.15 * frames)));
    s.act = frames - s.approach - s.close;
    if (s.act < 1)
        throw HoiError("split_phases: subtask too short for phase split");
    return s;
}

std::vector<Hands> active_sides(Hands h) {
    if (h == Hands::Both) return {Hands::Left, Hands::Right};
    return {h};
}

// One scripted record: per subtask, the active hand approaches a stand-off
// pose along a straight eased line, closes onto the grasp targets, then the
// object and hand move rigidly together through the action. The other hand
// stays parked. Jitter and penetration projection run afterwards.
DatasetRecord generate_record(const SceneSpec& spec, const ObjectModel& obj,
                              const std::string& object_name,
                              std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    DatasetRecord rec;
    rec.object_name = object_name;
    rec.plan.source_instruction =
        "synthetic/" + task_template_name(spec.task_template) + "/" + object_name;
    rec.plan.subtasks = task_template_steps(spec.task_template,
                                            spec.object_template,
                                            spec.frames_per_subtask);
    for (const SubTask& st : rec.plan.subtasks)
        rec.plan.aff_markers.push_back(ground_affordance(obj, st));

    ObjectPose pose;
    pose.position = Vec3((2.0 * uni(rng) - 1.0) * spec.pose_range,
                         (2.0 * uni(rng) - 1.0) * spec.pose_range, 0.0);
    pose.orientation = axis_angle_quat(Vec3(0, 0, 1), 2.0 * kPi * uni(rng));

    std::array<HandState, 2> hand;  // [0] = left, [1] = right
    for (int s = 0; s < 2; ++s) {
        const Vec3 park = pose.position +
                          Vec3(s == 0 ? -0.22 : 0.22, -0.12, 0.08);
        hand[s].joints = open_layout(park, pose.position - park);
    }

    HoiSequence& seq = rec.sequence;
    seq.fps = 30.0;

    for (size_t k = 0; k < rec.plan.subtasks.size(); ++k) {
        const SubTask& st = rec.plan.subtasks[k];
        const AffordanceMap& marker = rec.plan.aff_markers[k];
        const PhaseSplit ph = split_phases(st.duration_frames);
        const std::vector<Hands> sides = active_sides(st.hands);

        struct SidePlan {
            int idx;  // 0 = left, 1 = right
            bool held;
            std::array<Vec3, kNumJoints> start, pre, targets;
        };
        std::vector<SidePlan> plans;
        for (Hands side : sides) {
            SidePlan sp;
            sp.idx = side == Hands::Left ? 0 : 1;
            const std::vector<int>& region = side == Hands::Left
                                                 ? marker.active_left
                                                 : marker.active_right;
            const ContactPatch patch = pick_patch(obj, pose, region, side);
            sp.targets = grasp_targets(obj, pose, patch);
            sp.held = (hand[sp.idx].joints[0] - sp.targets[0]).norm() < 0.02;
            // Pre-grasp: target shape pushed off the surface with the fingers
            // slightly splayed, so the close phase travel is a few cm at most.
            for (int j = 0; j < kNumJoints; ++j)
                sp.pre[j] = sp.targets[j] + 0.03 * patch.normal +
                            0.2 * (sp.targets[j] - sp.targets[0]);
            const Vec3 pre_root = sp.pre[0];
            // Straight approach, capped so peak eased speed stays feasible.
            const Vec3 cur_root = hand[sp.idx].joints[0];
            Vec3 offset = cur_root - pre_root;
            const double cap = (kMaxJointStep / 1.5) * ph.approach * 0.9;
            if (offset.norm() > cap && offset.norm() > 0.0)
                offset *= cap / offset.norm();
            const Vec3 start_root = pre_root + offset;
            for (int j = 0; j < kNumJoints; ++j)
                sp.start[j] = sp.pre[j] + (start_root - pre_root);
            plans.push_back(sp);
        }

        ActMotion motion;
        std::array<HandState, 2> act_base;
        ObjectPose act_pose;
        for (int i = 0; i < st.duration_frames; ++i) {
            if (i < ph.approach) {
                const double h = ease((i + 1.0) / ph.approach);
                for (const SidePlan& sp : plans) {
                    if (sp.held) continue;
                    for (int j = 0; j < kNumJoints; ++j)
                        hand[sp.idx].joints[j] =
                            sp.start[j] + h * (sp.pre[j] - sp.start[j]);
                }
            } else if (i < ph.approach + ph.close) {
                const double h = ease((i + 1.0 - ph.approach) / ph.close);
                for (const SidePlan& sp : plans) {
                    if (sp.held) continue;
                    for (int j = 0; j < kNumJoints; ++j)
                        hand[sp.idx].joints[j] =
                            sp.pre[j] + h * (sp.targets[j] - sp.pre[j]);
                }
            } else {
                const int ai = i - ph.approach - ph.close;
                if (ai == 0) {
                    act_base = hand;
                    act_pose = pose;
                    motion = act_motion(st.action, pose, ph.act);
                }
                const double h = ease((ai + 1.0) / ph.act);
                for (const SidePlan& sp : plans) {
                    for (int j = 0; j < kNumJoints; ++j)
                        hand[sp.idx].joints[j] =
                            apply_motion(motion, h, act_base[sp.idx].joints[j]);
                    hand[sp.idx].wrist =
                        quat_mul(axis_angle_quat(motion.axis, motion.angle * h),
                                 act_base[sp.idx].wrist);
                }
                pose.position = apply_motion(motion, h, act_pose.position);
                pose.orientation =
                    quat_mul(axis_angle_quat(motion.axis, motion.angle * h),
                             act_pose.orientation);
            }
            HoiFrame frame;
            frame.left.joints = hand[0].joints;
            frame.left.wrist_orientation = hand[0].wrist;
            frame.right.joints = hand[1].joints;
            frame.right.wrist_orientation = hand[1].wrist;
            frame.object.position = pose.position;
            frame.object.orientation = pose.orientation;
            seq.frames.push_back(frame);
        }
    }

    if (spec.noise_amplitude > 0.0) {
        std::normal_distribution<double> gauss(0.0, spec.noise_amplitude);
        for (HoiFrame& f : seq.frames)
            for (HandPose* hp : {&f.left, &f.right})
                for (int j = 0; j < kNumJoints; ++j)
                    for (int c = 0; c < 3; ++c) hp->joints[j][c] += gauss(rng);
    }

    // Projection: push every joint sphere out along the gradient until it
    // clears the surface, so penetration is zero by construction.
    for (HoiFrame& f : seq.frames) {
        ObjectPose fp;
        fp.position = f.object.position;
        fp.orientation = f.object.orientation;
        for (HandPose* hp : {&f.left, &f.right}) {
            for (int j = 0; j < kNumJoints; ++j) {
                Vec3 p = hp->joints[j];
                const double r = joint_radius(j);
                for (int it = 0; it < 32; ++it) {
                    const SdfResult q = sdf_query_posed(obj, fp, p);
                    const double depth = r - q.distance;
                    if (depth <= 1e-12) break;
                    p += (depth + 1e-9) * q.gradient;
                }
                hp->joints[j] = p;
            }
        }
    }
    return rec;
}

void check_feasibility(const ObjectModel& obj, const SceneSpec& spec) {
    std::set<std::string> parts;
    for (const SubTask& st :
         task_template_steps(spec.task_template, spec.object_template, 12))
        parts.insert(st.target_part);
    for (const std::string& part : parts) {
        const int label = obj.part_label_of(part);
        Vec3 lo = Vec3::Constant(1e30), hi = Vec3::Constant(-1e30);
        for (int i = 0; i < obj.num_points(); ++i) {
            if (obj.point_part[i] != label) continue;
            lo = lo.cwiseMin(obj.points[i]);
            hi = hi.cwiseMax(obj.points[i]);
        }
        Vec3 ext = hi - lo;
        std::sort(ext.data(), ext.data() + 3);
        if (ext[1] < kMinGraspWidth)
            throw HoiError("generate_dataset: infeasible scene, part '" + part +
                           "' of " + obj.name + " is narrower than finger spacing");
    }
}

Json record_to_json(const DatasetRecord& rec) {
    return Json{{"object", rec.object_name},
                {"plan", plan_to_json(rec.plan)},
                {"sequence", sequence_to_json(rec.sequence)}};
}

DatasetRecord record_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("object") || !j.contains("plan") ||
        !j.contains("sequence"))
        throw HoiError("dataset record: expected {object, plan, sequence}");
    DatasetRecord rec;
    rec.object_name = j.at("object").get<std::string>();
    rec.plan = plan_from_json(j.at("plan"));
    rec.sequence = sequence_from_json(j.at("sequence"));
    return rec;
}

InteractionPrior subtask_prior(const SubTask& st, const AffordanceMap& marker,
                               const VecX& features) {
    InteractionPrior prior;
    prior.affordance = marker;
    prior.affordance.scores = conditioning_scores(marker.scores);
    prior.embedding_id = task_embedding_id(st.action, st.hands);
    prior.object_features = features;
    return prior;
}

}  // namespace

// ---------------------------------------------------------------------------
// Names and JSON

std::string object_template_name(ObjectTemplate t) {
    switch (t) {
        case ObjectTemplate::Bottle: return "bottle";
        case ObjectTemplate::Box: return "box";
        case ObjectTemplate::Mug: return "mug";
    }
    throw HoiError("object_template_name: unknown template");
}

ObjectTemplate object_template_from_name(const std::string& name) {
    if (name == "bottle") return ObjectTemplate::Bottle;
    if (name == "box") return ObjectTemplate::Box;
    if (name == "mug") return ObjectTemplate::Mug;
    throw HoiError("object_template_from_name: unknown template '" + name + "'");
}

std::string task_template_name(TaskTemplate t) {
    switch (t) {
        case TaskTemplate::Grasp: return "grasp";
        case TaskTemplate::Lift: return "lift";
        case TaskTemplate::Open: return "open";
        case TaskTemplate::Push: return "push";
        case TaskTemplate::Place: return "place";
        case TaskTemplate::BothGrasp: return "both_grasp";
    }
    throw HoiError("task_template_name: unknown template");
}

TaskTemplate task_template_from_name(const std::string& name) {
    if (name == "grasp") return TaskTemplate::Grasp;
    if (name == "lift") return TaskTemplate::Lift;
    if (name == "open") return TaskTemplate::Open;
    if (name == "push") return TaskTemplate::Push;
    if (name == "place") return TaskTemplate::Place;
    if (name == "both_grasp") return TaskTemplate::BothGrasp;
    throw HoiError("task_template_from_name: unknown template '" + name + "'");
}

void SceneSpec::check() const {
    if (!(scale_min > 0.0) || !(scale_max >= scale_min))
        throw HoiError("SceneSpec: need 0 < scale_min <= scale_max");
    if (pose_range < 0.0) throw HoiError("SceneSpec: pose_range must be >= 0");
    if (noise_amplitude < 0.0)
        throw HoiError("SceneSpec: noise_amplitude must be >= 0");
    if (instances < 1) throw HoiError("SceneSpec: instances must be >= 1");
    if (frames_per_subtask < 12)
        throw HoiError("SceneSpec: frames_per_subtask must be >= 12");
}

Json scene_spec_to_json(const SceneSpec& spec) {
    return Json{{"schema", kSchemaVersion},
                {"type", "scene_spec"},
                {"object_template", object_template_name(spec.object_template)},
                {"task_template", task_template_name(spec.task_template)},
                {"scale_min", spec.scale_min},
                {"scale_max", spec.scale_max},
                {"pose_range", spec.pose_range},
                {"noise_amplitude", spec.noise_amplitude},
                {"instances", spec.instances},
                {"frames_per_subtask", spec.frames_per_subtask},
                {"seed", spec.seed}};
}

SceneSpec scene_spec_from_json(const Json& j) {
    require_schema(j, "scene_spec");
    SceneSpec spec;
    spec.object_template =
        object_template_from_name(j.at("object_template").get<std::string>());
    spec.task_template =
        task_template_from_name(j.at("task_template").get<std::string>());
    spec.scale_min = j.at("scale_min").get<double>();
    spec.scale_max = j.at("scale_max").get<double>();
    spec.pose_range = j.at("pose_range").get<double>();
    spec.noise_amplitude = j.at("noise_amplitude").get<double>();
    spec.instances = j.at("instances").get<int>();
    spec.frames_per_subtask = j.at("frames_per_subtask").get<int>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.check();
    return spec;
}

// ---------------------------------------------------------------------------
// Object builders

ObjectModel make_template_object(ObjectTemplate t, double scale,
                                 std::uint64_t seed, const std::string& name) {
    if (!(scale > 0.0))
        throw HoiError("make_template_object: scale must be positive");
    ObjectModel obj;
    obj.name = name;
    const double s = scale;
    switch (t) {
        case ObjectTemplate::Bottle:
            obj.primitives.push_back(
                make_cylinder(0.035 * s, 0.08 * s, Vec3(0, 0, 0.08 * s), 0));
            obj.primitives.push_back(
                make_cylinder(0.018 * s, 0.012 * s, Vec3(0, 0, 0.172 * s), 1));
            obj.part_catalog = {{0, "body"}, {1, "cap"}};
            break;
        case ObjectTemplate::Box:
            obj.primitives.push_back(
                make_box(Vec3(0.06, 0.045, 0.03) * s, Vec3(0, 0, 0.03 * s), 0));
            obj.primitives.push_back(make_box(Vec3(0.062, 0.047, 0.008) * s,
                                              Vec3(0, 0, 0.068 * s), 1));
            obj.part_catalog = {{0, "body"}, {1, "lid"}};
            break;
        case ObjectTemplate::Mug: {
            obj.primitives.push_back(
                make_cylinder(0.04 * s, 0.045 * s, Vec3(0, 0, 0.045 * s), 0));
            const Vec3 center(0.052 * s, 0.0, 0.045 * s);
            const double ring_r = 0.028 * s, seg_r = 0.0065 * s;
            const std::array<double, 5> angles = {-110.0, -55.0, 0.0, 55.0,
                                                  110.0};
            std::array<Vec3, 5> pts;
            for (size_t i = 0; i < angles.size(); ++i) {
                const double a = angles[i] * kPi / 180.0;
                pts[i] = center + ring_r * Vec3(std::cos(a), 0.0, std::sin(a));
            }
            for (size_t i = 0; i + 1 < pts.size(); ++i)
                obj.primitives.push_back(make_capsule(pts[i], pts[i + 1],
                                                      seg_r, 1));
            obj.part_catalog = {{0, "body"}, {1, "handle"}};
            break;
        }
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<double> cumulative;
    double total = 0.0;
    for (const SdfPrimitive& p : obj.primitives) {
        total += primitive_area(p);
        cumulative.push_back(total);
    }

    const int budget = kAffordancePoints * 200;
    int attempts = 0;
    while (obj.num_points() < kAffordancePoints && attempts < budget) {
        ++attempts;
        const double pick = uni(rng) * total;
        size_t pi = 0;
        while (pi + 1 < cumulative.size() && pick > cumulative[pi]) ++pi;
        const SdfPrimitive& prim = obj.primitives[pi];
        const Vec3 local = sample_on_primitive(prim, rng);
        const Vec3 p = rotation_matrix(prim.rotation) * local + prim.translation;
        // Reject samples swallowed by a sibling primitive.
        if (sdf_query(obj, p).distance < -1e-4) continue;
        obj.points.push_back(p);
        obj.point_part.push_back(prim.part_label);
    }
    if (obj.num_points() < kAffordancePoints)
        throw HoiError("make_template_object: surface sampling failed for " +
                       name);
    validate_object(obj);
    return obj;
}

std::vector<SubTask> task_template_steps(TaskTemplate task, ObjectTemplate obj,
                                         int duration_frames) {
    const std::string prim = primary_part(obj);
    const std::string sec = secondary_part(obj);
    const Hands r = Hands::Right;
    std::vector<SubTask> steps;
    switch (task) {
        case TaskTemplate::Grasp:
            steps = {make_step(ActionType::Grasp, prim, r, duration_frames)};
            break;
        case TaskTemplate::Lift:
            steps = {make_step(ActionType::Grasp, prim, r, duration_frames),
                     make_step(ActionType::Lift, prim, r, duration_frames)};
            break;
        case TaskTemplate::Open:
            steps = {make_step(ActionType::Grasp, sec, r, duration_frames),
                     make_step(ActionType::Twist, sec, r, duration_frames)};
            break;
        case TaskTemplate::Push:
            steps = {make_step(ActionType::Push, "body", r, duration_frames)};
            break;
        case TaskTemplate::Place:
            steps = {make_step(ActionType::Grasp, prim, r, duration_frames),
                     make_step(ActionType::Lift, prim, r, duration_frames),
                     make_step(ActionType::Place, prim, r, duration_frames)};
            break;
        case TaskTemplate::BothGrasp:
            steps = {make_step(ActionType::Grasp, "body", Hands::Both,
                               duration_frames),
                     make_step(ActionType::Lift, "body", Hands::Both,
                               duration_frames)};
            break;
    }
    if (steps.empty())
        throw HoiError("task_template_steps: unknown task template");
    return steps;
}

// ---------------------------------------------------------------------------
// Dataset generation

Dataset generate_dataset(const std::vector<SceneSpec>& specs, int count,
                         std::uint64_t seed) {
    if (count < 1) throw HoiError("generate_dataset: count must be >= 1");
    if (specs.empty()) throw HoiError("generate_dataset: no scene specs");
    Dataset out;
    for (size_t si = 0; si < specs.size(); ++si) {
        const SceneSpec& spec = specs[si];
        spec.check();
        std::vector<std::string> names;
        for (int inst = 0; inst < spec.instances; ++inst) {
            std::mt19937_64 rng(
                derive_seed(seed, spec.seed, si, 0x10000u + inst));
            std::uniform_real_distribution<double> uni(0.0, 1.0);
            const double scale =
                spec.scale_min + (spec.scale_max - spec.scale_min) * uni(rng);
            std::ostringstream name;
            name << object_template_name(spec.object_template) << "_" << si
                 << "_" << inst;
            ObjectModel obj = make_template_object(spec.object_template, scale,
                                                   rng(), name.str());
            check_feasibility(obj, spec);
            if (!out.objects.emplace(name.str(), std::move(obj)).second)
                throw HoiError("generate_dataset: duplicate object name " +
                               name.str());
            names.push_back(name.str());
        }
        for (int rec = 0; rec < count; ++rec) {
            std::mt19937_64 rng(derive_seed(seed, spec.seed, si, rec));
            const std::string& name = names[rec % names.size()];
            out.records.push_back(
                generate_record(spec, out.objects.at(name), name, rng));
        }
    }
    return out;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data,
                                          double train_ratio,
                                          std::uint64_t seed) {
    if (!(train_ratio > 0.0) || !(train_ratio < 1.0))
        throw HoiError("split_dataset: ratio must be in (0, 1)");
    std::vector<std::string> names;
    for (const auto& [name, obj] : data.objects) names.push_back(name);
    const int n = static_cast<int>(names.size());
    if (n < 5) throw HoiError("split_dataset: need at least 5 object instances");
    std::mt19937_64 rng(seed);
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(names[i], names[j]);
    }
    int n_train = static_cast<int>(std::lround(train_ratio * n));
    n_train = std::max(1, std::min(n - 1, n_train));
    std::set<std::string> train_names(names.begin(), names.begin() + n_train);

    std::pair<Dataset, Dataset> out;
    for (const auto& [name, obj] : data.objects) {
        if (train_names.count(name))
            out.first.objects.emplace(name, obj);
        else
            out.second.objects.emplace(name, obj);
    }
    for (const DatasetRecord& rec : data.records) {
        if (train_names.count(rec.object_name))
            out.first.records.push_back(rec);
        else
            out.second.records.push_back(rec);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Files

void save_dataset_jsonl(const Dataset& data, const std::string& records_path,
                        const std::string& objects_path) {
    std::ofstream rf(records_path);
    if (!rf) throw HoiError("save_dataset_jsonl: cannot write " + records_path);
    for (const DatasetRecord& rec : data.records)
        rf << record_to_json(rec).dump() << "\n";
    if (!rf.good())
        throw HoiError("save_dataset_jsonl: write failed for " + records_path);
    rf.close();

    Json objs = Json::object();
    for (const auto& [name, obj] : data.objects) objs[name] = object_to_json(obj);
    write_json_file(objects_path, Json{{"schema", kSchemaVersion},
                                       {"type", "object_set"},
                                       {"objects", objs}});
}

Dataset load_dataset_jsonl(const std::string& records_path,
                           const std::string& objects_path) {
    Dataset out;
    const Json sidecar = read_json_file(objects_path);
    require_schema(sidecar, "object_set");
    if (!sidecar.contains("objects") || !sidecar.at("objects").is_object())
        throw HoiError("load_dataset_jsonl: sidecar missing objects map");
    for (const auto& [name, j] : sidecar.at("objects").items())
        out.objects.emplace(name, object_from_json(j));

    std::ifstream rf(records_path);
    if (!rf) throw HoiError("load_dataset_jsonl: cannot read " + records_path);
    std::string line;
    int line_no = 0;
    while (std::getline(rf, line)) {
        ++line_no;
        if (line.empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::exception& e) {
            throw HoiError("load_dataset_jsonl: bad record at line " +
                           std::to_string(line_no) + ": " + e.what());
        }
        DatasetRecord rec = record_from_json(j);
        if (!out.objects.count(rec.object_name))
            throw HoiError("load_dataset_jsonl: record references unknown "
                           "object " +
                           rec.object_name);
        out.records.push_back(std::move(rec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training bridges

std::vector<TrainExample> dataset_to_examples(const Dataset& data, int frames) {
    if (frames < 1) throw HoiError("dataset_to_examples: frames must be >= 1");
    std::vector<TrainExample> out;
    for (const DatasetRecord& rec : data.records) {
        const ObjectModel& obj = data.objects.at(rec.object_name);
        const VecX features = object_features(obj);
        int offset = 0;
        for (size_t k = 0; k < rec.plan.subtasks.size(); ++k) {
            const SubTask& st = rec.plan.subtasks[k];
            if (st.duration_frames != frames)
                throw HoiError("dataset_to_examples: subtask duration " +
                               std::to_string(st.duration_frames) +
                               " does not match model frames " +
                               std::to_string(frames));
            if (offset + frames > rec.sequence.num_frames())
                throw HoiError("dataset_to_examples: record shorter than its "
                               "plan");
            HoiSequence sub;
            sub.fps = rec.sequence.fps;
            sub.frames.assign(rec.sequence.frames.begin() + offset,
                              rec.sequence.frames.begin() + offset + frames);
            TrainExample ex;
            ex.x0 = flatten(sub);
            ex.cond = subtask_prior(st, rec.plan.aff_markers[k], features);
            ex.object = &obj;
            out.push_back(std::move(ex));
            offset += frames;
        }
    }
    return out;
}

std::vector<TrainExample> dataset_to_transition_examples(const Dataset& data,
                                                         int frames) {
    if (frames < 1)
        throw HoiError("dataset_to_transition_examples: frames must be >= 1");
    std::vector<TrainExample> out;
    for (const DatasetRecord& rec : data.records) {
        const int total = rec.sequence.num_frames();
        if (rec.plan.subtasks.size() < 2 || total < frames) continue;
        const ObjectModel& obj = data.objects.at(rec.object_name);
        const VecX features = object_features(obj);
        int boundary = 0;
        for (size_t k = 0; k + 1 < rec.plan.subtasks.size(); ++k) {
            boundary += rec.plan.subtasks[k].duration_frames;
            int start = boundary - frames / 2;
            start = std::max(0, std::min(total - frames, start));
            HoiSequence sub;
            sub.fps = rec.sequence.fps;
            sub.frames.assign(rec.sequence.frames.begin() + start,
                              rec.sequence.frames.begin() + start + frames);
            TrainExample ex;
            ex.x0 = flatten(sub);
            ex.cond = subtask_prior(rec.plan.subtasks[k],
                                    rec.plan.aff_markers[k], features);
            ex.object = &obj;
            out.push_back(std::move(ex));
        }
    }
    if (out.empty())
        throw HoiError("dataset_to_transition_examples: no subtask boundaries "
                       "in dataset");
    return out;
}

}  // namespace hoiforge
