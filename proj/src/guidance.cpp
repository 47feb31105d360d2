// SPDX-License-Identifier: Apache-2.0
#include "hoiforge/guidance.hpp"

#include "hoiforge/planner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace hoiforge {

void GuidanceConfig::check() const {
    if (cfg_scale < 0.0) throw HoiError("guidance config: cfg_scale must be >= 0");
    if (guidance_rate < 0.0 || guidance_rate > 1.0)
        throw HoiError("guidance config: guidance_rate must be in [0, 1]");
    if (window_size < 1) throw HoiError("guidance config: window_size must be >= 1");
}

Json guidance_config_to_json(const GuidanceConfig& c) {
    return Json{{"cfg_scale", c.cfg_scale},       {"guidance_rate", c.guidance_rate},
                {"lambda_aff", c.lambda_aff},     {"lambda_pen", c.lambda_pen},
                {"lambda_trans", c.lambda_trans}, {"guide_t_min", c.guide_t_min},
                {"guide_t_max", c.guide_t_max},   {"window_size", c.window_size}};
}

GuidanceConfig guidance_config_from_json(const Json& j) {
    GuidanceConfig c;
    c.cfg_scale = j.value("cfg_scale", c.cfg_scale);
    c.guidance_rate = j.value("guidance_rate", c.guidance_rate);
    c.lambda_aff = j.value("lambda_aff", c.lambda_aff);
    c.lambda_pen = j.value("lambda_pen", c.lambda_pen);
    c.lambda_trans = j.value("lambda_trans", c.lambda_trans);
    c.guide_t_min = j.value("guide_t_min", c.guide_t_min);
    c.guide_t_max = j.value("guide_t_max", c.guide_t_max);
    c.window_size = j.value("window_size", c.window_size);
    c.check();
    return c;
}

VecX cfg_predict(const DenoiserModel& m, const VecX& x_t, int t,
                 const InteractionPrior* cond, double s) {
    if (cond == nullptr) return forward(m, x_t, t, nullptr);
    if (s == 1.0) return forward(m, x_t, t, cond);
    if (s == 0.0) return forward(m, x_t, t, nullptr);
    const VecX pred_cond = forward(m, x_t, t, cond);
    const VecX pred_un = forward(m, x_t, t, nullptr);
    return pred_un + s * (pred_cond - pred_un);
}

namespace {

ObjectPose pose_at(const VecX& x, int f) {
    ObjectPose pose;
    pose.position = Vec3(x[flat_object_pos_index(f, 0)], x[flat_object_pos_index(f, 1)],
                         x[flat_object_pos_index(f, 2)]);
    for (int c = 0; c < 4; ++c) pose.orientation[c] = x[flat_object_quat_index(f, c)];
    return pose;
}

void check_flat(const VecX& x, int frames, const char* where) {
    if (frames < 1 || x.size() != static_cast<Eigen::Index>(frames) * kFrameDim)
        throw HoiError(std::string(where) + ": flat length does not match frame count");
}

}  // namespace

double loss_affordance(const VecX& x0_phys, int frames, const ObjectModel& obj,
                       const AffordanceMap& aff, bool left_active, bool right_active,
                       VecX* grad) {
    check_flat(x0_phys, frames, "loss_affordance");
    if (left_active && aff.active_left.empty())
        throw HoiError("loss_affordance: left hand active but its region is empty");
    if (right_active && aff.active_right.empty())
        throw HoiError("loss_affordance: right hand active but its region is empty");
    if (grad) *grad = VecX::Zero(x0_phys.size());

    double loss = 0.0;
    for (int f = 0; f < frames; ++f) {
        const ObjectPose pose = pose_at(x0_phys, f);
        for (Hands hand : {Hands::Left, Hands::Right}) {
            if (hand == Hands::Left ? !left_active : !right_active) continue;
            const std::vector<int>& region =
                hand == Hands::Left ? aff.active_left : aff.active_right;
            for (int j : kContactJoints) {
                Vec3 p;
                for (int ax = 0; ax < 3; ++ax) p[ax] = x0_phys[flat_joint_index(f, hand, j, ax)];
                const Vec3 p_obj = world_to_object(pose, p);
                const Vec3 q_world =
                    object_to_world(pose, closest_affordance_point(obj, region, p_obj).second);
                const Vec3 diff = p - q_world;
                loss += diff.squaredNorm();
                if (grad)
                    for (int ax = 0; ax < 3; ++ax)
                        (*grad)[flat_joint_index(f, hand, j, ax)] += 2.0 * diff[ax];
            }
        }
    }
    return loss;
}

double loss_penetration(const VecX& x0_phys, int frames, const ObjectModel& obj, VecX* grad) {
    check_flat(x0_phys, frames, "loss_penetration");
    if (grad) *grad = VecX::Zero(x0_phys.size());
    double loss = 0.0;
    for (int f = 0; f < frames; ++f) {
        const ObjectPose pose = pose_at(x0_phys, f);
        for (Hands hand : {Hands::Left, Hands::Right}) {
            for (int j = 0; j < kNumJoints; ++j) {
                Vec3 c;
                for (int ax = 0; ax < 3; ++ax) c[ax] = x0_phys[flat_joint_index(f, hand, j, ax)];
                const SdfResult r = sdf_query_posed(obj, pose, c);
                const double depth = joint_radius(j) - r.distance;
                if (depth <= 0.0) continue;
                loss += depth * depth;
                if (grad) {
                    const Vec3 g = (-2.0 * depth) * r.gradient;
                    for (int ax = 0; ax < 3; ++ax)
                        (*grad)[flat_joint_index(f, hand, j, ax)] += g[ax];
                }
            }
        }
    }
    return loss;
}

double loss_transition(const TransitionSegment& trans, int window_size, VecX* grad) {
    if (trans.frames.empty()) throw HoiError("loss_transition: empty transition");
    if (window_size < 1) throw HoiError("loss_transition: window_size must be >= 1");
    const int n = static_cast<int>(trans.frames.size());
    HoiSequence seq;
    seq.frames = trans.frames;
    const VecX flat = flatten(seq);
    seq.frames = {trans.boundary_pre};
    const VecX pre = flatten(seq);
    seq.frames = {trans.boundary_after};
    const VecX after = flatten(seq);

    const double loss = (flat.segment(0, kFrameDim) - pre).squaredNorm() +
                        (flat.segment((n - 1) * kFrameDim, kFrameDim) - after).squaredNorm();
    if (grad) {
        *grad = VecX::Zero(flat.size());
        // Exact gradient at the boundary frames; inside the window the same
        // pull is applied with linearly tapered weight (documented smoothing).
        for (int k = 0; k < std::min(window_size, n); ++k) {
            const double w = 1.0 - static_cast<double>(k) / window_size;
            grad->segment(k * kFrameDim, kFrameDim) +=
                (2.0 * w) * (flat.segment(k * kFrameDim, kFrameDim) - pre);
            const int rk = n - 1 - k;
            grad->segment(rk * kFrameDim, kFrameDim) +=
                (2.0 * w) * (flat.segment(rk * kFrameDim, kFrameDim) - after);
        }
    }
    return loss;
}

GuidanceLossValue guidance_losses(const VecX& x0_phys, int frames, const GuidanceTarget& target,
                                  const GuidanceConfig& cfg, VecX* grad_phys) {
    GuidanceLossValue out;
    if (grad_phys) *grad_phys = VecX::Zero(x0_phys.size());
    VecX part;
    if (target.object && target.affordance && (target.left_active || target.right_active)) {
        out.aff = loss_affordance(x0_phys, frames, *target.object, *target.affordance,
                                  target.left_active, target.right_active,
                                  grad_phys ? &part : nullptr);
        if (grad_phys) grad_phys->noalias() += cfg.lambda_aff * part;
    }
    if (target.object) {
        out.pen = loss_penetration(x0_phys, frames, *target.object, grad_phys ? &part : nullptr);
        if (grad_phys) grad_phys->noalias() += cfg.lambda_pen * part;
    }
    if (target.boundary_pre && target.boundary_after) {
        TransitionSegment trans;
        trans.frames = unflatten(x0_phys, frames).frames;
        trans.boundary_pre = *target.boundary_pre;
        trans.boundary_after = *target.boundary_after;
        out.trans = loss_transition(trans, cfg.window_size, grad_phys ? &part : nullptr);
        if (grad_phys) grad_phys->noalias() += cfg.lambda_trans * part;
    }
    return out;
}

VecX dsg_step(const DenoiserModel& m, const NoiseSchedule& schedule, const VecX& x_t, int t,
              const InteractionPrior* cond, const GuidanceTarget& target,
              const GuidanceConfig& cfg, std::mt19937_64& rng, GuidanceLogRow* log_row) {
    cfg.check();
    if (t < 2 || t > schedule.T) throw HoiError("dsg_step: t must be in [2, T]");
    const ModelConfig& mc = m.config;
    const int d = mc.d();
    const double s = cfg.cfg_scale;
    const bool has_cond = cond != nullptr;

    ForwardCache cache_cond, cache_un;
    VecX pred_cond, pred_un;
    if (has_cond && s != 0.0) pred_cond = forward(m, x_t, t, cond, &cache_cond);
    if (!has_cond || s != 1.0) pred_un = forward(m, x_t, t, nullptr, &cache_un);
    VecX x0_hat;
    if (!has_cond || s == 0.0)
        x0_hat = pred_un;
    else if (s == 1.0)
        x0_hat = pred_cond;
    else
        x0_hat = pred_un + s * (pred_cond - pred_un);

    const auto [mu, sigma] = posterior_params(schedule, x_t, x0_hat, t);
    const VecX eps = gaussian_vector(rng, d);
    const double root_d = std::sqrt(static_cast<double>(d));

    const bool target_live =
        target.object != nullptr || (target.boundary_pre && target.boundary_after);
    const bool guided = cfg.guidance_rate > 0.0 && target_live && t >= cfg.guide_t_min &&
                        t <= cfg.guide_t_max;

    GuidanceLossValue vals;
    double grad_norm = 0.0;
    VecX d_mix = sigma * eps;
    if (guided) {
        const double scale = mc.data_scale;
        VecX grad_phys;
        vals = guidance_losses(scale * x0_hat, mc.frames, target, cfg, &grad_phys);
        // dL/dx0 in model units, then back through the CFG combination.
        MatX upstream = scale * grad_phys;
        MatX gx(d, 1);
        VecX grad_x;
        if (!has_cond || s == 0.0) {
            backward_batch(m, cache_un, upstream, nullptr, &gx);
            grad_x = gx.col(0);
        } else if (s == 1.0) {
            backward_batch(m, cache_cond, upstream, nullptr, &gx);
            grad_x = gx.col(0);
        } else {
            backward_batch(m, cache_cond, upstream, nullptr, &gx);
            grad_x = s * gx.col(0);
            backward_batch(m, cache_un, upstream, nullptr, &gx);
            grad_x.noalias() += (1.0 - s) * gx.col(0);
        }
        grad_norm = grad_x.norm();
        const VecX d_star = (-root_d * sigma) * grad_x;
        d_mix += cfg.guidance_rate * (d_star - d_mix);
    }
    if (log_row) {
        log_row->t = t;
        log_row->l_aff = vals.aff;
        log_row->l_pen = vals.pen;
        log_row->grad_norm = grad_norm;
    }

    const double mix_norm = d_mix.norm();
    if (mix_norm == 0.0) return vanilla_step(schedule, x_t, x0_hat, t, eps);
    return mu + (root_d * sigma / mix_norm) * d_mix;
}

namespace {

// Shared reverse chain; cond == nullptr runs the unconditional prior.
HoiSequence sample_chain(const DenoiserModel& m, const NoiseSchedule& schedule,
                         const InteractionPrior* cond, const GuidanceTarget& target,
                         const GuidanceConfig& cfg, std::mt19937_64& rng,
                         std::vector<GuidanceLogRow>* log) {
    cfg.check();
    VecX x = gaussian_vector(rng, m.config.d());
    for (int t = schedule.T; t >= 2; --t) {
        GuidanceLogRow row;
        x = dsg_step(m, schedule, x, t, cond, target, cfg, rng, log ? &row : nullptr);
        if (log) log->push_back(row);
    }
    const VecX x0 = cfg_predict(m, x, 1, cond, cfg.cfg_scale);
    return unflatten(m.config.data_scale * x0, m.config.frames);
}

void append_frames(HoiSequence& out, const HoiSequence& chunk) {
    out.frames.insert(out.frames.end(), chunk.frames.begin(), chunk.frames.end());
}

Vec4 unit_quat_or_identity(const Vec4& q) {
    const double n = q.norm();
    return n < 1e-8 ? Vec4(1, 0, 0, 0) : Vec4(q / n);
}

}  // namespace

HoiSequence sample_subtask(const DenoiserModel& m, const NoiseSchedule& schedule,
                           const InteractionPrior& cond, const GuidanceTarget& target,
                           const GuidanceConfig& cfg, std::mt19937_64& rng,
                           std::vector<GuidanceLogRow>* log) {
    return sample_chain(m, schedule, &cond, target, cfg, rng, log);
}

void re_anchor_object(HoiSequence& seq, const ObjectPose& target_start) {
    if (seq.frames.empty()) return;
    const Vec3 dp = target_start.position - seq.frames[0].object.position;
    const Vec4 dq = quat_mul(unit_quat_or_identity(target_start.orientation),
                             quat_conjugate(unit_quat_or_identity(seq.frames[0].object.orientation)));
    for (HoiFrame& f : seq.frames) {
        f.object.position += dp;
        f.object.orientation = quat_mul(dq, f.object.orientation);
    }
    // Float composition can drift; the seam frame must match exactly.
    seq.frames[0].object = target_start;
}

HoiSequence synthesize_long_horizon(const CheckpointBundle& bundle, const NoiseSchedule& schedule,
                                    const std::vector<SubTask>& plan, const ObjectModel& obj,
                                    const GuidanceConfig& cfg, std::mt19937_64& rng,
                                    bool with_transitions, std::vector<GuidanceLogRow>* log,
                                    const std::vector<AffordanceMap>* markers) {
    if (plan.empty()) throw HoiError("synthesize_long_horizon: empty plan");
    if (markers && markers->size() != plan.size())
        throw HoiError("synthesize_long_horizon: need one marker per sub-task");
    cfg.check();
    const VecX feats = object_features(obj);

    // Segments first, in plan order, so the RNG prefix is identical whether
    // or not transitions are stitched in afterwards.
    std::vector<HoiSequence> segments;
    segments.reserve(plan.size());
    for (size_t i = 0; i < plan.size(); ++i) {
        const SubTask& st = plan[i];
        InteractionPrior prior;
        prior.affordance = markers ? (*markers)[i] : ground_affordance(obj, st);
        prior.affordance.scores = conditioning_scores(prior.affordance.scores);
        prior.embedding_id = task_embedding_id(st.action, st.hands);
        prior.object_features = feats;
        GuidanceTarget tgt;
        tgt.object = &obj;
        tgt.affordance = &prior.affordance;
        tgt.left_active = prior.affordance.left_active();
        tgt.right_active = prior.affordance.right_active();
        segments.push_back(sample_chain(bundle.main, schedule, &prior, tgt, cfg, rng, log));
    }

    HoiSequence out = segments.front();
    for (size_t i = 1; i < segments.size(); ++i) {
        HoiSequence seg = segments[i];
        re_anchor_object(seg, out.frames.back().object);
        if (with_transitions) {
            GuidanceTarget tt;
            tt.object = &obj;
            tt.boundary_pre = out.frames.back();
            tt.boundary_after = seg.frames.front();
            HoiSequence trans =
                sample_chain(bundle.transition, schedule, nullptr, tt, cfg, rng, log);
            re_anchor_object(trans, out.frames.back().object);
            re_anchor_object(seg, trans.frames.back().object);
            append_frames(out, trans);
        }
        append_frames(out, seg);
    }
    return out;
}

void save_guidance_log_csv(const std::string& path, const std::vector<GuidanceLogRow>& rows) {
    std::ofstream out(path);
    if (!out) throw HoiError("cannot write " + path);
    out << "t,l_aff,l_pen,grad_norm\n";
    char buf[160];
    for (const GuidanceLogRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", r.t, r.l_aff, r.l_pen,
                      r.grad_norm);
        out << buf;
    }
}

}  // namespace hoiforge
