// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hoiforge/denoiser.hpp"
#include "hoiforge/diffusion.hpp"

#include <optional>

namespace hoiforge {

// Knobs for guided sampling: classifier-free scale, gradient mixing rate,
// refinement loss weights, the step window where guidance runs, and the
// transition gradient taper width.
struct GuidanceConfig {
    double cfg_scale = 2.5;      // s: conditional/unconditional extrapolation
    double guidance_rate = 0.2;  // w: share of the step direction taken from the loss gradient
    double lambda_aff = 1.0;
    double lambda_pen = 10.0;
    double lambda_trans = 1.0;
    int guide_t_min = 2;  // guidance applies to steps t in [guide_t_min, guide_t_max]
    int guide_t_max = 1 << 30;
    int window_size = 5;  // transition-loss gradient taper, in frames

    void check() const;  // s >= 0, 0 <= w <= 1, window_size >= 1
};

Json guidance_config_to_json(const GuidanceConfig& c);
GuidanceConfig guidance_config_from_json(const Json& j);

// A short bridging clip between two long segments. Boundaries are copies of
// the neighbor frames, never references into them.
struct TransitionSegment {
    std::vector<HoiFrame> frames;
    HoiFrame boundary_pre;    // final frame of the preceding segment
    HoiFrame boundary_after;  // first frame of the following segment
};

// x0_hat^s = uncond + s * (cond - uncond). s = 1 and s = 0 return the
// conditional / unconditional branch bit-exactly; cond == nullptr always
// returns the unconditional prediction.
VecX cfg_predict(const DenoiserModel& m, const VecX& x_t, int t,
                 const InteractionPrior* cond, double s);

// Squared distance from each active hand's contact joints (wrist and the
// five fingertips) to the closest active affordance point, per frame, under
// the sequence's own object poses. Correspondences and poses are frozen per
// evaluation; the gradient only touches joint coordinates. x0_phys is a
// flattened sequence in physical units. grad, when non-null, is resized and
// overwritten. Throws if an active hand has an empty region.
double loss_affordance(const VecX& x0_phys, int frames, const ObjectModel& obj,
                       const AffordanceMap& aff, bool left_active, bool right_active,
                       VecX* grad = nullptr);

// Sum of squared joint-sphere penetration depths p = max(0, r - sdf) over
// both hands and all joints, under the sequence's own object poses (frozen).
// Gradient pushes penetrating centers outward along the surface normal.
double loss_penetration(const VecX& x0_phys, int frames, const ObjectModel& obj,
                        VecX* grad = nullptr);

// Boundary mismatch of a transition clip: squared error of the first frame
// against boundary_pre plus the last frame against boundary_after, over all
// pose scalars. The returned gradient additionally pulls the first/last
// window_size frames toward their boundary with linearly tapered weight
// 1 - k/window (exact at the boundary frame, a documented smoothing choice
// inside the window).
double loss_transition(const TransitionSegment& trans, int window_size,
                       VecX* grad = nullptr);

// What the refinement losses are evaluated against. Any subset may be set:
// object alone enables penetration, object + affordance enables the contact
// pull, boundaries enable the transition term.
struct GuidanceTarget {
    const ObjectModel* object = nullptr;
    const AffordanceMap* affordance = nullptr;
    bool left_active = false;
    bool right_active = false;
    std::optional<HoiFrame> boundary_pre;
    std::optional<HoiFrame> boundary_after;
};

struct GuidanceLossValue {
    double aff = 0, pen = 0, trans = 0;
    double weighted(const GuidanceConfig& c) const {
        return c.lambda_aff * aff + c.lambda_pen * pen + c.lambda_trans * trans;
    }
};

// Weighted refinement losses and their gradient w.r.t. x0_phys (resized and
// overwritten when non-null).
GuidanceLossValue guidance_losses(const VecX& x0_phys, int frames, const GuidanceTarget& target,
                                  const GuidanceConfig& cfg, VecX* grad_phys = nullptr);

// Per-step sampling telemetry (written by dsg_step when requested).
struct GuidanceLogRow {
    int t = 0;
    double l_aff = 0;
    double l_pen = 0;
    double grad_norm = 0;  // norm of the loss gradient w.r.t. x_t, 0 when unguided
};

void save_guidance_log_csv(const std::string& path, const std::vector<GuidanceLogRow>& rows);

// One reverse step t -> t-1 with the loss gradient mixed into the noise
// direction and the update renormalized to the expected step length:
//   D*     = -sqrt(d) * sigma_t * dL/dx_t   (through the CFG prediction)
//   D_mix  = sigma_t * eps + w * (D* - sigma_t * eps)
//   x_{t-1} = mu_t + sqrt(d) * sigma_t * D_mix / |D_mix|
// so |x_{t-1} - mu_t| = sqrt(d) * sigma_t always. |D_mix| = 0 falls back to
// the plain posterior step with the same eps. Steps outside
// [guide_t_min, guide_t_max], w = 0, or an empty target skip the gradient
// but keep the renormalized noise direction and RNG consumption.
VecX dsg_step(const DenoiserModel& m, const NoiseSchedule& schedule, const VecX& x_t, int t,
              const InteractionPrior* cond, const GuidanceTarget& target,
              const GuidanceConfig& cfg, std::mt19937_64& rng,
              GuidanceLogRow* log_row = nullptr);

// Full reverse chain: x_T ~ N(0, I), dsg_step for t = T..2, deterministic
// terminal prediction at t = 1. Output is in physical units. RNG use: d
// draws for x_T, then d per step, nothing else.
HoiSequence sample_subtask(const DenoiserModel& m, const NoiseSchedule& schedule,
                           const InteractionPrior& cond, const GuidanceTarget& target,
                           const GuidanceConfig& cfg, std::mt19937_64& rng,
                           std::vector<GuidanceLogRow>* log = nullptr);

// Rigidly shifts the sequence's object trajectory so its first-frame object
// pose equals target_start (positions translated, orientations premultiplied).
void re_anchor_object(HoiSequence& seq, const ObjectPose& target_start);

// Samples one segment per sub-task (grounding each against obj), then either
// butt-joins them (with_transitions = false) or bridges consecutive segments
// with clips from the unconditional transition net guided by the boundary
// and penetration losses. Object pose is kept continuous at every seam by
// re-anchoring each appended chunk. markers, when non-null, must hold one
// affordance map per sub-task (scores sized to the object's point cloud) and
// replaces the default grounding, both for conditioning and for the contact
// pull.
HoiSequence synthesize_long_horizon(const CheckpointBundle& bundle, const NoiseSchedule& schedule,
                                    const std::vector<SubTask>& plan, const ObjectModel& obj,
                                    const GuidanceConfig& cfg, std::mt19937_64& rng,
                                    bool with_transitions = true,
                                    std::vector<GuidanceLogRow>* log = nullptr,
                                    const std::vector<AffordanceMap>* markers = nullptr);

}  // namespace hoiforge
