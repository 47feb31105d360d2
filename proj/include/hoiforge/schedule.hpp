// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hoiforge/geometry.hpp"

namespace hoiforge {

// Diffusion noise schedule. Arrays are indexed by step t in [1, T] via the
// accessors (storage is 0-based). sigma is a standard deviation; its square
// is the posterior variance (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t) * beta_t.
struct NoiseSchedule {
    int T = 0;
    double offset = 0.0;  // cosine offset used to build this schedule
    VecX alpha;
    VecX alpha_bar;
    VecX beta;
    VecX sigma;

    double alpha_t(int t) const { return alpha[check(t)]; }
    double alpha_bar_t(int t) const { return alpha_bar[check(t)]; }
    double beta_t(int t) const { return beta[check(t)]; }
    double sigma_t(int t) const { return sigma[check(t)]; }
    // alpha_bar at t-1, with the t = 1 convention alpha_bar_0 = 1.
    double alpha_bar_prev(int t) const { return t == 1 ? 1.0 : alpha_bar[check(t) - 1]; }

    int check(int t) const {
        if (t < 1 || t > T) throw HoiError("schedule: step " + std::to_string(t) +
                                           " outside [1, " + std::to_string(T) + "]");
        return t - 1;
    }
};

// Cosine schedule: alpha_bar_t = f(t)/f(0), f(u) = cos^2(((u/T + s0)/(1 + s0)) * pi/2).
// beta_t is clipped at 0.999 and alpha_bar is rebuilt as the cumulative product
// of alpha so the quotient identity alpha_t = alpha_bar_t / alpha_bar_{t-1}
// holds exactly even where the clip bites.
NoiseSchedule cosine_schedule(int T, double s0 = 0.008);

}  // namespace hoiforge
