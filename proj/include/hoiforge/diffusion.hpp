// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hoiforge/schedule.hpp"

#include <random>

namespace hoiforge {

struct DiffusionState {
    VecX x_t;
    int t = 0;
    uint64_t rng_seed = 0;
};

// x_t = sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps
VecX forward_diffuse(const NoiseSchedule& s, const VecX& x0, int t, const VecX& eps);

// Posterior mean and standard deviation given the model's x0 prediction.
// mu_t = sqrt(alpha_t)(1 - alpha_bar_{t-1})/(1 - alpha_bar_t) x_t
//      + sqrt(alpha_bar_{t-1}) beta_t/(1 - alpha_bar_t) x0_hat.
// t = 1 is the deterministic terminal step: (x0_hat, 0).
std::pair<VecX, double> posterior_params(const NoiseSchedule& s, const VecX& x_t,
                                         const VecX& x0_hat, int t);

// x_{t-1} = mu_t + sigma_t * eps.
VecX vanilla_step(const NoiseSchedule& s, const VecX& x_t, const VecX& x0_hat,
                  int t, const VecX& eps);

// Shared Gaussian draw helper; every sampler derives per-sample streams as
// base_seed + sample_index.
VecX gaussian_vector(std::mt19937_64& rng, Eigen::Index n);

}  // namespace hoiforge
