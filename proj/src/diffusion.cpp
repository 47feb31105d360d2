// SPDX-License-Identifier: Apache-2.0
#include "hoiforge/diffusion.hpp"

#include <cmath>

namespace hoiforge {

VecX forward_diffuse(const NoiseSchedule& s, const VecX& x0, int t, const VecX& eps) {
    if (x0.size() != eps.size())
        throw HoiError("forward_diffuse: x0 and eps length mismatch");
    const double bar = s.alpha_bar_t(t);
    return std::sqrt(bar) * x0 + std::sqrt(1.0 - bar) * eps;
}

std::pair<VecX, double> posterior_params(const NoiseSchedule& s, const VecX& x_t,
                                         const VecX& x0_hat, int t) {
    if (x_t.size() != x0_hat.size())
        throw HoiError("posterior_params: x_t and x0_hat length mismatch");
    s.check(t);
    if (t == 1) return {x0_hat, 0.0};
    const double bar = s.alpha_bar_t(t);
    const double bar_prev = s.alpha_bar_prev(t);
    const double c_xt = std::sqrt(s.alpha_t(t)) * (1.0 - bar_prev) / (1.0 - bar);
    const double c_x0 = std::sqrt(bar_prev) * s.beta_t(t) / (1.0 - bar);
    return {c_xt * x_t + c_x0 * x0_hat, s.sigma_t(t)};
}

VecX vanilla_step(const NoiseSchedule& s, const VecX& x_t, const VecX& x0_hat,
                  int t, const VecX& eps) {
    if (eps.size() != x_t.size())
        throw HoiError("vanilla_step: eps length mismatch");
    auto [mu, sigma] = posterior_params(s, x_t, x0_hat, t);
    return mu + sigma * eps;
}

VecX gaussian_vector(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> g(0.0, 1.0);
    VecX v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
    return v;
}

}  // namespace hoiforge
