// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "hoiforge/diffusion.hpp"

#include <cmath>
#include <random>

using namespace hoiforge;

TEST_SUITE_BEGIN("diffusion");

TEST_CASE("forward diffusion closed form") {
    NoiseSchedule s = cosine_schedule(100);
    VecX x0 = VecX::LinSpaced(6, -1.0, 1.0);
    VecX zero = VecX::Zero(6);
    for (int t : {1, 25, 100}) {
        VecX xt = forward_diffuse(s, x0, t, zero);
        CHECK((xt - std::sqrt(s.alpha_bar_t(t)) * x0).norm() < 1e-15);
    }
    // t = 1 stays close to x0.
    std::mt19937_64 rng(1);
    VecX eps = gaussian_vector(rng, 6);
    VecX x1 = forward_diffuse(s, x0, 1, eps);
    CHECK((x1 - x0).norm() <= std::abs(std::sqrt(s.alpha_bar_t(1)) - 1.0) * x0.norm() +
                                  std::sqrt(1.0 - s.alpha_bar_t(1)) * eps.norm() + 1e-12);
    CHECK_THROWS_AS(forward_diffuse(s, x0, 1, VecX::Zero(5)), HoiError);
}

TEST_CASE("forward diffusion Monte-Carlo moments at every decile") {
    const int T = 100, d = 8, n = 20000;
    NoiseSchedule s = cosine_schedule(T);
    VecX x0 = VecX::LinSpaced(d, -2.0, 2.0);
    std::mt19937_64 rng(77);
    for (int t = 10; t <= T; t += 10) {
        const double m = std::sqrt(s.alpha_bar_t(t));
        const double sd = std::sqrt(1.0 - s.alpha_bar_t(t));
        // Pool all coordinates of the standardized residuals.
        double sum = 0.0, sum_sq = 0.0;
        for (int k = 0; k < n; ++k) {
            VecX eps = gaussian_vector(rng, d);
            VecX xt = forward_diffuse(s, x0, t, eps);
            for (int i = 0; i < d; ++i) {
                const double z = (xt[i] - m * x0[i]) / sd;
                sum += z;
                sum_sq += z * z;
            }
        }
        const double count = static_cast<double>(n) * d;
        const double mean = sum / count;
        const double var = sum_sq / count - mean * mean;
        CHECK(std::abs(mean) < 3.0 / std::sqrt(count));
        CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / (count - 1)));
    }
}

TEST_CASE("posterior coefficient identity") {
    NoiseSchedule s = cosine_schedule(1000);
    // The posterior maps the noiseless trajectory consistently at every step:
    // c_xt * sqrt(abar_t) + c_x0 = sqrt(abar_{t-1}).
    for (int t = 2; t <= 1000; ++t) {
        const double bar = s.alpha_bar_t(t);
        const double bar_prev = s.alpha_bar_prev(t);
        const double c_xt = std::sqrt(s.alpha_t(t)) * (1.0 - bar_prev) / (1.0 - bar);
        const double c_x0 = std::sqrt(bar_prev) * s.beta_t(t) / (1.0 - bar);
        CHECK(std::abs(c_xt * std::sqrt(bar) + c_x0 - std::sqrt(bar_prev)) < 1e-9);
    }
    // Early in the schedule both coefficients are near 1 and their plain sum
    // is 1 within 1e-9 (the deviation is (1-sqrt(alpha))(1-sqrt(abar_prev))).
    {
        const int t = 2;
        const double bar = s.alpha_bar_t(t), bar_prev = s.alpha_bar_prev(t);
        const double c_xt = std::sqrt(s.alpha_t(t)) * (1.0 - bar_prev) / (1.0 - bar);
        const double c_x0 = std::sqrt(bar_prev) * s.beta_t(t) / (1.0 - bar);
        CHECK(std::abs(c_xt + c_x0 - 1.0) < 1e-9);
    }
    // Functional form of the same statement.
    VecX v = VecX::LinSpaced(5, 0.5, 2.5);
    for (int t : {2, 500, 1000}) {
        auto [mu, sigma] = posterior_params(s, std::sqrt(s.alpha_bar_t(t)) * v, v, t);
        CHECK((mu - std::sqrt(s.alpha_bar_prev(t)) * v).norm() < 1e-9 * v.norm());
        CHECK(sigma == s.sigma_t(t));
    }
}

TEST_CASE("posterior terminal and single-term cases") {
    NoiseSchedule s = cosine_schedule(50);
    VecX x_t = VecX::Constant(4, 2.0);
    VecX x0 = VecX::Constant(4, -1.0);
    auto [mu1, sig1] = posterior_params(s, x_t, x0, 1);
    CHECK((mu1 - x0).norm() == 0.0);
    CHECK(sig1 == 0.0);

    const int t = 20;
    auto [mu, sig] = posterior_params(s, x_t, VecX::Zero(4), t);
    const double c_xt =
        std::sqrt(s.alpha_t(t)) * (1.0 - s.alpha_bar_prev(t)) / (1.0 - s.alpha_bar_t(t));
    CHECK((mu - c_xt * x_t).norm() < 1e-15);
    CHECK(sig == s.sigma_t(t));

    CHECK_THROWS_AS(posterior_params(s, x_t, x0, 0), HoiError);
    CHECK_THROWS_AS(posterior_params(s, x_t, x0, 51), HoiError);
    CHECK_THROWS_AS(posterior_params(s, x_t, VecX::Zero(3), t), HoiError);
}

TEST_CASE("vanilla step") {
    NoiseSchedule s = cosine_schedule(50);
    std::mt19937_64 rng(5);
    VecX x_t = gaussian_vector(rng, 10);
    VecX x0 = gaussian_vector(rng, 10);
    VecX eps = gaussian_vector(rng, 10);
    const int t = 30;
    auto [mu, sigma] = posterior_params(s, x_t, x0, t);
    VecX next = vanilla_step(s, x_t, x0, t, eps);
    CHECK((next - (mu + sigma * eps)).norm() == 0.0);
    CHECK(std::abs((next - mu).norm() - sigma * eps.norm()) < 1e-12);
    VecX noiseless = vanilla_step(s, x_t, x0, t, VecX::Zero(10));
    CHECK((noiseless - mu).norm() == 0.0);
}

TEST_CASE("perfect denoiser chain recovers x0") {
    const int T = 50, d = 10;
    NoiseSchedule s = cosine_schedule(T);
    std::mt19937_64 rng(9);
    VecX x0 = gaussian_vector(rng, d);
    VecX x = gaussian_vector(rng, d);  // arbitrary start
    VecX zero = VecX::Zero(d);
    for (int t = T; t >= 1; --t) x = vanilla_step(s, x, x0, t, zero);
    CHECK((x - x0).norm() < 1e-6);
}

TEST_CASE("gaussian vector determinism") {
    std::mt19937_64 a(123), b(123);
    VecX va = gaussian_vector(a, 16);
    VecX vb = gaussian_vector(b, 16);
    CHECK((va - vb).norm() == 0.0);
}

TEST_SUITE_END();
