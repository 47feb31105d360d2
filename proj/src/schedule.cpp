// SPDX-License-Identifier: Apache-2.0
#include "hoiforge/schedule.hpp"

#include <cmath>

namespace hoiforge {

NoiseSchedule cosine_schedule(int T, double s0) {
    if (T < 2) throw HoiError("cosine_schedule: T must be >= 2");
    NoiseSchedule s;
    s.T = T;
    s.offset = s0;
    s.alpha.resize(T);
    s.alpha_bar.resize(T);
    s.beta.resize(T);
    s.sigma.resize(T);

    auto f = [&](double u) {
        const double c = std::cos((u / T + s0) / (1.0 + s0) * M_PI / 2.0);
        return c * c;
    };
    const double f0 = f(0.0);

    double prev_bar = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double bar_raw = f(static_cast<double>(t)) / f0;
        double beta = 1.0 - bar_raw / prev_bar;
        if (beta > 0.999) beta = 0.999;
        s.beta[t - 1] = beta;
        s.alpha[t - 1] = 1.0 - beta;
        prev_bar = bar_raw;
    }
    // Rebuild alpha_bar as an exact cumulative product of alpha.
    double cum = 1.0;
    for (int t = 1; t <= T; ++t) {
        cum *= s.alpha[t - 1];
        s.alpha_bar[t - 1] = cum;
    }
    for (int t = 1; t <= T; ++t) {
        const double bar_prev = t == 1 ? 1.0 : s.alpha_bar[t - 2];
        const double bar = s.alpha_bar[t - 1];
        s.sigma[t - 1] = std::sqrt((1.0 - bar_prev) / (1.0 - bar) * s.beta[t - 1]);
    }
    return s;
}

}  // namespace hoiforge
