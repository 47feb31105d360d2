// SPDX-License-Identifier: Apache-2.0
#include "hoiforge/stats.hpp"

#include <cmath>
#include <limits>

namespace hoiforge {

namespace {

double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Continued fraction for the incomplete beta, modified Lentz iteration.
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    throw HoiError("incomplete_beta: continued fraction did not converge");
}

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v, double m) {
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

// Fills the statistic and the three p-values from t and df.
TTestResult finish_test(double t, double df, double mean_a, double mean_b) {
    TTestResult r;
    r.t = t;
    r.df = df;
    r.mean_a = mean_a;
    r.mean_b = mean_b;
    r.p_less = student_t_cdf(t, df);
    r.p_greater = student_t_cdf(-t, df);
    if (std::isinf(t)) {
        r.p_two_sided = 0.0;
    } else {
        r.p_two_sided = incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
    }
    return r;
}

// 0 for equal means, +-infinity for a constant nonzero shift.
double degenerate_t(double delta) {
    if (delta == 0.0) return 0.0;
    return std::copysign(std::numeric_limits<double>::infinity(), delta);
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw HoiError("incomplete_beta: a and b must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw HoiError("incomplete_beta: x must lie in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) throw HoiError("student_t_cdf: df must be positive");
    if (std::isnan(t)) throw HoiError("student_t_cdf: t is NaN");
    if (std::isinf(t)) return t > 0.0 ? 1.0 : 0.0;
    const double both_tails = incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
    return t >= 0.0 ? 1.0 - 0.5 * both_tails : 0.5 * both_tails;
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw HoiError("paired_t_test: size mismatch");
    const int n = static_cast<int>(a.size());
    if (n < 2) throw HoiError("paired_t_test: need at least two pairs");
    std::vector<double> diff(a.size());
    for (size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    const double md = mean_of(diff);
    const double se = std::sqrt(sample_var(diff, md) / n);
    const double t = se > 0.0 ? md / se : degenerate_t(md);
    return finish_test(t, n - 1.0, mean_of(a), mean_of(b));
}

TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    const int na = static_cast<int>(a.size());
    const int nb = static_cast<int>(b.size());
    if (na < 2 || nb < 2) throw HoiError("welch_t_test: need at least two samples per side");
    const double ma = mean_of(a);
    const double mb = mean_of(b);
    const double ua = sample_var(a, ma) / na;
    const double ub = sample_var(b, mb) / nb;
    const double se2 = ua + ub;
    if (se2 <= 0.0) return finish_test(degenerate_t(ma - mb), na + nb - 2.0, ma, mb);
    const double df = se2 * se2 / (ua * ua / (na - 1) + ub * ub / (nb - 1));
    return finish_test((ma - mb) / std::sqrt(se2), df, ma, mb);
}

}  // namespace hoiforge
