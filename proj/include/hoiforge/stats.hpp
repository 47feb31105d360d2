// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hoiforge/geometry.hpp"

#include <vector>

namespace hoiforge {

// Regularized incomplete beta function I_x(a, b), evaluated with the
// continued-fraction expansion (modified Lentz iteration) and the symmetry
// I_x(a, b) = 1 - I_{1-x}(b, a) for the slow half of the domain. Throws on
// a <= 0, b <= 0, or x outside [0, 1].
double incomplete_beta(double a, double b, double x);

// Student-t cumulative distribution with df > 0 degrees of freedom
// (fractional df allowed, as produced by the Welch correction).
// +-infinity map to 1 / 0 so degenerate zero-variance tests stay defined.
double student_t_cdf(double t, double df);

// Two-sample location test summary. The statistic is computed on a - b, so
// p_greater is the one-sided p-value for "mean(a) > mean(b)", p_less for
// "mean(a) < mean(b)", and p_two_sided for inequality in either direction.
// Zero-variance inputs degenerate to t = 0 (equal means) or t = +-infinity
// (constant nonzero shift) instead of dividing by zero.
struct TTestResult {
    double t = 0;
    double df = 0;
    double mean_a = 0;
    double mean_b = 0;
    double p_two_sided = 1;  // P(|T| >= |t|)
    double p_less = 1;       // P(T <= t)
    double p_greater = 1;    // P(T >= t)
};

// Paired test on per-index differences a[i] - b[i]. Requires equal sizes and
// at least two pairs.
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

// Welch unequal-variance two-sample test with Welch-Satterthwaite degrees of
// freedom. Requires at least two samples per side.
TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace hoiforge
