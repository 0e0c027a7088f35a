#pragma once

namespace detective::stats {

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1],
/// evaluated with a modified-Lentz continued fraction.
double incomplete_beta(double a, double b, double x);

/// Student-t cumulative distribution P(T <= t) with df > 0 degrees of freedom.
double student_t_cdf(double t, double df);

/// Inverse of student_t_cdf for p in (0, 1).
double student_t_quantile(double p, double df);

}  // namespace detective::stats
