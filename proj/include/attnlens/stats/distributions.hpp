#pragma once

namespace attnlens::stats {

// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);

// P(T <= t) for Student's t with df > 0 degrees of freedom.
double student_t_cdf(double t, double df);

// Inverse of student_t_cdf; p in (0, 1).
double student_t_quantile(double p, double df);

} // namespace attnlens::stats
